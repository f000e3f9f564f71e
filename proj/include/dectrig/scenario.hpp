#pragma once

// A run configuration (JSON file plus command-line overrides) and the
// scenario it resolves to: model, certificate, designed triggers and initial
// data, ready to simulate.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dectrig/controller_feedback.hpp"
#include "dectrig/errors.hpp"
#include "dectrig/io.hpp"
#include "dectrig/models.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig {

struct RunConfig {
  std::string model = "batch_reactor";  // bundled name or path to an LTI model file
  TriggerMode mode = TriggerMode::Decentralized;
  double step = 1e-4;
  std::optional<double> horizon;  // defaults to the model's horizon
  double scale = 1.0;             // x0 and xs0 are multiplied by this
  std::string out = "out";
  std::optional<double> sigma;
  std::optional<Vector> theta;
  std::optional<double> c;  // level set, nonlinear model only
  double update_dwell = 0.5;
  double rho = 0.5;
  bool centralized_dwell = true;
  std::size_t log_stride = 1;
  std::string fault = "none";  // verify only: none | halve_T | double_w

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("step must be positive");
    if (horizon && !(*horizon >= 0.0 && std::isfinite(*horizon))) {
      throw ValidationError("horizon must be non-negative");
    }
    if (!std::isfinite(scale) || scale == 0.0) throw ValidationError("scale must be finite and nonzero");
    if (log_stride == 0) throw ValidationError("log_stride must be at least 1");
    if (mode == TriggerMode::Feedback) UpdateSchedule{update_dwell, rho}.validate();
    if (fault != "none" && fault != "halve_T" && fault != "double_w") {
      throw ValidationError("unknown fault '" + fault + "' (none | halve_T | double_w)");
    }
  }
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number()) throw ValidationError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::string json_string(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_string()) throw ValidationError(std::string("config: '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

/// Fields absent from the object keep their current values; unknown keys are
/// rejected so typos do not silently fall back to defaults.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::json_number;
  using detail::json_string;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "model", "mode", "step", "horizon", "scale", "out", "sigma", "theta", "c",
      "update_dwell", "rho", "centralized_dwell", "log_stride", "fault"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  if (j.contains("model")) cfg.model = json_string(j, "model");
  if (j.contains("mode")) cfg.mode = parse_mode(json_string(j, "mode"));
  if (j.contains("step")) cfg.step = json_number(j, "step");
  if (j.contains("horizon")) cfg.horizon = json_number(j, "horizon");
  if (j.contains("scale")) cfg.scale = json_number(j, "scale");
  if (j.contains("out")) cfg.out = json_string(j, "out");
  if (j.contains("sigma")) cfg.sigma = json_number(j, "sigma");
  if (j.contains("theta")) cfg.theta = io::vector_from_json(j["theta"], "theta");
  if (j.contains("c")) cfg.c = json_number(j, "c");
  if (j.contains("update_dwell")) cfg.update_dwell = json_number(j, "update_dwell");
  if (j.contains("rho")) cfg.rho = json_number(j, "rho");
  if (j.contains("centralized_dwell")) {
    if (!j["centralized_dwell"].is_boolean()) throw ValidationError("config: 'centralized_dwell' must be a boolean");
    cfg.centralized_dwell = j["centralized_dwell"].get<bool>();
  }
  if (j.contains("log_stride")) {
    if (!j["log_stride"].is_number_integer() || j["log_stride"].get<long>() < 1) {
      throw ValidationError("config: 'log_stride' must be a positive integer");
    }
    cfg.log_stride = j["log_stride"].get<std::size_t>();
  }
  if (j.contains("fault")) cfg.fault = json_string(j, "fault");
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["model"] = cfg.model;
  j["mode"] = to_string(cfg.mode);
  j["step"] = cfg.step;
  if (cfg.horizon) j["horizon"] = *cfg.horizon;
  j["scale"] = cfg.scale;
  j["out"] = cfg.out;
  if (cfg.sigma) j["sigma"] = *cfg.sigma;
  if (cfg.theta) j["theta"] = io::to_json(*cfg.theta);
  if (cfg.c) j["c"] = *cfg.c;
  j["update_dwell"] = cfg.update_dwell;
  j["rho"] = cfg.rho;
  j["centralized_dwell"] = cfg.centralized_dwell;
  j["log_stride"] = cfg.log_stride;
  return j;
}

struct Scenario {
  std::string name;
  bool lti = false;
  SystemModel model;
  LyapunovCertificate cert;
  std::optional<LipschitzData> lip;  // nonlinear model only
  TriggerConfig config;
  Vector x0, xs0;
  double horizon = 10.0;
  double sigma = 0.0;
  Vector theta;
  double c = kInfinity;
  nlohmann::json design;
};

inline Scenario scenario_from_lti(LtiProblem p, const RunConfig& cfg) {
  if (cfg.c) throw ValidationError("the level c applies to the nonlinear model only");
  if (cfg.sigma) p.sigma = *cfg.sigma;
  if (cfg.theta) p.theta = *cfg.theta;
  const LtiDesign d = design_lti(p.A, p.B, p.K, p.Q, p.theta, p.sigma);
  Scenario s;
  s.name = p.model.name;
  s.lti = true;
  s.model = std::move(p.model);
  s.cert = lti_certificate(d, p.Q);
  s.config = d.config;
  s.x0 = p.x0;
  s.xs0 = p.xs0;
  s.horizon = p.horizon;
  s.sigma = d.sigma;
  s.theta = d.theta;
  s.design = io::design_document(d);
  return s;
}

inline Scenario build_scenario(const RunConfig& cfg) {
  cfg.validate();
  Scenario s;
  if (cfg.model == "batch_reactor") {
    s = scenario_from_lti(batch_reactor(), cfg);
  } else if (cfg.model == "cubic_oscillator") {
    NonlinearProblem p = cubic_oscillator(cfg.c.value_or(10.0), cfg.sigma.value_or(0.9),
                                          cfg.theta.value_or(Vector{0.9, 0.1}));
    s.name = p.model.name;
    s.model = std::move(p.model);
    s.cert = p.cert;
    s.lip = p.lip;
    s.config = design_nonlinear(p.cert, p.lip, p.c);
    s.x0 = p.x0;
    s.xs0 = p.xs0;
    s.horizon = p.horizon;
    s.sigma = p.sigma;
    s.theta = p.theta;
    s.c = p.c;
    s.design = io::design_document(s.config, p.P, p.params.Q_m, p.sigma, p.theta, p.c);
  } else {
    const auto path = std::filesystem::path(cfg.model);
    s = scenario_from_lti(io::lti_problem_from_json(io::read_json_file(cfg.model), path.stem().string()),
                          cfg);
  }
  if (cfg.mode == TriggerMode::Feedback && s.lti) {
    throw ValidationError("feedback mode needs a finite level set; use the nonlinear model");
  }
  if (cfg.horizon) s.horizon = *cfg.horizon;
  s.x0 = cfg.scale * s.x0;
  s.xs0 = cfg.scale * s.xs0;
  return s;
}

/// Runs the scenario in the configured mode. Feedback runs start from the
/// latched bound 𝒱_s(0) = c.
inline SimulationTrace simulate(const Scenario& s, const RunConfig& cfg) {
  RunOptions opts;
  opts.mode = cfg.mode;
  opts.centralized_dwell = cfg.centralized_dwell;
  opts.h = cfg.step;
  opts.horizon = s.horizon;
  opts.log_stride = cfg.log_stride;
  std::unique_ptr<FeedbackController> fb;
  if (cfg.mode == TriggerMode::Feedback) {
    if (!s.lip) throw ValidationError("feedback mode requires Lipschitz data");
    fb = std::make_unique<FeedbackController>(s.cert, *s.lip,
                                              UpdateSchedule{cfg.update_dwell, cfg.rho}, s.c);
  }
  SimulationTrace tr = run(s.model, s.cert, s.config, s.x0, s.xs0, opts, fb.get());
  tr.metadata["model"] = s.name;
  tr.metadata["scale"] = io::format_double(cfg.scale);
  return tr;
}

}  // namespace dectrig
