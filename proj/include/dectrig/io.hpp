#pragma once

// File formats: design/summary/event documents as JSON, traces and event logs
// as CSV. Durations are always seconds. Doubles are written in shortest
// round-trip form so re-reading a file reproduces the in-memory values.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/models.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig::io {

using nlohmann::json;

/// Non-finite values (global level, never-transmitting sensors) become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline json to_json(const Matrix& m) {
  json a = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array of numbers");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError(what + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  if (!all_finite(v)) throw ValidationError(what + ": non-finite entry");
  return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ValidationError(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (const auto& row : j) {
    const Vector r = vector_from_json(row, what);
    if (cols == 0) cols = r.size();
    if (r.size() != cols || cols == 0) throw ValidationError(what + ": ragged or empty rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows, cols, std::move(data));
}

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("not a number: '" + s + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// design documents

/// {sensors: [{w, T}], W, P, Q_m, sigma, theta, c}
inline json design_document(const TriggerConfig& cfg, const Matrix& P, double Q_m, double sigma,
                            const Vector& theta, double c,
                            const std::vector<std::string>& warnings = {}) {
  json doc;
  json sensors = json::array();
  for (const auto& s : cfg.sensors) sensors.push_back({{"w", number(s.w)}, {"T", number(s.T)}});
  doc["sensors"] = std::move(sensors);
  doc["W"] = cfg.W();
  doc["P"] = to_json(P);
  doc["Q_m"] = Q_m;
  doc["sigma"] = sigma;
  doc["theta"] = to_json(theta);
  doc["c"] = number(c);
  if (!warnings.empty()) doc["warnings"] = warnings;
  return doc;
}

inline json design_document(const LtiDesign& d) {
  return design_document(d.config, d.P, d.Q_m, d.sigma, d.theta, kInfinity, d.warnings);
}

// ---------------------------------------------------------------------------
// traces and events

/// Columns t, x0..x{n-1}, xs0..xs{n-1}, V, Vdot.
inline void write_trace_csv(std::ostream& os, const SimulationTrace& tr) {
  os << "t";
  for (std::size_t i = 0; i < tr.n; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < tr.n; ++i) os << ",xs" << i;
  os << ",V,Vdot\n";
  for (const auto& r : tr.rows) {
    os << format_double(r.t);
    for (double v : r.x) os << ',' << format_double(v);
    for (double v : r.xs) os << ',' << format_double(v);
    os << ',' << format_double(r.V) << ',' << format_double(r.Vdot) << '\n';
  }
}

/// Columns t, R, V_bound, V_sampled, xc0..xc{n-1}; feedback runs only.
inline void write_containment_csv(std::ostream& os, const SimulationTrace& tr) {
  os << "t,R,V_bound,V_sampled";
  for (std::size_t i = 0; i < tr.n; ++i) os << ",xc" << i;
  os << '\n';
  for (std::size_t k = 0; k < tr.containment.size() && k < tr.rows.size(); ++k) {
    const auto& c = tr.containment[k];
    os << format_double(tr.rows[k].t) << ',' << format_double(c.radius) << ','
       << format_double(c.V_bound) << ',' << format_double(c.V_sampled);
    for (double v : c.center) os << ',' << format_double(v);
    os << '\n';
  }
}

inline void write_events_csv(std::ostream& os, const SimulationTrace& tr) {
  os << "sensor,t,value,gap\n";
  for (const auto& e : tr.events) {
    os << e.sensor << ',' << format_double(e.t) << ',' << format_double(e.value) << ','
       << format_double(e.gap) << '\n';
  }
}

inline std::vector<TransmissionEvent> read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "sensor,t,value,gap") {
    throw ValidationError("event CSV: missing or unexpected header");
  }
  std::vector<TransmissionEvent> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4) throw ValidationError("event CSV: expected 4 fields in '" + line + "'");
    TransmissionEvent e;
    e.sensor = static_cast<std::size_t>(std::stoul(f[0]));
    e.t = parse_double(f[1]);
    e.value = parse_double(f[2]);
    e.gap = parse_double(f[3]);
    out.push_back(e);
  }
  return out;
}

/// Transmissions as {type, sensor, t, value, gap}; broadcasts as
/// {type: "param_update", t, V_sampled, w, T}. Ordered by step; within a step
/// transmissions precede the broadcast.
inline json events_document(const SimulationTrace& tr) {
  json a = json::array();
  std::size_t u = 0;
  auto flush_updates_before = [&](long step) {
    while (u < tr.updates.size() && tr.updates[u].step < step) {
      const auto& up = tr.updates[u++];
      a.push_back({{"type", "param_update"},
                   {"t", up.t},
                   {"V_sampled", up.V_sampled},
                   {"w", to_json(up.w)},
                   {"T", to_json(up.T)}});
    }
  };
  for (const auto& e : tr.events) {
    flush_updates_before(e.step);
    a.push_back({{"type", "transmission"},
                 {"sensor", e.sensor},
                 {"t", e.t},
                 {"value", e.value},
                 {"gap", e.gap}});
  }
  flush_updates_before(std::numeric_limits<long>::max());
  return a;
}

inline json summary_document(const TraceSummary& s, const SimulationTrace& tr) {
  json doc;
  doc["mode"] = to_string(tr.mode);
  doc["step"] = tr.h;
  doc["horizon"] = tr.horizon;
  doc["parameter_updates"] = s.parameter_updates;
  doc["metadata"] = tr.metadata;
  json sensors = json::array();
  for (const auto& ss : s.sensors) {
    json j;
    j["sensor"] = ss.sensor;
    j["count"] = ss.count;
    j["T_design"] = number(ss.T_design);
    auto opt = [](const std::optional<double>& v) { return v ? number(*v) : json(nullptr); };
    j["min_gap"] = opt(ss.min_gap);
    j["mean_gap"] = opt(ss.mean_gap);
    j["max_gap"] = opt(ss.max_gap);
    j["ratio"] = opt(ss.ratio);
    json cdf = json::array();
    for (const auto& p : ss.cdf) cdf.push_back({{"fraction", p.fraction}, {"gap", p.gap}});
    j["cdf"] = std::move(cdf);
    sensors.push_back(std::move(j));
  }
  doc["sensors"] = std::move(sensors);
  return doc;
}

// ---------------------------------------------------------------------------
// input files

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

/// Custom LTI model: {A, B, K, Q, theta, sigma, x0, xs0, horizon}.
inline LtiProblem lti_problem_from_json(const json& j, const std::string& name = "custom") {
  if (!j.is_object()) throw ValidationError("model file must contain a JSON object");
  for (const char* key : {"A", "B", "K", "theta", "sigma", "x0", "xs0"}) {
    if (!j.contains(key)) throw ValidationError(std::string("model file is missing '") + key + "'");
  }
  LtiProblem p;
  p.A = matrix_from_json(j["A"], "A");
  p.B = matrix_from_json(j["B"], "B");
  p.K = matrix_from_json(j["K"], "K");
  p.Q = j.contains("Q") ? matrix_from_json(j["Q"], "Q") : Matrix::identity(p.A.rows());
  p.theta = vector_from_json(j["theta"], "theta");
  if (!j["sigma"].is_number()) throw ValidationError("sigma must be a number");
  p.sigma = j["sigma"].get<double>();
  p.x0 = vector_from_json(j["x0"], "x0");
  p.xs0 = vector_from_json(j["xs0"], "xs0");
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number()) throw ValidationError("horizon must be a number");
    p.horizon = j["horizon"].get<double>();
  }
  if (p.x0.size() != p.A.rows() || p.xs0.size() != p.A.rows()) {
    throw ValidationError("x0/xs0 length does not match the state dimension");
  }
  p.model = make_lti_model(name, p.A, p.B, p.K);
  return p;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace dectrig::io
