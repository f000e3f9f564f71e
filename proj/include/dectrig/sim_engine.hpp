#pragma once

// Fixed-step closed-loop simulation with asynchronous per-sensor sampling.
//
// Between step boundaries the controller holds u = k(x_s) and the plant is
// advanced by one classical RK4 step. Sensor triggers are evaluated at every
// step boundary; a firing sensor overwrites its component of x_s with the
// current x_i and the event is timestamped at that boundary (no sub-step
// localization).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig {

struct SystemModel {
  std::string name;
  std::size_t n = 0;  // state dimension = number of sensors
  std::size_t m = 0;  // input dimension
  std::function<Vector(const Vector& x, const Vector& u)> f;
  std::function<Vector(const Vector& xs)> k;
  // present for LTI models; reproduce f and k exactly
  std::optional<Matrix> A;
  std::optional<Matrix> B;
  std::optional<Matrix> K;

  double f_i(std::size_t i, const Vector& x, const Vector& u) const { return f(x, u).at(i); }
  bool is_lti() const { return A && B && K; }
};

struct SimState {
  double t = 0.0;
  long step = 0;
  Vector x;
  Vector xs;
  Vector last_tx;  // time of each sensor's most recent transmission

  double error(std::size_t i) const { return xs[i] - x[i]; }
  Vector error() const { return xs - x; }
};

struct TransmissionEvent {
  std::size_t sensor = 0;
  double t = 0.0;
  long step = 0;
  double value = 0.0;
  double gap = 0.0;  // t minus the previous transmission (or the initial reference)
};

struct ParamUpdateEvent {
  double t = 0.0;
  long step = 0;
  double V_sampled = 0.0;
  Vector w;
  Vector T;
};

struct TraceRow {
  double t = 0.0;
  Vector x;
  Vector xs;
  double V = 0.0;
  double Vdot = 0.0;  // forward difference (V(x_{k+1}) - V(x_k)) / h
};

struct ContainmentRow {
  Vector center;
  double radius = 0.0;
  double V_bound = 0.0;
  double V_sampled = 0.0;
};

enum class TriggerMode { Decentralized, Centralized, Feedback };

inline std::string to_string(TriggerMode m) {
  switch (m) {
    case TriggerMode::Decentralized: return "decentralized";
    case TriggerMode::Centralized: return "centralized";
    case TriggerMode::Feedback: return "feedback";
  }
  return "unknown";
}

inline TriggerMode parse_mode(const std::string& s) {
  if (s == "decentralized") return TriggerMode::Decentralized;
  if (s == "centralized") return TriggerMode::Centralized;
  if (s == "feedback") return TriggerMode::Feedback;
  throw ValidationError("unknown trigger mode '" + s + "'");
}

struct RunOptions {
  TriggerMode mode = TriggerMode::Decentralized;
  /// Centralized mode only: also enforce the dwell T_i before checking.
  bool centralized_dwell = true;
  double h = 1e-4;
  double horizon = 10.0;
  std::size_t log_stride = 1;
  /// Abort when one sensor fires on this many consecutive steps.
  long max_consecutive_firings = 10'000;
};

struct SimulationTrace {
  std::size_t n = 0;
  TriggerMode mode = TriggerMode::Decentralized;
  double h = 0.0;
  double horizon = 0.0;
  TriggerConfig initial_config;
  std::vector<TraceRow> rows;
  std::vector<TransmissionEvent> events;
  std::vector<ParamUpdateEvent> updates;
  std::vector<ContainmentRow> containment;  // aligned with rows in feedback mode
  std::map<std::string, std::string> metadata;

  std::vector<TransmissionEvent> events_of(std::size_t sensor) const {
    std::vector<TransmissionEvent> out;
    for (const auto& e : events)
      if (e.sensor == sensor) out.push_back(e);
    return out;
  }
};

/// Hook run at every step boundary after the sensor triggers; may replace the
/// trigger configuration in place. Returns true if it did.
class ParameterScheduler {
 public:
  virtual ~ParameterScheduler() = default;
  virtual bool on_step(const SimState& state, TriggerConfig& config, ParamUpdateEvent& event) = 0;
  virtual std::optional<ContainmentRow> containment() const { return std::nullopt; }
};

/// One RK4 step of x' = f(x, k(x_s)) with x_s held.
inline SimState step(const SystemModel& model, const SimState& state, double h) {
  if (!(h > 0.0)) throw ValidationError("step size must be positive");
  const Vector u = model.k(state.xs);
  auto deriv = [&](const Vector& x) {
    Vector d = model.f(x, u);
    if (!all_finite(d)) {
      std::ostringstream os;
      os << "non-finite state derivative at t = " << state.t;
      throw NumericalError(os.str());
    }
    return d;
  };
  const Vector k1 = deriv(state.x);
  const Vector k2 = deriv(state.x + (0.5 * h) * k1);
  const Vector k3 = deriv(state.x + (0.5 * h) * k2);
  const Vector k4 = deriv(state.x + h * k3);
  SimState next = state;
  for (std::size_t i = 0; i < next.x.size(); ++i) {
    next.x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  next.t = state.t + h;
  next.step = state.step + 1;
  return next;
}

/// Fires iff the dwell has elapsed and |x_{i,e}| >= w_i |x_i| with a nonzero error.
inline bool evaluate_trigger_decentralized(const SimState& s, const TriggerConfig& cfg,
                                           std::size_t i) {
  const auto& st = cfg.sensors.at(i);
  if (s.t - s.last_tx.at(i) < st.T) return false;
  const double e = std::abs(s.error(i));
  return e > 0.0 && e >= st.w * std::abs(s.x[i]);
}

/// Fires iff |x_{i,e}| >= w_i |x| with a nonzero error, optionally after the dwell.
inline bool evaluate_trigger_centralized(const SimState& s, const TriggerConfig& cfg, std::size_t i,
                                         bool with_dwell) {
  const auto& st = cfg.sensors.at(i);
  if (with_dwell && s.t - s.last_tx.at(i) < st.T) return false;
  const double e = std::abs(s.error(i));
  return e > 0.0 && e >= st.w * norm2(s.x);
}

inline SimulationTrace run(const SystemModel& model, const LyapunovCertificate& cert,
                           const TriggerConfig& config, const Vector& x0, const Vector& xs0,
                           const RunOptions& opts, ParameterScheduler* scheduler = nullptr) {
  const std::size_t n = model.n;
  if (x0.size() != n || xs0.size() != n || config.size() != n) {
    throw ValidationError("run: dimension mismatch between model, config and initial data");
  }
  if (!(opts.h > 0.0) || !(opts.horizon >= 0.0)) {
    throw ValidationError("run: step must be positive and horizon non-negative");
  }
  if (opts.log_stride == 0) throw ValidationError("run: log stride must be at least 1");
  if (opts.mode == TriggerMode::Feedback && scheduler == nullptr) {
    throw ValidationError("run: feedback mode requires a parameter scheduler");
  }
  const double v0 = cert.V(x0);
  if (!(v0 <= cert.level)) {
    std::ostringstream os;
    os << "run: initial state lies outside S(c): V(x0) = " << v0 << " > c = " << cert.level;
    throw ValidationError(os.str());
  }

  SimulationTrace trace;
  trace.n = n;
  trace.mode = opts.mode;
  trace.h = opts.h;
  trace.horizon = opts.horizon;
  trace.initial_config = config;
  trace.metadata["integrator"] = "rk4-fixed-step";
  trace.metadata["event_localization"] = "step-boundary";
  if (opts.mode == TriggerMode::Centralized) {
    trace.metadata["centralized_dwell"] = opts.centralized_dwell ? "true" : "false";
  }
  if (opts.mode == TriggerMode::Feedback) {
    trace.metadata["broadcast_latency"] = "0 (synchronous, zero-latency model)";
    trace.metadata["dwell_clock_on_update"] = "kept";
  }

  TriggerConfig cfg = config;
  SimState s;
  s.x = x0;
  s.xs = xs0;
  s.last_tx.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.last_tx[i] = -cfg.sensors[i].T;

  const long steps = std::lround(opts.horizon / opts.h);
  std::vector<long> consecutive(n, 0);
  trace.rows.reserve(static_cast<std::size_t>(steps / static_cast<long>(opts.log_stride)) + 2);

  for (long k = 0;; ++k) {
    s.step = k;
    s.t = static_cast<double>(k) * opts.h;

    for (std::size_t i = 0; i < n; ++i) {
      const bool fire = opts.mode == TriggerMode::Centralized
                            ? evaluate_trigger_centralized(s, cfg, i, opts.centralized_dwell)
                            : evaluate_trigger_decentralized(s, cfg, i);
      if (!fire) {
        consecutive[i] = 0;
        continue;
      }
      if (++consecutive[i] > opts.max_consecutive_firings) {
        std::ostringstream os;
        os << "sensor " << i << " fired on " << consecutive[i]
           << " consecutive steps at t = " << s.t << "; suspected parameter error";
        throw NumericalError(os.str());
      }
      trace.events.push_back({i, s.t, k, s.x[i], s.t - s.last_tx[i]});
      s.xs[i] = s.x[i];
      s.last_tx[i] = s.t;
    }

    if (scheduler != nullptr) {
      ParamUpdateEvent ev;
      if (scheduler->on_step(s, cfg, ev)) {
        ev.t = s.t;
        ev.step = k;
        trace.updates.push_back(std::move(ev));
      }
    }

    // one step ahead even on the last boundary so Vdot is always a forward difference
    SimState next = step(model, s, opts.h);
    const bool last = k >= steps;
    if (k % static_cast<long>(opts.log_stride) == 0 || last) {
      const double v = cert.V(s.x);
      trace.rows.push_back({s.t, s.x, s.xs, v, (cert.V(next.x) - v) / opts.h});
      if (scheduler != nullptr) {
        if (auto c = scheduler->containment()) trace.containment.push_back(std::move(*c));
      }
    }
    if (last) break;
    s.x = std::move(next.x);
  }
  return trace;
}

// ---------------------------------------------------------------------------

struct CdfPoint {
  double fraction = 0.0;
  double gap = 0.0;
};

struct SensorSummary {
  std::size_t sensor = 0;
  std::size_t count = 0;
  double T_design = 0.0;
  std::optional<double> min_gap;
  std::optional<double> mean_gap;
  std::optional<double> max_gap;
  std::optional<double> ratio;  // T_design / mean_gap
  std::vector<CdfPoint> cdf;
};

struct TraceSummary {
  std::vector<SensorSummary> sensors;
  std::size_t parameter_updates = 0;
};

inline std::vector<double> default_quantiles() {
  std::vector<double> q;
  for (int i = 1; i <= 20; ++i) q.push_back(0.05 * i);
  return q;
}

/// Statistics from transmission times only; gaps are differences between
/// consecutive recorded transmissions of one sensor.
inline SensorSummary summarize_sensor(std::size_t sensor, const std::vector<double>& times,
                                      double T_design, const std::vector<double>& quantiles) {
  SensorSummary s;
  s.sensor = sensor;
  s.count = times.size();
  s.T_design = T_design;
  if (times.size() < 2) return s;
  std::vector<double> gaps;
  gaps.reserve(times.size() - 1);
  double sum = 0.0;
  for (std::size_t j = 1; j < times.size(); ++j) {
    gaps.push_back(times[j] - times[j - 1]);
    sum += gaps.back();
  }
  std::sort(gaps.begin(), gaps.end());
  s.min_gap = gaps.front();
  s.max_gap = gaps.back();
  s.mean_gap = sum / static_cast<double>(gaps.size());
  s.ratio = T_design / *s.mean_gap;
  for (double q : quantiles) {
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("quantile levels must lie in (0,1]");
    const auto idx = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(gaps.size()) - 1e-9));
    s.cdf.push_back({q, gaps[std::min(gaps.size(), std::max<std::size_t>(idx, 1)) - 1]});
  }
  return s;
}

inline TraceSummary summarize(const SimulationTrace& trace,
                              const std::vector<double>& quantiles = default_quantiles()) {
  if (trace.rows.empty()) throw ValidationError("summarize: empty trace");
  TraceSummary out;
  out.parameter_updates = trace.updates.size();
  std::vector<std::vector<double>> times(trace.n);
  for (const auto& e : trace.events) times.at(e.sensor).push_back(e.t);
  for (std::size_t i = 0; i < trace.n; ++i) {
    out.sensors.push_back(
        summarize_sensor(i, times[i], trace.initial_config.sensors.at(i).T, quantiles));
  }
  return out;
}

}  // namespace dectrig
