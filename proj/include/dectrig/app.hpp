#pragma once

// Command implementations behind the CLI. Each returns a process exit code
// and writes human-readable text to `log`; errors propagate as exceptions
// carrying their own exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dectrig/errors.hpp"
#include "dectrig/io.hpp"
#include "dectrig/scenario.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/verify.hpp"

namespace dectrig::app {

namespace fs = std::filesystem;
using nlohmann::json;

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

inline std::string ms(double seconds) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << seconds * 1e3;
  return os.str();
}

/// Prints the design document; also saves it as <out>/design.json when
/// `save` is set. Nothing is written unless the design succeeds.
inline int cmd_design(const RunConfig& cfg, std::ostream& log, bool save) {
  const Scenario s = build_scenario(cfg);
  const std::string doc = s.design.dump(2) + "\n";
  if (save) {
    ensure_directory(cfg.out);
    io::write_text_file((fs::path(cfg.out) / "design.json").string(), doc);
  }
  log << doc;
  return 0;
}

inline void print_summary(std::ostream& log, const Scenario& s, const TraceSummary& sum,
                          const SimulationTrace& tr) {
  log << s.name << ", " << to_string(tr.mode) << ", " << ms(tr.h) << " ms step, " << tr.horizon
      << " s\n";
  log << "sensor  count   T [ms]  min gap  mean gap  T/mean\n";
  for (const auto& ss : sum.sensors) {
    log << std::setw(6) << ss.sensor << std::setw(7) << ss.count << std::setw(9) << ms(ss.T_design)
        << std::setw(9) << (ss.min_gap ? ms(*ss.min_gap) : "-") << std::setw(10)
        << (ss.mean_gap ? ms(*ss.mean_gap) : "-") << std::setw(8);
    if (ss.ratio) {
      log << std::fixed << std::setprecision(3) << *ss.ratio << std::defaultfloat;
    } else {
      log << "-";
    }
    log << '\n';
  }
  if (tr.mode == TriggerMode::Feedback) log << "parameter updates: " << sum.parameter_updates << '\n';
}

/// Writes trace.csv, events.csv, events.json, summary.json and, for feedback
/// runs, containment.csv into the output directory.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const Scenario s = build_scenario(cfg);
  const SimulationTrace tr = simulate(s, cfg);
  const TraceSummary sum = summarize(tr);

  // render everything first so a failure leaves no partial output set
  const std::string trace_csv = render([&](std::ostream& o) { io::write_trace_csv(o, tr); });
  const std::string events_csv = render([&](std::ostream& o) { io::write_events_csv(o, tr); });
  const std::string events_json = io::events_document(tr).dump(2) + "\n";
  json summary = io::summary_document(sum, tr);
  summary["config"] = to_json(cfg);
  summary["design"] = s.design;
  const std::string summary_json = summary.dump(2) + "\n";

  ensure_directory(cfg.out);
  const fs::path dir(cfg.out);
  io::write_text_file((dir / "trace.csv").string(), trace_csv);
  io::write_text_file((dir / "events.csv").string(), events_csv);
  io::write_text_file((dir / "events.json").string(), events_json);
  io::write_text_file((dir / "summary.json").string(), summary_json);
  if (tr.mode == TriggerMode::Feedback) {
    io::write_text_file((dir / "containment.csv").string(),
                        render([&](std::ostream& o) { io::write_containment_csv(o, tr); }));
  }
  print_summary(log, s, sum, tr);
  return 0;
}

/// Runs the invariant suite; the report goes to stdout as JSON and to
/// <out>/verify.json when `save` is set. Exit code 1 if any check fails.
inline int cmd_verify(const RunConfig& cfg, std::ostream& log, bool save) {
  cfg.validate();
  VerifyOptions opt;
  opt.fault = parse_fault(cfg.fault);
  opt.step = cfg.step;
  opt.horizon = cfg.horizon.value_or(10.0);
  const auto results = run_invariant_suite(opt);
  json report;
  report["fault"] = cfg.fault;
  report["passed"] = all_passed(results);
  json checks = json::array();
  for (const auto& r : results) checks.push_back(to_json(r));
  report["checks"] = std::move(checks);
  const std::string doc = report.dump(2) + "\n";
  if (save) {
    ensure_directory(cfg.out);
    io::write_text_file((fs::path(cfg.out) / "verify.json").string(), doc);
  }
  log << doc;
  return all_passed(results) ? 0 : 1;
}

struct SweepRun {
  RunConfig config;
  int exit_code = 0;
  std::string message;
};

/// A sweep file holds {"base": {...}, "runs": [{...}, ...], "jobs": n}. Each
/// run overrides the base and writes into <out>/run_NNN. Runs execute
/// concurrently in batches of `jobs`; their logs are printed in order.
inline int cmd_sweep(const json& sweep, const RunConfig& base_cfg, std::ostream& log) {
  if (!sweep.is_object() || !sweep.contains("runs") || !sweep["runs"].is_array()) {
    throw ValidationError("sweep file must be an object with a 'runs' array");
  }
  for (const auto& [key, value] : sweep.items()) {
    if (key != "base" && key != "runs" && key != "jobs") {
      throw ValidationError("sweep: unknown key '" + key + "'");
    }
  }
  RunConfig base = base_cfg;
  if (sweep.contains("base")) apply_json(base, sweep["base"]);
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  if (sweep.contains("jobs")) {
    if (!sweep["jobs"].is_number_integer() || sweep["jobs"].get<long>() < 1) {
      throw ValidationError("sweep: 'jobs' must be a positive integer");
    }
    jobs = sweep["jobs"].get<std::size_t>();
  }

  std::vector<SweepRun> runs;
  for (std::size_t k = 0; k < sweep["runs"].size(); ++k) {
    RunConfig rc = base;
    apply_json(rc, sweep["runs"][k]);
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", k);
    rc.out = (fs::path(base.out) / name).string();
    rc.validate();
    runs.push_back({rc, 0, ""});
  }
  ensure_directory(base.out);

  auto one = [](SweepRun& r) {
    std::ostringstream os;
    try {
      r.exit_code = cmd_simulate(r.config, os);
    } catch (const Error& e) {
      r.exit_code = e.exit_code();
      os << "error: " << e.what() << '\n';
    }
    r.message = os.str();
  };
  for (std::size_t start = 0; start < runs.size(); start += jobs) {
    std::vector<std::future<void>> batch;
    for (std::size_t k = start; k < std::min(runs.size(), start + jobs); ++k) {
      batch.push_back(std::async(std::launch::async, one, std::ref(runs[k])));
    }
    for (auto& f : batch) f.get();
  }

  json index = json::array();
  int worst = 0;
  for (const auto& r : runs) {
    log << "== " << r.config.out << " (exit " << r.exit_code << ")\n" << r.message;
    index.push_back({{"out", r.config.out}, {"exit_code", r.exit_code}, {"config", to_json(r.config)}});
    worst = std::max(worst, r.exit_code);
  }
  io::write_text_file((fs::path(base.out) / "sweep.json").string(), index.dump(2) + "\n");
  return worst;
}

}  // namespace dectrig::app
