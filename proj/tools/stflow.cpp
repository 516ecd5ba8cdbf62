// Experiment runner: builds the scenario in a config file, runs its flow and
// checks, and persists trajectories and reports. Exit codes: 0 all definite
// checks pass, 1 a check failed, 2 invalid config or inputs, 3 the stepper
// could not advance. A scenario marked expected-fail swaps 0 and 1 exactly
// once.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "stflow/config.hpp"
#include "stflow/io.hpp"
#include "stflow/lfde.hpp"
#include "stflow/measures.hpp"
#include "stflow/report.hpp"
#include "stflow/scenario.hpp"
#include "stflow/spacetime.hpp"
#include "stflow/verify.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

int run_one(const std::string& config_path, const std::string& out_override) {
  try {
    stflow::ExperimentConfig cfg = stflow::load_config(config_path);
    stflow::ScenarioArtifacts art = stflow::run_experiment(cfg);
    std::string out_dir = out_override.empty()
                              ? cfg.resolve(cfg.get_str("output.dir", "out"))
                              : out_override;
    stflow::write_artifacts(art, out_dir);
    bool pass = stflow::all_checks_pass(art.reports);
    for (const auto& r : art.reports) std::cout << stflow::to_record(r) << '\n';
    std::cout << art.scenario << ": " << (pass ? "all checks pass" : "check failed")
              << (art.expected_fail ? " (expected-fail scenario)" : "")
              << "; artifacts in " << out_dir << '\n';
    int code = pass ? kExitPass : kExitCheckFailed;
    if (art.expected_fail) code = code == kExitPass ? kExitCheckFailed : kExitPass;
    return code;
  } catch (const stflow::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const stflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const stflow::GridError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int worst_code(const std::vector<int>& codes) {
  for (int want : {kExitConfig, kExitSolver, kExitCheckFailed})
    for (int c : codes)
      if (c == want) return want;
  return kExitPass;
}

stflow::Trajectory load_traj_or_exit(const std::string& dir) {
  return stflow::load_trajectory(dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow experiments on time-varying planar domains"};
  app.require_subcommand(1);

  // run
  std::vector<std::string> configs;
  std::string out_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run experiment configs");
  run->add_option("configs", configs, "config files")->required()->expected(-1);
  run->add_option("--jobs", jobs, "run configs concurrently")->check(CLI::Range(1, 64));
  run->add_option("--out", out_dir, "output directory (single config only)");

  // verify
  std::string check_name;
  std::vector<std::string> inputs;
  auto* verify = app.add_subcommand("verify", "run one named check on stored artifacts");
  verify->add_option("check", check_name,
                     "chen-global | harnack | comparison | continuity | volume-decay")
      ->required();
  verify->add_option("inputs", inputs, "check inputs (paths and numbers)")
      ->expected(-1);

  // emit-plots
  std::string report_dir;
  auto* plots = app.add_subcommand("emit-plots", "export CSV series from stored reports");
  plots->add_option("reportdir", report_dir, "directory holding reports.txt")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (!out_dir.empty() && configs.size() > 1) {
      std::cerr << "--out applies to a single config\n";
      return kExitConfig;
    }
    if (jobs <= 1 || configs.size() <= 1) {
      std::vector<int> codes;
      for (const auto& c : configs) codes.push_back(run_one(c, out_dir));
      return worst_code(codes);
    }
    std::vector<int> codes(configs.size(), kExitPass);
    size_t next = 0;
    std::vector<std::thread> pool;
    std::mutex mu;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (;;) {
          size_t mine;
          {
            std::lock_guard<std::mutex> lk(mu);
            if (next >= configs.size()) return;
            mine = next++;
          }
          codes[mine] = run_one(configs[mine], "");
        }
      });
    for (auto& t : pool) t.join();
    return worst_code(codes);
  }

  if (verify->parsed()) {
    try {
      auto num = [&](size_t i) { return std::stod(inputs.at(i)); };
      stflow::VerificationReport rep;
      if (check_name == "chen-global") {
        if (inputs.size() < 3 || inputs.size() > 4)
          throw stflow::ConfigError(
              "usage: verify chen-global <trajdir> <hindsight> <tol> [inset]");
        stflow::Trajectory traj = load_traj_or_exit(inputs[0]);
        const auto& snap = traj.snaps.back();
        stflow::FlowState f;
        f.t = snap.t;
        f.u = snap.u;
        f.mask = traj.mask;
        f.boundary = stflow::BoundaryPolicy::frozen(snap.ghost);
        rep = stflow::check_chen_global(f, num(1), num(2),
                                        inputs.size() > 3 ? num(3) : 0.0);
      } else if (check_name == "harnack") {
        if (inputs.size() < 7 || inputs.size() > 9)
          throw stflow::ConfigError(
              "usage: verify harnack <trajdir> <x0> <y0> <x1> <y1> <t0> <t1> "
              "[hindsight] [tol]");
        stflow::Trajectory traj = load_traj_or_exit(inputs[0]);
        stflow::Curve curve =
            stflow::Curve::segment({num(1), num(2)}, {num(3), num(4)});
        rep = stflow::check_harnack(traj, curve, num(5), num(6),
                                    inputs.size() > 7 ? num(7) : 0.0,
                                    inputs.size() > 8 ? num(8) : -1.0);
      } else if (check_name == "comparison") {
        if (inputs.size() < 3 || inputs.size() > 4)
          throw stflow::ConfigError(
              "usage: verify comparison <lower-trajdir> <upper-trajdir> <s> [tol]");
        stflow::Trajectory lo = load_traj_or_exit(inputs[0]);
        stflow::Trajectory hi = load_traj_or_exit(inputs[1]);
        rep = stflow::check_comparison(lo, hi, num(2),
                                       inputs.size() > 3 ? num(3) : 0.0);
      } else if (check_name == "continuity") {
        if (inputs.size() != 1)
          throw stflow::ConfigError("usage: verify continuity <spacetime-file>");
        stflow::SpacetimeDomain s = stflow::load_spacetime(inputs[0]);
        stflow::ContinuityResult cr = stflow::is_continuous(s);
        rep = stflow::VerificationReport::make(
            "continuity", cr.continuous ? 0.0 : -double(cr.violations.size()), 0.0);
        if (!cr.violations.empty()) {
          auto [c, k] = cr.violations.front();
          rep.set_witness(c % s.grid.nx, c / s.grid.nx, s.times[k]);
        }
      } else if (check_name == "volume-decay") {
        if (inputs.size() < 4 || inputs.size() > 7)
          throw stflow::ConfigError(
              "usage: verify volume-decay <trajdir> <measure> <r> <R> [cx cy] "
              "[sigma]");
        stflow::Trajectory traj = load_traj_or_exit(inputs[0]);
        stflow::DiscreteMeasure mu = stflow::load_measure(inputs[1]);
        stflow::Vec2 center{inputs.size() > 5 ? num(4) : 0.0,
                            inputs.size() > 5 ? num(5) : 0.0};
        double sigma = inputs.size() > 6 ? num(6) : 2.0 * mu.grid.h;
        rep = stflow::check_volume_decay(traj, mu, num(2), num(3), center, sigma);
      } else {
        throw stflow::ConfigError("unknown check '" + check_name + "'");
      }
      std::cout << stflow::to_record(rep) << '\n';
      return rep.verdict == stflow::VerificationReport::Verdict::Fail
                 ? kExitCheckFailed
                 : kExitPass;
    } catch (const stflow::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "input error: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  if (plots->parsed()) {
    try {
      namespace fs = std::filesystem;
      std::string reports = (fs::path(report_dir) / "reports.txt").string();
      auto rs = stflow::load_reports(reports);
      stflow::export_plot_csv(rs, report_dir);
      std::cout << "wrote margin_vs_h.csv, margin_vs_lambda.csv, c0_vs_t.csv to "
                << report_dir << '\n';
      return kExitPass;
    } catch (const std::exception& e) {
      std::cerr << "input error: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  return kExitConfig;
}
