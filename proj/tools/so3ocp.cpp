//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Command line driver: solve or simulate built-in or JSON scenarios.
//
//   so3ocp list-scenarios
//   so3ocp solve pend-i --output-dir out
//   so3ocp solve pend-i sc-iii --jobs 2 --output-dir out   (out/<name>/...)
//   so3ocp simulate my_case.json --output-dir out
//
// Exit status: 0 on convergence, 2 on solver failure, 1 on usage or
// configuration errors.

#include "so3ocp/so3ocp.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;

struct Options {
  std::vector<std::string> targets;
  std::string output_dir = "so3ocp_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> max_outer;
  std::optional<double> tol;
  bool store_transitions = false;
  unsigned jobs = 1;
  bool quiet = false;
};

std::mutex g_print;

void say(const std::string &line, bool err = false) {
  std::lock_guard<std::mutex> lock(g_print);
  (err ? std::cerr : std::cout) << line << std::endl;
}

std::string format_summary(const so3ocp::RunSummary &s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: J = %.10g, attitude violation = %.3e, momentum "
                "violation = %.3e, outer iterations = %d, %s (%.2f s)",
                s.scenario.c_str(), s.J, s.attitude_violation,
                s.momentum_violation, s.outer_iterations,
                s.converged ? "converged" : "not converged", s.wall_time_s);
  return buf;
}

int run_one(const std::string &target, const Options &opt, bool simulate,
            bool own_subdir) {
  so3ocp::ScenarioConfig cfg;
  try {
    cfg = so3ocp::resolve_scenario(target);
    if (opt.seed) cfg.shooting.seed = *opt.seed;
    if (opt.max_outer) cfg.shooting.max_outer = *opt.max_outer;
    if (opt.tol) cfg.shooting.eps_stop = *opt.tol;
  } catch (const so3ocp::Error &e) {
    say(std::string("error: ") + e.what(), true);
    return kExitUsage;
  }
  const std::filesystem::path dir =
      own_subdir ? std::filesystem::path(opt.output_dir) / cfg.name
                 : std::filesystem::path(opt.output_dir);
  try {
    if (simulate) {
      const auto s = so3ocp::simulate(cfg, dir);
      if (!opt.quiet) say(format_summary(s));
      return kExitOk;
    }
    const auto s = so3ocp::run(cfg, dir, {opt.store_transitions});
    if (!opt.quiet) say(format_summary(s));
    return kExitOk;
  } catch (const so3ocp::ShootingFailure &e) {
    say(cfg.name + ": solver failure: " + e.what() +
            " (best iterate written to " + dir.string() + ")",
        true);
    return kExitSolver;
  } catch (const so3ocp::IoError &e) {
    say(std::string("error: ") + e.what(), true);
    return kExitUsage;
  } catch (const so3ocp::Error &e) {
    say(cfg.name + ": solver failure: " + e.what(), true);
    return kExitSolver;
  }
}

int run_all(const Options &opt, bool simulate) {
  const bool subdirs = opt.targets.size() > 1;
  std::vector<int> codes(opt.targets.size(), kExitOk);
  const unsigned workers = std::max(
      1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(opt.targets.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < opt.targets.size();)
      codes[i] = run_one(opt.targets[i], opt, simulate, subdirs);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();
  if (std::find(codes.begin(), codes.end(), kExitUsage) != codes.end())
    return kExitUsage;
  if (std::find(codes.begin(), codes.end(), kExitSolver) != codes.end())
    return kExitSolver;
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Discrete optimal attitude control on SO(3)"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("scenario", opt.targets,
                    "built-in scenario name or JSON config path")
        ->required();
    cmd->add_option("-o,--output-dir", opt.output_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "seed of the initial multiplier guess");
    cmd->add_option("--jobs", opt.jobs, "scenarios run in parallel")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("-q,--quiet", opt.quiet, "suppress the summary line");
  };

  auto *solve = app.add_subcommand("solve", "solve the boundary value problem");
  add_common(solve);
  solve->add_option("--max-outer", opt.max_outer, "outer iteration limit")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--tol", opt.tol, "terminal error stopping threshold")
      ->check(CLI::PositiveNumber);
  solve->add_flag("--store-transitions", opt.store_transitions,
                  "also write the per-step 12x12 transitions");

  auto *sim = app.add_subcommand("simulate", "integrate with zero control");
  add_common(sim);

  auto *list = app.add_subcommand("list-scenarios", "print built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (list->parsed()) {
    for (const auto &n : so3ocp::builtin_scenario_names()) std::cout << n << '\n';
    return kExitOk;
  }
  return run_all(opt, sim->parsed());
}
