// Benchmark driver: runs suites of seeded planner runs and the sigma sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "biam/bench.hpp"
#include "biam/error.hpp"

using namespace biam;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

CacheOptions cache_options(const std::string& dir, bool rebuild, bool no_build) {
  CacheOptions c;
  if (!dir.empty()) c.directory = dir;
  c.rebuild = rebuild;
  c.allow_build = !no_build;
  return c;
}

void print_cells(const std::vector<RunStats>& stats) {
  std::printf("%-14s %-9s %7s %9s %12s %12s\n", "planner", "scenario", "arrived", "attached", "search_med_s",
              "length_med_m");
  for (const auto& c : summarize_cells(stats)) {
    std::printf("%-14s %-9s %3zu/%-3zu %9zu %12.3f %12.2f\n", c.planner_id.c_str(), c.scenario.c_str(), c.arrived,
                c.runs, c.attached, c.median_search_time_s, c.median_traveled_length_m);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded benchmark runs for the real-time planners"};
  app.require_subcommand(1);

  std::string cache_dir = ".biam-cache";
  bool rebuild = false;
  bool no_build = false;
  int jobs = 1;
  app.add_option("--cache-dir", cache_dir, "Metric cache directory (empty disables caching)");
  app.add_flag("--rebuild-metrics", rebuild, "Recompute metric caches");
  app.add_flag("--no-metric-build", no_build, "Fail instead of building a missing metric cache");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run a suite file and write the CSV");
  std::string suite_path, out_path;
  bool deterministic = false;
  run->add_option("--suite", suite_path, "biam-suite v1 document")->required();
  run->add_option("--out", out_path, "CSV output path")->required();
  run->add_flag("--deterministic", deterministic, "Use the virtual work clock regardless of the suite file");

  auto* matrix = app.add_subcommand("matrix", "Print the planner rows");

  auto* sigma = app.add_subcommand("sigma", "Sweep the connection distance");
  std::string scenario = "office", planner = "bi-am-rrt-d";
  std::vector<double> sigmas{10, 20, 30, 40, 50, 60};
  int reps = 25;
  double inject_ahead = 0.0;
  std::uint64_t inject_tick = 40;
  double inject_radius = 1.5;
  std::string sigma_out;
  sigma->add_option("--scenario", scenario);
  sigma->add_option("--planner", planner);
  sigma->add_option("--sigmas", sigmas)->delimiter(',');
  sigma->add_option("--repetitions", reps)->check(CLI::PositiveNumber);
  sigma->add_option("--inject-ahead", inject_ahead, "Drop a disc this far along the path (0: none)");
  sigma->add_option("--inject-tick", inject_tick);
  sigma->add_option("--inject-radius", inject_radius);
  sigma->add_option("--out", sigma_out, "Per-run CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (matrix->parsed()) {
      std::printf("%-14s %-16s %-14s %-8s %6s %6s %5s %s\n", "id", "label", "scheme", "metric", "t_root", "t_goal",
                  "n_max", "assisted");
      for (const auto& r : planner_matrix()) {
        std::printf("%-14s %-16s %-14s %-8s %6.3f %6.3f %5d %s\n", r.id.c_str(), r.label.c_str(),
                    std::string(to_string(r.scheme)).c_str(), std::string(to_string(r.config.metric)).c_str(),
                    r.config.t_root, r.config.t_goal, r.config.n_max, r.config.assisted ? "yes" : "no");
      }
      return 0;
    }

    MetricStore store(cache_options(cache_dir, rebuild, no_build));

    if (run->parsed()) {
      SuiteConfig suite = parse_suite(read_file(suite_path));
      if (deterministic) suite.budget_mode = BudgetMode::deterministic;
      std::ofstream out(out_path);
      if (!out) throw Error("cannot write " + out_path);
      const auto stats = run_suite(suite, store, jobs, [](std::size_t done, std::size_t total, const RunStats& r) {
        std::fprintf(stderr, "\r[%zu/%zu] %s %s seed %llu", done, total, r.planner_id.c_str(), r.scenario.c_str(),
                     static_cast<unsigned long long>(r.seed));
      });
      std::fprintf(stderr, "\n");
      write_csv(out, stats);
      std::ofstream prep(out_path + ".prep.csv");
      prep << "scenario,metric,prep_time_s,from_cache\n";
      for (const auto& p : store.prep_records()) {
        prep << p.scenario << ',' << to_string(p.kind) << ',' << p.seconds << ',' << (p.from_cache ? 1 : 0) << '\n';
      }
      print_cells(stats);
      std::printf("\n");
      write_comparisons(std::cout, summarize(stats));
      return 0;
    }

    if (sigma->parsed()) {
      SigmaSweepOptions o;
      o.repetitions = reps;
      o.jobs = jobs;
      if (inject_ahead > 0.0) o.events.push_back({inject_tick, {}, inject_radius, inject_ahead});
      std::vector<RunStats> runs;
      const auto points = sigma_sweep(scenario, planner, sigmas, o, store, &runs);
      std::printf("%-6s %5s %8s %9s %7s %9s\n", "sigma", "runs", "arrived", "audit_bad", "passed", "pass_rate");
      for (const auto& p : points) {
        std::printf("%-6g %5zu %8zu %9zu %7zu %9.2f\n", p.sigma, p.runs, p.arrived, p.audit_failures, p.passed,
                    p.pass_rate());
      }
      if (!sigma_out.empty()) {
        std::ofstream out(sigma_out);
        if (!out) throw Error("cannot write " + sigma_out);
        write_csv(out, runs);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 1;
  }
  return 0;
}
