#include "biam/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "biam/error.hpp"

namespace biam {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::original:
      return "original";
    case Scheme::bidirectional:
      return "bidirectional";
    case Scheme::new_rewiring:
      return "new_rewiring";
    case Scheme::both:
      return "both";
  }
  return "?";
}

namespace {

struct Base {
  const char* id;
  const char* label;
  MetricKind metric;
  bool am;
};

constexpr Base kBases[] = {
    {"rt-rrt", "RT-RRT*", MetricKind::euclidean, false},
    {"rt-rrt-d", "RT-RRT*(D)", MetricKind::diffusion, false},
    {"am-rrt-e", "AM-RRT*(E)", MetricKind::euclidean, true},
    {"am-rrt-d", "AM-RRT*(D)", MetricKind::diffusion, true},
    {"am-rrt-g", "AM-RRT*(G)", MetricKind::geodesic, true},
};

std::vector<PlannerRow> build_matrix() {
  std::vector<PlannerRow> rows;
  for (const Base& b : kBases) {
    for (Scheme s : {Scheme::original, Scheme::bidirectional, Scheme::new_rewiring, Scheme::both}) {
      PlannerRow r;
      r.base = b.id;
      r.scheme = s;
      switch (s) {
        case Scheme::original:
          r.id = b.id;
          r.label = b.label;
          break;
        case Scheme::bidirectional:
          r.id = std::string(b.id) + "-1";
          r.label = std::string(b.label) + "-1";
          break;
        case Scheme::new_rewiring:
          r.id = std::string(b.id) + "-2";
          r.label = std::string(b.label) + "-2";
          break;
        case Scheme::both:
          r.id = "bi-" + std::string(b.id);
          r.label = "Bi-" + std::string(b.label);
          break;
      }
      PlannerConfig& c = r.config;
      c.name = r.id;
      c.metric = b.metric;
      c.assisted = b.am;
      c.t_root = b.am ? 0.002 : 0.003;
      c.t_goal = b.am ? 0.004 : 0.003;
      c.n_max = b.am ? 20 : 12;
      c.bidirectional = s == Scheme::bidirectional || s == Scheme::both;
      c.new_rewiring = s == Scheme::new_rewiring || s == Scheme::both;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error("not a non-negative integer: '" + s + "'");
  }
  return std::stoull(s);
}

// Point `ahead` metres along the polyline from its first vertex, if it has
// at least `ahead + margin` metres.
std::optional<Point> along(const std::vector<Point>& line, double ahead, double margin) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += euclidean(line[i - 1], line[i]);
  if (total < ahead + margin) return std::nullopt;
  double left = ahead;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double d = euclidean(line[i - 1], line[i]);
    if (left <= d) return d > 0.0 ? line[i - 1] + (line[i] - line[i - 1]) * (left / d) : line[i];
    left -= d;
  }
  return line.back();
}

// Calls fn(i) for every i < count on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t count, int jobs, F&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  const auto n = static_cast<std::size_t>(std::max(1, jobs));
  if (n == 1 || count <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < std::min(n, count); ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace

const std::vector<PlannerRow>& planner_matrix() {
  static const std::vector<PlannerRow> rows = build_matrix();
  return rows;
}

const PlannerRow& find_planner(std::string_view id) {
  for (const auto& r : planner_matrix()) {
    if (r.id == id) return r;
  }
  throw ConfigError("unknown planner '" + std::string(id) + "'");
}

double default_sigma(std::string_view scenario) { return scenario == "bug_trap" ? 50.0 : 30.0; }

const WorldMap& MetricStore::map(const std::string& scenario) {
  auto it = maps_.find(scenario);
  if (it == maps_.end()) it = maps_.emplace(scenario, builtin_scenario(scenario)).first;
  return it->second;
}

const PreparedMetric& MetricStore::metric(const std::string& scenario, MetricKind kind) {
  const auto key = std::make_pair(scenario, kind);
  auto it = metrics_.find(key);
  if (it == metrics_.end()) it = metrics_.emplace(key, prepare_metric(map(scenario), kind, {}, cache_)).first;
  return it->second;
}

std::vector<MetricStore::PrepRecord> MetricStore::prep_records() const {
  std::vector<PrepRecord> out;
  for (const auto& [key, m] : metrics_) out.push_back({key.first, key.second, m.prep_seconds, m.from_cache});
  return out;
}

RunResult run_single(const RunSpec& spec, MetricStore& store) {
  if (spec.row == nullptr) throw ConfigError("run without a planner row");
  WorldMap map = store.map(spec.scenario);
  if (!map.start() || !map.goal()) throw ConfigError("scenario '" + spec.scenario + "' lacks S or G");
  const PreparedMetric& prepared = store.metric(spec.scenario, spec.row->config.metric);

  PlannerConfig config = spec.row->config;
  config.seed = spec.seed;
  config.budget_mode = spec.budget_mode;
  config.sigma = spec.sigma.value_or(default_sigma(spec.scenario));

  RunResult result;
  RunStats& st = result.stats;
  st.planner_id = spec.row->id;
  st.scenario = spec.scenario;
  st.seed = spec.seed;
  st.metric_prep_time_s = spec.budget_mode == BudgetMode::deterministic ? 0.0 : prepared.prep_seconds;

  Planner planner(map, prepared.metric, config, *map.start());
  planner.set_goal(*map.goal());
  std::optional<std::uint64_t> first_injection;
  std::size_t audited = 1;
  while (planner.phase() != Phase::arrived && planner.sim_time() < spec.cap_s - 1e-9) {
    const std::uint64_t tick = planner.tick_index() + 1;
    for (const ObstacleEvent& ev : spec.events) {
      if (ev.tick != tick) continue;
      Point c = ev.center;
      if (ev.ahead_m) {
        std::vector<Point> line{planner.agent()};
        const auto path = planner.current_path_points();
        if (path.size() > 1) line.insert(line.end(), path.begin() + 1, path.end());
        const auto p = along(line, *ev.ahead_m, ev.radius + config.goal_tolerance + 1.0);
        if (!p) continue;
        c = *p;
      }
      const ObstacleId id = map.add_obstacle(c, ev.radius);
      result.injected.push_back({tick, {id, c, ev.radius}});
      if (!first_injection) first_injection = tick;
    }
    const TickReport report = planner.plan_tick();
    const auto& motion = planner.motion();
    for (; audited < motion.size(); ++audited) {
      if (!map.segment_free(motion[audited - 1].p, motion[audited].p)) ++st.audit_failures;
    }
    if (first_injection && !result.replan_ticks && std::isfinite(report.cost_goal)) {
      result.replan_ticks = report.tick - *first_injection;
    }
  }
  st.arrived = planner.phase() == Phase::arrived;
  st.search_time_s = planner.search_time();
  st.traveled_length_m = planner.traveled();
  st.node_count_at_attach = planner.nodes_at_attach();
  st.attach_cost_m = planner.initial_path_cost();
  st.sim_time_s = planner.sim_time();
  if (spec.keep_logs) {
    result.motion = planner.motion();
    std::ostringstream log;
    planner.write_trajectory(log);
    result.trajectory_log = log.str();
  }
  return result;
}

void SuiteConfig::validate() const {
  if (planners.empty()) throw ConfigError("suite lists no planners");
  if (scenarios.empty()) throw ConfigError("suite lists no scenarios");
  for (const auto& p : planners) find_planner(p);
  const auto known = builtin_scenario_names();
  for (const auto& s : scenarios) {
    if (std::find(known.begin(), known.end(), s) == known.end()) throw ConfigError("unknown scenario '" + s + "'");
  }
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (!seeds.empty() && seeds.size() != static_cast<std::size_t>(repetitions)) {
    throw ConfigError("seed list length differs from repetitions");
  }
  if (!(cap_s > 0.0)) throw ConfigError("cap_s must be positive");
  if (sigma_override && !(*sigma_override > 0.0)) throw ConfigError("sigma must be positive");
}

std::vector<std::uint64_t> SuiteConfig::effective_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= repetitions; ++i) out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

SuiteConfig parse_suite(std::string_view document) {
  SuiteConfig suite;
  bool header = false;
  bool have_reps = false;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    const auto end = document.find('\n', pos);
    const std::string_view raw = document.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? document.size() + 1 : end + 1;
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (!header) {
      if (line != "biam-suite v1") throw ParseError(line_no, 1, "expected header 'biam-suite v1'");
      header = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, 1, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::size_t col = raw.find('=') + 2;
    if (!seen.insert(key).second) throw ParseError(line_no, 1, "duplicate key '" + key + "'");
    try {
      if (key == "planners") {
        suite.planners = split(value, ',');
      } else if (key == "scenarios") {
        suite.scenarios = split(value, ',');
      } else if (key == "repetitions") {
        suite.repetitions = static_cast<int>(parse_u64(value));
        have_reps = true;
      } else if (key == "seeds") {
        suite.seeds.clear();
        for (const auto& s : split(value, ',')) suite.seeds.push_back(parse_u64(s));
      } else if (key == "budget_mode") {
        suite.budget_mode = budget_mode_from_string(value);
      } else if (key == "sigma") {
        suite.sigma_override = parse_double(value);
      } else if (key == "cap_s") {
        suite.cap_s = parse_double(value);
      } else {
        throw ParseError(line_no, 1, "unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, col, e.what());
    }
  }
  if (!header) throw ParseError(line_no == 0 ? 1 : line_no, 1, "empty suite document");
  if (!have_reps && !suite.seeds.empty()) suite.repetitions = static_cast<int>(suite.seeds.size());
  suite.validate();
  return suite;
}

std::vector<RunStats> run_suite(const SuiteConfig& suite, MetricStore& store, int jobs, const Progress& progress) {
  suite.validate();
  struct Cell {
    const PlannerRow* row;
    std::string scenario;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  const auto seeds = suite.effective_seeds();
  for (const auto& p : suite.planners) {
    const PlannerRow& row = find_planner(p);
    for (const auto& s : suite.scenarios) {
      store.metric(s, row.config.metric);
      for (auto seed : seeds) cells.push_back({&row, s, seed});
    }
  }
  std::vector<RunStats> out(cells.size());
  std::size_t done = 0;
  std::mutex report_mutex;
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    RunSpec spec;
    spec.row = cells[i].row;
    spec.scenario = cells[i].scenario;
    spec.seed = cells[i].seed;
    spec.budget_mode = suite.budget_mode;
    spec.sigma = suite.sigma_override;
    spec.cap_s = suite.cap_s;
    out[i] = run_single(spec, store).stats;
    if (progress) {
      const std::lock_guard lock(report_mutex);
      progress(++done, cells.size(), out[i]);
    }
  });
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : (values[m - 1] + values[m]) / 2.0;
}

namespace {

double mean(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace

std::vector<CellSummary> summarize_cells(const std::vector<RunStats>& stats) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> samples;
  std::map<std::pair<std::string, std::string>, CellSummary> cells;
  for (const auto& r : stats) {
    const auto key = std::make_pair(r.planner_id, r.scenario);
    auto it = cells.find(key);
    if (it == cells.end()) {
      order.push_back(key);
      it = cells.emplace(key, CellSummary{r.planner_id, r.scenario}).first;
    }
    CellSummary& c = it->second;
    ++c.runs;
    if (r.search_time_s) {
      ++c.attached;
      samples[key].first.push_back(*r.search_time_s);
    }
    if (r.arrived) {
      ++c.arrived;
      samples[key].second.push_back(r.traveled_length_m);
    }
  }
  std::vector<CellSummary> out;
  for (const auto& key : order) {
    CellSummary c = cells.at(key);
    const auto& [search, length] = samples[key];
    c.mean_search_time_s = mean(search);
    c.median_search_time_s = median(search);
    c.mean_traveled_length_m = mean(length);
    c.median_traveled_length_m = median(length);
    out.push_back(c);
  }
  return out;
}

double percent_change(double baseline, double modified) {
  if (!std::isfinite(baseline) || !std::isfinite(modified) || baseline == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return (modified - baseline) / baseline * 100.0;
}

std::vector<Comparison> summarize(const std::vector<RunStats>& stats) {
  const auto cells = summarize_cells(stats);
  std::vector<std::string> scenarios;
  for (const auto& c : cells) {
    if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end()) scenarios.push_back(c.scenario);
  }
  auto find_cell = [&cells](const std::string& planner, const std::string& scenario) -> const CellSummary* {
    for (const auto& c : cells) {
      if (c.planner_id == planner && c.scenario == scenario) return &c;
    }
    return nullptr;
  };
  std::vector<Comparison> out;
  for (const auto& scenario : scenarios) {
    for (const auto& row : planner_matrix()) {
      if (row.scheme == Scheme::original) continue;
      const CellSummary* mod = find_cell(row.id, scenario);
      if (mod == nullptr) continue;
      const CellSummary* base = find_cell(row.base, scenario);
      Comparison c{scenario, row.base, row.id};
      if (base != nullptr) {
        c.search_median_pct = percent_change(base->median_search_time_s, mod->median_search_time_s);
        c.search_mean_pct = percent_change(base->mean_search_time_s, mod->mean_search_time_s);
        c.length_median_pct = percent_change(base->median_traveled_length_m, mod->median_traveled_length_m);
        c.length_mean_pct = percent_change(base->mean_traveled_length_m, mod->mean_traveled_length_m);
      }
      c.flagged = base == nullptr || std::isnan(c.search_median_pct) || std::isnan(c.search_mean_pct) ||
                  std::isnan(c.length_median_pct) || std::isnan(c.length_mean_pct);
      if (base == nullptr) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        c.search_median_pct = c.search_mean_pct = c.length_median_pct = c.length_mean_pct = nan;
      }
      out.push_back(c);
    }
  }
  return out;
}

namespace {

constexpr const char* kRunHeader =
    "planner_id,scenario,seed,arrived,search_time_s,traveled_length_m,node_count_at_attach,metric_prep_time_s,"
    "attach_cost_m,sim_time_s,audit_failures";
constexpr const char* kSummaryHeader =
    "planner_id,scenario,runs,arrived,attached,mean_search_time_s,median_search_time_s,mean_traveled_length_m,"
    "median_traveled_length_m";

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunStats>& stats) {
  out << kRunHeader << '\n';
  for (const auto& r : stats) {
    out << r.planner_id << ',' << r.scenario << ',' << r.seed << ',' << (r.arrived ? 1 : 0) << ','
        << fmt_opt(r.search_time_s) << ',' << fmt_double(r.traveled_length_m) << ',' << r.node_count_at_attach << ','
        << fmt_double(r.metric_prep_time_s) << ',' << fmt_opt(r.attach_cost_m) << ',' << fmt_double(r.sim_time_s)
        << ',' << r.audit_failures << '\n';
  }
  out << '\n' << kSummaryHeader << '\n';
  for (const auto& c : summarize_cells(stats)) {
    out << c.planner_id << ',' << c.scenario << ',' << c.runs << ',' << c.arrived << ',' << c.attached << ','
        << fmt_double(c.mean_search_time_s) << ',' << fmt_double(c.median_search_time_s) << ','
        << fmt_double(c.mean_traveled_length_m) << ',' << fmt_double(c.median_traveled_length_m) << '\n';
  }
}

std::vector<RunStats> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != kRunHeader) throw ParseError(1, 1, "unexpected CSV header");
  std::vector<RunStats> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) break;
    const auto f = split(line, ',');
    if (f.size() != 11) throw ParseError(line_no, 1, "expected 11 fields");
    try {
      RunStats r;
      r.planner_id = f[0];
      r.scenario = f[1];
      r.seed = parse_u64(f[2]);
      r.arrived = parse_u64(f[3]) != 0;
      if (!f[4].empty()) r.search_time_s = parse_double(f[4]);
      r.traveled_length_m = parse_double(f[5]);
      r.node_count_at_attach = parse_u64(f[6]);
      r.metric_prep_time_s = parse_double(f[7]);
      if (!f[8].empty()) r.attach_cost_m = parse_double(f[8]);
      r.sim_time_s = parse_double(f[9]);
      r.audit_failures = parse_u64(f[10]);
      out.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, 1, e.what());
    }
  }
  return out;
}

void write_comparisons(std::ostream& out, const std::vector<Comparison>& rows) {
  out << "scenario,base,modified,search_median_pct,search_mean_pct,length_median_pct,length_mean_pct,flagged\n";
  char buf[64];
  auto pct = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  for (const auto& c : rows) {
    out << c.scenario << ',' << c.base << ',' << c.modified << ',' << pct(c.search_median_pct) << ','
        << pct(c.search_mean_pct) << ',' << pct(c.length_median_pct) << ',' << pct(c.length_mean_pct) << ','
        << (c.flagged ? 1 : 0) << '\n';
  }
}

std::vector<SigmaPoint> sigma_sweep(const std::string& scenario, const std::string& planner_id,
                                    const std::vector<double>& sigmas, const SigmaSweepOptions& options,
                                    MetricStore& store, std::vector<RunStats>* runs) {
  const PlannerRow& row = find_planner(planner_id);
  if (!row.config.bidirectional) throw ConfigError("sigma sweep needs a bidirectional planner");
  if (options.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  for (double s : sigmas) {
    PlannerConfig c = row.config;
    c.sigma = s;
    c.validate();
  }
  store.metric(scenario, row.config.metric);
  struct Cell {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    for (int s = 1; s <= options.repetitions; ++s) cells.push_back({i, static_cast<std::uint64_t>(s)});
  }
  std::vector<RunStats> results(cells.size());
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    RunSpec spec;
    spec.row = &row;
    spec.scenario = scenario;
    spec.seed = cells[i].seed;
    spec.budget_mode = options.budget_mode;
    spec.sigma = sigmas[cells[i].point];
    spec.cap_s = options.cap_s;
    spec.events = options.events;
    results[i] = run_single(spec, store).stats;
  });
  std::vector<SigmaPoint> points(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) points[i].sigma = sigmas[i];
  for (std::size_t i = 0; i < cells.size(); ++i) {
    SigmaPoint& p = points[cells[i].point];
    const RunStats& r = results[i];
    ++p.runs;
    if (r.arrived) ++p.arrived;
    if (r.audit_failures > 0) ++p.audit_failures;
    if (r.arrived && r.audit_failures == 0) ++p.passed;
  }
  if (runs != nullptr) *runs = std::move(results);
  return points;
}

}  // namespace biam
