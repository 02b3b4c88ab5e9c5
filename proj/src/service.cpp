#include "biam/service.hpp"

#include <cmath>
#include <sstream>

namespace biam::service {

namespace {

json point_json(Point p) { return json::array({p.x, p.y}); }

Point point_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ProtocolError(std::string(what) + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw ProtocolError(std::string("missing number '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ProtocolError(std::string("'") + key + "' must be finite");
  return v;
}

std::uint64_t count(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw ProtocolError(std::string("missing non-negative integer '") + key + "'");
  }
  return it->get<std::uint64_t>();
}

void check_version(const json& j) {
  if (!j.is_object()) throw ProtocolError("message must be an object");
  const auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version");
  }
}

void check_type(const json& j, const char* type) {
  check_version(j);
  const auto t = j.find("type");
  if (t == j.end() || !t->is_string() || t->get<std::string>() != type) {
    throw ProtocolError(std::string("expected a '") + type + "' message");
  }
}

CommandKind command_kind(const std::string& name) {
  for (CommandKind k : {CommandKind::set_goal, CommandKind::add_obstacle, CommandKind::remove_obstacle,
                        CommandKind::pause, CommandKind::resume, CommandKind::set_speed}) {
    if (to_string(k) == name) return k;
  }
  throw ProtocolError("unknown command '" + name + "'");
}

Phase phase_of(const std::string& name) {
  for (Phase p : {Phase::idle, Phase::searching, Phase::tracking, Phase::arrived}) {
    if (to_string(p) == name) return p;
  }
  throw ProtocolError("unknown phase '" + name + "'");
}

Lifecycle lifecycle_of(const std::string& name) {
  for (Lifecycle l : {Lifecycle::created, Lifecycle::running, Lifecycle::paused, Lifecycle::finished}) {
    if (to_string(l) == name) return l;
  }
  throw ProtocolError("unknown lifecycle '" + name + "'");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_of(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ProtocolError(std::string("'") + key + "' must be a number or null");
  return it->get<double>();
}

}  // namespace

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::set_goal:
      return "set_goal";
    case CommandKind::add_obstacle:
      return "add_obstacle";
    case CommandKind::remove_obstacle:
      return "remove_obstacle";
    case CommandKind::pause:
      return "pause";
    case CommandKind::resume:
      return "resume";
    case CommandKind::set_speed:
      return "set_speed";
  }
  return "?";
}

std::string_view to_string(Lifecycle state) {
  switch (state) {
    case Lifecycle::created:
      return "created";
    case Lifecycle::running:
      return "running";
    case Lifecycle::paused:
      return "paused";
    case Lifecycle::finished:
      return "finished";
  }
  return "?";
}

json to_json(const Command& c) {
  json j{{"v", kProtocolVersion}, {"cmd", std::string(to_string(c.kind))}};
  switch (c.kind) {
    case CommandKind::set_goal:
      j["x"] = c.p.x;
      j["y"] = c.p.y;
      break;
    case CommandKind::add_obstacle:
      j["x"] = c.p.x;
      j["y"] = c.p.y;
      j["r"] = c.r;
      break;
    case CommandKind::remove_obstacle:
      j["id"] = c.id;
      break;
    case CommandKind::set_speed:
      j["speed"] = c.speed;
      break;
    case CommandKind::pause:
    case CommandKind::resume:
      break;
  }
  return j;
}

Command parse_command(const json& j) {
  check_version(j);
  const auto name = j.find("cmd");
  if (name == j.end() || !name->is_string()) throw ProtocolError("missing 'cmd'");
  Command c;
  c.kind = command_kind(name->get<std::string>());
  switch (c.kind) {
    case CommandKind::set_goal:
      c.p = {number(j, "x"), number(j, "y")};
      break;
    case CommandKind::add_obstacle:
      c.p = {number(j, "x"), number(j, "y")};
      c.r = number(j, "r");
      if (!(c.r > 0.0)) throw ProtocolError("'r' must be positive");
      break;
    case CommandKind::remove_obstacle:
      c.id = count(j, "id");
      break;
    case CommandKind::set_speed:
      c.speed = number(j, "speed");
      if (!(c.speed > 0.0)) throw ProtocolError("'speed' must be positive");
      break;
    case CommandKind::pause:
    case CommandKind::resume:
      break;
  }
  return c;
}

json to_json(const Ack& a) {
  json j{{"v", kProtocolVersion},
         {"type", "ack"},
         {"cmd", std::string(to_string(a.cmd))},
         {"effective_tick", a.effective_tick}};
  if (a.obstacle_id) j["id"] = *a.obstacle_id;
  return j;
}

Ack parse_ack(const json& j) {
  check_type(j, "ack");
  Ack a;
  const auto name = j.find("cmd");
  if (name == j.end() || !name->is_string()) throw ProtocolError("missing 'cmd'");
  a.cmd = command_kind(name->get<std::string>());
  a.effective_tick = count(j, "effective_tick");
  if (j.contains("id")) a.obstacle_id = count(j, "id");
  return a;
}

json to_json(const ErrorMessage& e) {
  json j{{"v", kProtocolVersion}, {"type", "error"}, {"reason", e.reason}};
  if (e.tick) j["tick"] = *e.tick;
  return j;
}

ErrorMessage parse_error(const json& j) {
  check_type(j, "error");
  ErrorMessage e;
  const auto reason = j.find("reason");
  if (reason == j.end() || !reason->is_string()) throw ProtocolError("missing 'reason'");
  e.reason = reason->get<std::string>();
  if (j.contains("tick")) e.tick = count(j, "tick");
  return e;
}

json to_json(const Snapshot& s) {
  json path = json::array();
  for (const Point& p : s.path) path.push_back(point_json(p));
  json edges = json::array();
  for (const auto& [a, b] : s.edges) edges.push_back(json::array({a.x, a.y, b.x, b.y}));
  json obstacles = json::array();
  for (const auto& o : s.obstacles) obstacles.push_back({{"id", o.id}, {"x", o.center.x}, {"y", o.center.y}, {"r", o.r}});
  return {{"v", kProtocolVersion},
          {"type", "snapshot"},
          {"tick", s.tick},
          {"lifecycle", std::string(to_string(s.lifecycle))},
          {"phase", std::string(to_string(s.phase))},
          {"agent", point_json(s.agent)},
          {"goal", s.goal ? point_json(*s.goal) : json(nullptr)},
          {"path", std::move(path)},
          {"edges", std::move(edges)},
          {"edges_total", s.edges_total},
          {"obstacles", std::move(obstacles)},
          {"stats",
           {{"cost_goal", optional_number(s.stats.cost_goal)},
            {"nodes_f", s.stats.nodes_f},
            {"nodes_r", s.stats.nodes_r},
            {"planner_tick", s.stats.planner_tick},
            {"sim_time", s.stats.sim_time},
            {"search_time", optional_number(s.stats.search_time)},
            {"traveled", s.stats.traveled}}}};
}

Snapshot parse_snapshot(const json& j) {
  check_type(j, "snapshot");
  Snapshot s;
  try {
    s.tick = count(j, "tick");
    s.lifecycle = lifecycle_of(j.at("lifecycle").get<std::string>());
    s.phase = phase_of(j.at("phase").get<std::string>());
    s.agent = point_of(j.at("agent"), "agent");
    if (!j.at("goal").is_null()) s.goal = point_of(j.at("goal"), "goal");
    for (const auto& p : j.at("path")) s.path.push_back(point_of(p, "path point"));
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 4) throw ProtocolError("edge must be [x1, y1, x2, y2]");
      s.edges.emplace_back(Point{e[0].get<double>(), e[1].get<double>()}, Point{e[2].get<double>(), e[3].get<double>()});
    }
    s.edges_total = count(j, "edges_total");
    for (const auto& o : j.at("obstacles")) s.obstacles.push_back({count(o, "id"), {number(o, "x"), number(o, "y")}, number(o, "r")});
    const json& st = j.at("stats");
    s.stats.cost_goal = optional_of(st, "cost_goal");
    s.stats.nodes_f = count(st, "nodes_f");
    s.stats.nodes_r = count(st, "nodes_r");
    s.stats.planner_tick = count(st, "planner_tick");
    s.stats.sim_time = number(st, "sim_time");
    s.stats.search_time = optional_of(st, "search_time");
    s.stats.traveled = number(st, "traveled");
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad snapshot: ") + e.what());
  }
  return s;
}

std::vector<std::size_t> decimate(std::size_t total, std::size_t cap) {
  std::vector<std::size_t> out;
  if (total <= cap) {
    out.resize(total);
    for (std::size_t i = 0; i < total; ++i) out[i] = i;
    return out;
  }
  out.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) out.push_back(k * total / cap);
  return out;
}

SessionOptions SessionOptions::from_json(const json& j) {
  SessionOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ProtocolError("overrides must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "sigma") {
      o.sigma = number(j, "sigma");
    } else if (key == "seed") {
      o.seed = count(j, "seed");
    } else if (key == "speed") {
      o.speed = number(j, "speed");
    } else if (key == "deterministic") {
      if (!value.is_boolean()) throw ProtocolError("'deterministic' must be a boolean");
      o.deterministic = value.get<bool>();
    } else if (key == "tick_rate_hz") {
      o.tick_rate_hz = number(j, "tick_rate_hz");
      if (!(o.tick_rate_hz > 0.0)) throw ProtocolError("'tick_rate_hz' must be positive");
    } else if (key == "auto_goal") {
      if (!value.is_boolean()) throw ProtocolError("'auto_goal' must be a boolean");
      o.auto_goal = value.get<bool>();
    } else {
      throw ProtocolError("unknown override '" + key + "'");
    }
  }
  return o;
}

Session::Session(std::string id, std::string scenario, const PlannerRow& row, const WorldMap& map,
                 AssistingMetric metric, const SessionOptions& options)
    : id_(std::move(id)),
      scenario_(std::move(scenario)),
      planner_id_(row.id),
      tick_rate_hz_(options.tick_rate_hz),
      config_(row.config),
      map_(std::make_unique<WorldMap>(map)) {
  if (!map_->start()) throw ConfigError("scenario '" + scenario_ + "' has no start");
  config_.sigma = options.sigma.value_or(default_sigma(scenario_));
  if (options.seed) config_.seed = *options.seed;
  if (options.speed) config_.agent_speed = *options.speed;
  config_.budget_mode = options.deterministic ? BudgetMode::deterministic : BudgetMode::wall_clock;
  planner_ = std::make_unique<Planner>(*map_, std::move(metric), config_, *map_->start());
  if (options.auto_goal && map_->goal()) planner_->set_goal(*map_->goal());
}

std::optional<std::string> Session::check(const Command& c) const {
  switch (c.kind) {
    case CommandKind::set_goal:
      if (!map_->is_free(c.p)) return "goal is not in free space";
      break;
    case CommandKind::add_obstacle:
      if (!map_->in_bounds(c.p)) return "obstacle centre outside map";
      if (!(c.r > 0.0)) return "obstacle radius must be positive";
      break;
    case CommandKind::remove_obstacle: {
      bool queued = false;
      for (const auto& p : pending_) queued = queued || (p.cmd.kind == CommandKind::add_obstacle && p.obstacle_id == c.id);
      if (!queued && obstacles_.count(c.id) == 0) return "unknown obstacle id " + std::to_string(c.id);
      break;
    }
    case CommandKind::set_speed:
      if (!(c.speed > 0.0) || !std::isfinite(c.speed)) return "speed must be positive";
      break;
    case CommandKind::pause:
    case CommandKind::resume:
      break;
  }
  return std::nullopt;
}

Ack Session::submit(const Command& c) {
  std::lock_guard lock(mutex_);
  if (lifecycle_ == Lifecycle::finished) throw ProtocolError("session is finished");
  if (auto err = check(c)) throw ProtocolError(*err);
  Pending p{c, 0};
  Ack ack{c.kind, tick_ + 1, std::nullopt};
  if (c.kind == CommandKind::add_obstacle) {
    p.obstacle_id = next_obstacle_++;
    ack.obstacle_id = p.obstacle_id;
  }
  pending_.push_back(p);
  return ack;
}

void Session::apply(const Pending& p) {
  const Command& c = p.cmd;
  switch (c.kind) {
    case CommandKind::set_goal:
      planner_->set_goal(c.p);
      break;
    case CommandKind::add_obstacle:
      if (euclidean(c.p, planner_->agent()) < c.r) throw ProtocolError("obstacle would cover the agent");
      obstacles_[p.obstacle_id] = map_->add_obstacle(c.p, c.r);
      break;
    case CommandKind::remove_obstacle: {
      const auto it = obstacles_.find(c.id);
      if (it == obstacles_.end()) throw ProtocolError("unknown obstacle id " + std::to_string(c.id));
      map_->remove_obstacle(it->second);
      obstacles_.erase(it);
      break;
    }
    case CommandKind::pause:
      lifecycle_ = Lifecycle::paused;
      break;
    case CommandKind::resume:
      lifecycle_ = Lifecycle::running;
      break;
    case CommandKind::set_speed:
      planner_->set_agent_speed(c.speed);
      break;
  }
}

std::vector<ErrorMessage> Session::step() {
  std::lock_guard lock(mutex_);
  std::vector<ErrorMessage> errors;
  if (lifecycle_ == Lifecycle::finished) return errors;
  ++tick_;
  while (!pending_.empty()) {
    const Pending p = pending_.front();
    pending_.pop_front();
    try {
      apply(p);
    } catch (const Error& e) {
      errors.push_back({std::string(to_string(p.cmd.kind)) + ": " + e.what(), tick_});
    }
  }
  if (lifecycle_ == Lifecycle::running) planner_->plan_tick();
  return errors;
}

Snapshot Session::snapshot() const {
  std::lock_guard lock(mutex_);
  Snapshot s;
  s.tick = tick_;
  s.lifecycle = lifecycle_;
  s.phase = planner_->phase();
  s.agent = planner_->agent();
  s.goal = planner_->goal();
  s.path = planner_->current_path_points();
  const Tree& tree = planner_->forward().tree;
  std::vector<std::pair<Point, Point>> all;
  auto collect = [&all](const Tree& t) {
    for (NodeId i = 0; i < static_cast<NodeId>(t.size()); ++i) {
      if (t.parent(i) != kNoNode) all.emplace_back(t.position(t.parent(i)), t.position(i));
    }
  };
  collect(tree);
  if (planner_->reverse_active()) collect(planner_->reverse().tree);
  s.edges_total = all.size();
  for (std::size_t i : decimate(all.size(), kMaxSnapshotEdges)) s.edges.push_back(all[i]);
  for (const auto& [sid, mid] : obstacles_) {
    for (const auto& d : map_->obstacles()) {
      if (d.id == mid) s.obstacles.push_back({sid, d.center, d.radius});
    }
  }
  const double cost = planner_->cost_goal();
  if (std::isfinite(cost)) s.stats.cost_goal = cost;
  s.stats.nodes_f = tree.size();
  s.stats.nodes_r = planner_->reverse_active() ? planner_->reverse().tree.size() : 0;
  s.stats.planner_tick = planner_->tick_index();
  s.stats.sim_time = planner_->sim_time();
  s.stats.search_time = planner_->search_time();
  s.stats.traveled = planner_->traveled();
  return s;
}

void Session::close() {
  std::lock_guard lock(mutex_);
  lifecycle_ = Lifecycle::finished;
  pending_.clear();
}

std::uint64_t Session::tick() const {
  std::lock_guard lock(mutex_);
  return tick_;
}

Lifecycle Session::lifecycle() const {
  std::lock_guard lock(mutex_);
  return lifecycle_;
}

std::string Session::trajectory_log() const {
  std::lock_guard lock(mutex_);
  std::ostringstream out;
  planner_->write_trajectory(out);
  return out.str();
}

std::shared_ptr<Session> SessionManager::create(const std::string& scenario, const std::string& planner_id,
                                                const SessionOptions& options) {
  const PlannerRow& row = find_planner(planner_id);
  const auto names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
  std::lock_guard lock(mutex_);
  const WorldMap& map = store_.map(scenario);
  const AssistingMetric& metric = store_.metric(scenario, row.config.metric).metric;
  const std::string id = "s" + std::to_string(next_id_++);
  auto session = std::make_shared<Session>(id, scenario, row, map, metric, options);
  sessions_[id] = session;
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<Session>> SessionManager::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

void SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    s = it->second;
    sessions_.erase(it);
  }
  s->close();
}

json SessionManager::scenarios_json() {
  std::lock_guard lock(mutex_);
  json list = json::array();
  for (const auto& name : builtin_scenario_names()) {
    const WorldMap& m = store_.map(name);
    json entry{{"name", name},
               {"cols", m.cols()},
               {"rows", m.rows()},
               {"cell_size", m.cell_size()},
               {"sigma", default_sigma(name)},
               {"start", m.start() ? point_json(*m.start()) : json(nullptr)},
               {"goal", m.goal() ? point_json(*m.goal()) : json(nullptr)},
               {"document", std::string(builtin_scenario_document(name))}};
    list.push_back(std::move(entry));
  }
  return {{"v", kProtocolVersion}, {"scenarios", std::move(list)}};
}

json SessionManager::planners_json() {
  json list = json::array();
  for (const auto& r : planner_matrix()) {
    list.push_back({{"id", r.id},
                    {"label", r.label},
                    {"base", r.base},
                    {"scheme", std::string(to_string(r.scheme))},
                    {"metric", std::string(to_string(r.config.metric))},
                    {"bidirectional", r.config.bidirectional},
                    {"new_rewiring", r.config.new_rewiring},
                    {"t_root", r.config.t_root},
                    {"t_goal", r.config.t_goal},
                    {"n_max", r.config.n_max}});
  }
  return {{"v", kProtocolVersion}, {"planners", std::move(list)}};
}

}  // namespace biam::service
