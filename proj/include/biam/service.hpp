#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biam/bench.hpp"
#include "biam/error.hpp"
#include "biam/planner.hpp"

namespace biam::service {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxSnapshotEdges = 5000;

/// Malformed message, or a command the session cannot take.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

enum class CommandKind { set_goal, add_obstacle, remove_obstacle, pause, resume, set_speed };

std::string_view to_string(CommandKind kind);

struct Command {
  CommandKind kind = CommandKind::pause;
  Point p;             // set_goal target, add_obstacle centre
  double r = 0.0;      // add_obstacle radius
  std::uint64_t id = 0;  // remove_obstacle
  double speed = 0.0;  // set_speed

  friend bool operator==(const Command&, const Command&) = default;
};

struct Ack {
  CommandKind cmd = CommandKind::pause;
  std::uint64_t effective_tick = 0;
  std::optional<std::uint64_t> obstacle_id;  // add_obstacle only

  friend bool operator==(const Ack&, const Ack&) = default;
};

struct ErrorMessage {
  std::string reason;
  std::optional<std::uint64_t> tick;

  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

enum class Lifecycle { created, running, paused, finished };

std::string_view to_string(Lifecycle state);

struct SnapshotObstacle {
  std::uint64_t id = 0;
  Point center;
  double r = 0.0;

  friend bool operator==(const SnapshotObstacle&, const SnapshotObstacle&) = default;
};

struct SnapshotStats {
  std::optional<double> cost_goal;  // null while no finite route exists
  std::size_t nodes_f = 0;
  std::size_t nodes_r = 0;
  std::uint64_t planner_tick = 0;
  double sim_time = 0.0;
  std::optional<double> search_time;
  double traveled = 0.0;

  friend bool operator==(const SnapshotStats&, const SnapshotStats&) = default;
};

/// Full session state; a client needs nothing else to draw a frame.
struct Snapshot {
  std::uint64_t tick = 0;
  Lifecycle lifecycle = Lifecycle::created;
  Phase phase = Phase::idle;
  Point agent;
  std::optional<Point> goal;
  std::vector<Point> path;
  std::vector<std::pair<Point, Point>> edges;
  std::size_t edges_total = 0;
  std::vector<SnapshotObstacle> obstacles;
  SnapshotStats stats;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// Messages on the socket. Every object carries "v": 1.
json to_json(const Command& c);
json to_json(const Ack& a);
json to_json(const ErrorMessage& e);
json to_json(const Snapshot& s);
/// Throws ProtocolError on a wrong version, unknown command or bad field.
Command parse_command(const json& j);
Ack parse_ack(const json& j);
ErrorMessage parse_error(const json& j);
Snapshot parse_snapshot(const json& j);

/// Indices of at most `cap` of `total` items, evenly spread, ascending.
std::vector<std::size_t> decimate(std::size_t total, std::size_t cap);

struct SessionOptions {
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<double> speed;
  bool deterministic = false;
  double tick_rate_hz = 10.0;
  /// Set the scenario goal right away.
  bool auto_goal = false;

  /// Reads the optional keys sigma, seed, speed, deterministic, tick_rate_hz
  /// and auto_goal; unknown keys are an error.
  static SessionOptions from_json(const json& j);
};

/// One live planner on its own copy of a scenario map.
///
/// Commands are queued by submit() and applied at the start of the next
/// step(), so their effect is visible from that tick on. The session tick
/// advances on every step, paused or not; the planner only runs while the
/// session is running. All members are safe to call from several threads.
class Session {
 public:
  Session(std::string id, std::string scenario, const PlannerRow& row, const WorldMap& map, AssistingMetric metric,
          const SessionOptions& options);

  const std::string& id() const noexcept { return id_; }
  const std::string& scenario() const noexcept { return scenario_; }
  const std::string& planner_id() const noexcept { return planner_id_; }
  double tick_rate_hz() const noexcept { return tick_rate_hz_; }
  const PlannerConfig& config() const noexcept { return config_; }

  /// Validates and queues a command. Throws ProtocolError when the session is
  /// finished or the command is invalid right now (for example a goal inside
  /// an obstacle).
  Ack submit(const Command& c);
  /// Applies queued commands, then plans one tick if running. Returns the
  /// commands that failed when applied.
  std::vector<ErrorMessage> step();
  Snapshot snapshot() const;
  void close();

  std::uint64_t tick() const;
  Lifecycle lifecycle() const;
  /// Trajectory log of the planner, as written by Planner::write_trajectory.
  std::string trajectory_log() const;

 private:
  struct Pending {
    Command cmd;
    std::uint64_t obstacle_id = 0;
  };

  std::optional<std::string> check(const Command& c) const;
  void apply(const Pending& p);

  const std::string id_;
  const std::string scenario_;
  const std::string planner_id_;
  const double tick_rate_hz_;
  PlannerConfig config_;
  mutable std::mutex mutex_;
  std::unique_ptr<WorldMap> map_;
  std::unique_ptr<Planner> planner_;
  Lifecycle lifecycle_ = Lifecycle::created;
  std::uint64_t tick_ = 0;
  std::deque<Pending> pending_;
  std::uint64_t next_obstacle_ = 1;
  std::map<std::uint64_t, ObstacleId> obstacles_;  // session id -> map id
};

/// Owns the sessions and the prepared metrics they share.
class SessionManager {
 public:
  explicit SessionManager(CacheOptions cache = {}) : store_(std::move(cache)) {}

  /// Throws ConfigError for an unknown scenario or planner.
  std::shared_ptr<Session> create(const std::string& scenario, const std::string& planner_id,
                                  const SessionOptions& options = {});
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::shared_ptr<Session>> sessions() const;
  void remove(const std::string& id);

  json scenarios_json();
  static json planners_json();

 private:
  mutable std::mutex mutex_;
  MetricStore store_;
  std::uint64_t next_id_ = 1;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace biam::service
