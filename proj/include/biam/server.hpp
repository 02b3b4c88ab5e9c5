#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "biam/service.hpp"

namespace biam::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
};

/// HTTP + WebSocket front end for a SessionManager.
///
///   POST /sessions              {"scenario", "planner", "overrides"} -> 201
///   GET  /sessions/{id}         current snapshot
///   DELETE /sessions/{id}
///   GET  /sessions/{id}/socket  WebSocket: commands in; acks, errors and
///                               snapshots out
///   GET  /scenarios, /planners
///
/// Each session is stepped by its own thread at its tick rate. A subscriber
/// that cannot keep up only ever holds the newest unsent snapshot.
class Server {
 public:
  Server(SessionManager& manager, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving; returns once the port is open.
  void start();
  void stop();
  unsigned short port() const noexcept { return port_; }

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
};

}  // namespace biam::service
