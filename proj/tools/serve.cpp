// HTTP + WebSocket session server for interactive planning.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <thread>

#include "biam/server.hpp"

using namespace biam;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Live planner sessions over HTTP and WebSocket"};
  service::ServerOptions options;
  std::string cache_dir = ".biam-cache";
  bool preload = false;
  app.add_option("--address", options.address);
  app.add_option("--port", options.port);
  app.add_option("--cache-dir", cache_dir, "Metric cache directory (empty disables caching)");
  app.add_flag("--preload", preload, "Prepare every scenario metric before listening");
  CLI11_PARSE(app, argc, argv);

  CacheOptions cache;
  if (!cache_dir.empty()) cache.directory = cache_dir;
  service::SessionManager manager(cache);
  try {
    if (preload) {
      for (const auto& name : builtin_scenario_names()) {
        for (const char* id : {"rt-rrt", "am-rrt-d", "am-rrt-g"}) manager.remove(manager.create(name, id)->id());
      }
    }
    service::Server server(manager, options);
    server.start();
    std::printf("listening on http://%s:%u\n", options.address.c_str(), server.port());
    std::fflush(stdout);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "biam-serve: %s\n", e.what());
    return 1;
  }
  return 0;
}
