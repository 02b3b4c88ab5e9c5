#include "biam/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <optional>

namespace biam::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Socket;

// Subscribers of one session. Runner threads publish through here; all
// socket work happens on the io thread.
class Hub {
 public:
  void add(const std::string& session, const std::shared_ptr<Socket>& s) {
    std::lock_guard lock(mutex_);
    subs_[session].push_back(s);
  }
  std::vector<std::shared_ptr<Socket>> get(const std::string& session) {
    std::lock_guard lock(mutex_);
    std::vector<std::shared_ptr<Socket>> out;
    auto& list = subs_[session];
    std::erase_if(list, [](const std::weak_ptr<Socket>& w) { return w.expired(); });
    for (const auto& w : list) {
      if (auto s = w.lock()) out.push_back(std::move(s));
    }
    return out;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::vector<std::weak_ptr<Socket>>> subs_;
};

class Socket : public std::enable_shared_from_this<Socket> {
 public:
  Socket(tcp::socket socket, std::shared_ptr<Session> session)
      : ws_(std::move(socket)), session_(std::move(session)) {}

  void start(http::request<http::string_body> req, Hub& hub) {
    hub.add(session_->id(), shared_from_this());
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->snapshot(to_json(self->session_->snapshot()).dump());
      self->read();
    });
  }

  // Called on the io thread only.
  void send(std::string message) {
    if (closed_) return;
    replies_.push_back(std::move(message));
    flush();
  }
  void snapshot(std::string message) {
    if (closed_) return;
    latest_ = std::move(message);
    flush();
  }
  net::any_io_executor executor() { return ws_.get_executor(); }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_message(const std::string& text) {
    try {
      const json j = json::parse(text);
      send(to_json(session_->submit(parse_command(j))).dump());
    } catch (const json::exception& e) {
      send(to_json(ErrorMessage{std::string("malformed message: ") + e.what(), std::nullopt}).dump());
    } catch (const Error& e) {
      send(to_json(ErrorMessage{e.what(), std::nullopt}).dump());
    }
  }

  // Acks and errors go out in order; snapshots only ever as the newest one.
  void flush() {
    if (writing_ || !open_ || closed_) return;
    if (!replies_.empty()) {
      outgoing_ = std::move(replies_.front());
      replies_.pop_front();
    } else if (latest_) {
      outgoing_ = std::move(*latest_);
      latest_.reset();
    } else {
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outgoing_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->flush();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Session> session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> replies_;
  std::optional<std::string> latest_;
  std::string outgoing_;
  bool open_ = false;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  SessionManager& manager;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  Hub hub;
  std::thread io_thread;
  std::mutex runners_mutex;
  std::condition_variable runners_cv;
  std::vector<std::thread> runners;
  std::atomic<bool> stopping{false};

  Impl(SessionManager& m, ServerOptions o) : manager(m), options(std::move(o)) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<HttpConnection>(*this, std::move(socket))->read();
      accept();
    });
  }

  void run_session(std::shared_ptr<Session> session) {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / session->tick_rate_hz()));
    auto next = clock::now();
    while (!stopping && session->lifecycle() != Lifecycle::finished) {
      const auto errors = session->step();
      const std::string snap = to_json(session->snapshot()).dump();
      std::vector<std::string> errs;
      for (const auto& e : errors) errs.push_back(to_json(e).dump());
      for (const auto& sub : hub.get(session->id())) {
        net::post(sub->executor(), [sub, snap, errs] {
          for (const auto& e : errs) sub->send(e);
          sub->snapshot(snap);
        });
      }
      next = std::max(next + period, clock::now());
      std::unique_lock lock(runners_mutex);
      runners_cv.wait_until(lock, next, [this] { return stopping.load(); });
    }
  }

  http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                          const json& body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump();
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> error_reply(const http::request<http::string_body>& req, http::status status,
                                                const std::string& reason) {
    return reply(req, status, to_json(ErrorMessage{reason, std::nullopt}));
  }

  // Splits "/sessions/{id}[/socket]" into the id and the rest.
  static std::optional<std::pair<std::string, std::string>> session_path(std::string_view target) {
    constexpr std::string_view prefix = "/sessions/";
    if (target.substr(0, prefix.size()) != prefix) return std::nullopt;
    target.remove_prefix(prefix.size());
    const auto slash = target.find('/');
    if (slash == std::string_view::npos) return std::make_pair(std::string(target), std::string());
    return std::make_pair(std::string(target.substr(0, slash)), std::string(target.substr(slash)));
  }

  http::response<http::string_body> handle(const http::request<http::string_body>& req) {
    const std::string_view target(req.target().data(), req.target().size());
    try {
      if (req.method() == http::verb::get && target == "/scenarios") {
        return reply(req, http::status::ok, manager.scenarios_json());
      }
      if (req.method() == http::verb::get && target == "/planners") {
        return reply(req, http::status::ok, SessionManager::planners_json());
      }
      if (req.method() == http::verb::post && target == "/sessions") {
        const json body = req.body().empty() ? json::object() : json::parse(req.body());
        if (!body.is_object() || !body.contains("scenario") || !body.contains("planner")) {
          return error_reply(req, http::status::bad_request, "expected {\"scenario\", \"planner\"}");
        }
        const auto options = SessionOptions::from_json(body.value("overrides", json(nullptr)));
        auto session = manager.create(body.at("scenario").get<std::string>(), body.at("planner").get<std::string>(),
                                      options);
        {
          std::lock_guard lock(runners_mutex);
          runners.emplace_back([this, session] { run_session(session); });
        }
        json out{{"v", kProtocolVersion},
                 {"id", session->id()},
                 {"scenario", session->scenario()},
                 {"planner", session->planner_id()},
                 {"sigma", session->config().sigma},
                 {"tick_rate_hz", session->tick_rate_hz()},
                 {"socket", "/sessions/" + session->id() + "/socket"},
                 {"snapshot", to_json(session->snapshot())}};
        return reply(req, http::status::created, out);
      }
      if (const auto sp = session_path(target)) {
        auto session = manager.find(sp->first);
        if (!session) return error_reply(req, http::status::not_found, "unknown session " + sp->first);
        if (sp->second.empty() && req.method() == http::verb::get) {
          return reply(req, http::status::ok, to_json(session->snapshot()));
        }
        if (sp->second.empty() && req.method() == http::verb::delete_) {
          manager.remove(sp->first);
          runners_cv.notify_all();
          return reply(req, http::status::ok, json{{"v", kProtocolVersion}, {"id", sp->first}, {"closed", true}});
        }
        if (sp->second == "/socket") {
          return error_reply(req, http::status::upgrade_required, "WebSocket upgrade required");
        }
      }
      return error_reply(req, http::status::not_found, "no route for " + std::string(target));
    } catch (const json::exception& e) {
      return error_reply(req, http::status::bad_request, std::string("malformed JSON: ") + e.what());
    } catch (const Error& e) {
      return error_reply(req, http::status::bad_request, e.what());
    }
  }

  class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
   public:
    HttpConnection(Impl& impl, tcp::socket socket) : impl_(impl), stream_(std::move(socket)) {}

    void read() {
      req_ = {};
      stream_.expires_after(std::chrono::seconds(60));
      http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        self->on_request();
      });
    }

   private:
    void on_request() {
      const std::string_view target(req_.target().data(), req_.target().size());
      if (websocket::is_upgrade(req_)) {
        const auto sp = session_path(target);
        auto session = sp && sp->second == "/socket" ? impl_.manager.find(sp->first) : nullptr;
        if (session) {
          stream_.expires_never();
          std::make_shared<Socket>(stream_.release_socket(), session)->start(std::move(req_), impl_.hub);
          return;
        }
      }
      res_ = impl_.handle(req_);
      const bool keep = res_.keep_alive();
      http::async_write(stream_, res_, [self = shared_from_this(), keep](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (keep) {
          self->read();
        } else {
          beast::error_code ignored;
          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        }
      });
    }

    Impl& impl_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    http::response<http::string_body> res_;
  };
};

Server::Server(SessionManager& manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  const tcp::endpoint endpoint{net::ip::make_address(impl_->options.address), impl_->options.port};
  auto& a = impl_->acceptor;
  a.open(endpoint.protocol());
  a.set_option(net::socket_base::reuse_address(true));
  a.bind(endpoint);
  a.listen(net::socket_base::max_listen_connections);
  port_ = a.local_endpoint().port();
  impl_->accept();
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  impl_->runners_cv.notify_all();
  {
    std::vector<std::thread> runners;
    {
      std::lock_guard lock(impl_->runners_mutex);
      runners.swap(impl_->runners);
    }
    for (auto& t : runners) t.join();
  }
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

}  // namespace biam::service
