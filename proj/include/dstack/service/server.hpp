#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "dstack/service/session.hpp"

namespace dstack {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 0;         // 0 picks a free port
  int health_port = -1;  // -1 disables the HTTP health endpoint, 0 picks a free port
};

// Newline-delimited JSON over TCP. A connection is bound to one player of one
// session by its join message; replies go to the connections bound to the
// addressed player. Sessions are created on first join by the factory.
class Server {
 public:
  using Factory = std::function<std::unique_ptr<TableSession>(const std::string& id)>;

  Server(ServerConfig cfg, Factory factory) : cfg_(std::move(cfg)), factory_(std::move(factory)) {}
  ~Server() { stop(); }

  void start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("cannot create socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(cfg_.port));
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) throw Error("bad listen address " + cfg_.host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
      ::close(listen_fd_);
      throw Error("cannot listen on port " + std::to_string(cfg_.port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    if (cfg_.health_port >= 0) {
      health_.set_keep_alive_max_count(1);
      health_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(health().dump(), "application/json");
      });
      health_port_ = cfg_.health_port == 0 ? health_.bind_to_any_port(cfg_.host) : cfg_.health_port;
      if (cfg_.health_port != 0 && !health_.bind_to_port(cfg_.host, cfg_.health_port))
        throw Error("cannot bind health port " + std::to_string(cfg_.health_port));
      if (health_port_ < 0) throw Error("cannot bind health port");
      health_thread_ = std::thread([this] { health_.listen_after_bind(); });
    }
  }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
    }
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    if (health_thread_.joinable()) {
      health_.stop();
      health_thread_.join();
    }
  }

  // Blocks until stop() is called from elsewhere.
  void wait() {
    if (accept_thread_.joinable()) accept_thread_.join();
  }

  int port() const { return port_; }
  int health_port() const { return health_port_; }

  Json health() {
    std::lock_guard<std::mutex> lock(mu_);
    long open = 0;
    for (const auto& [id, s] : sessions_) open += !s->session->finished();
    return Json{{"status", "ok"}, {"sessions", sessions_.size()}, {"active_sessions", open}, {"connections", conns_.size()}};
  }

 private:
  struct Entry {
    std::unique_ptr<TableSession> session;
    std::mutex mu;
  };
  struct Conn {
    int fd = -1;
    std::mutex write_mu;
    std::string session;
    int player = -1;
  };

  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (!running_) break;
        continue;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);  // small request/response lines
      auto c = std::make_shared<Conn>();
      c->fd = fd;
      std::lock_guard<std::mutex> lock(mu_);
      conns_.push_back(c);
      workers_.emplace_back([this, c] { serve(c); });
    }
  }

  static void send_line(Conn& c, const Json& m) {
    const std::string line = m.dump() + "\n";
    std::lock_guard<std::mutex> lock(c.write_mu);
    std::size_t off = 0;
    while (off < line.size()) {
      const auto n = ::send(c.fd, line.data() + off, line.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return;
      off += static_cast<std::size_t>(n);
    }
  }

  void serve(const std::shared_ptr<Conn>& c) {
    std::string buf;
    char chunk[4096];
    while (true) {
      const auto n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (!line.empty()) dispatch(c, line);
      }
    }
    ::close(c->fd);
    std::lock_guard<std::mutex> lock(mu_);
    std::erase(conns_, c);
  }

  void dispatch(const std::shared_ptr<Conn>& c, const std::string& line) {
    Json msg = Json::parse(line, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
      send_line(*c, Json{{"type", "reject"}, {"reason", "malformed message"}});
      return;
    }
    const std::string id = msg.value("session", c->session);
    if (id.empty()) {
      send_line(*c, Json{{"type", "reject"}, {"seq", msg.value("seq", -1)}, {"reason", "missing session"}});
      return;
    }
    Entry* e = nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = sessions_.find(id);
      if (it == sessions_.end() && msg.value("type", "") == "join") {
        auto entry = std::make_unique<Entry>();
        try {
          entry->session = factory_(id);
        } catch (const std::exception& ex) {
          send_line(*c, Json{{"type", "reject"}, {"seq", msg.value("seq", -1)}, {"reason", ex.what()}});
          return;
        }
        it = sessions_.emplace(id, std::move(entry)).first;
      }
      if (it == sessions_.end()) {
        send_line(*c, Json{{"type", "reject"}, {"seq", msg.value("seq", -1)}, {"reason", "unknown session"}});
        return;
      }
      e = it->second.get();
    }
    std::vector<Outbound> out;
    {
      std::lock_guard<std::mutex> lock(e->mu);
      int player = -1;
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (c->session == id) player = c->player;
      }
      try {
        out = e->session->handle_message(player, msg);
      } catch (const std::exception& ex) {
        out.push_back({player, Json{{"type", "reject"}, {"seq", msg.value("seq", -1)}, {"reason", ex.what()}}});
      }
    }
    std::vector<std::pair<std::shared_ptr<Conn>, const Json*>> sends;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const Outbound& o : out)
        if (o.msg.value("type", "") == "welcome") {
          c->session = id;
          c->player = o.player;
        }
      for (const Outbound& o : out) {
        if (o.player < 0) {
          sends.emplace_back(c, &o.msg);
          continue;
        }
        for (const auto& t : conns_)
          if (t->session == id && t->player == o.player) sends.emplace_back(t, &o.msg);
      }
    }
    for (const auto& [t, m] : sends) send_line(*t, *m);
  }

  ServerConfig cfg_;
  Factory factory_;
  int listen_fd_ = -1;
  int port_ = 0, health_port_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_, health_thread_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::vector<std::shared_ptr<Conn>> conns_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  httplib::Server health_;
};

}  // namespace dstack
