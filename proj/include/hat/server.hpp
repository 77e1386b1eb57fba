#pragma once

// WebSocket front end for TeleopPipeline.
//
// One loop thread owns the pipeline and ticks it at the configured rate. Network
// I/O runs on a separate io_context thread and talks to the loop only through
// the inbound queue (connection -> loop) and immutable snapshot strings
// (loop -> connections). The first connected client is the operator; later
// clients are read-only observers, promoted in arrival order if the operator
// leaves.

#include "hat/pipeline.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hat {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;

inline std::pair<std::string, unsigned short> split_listen_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("listen address must be HOST:PORT, got '" + addr + "'");
  const std::string host = addr.substr(0, colon);
  int port = -1;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("invalid listen port in '" + addr + "'");
  return {host.empty() ? "0.0.0.0" : host, static_cast<unsigned short>(port)};
}

class TeleopServer;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(net::ip::tcp::socket&& socket, TeleopServer& server) : ws_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

  /// Thread-safe; messages are written in order.
  void send(std::shared_ptr<const std::string> text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)] {
      if (self->closed_) return;
      if (self->queue_.size() >= kMaxQueued) return;  // slow consumer: drop
      self->queue_.push_back(text);
      if (self->queue_.size() == 1) self->do_write();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      self->ws_.next_layer().socket().shutdown(net::ip::tcp::socket::shutdown_both, ec);
      self->ws_.next_layer().socket().close(ec);
    });
  }

  bool is_operator() const { return operator_.load(); }
  void set_operator(bool v) { operator_.store(v); }

 private:
  static constexpr std::size_t kMaxQueued = 256;

  void on_run();
  void on_accept(beast::error_code ec);
  void do_read();
  void on_read(beast::error_code ec, std::size_t);
  void do_write();
  void on_write(beast::error_code ec, std::size_t);
  void fail();

  websocket::stream<beast::tcp_stream> ws_;
  TeleopServer& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::atomic<bool> operator_{false};
  bool closed_ = false;
};

class TeleopServer {
 public:
  TeleopServer(ServerConfig config, Scenario scenario)
      : pipeline_(std::move(config), std::move(scenario)), acceptor_(ioc_) {}

  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  ~TeleopServer() { stop(); }

  /// Binds the listen address and starts the network and tick threads.
  void start(SessionWriter* writer = nullptr) {
    writer_ = writer;
    const auto [host, port] = split_listen_address(pipeline_.config().listen);
    try {
      const net::ip::tcp::endpoint ep(net::ip::make_address(host), port);
      acceptor_.open(ep.protocol());
      acceptor_.set_option(net::socket_base::reuse_address(true));
      acceptor_.bind(ep);
      acceptor_.listen(net::socket_base::max_listen_connections);
    } catch (const boost::system::system_error& e) {
      throw std::runtime_error("cannot listen on " + pipeline_.config().listen + ": " + e.what());
    }
    port_ = acceptor_.local_endpoint().port();
    running_ = true;
    do_accept();
    io_thread_ = std::thread([this] { ioc_.run(); });
    loop_thread_ = std::thread([this] { loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (loop_thread_.joinable()) loop_thread_.join();
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
    });
    {
      std::lock_guard lock(conn_mutex_);
      for (auto& c : connections_) c->close();
    }
    ioc_.stop();
    if (io_thread_.joinable()) io_thread_.join();
    if (writer_) writer_->flush();
  }

  unsigned short port() const { return port_; }

  /// Copy of every record produced so far.
  SessionLog log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
  }

  // Called from connection handlers on the io thread.

  void attach(const std::shared_ptr<Connection>& c) {
    std::lock_guard lock(conn_mutex_);
    const bool has_operator =
        std::any_of(connections_.begin(), connections_.end(), [](const auto& x) { return x->is_operator(); });
    c->set_operator(!has_operator);
    connections_.push_back(c);
  }

  void detach(const Connection* c) {
    std::lock_guard lock(conn_mutex_);
    const auto it = std::find_if(connections_.begin(), connections_.end(), [&](const auto& x) { return x.get() == c; });
    if (it == connections_.end()) return;
    const bool was_operator = (*it)->is_operator();
    connections_.erase(it);
    if (was_operator && !connections_.empty()) connections_.front()->set_operator(true);
  }

  void on_message(Connection& from, const std::string& text) {
    auto reply_error = [&](const std::string& field, const std::string& message) {
      from.send(std::make_shared<const std::string>(to_json_value(ErrorReply{field, message}).dump()));
    };
    InboundMessage msg;
    try {
      msg = parse_inbound(text);
    } catch (const ProtocolError& e) {
      reply_error(e.field(), e.what());
      return;
    }
    if (!from.is_operator()) {
      reply_error("", "observer connections are read-only");
      return;
    }
    std::lock_guard lock(inbound_mutex_);
    inbound_.push_back(std::move(msg));
  }

 private:
  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, net::ip::tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted || !acceptor_.is_open()) return;
      } else {
        std::make_shared<Connection>(std::move(socket), *this)->run();
      }
      do_accept();
    });
  }

  void loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(pipeline_.config().period_s()));
    auto next = clock::now();
    while (running_) {
      next += period;
      std::this_thread::sleep_until(next);
      if (!running_) break;

      std::vector<InboundMessage> pending;
      {
        std::lock_guard lock(inbound_mutex_);
        pending.swap(inbound_);
      }
      TickOutput out = pipeline_.tick(pending);
      if (writer_) writer_->append(out.record);
      {
        std::lock_guard lock(log_mutex_);
        log_.append(std::move(out.record));
      }
      broadcast(out.snapshot);
    }
  }

  void broadcast(const OutboundSnapshot& snapshot) {
    json j = to_json_value(snapshot);
    j["role"] = "operator";
    auto as_operator = std::make_shared<const std::string>(j.dump());
    j["role"] = "observer";
    auto as_observer = std::make_shared<const std::string>(j.dump());
    std::lock_guard lock(conn_mutex_);
    for (auto& c : connections_) c->send(c->is_operator() ? as_operator : as_observer);
  }

  TeleopPipeline pipeline_;
  net::io_context ioc_;
  net::ip::tcp::acceptor acceptor_;
  std::thread io_thread_;
  std::thread loop_thread_;
  std::atomic<bool> running_{false};
  unsigned short port_ = 0;
  SessionWriter* writer_ = nullptr;

  std::mutex conn_mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;

  std::mutex inbound_mutex_;
  std::vector<InboundMessage> inbound_;

  mutable std::mutex log_mutex_;
  SessionLog log_{pipeline_.header()};
};

inline void Connection::on_run() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
}

inline void Connection::on_accept(beast::error_code ec) {
  if (ec) return;
  server_.attach(shared_from_this());
  do_read();
}

inline void Connection::do_read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t n) { self->on_read(ec, n); });
}

inline void Connection::on_read(beast::error_code ec, std::size_t) {
  if (ec) {
    fail();
    return;
  }
  const std::string text = beast::buffers_to_string(buffer_.data());
  buffer_.consume(buffer_.size());
  server_.on_message(*this, text);
  do_read();
}

inline void Connection::do_write() {
  ws_.text(true);
  ws_.async_write(net::buffer(*queue_.front()),
                  [self = shared_from_this()](beast::error_code ec, std::size_t n) { self->on_write(ec, n); });
}

inline void Connection::on_write(beast::error_code ec, std::size_t) {
  if (ec) {
    fail();
    return;
  }
  queue_.pop_front();
  if (!queue_.empty()) do_write();
}

inline void Connection::fail() {
  if (closed_) return;
  closed_ = true;
  queue_.clear();
  server_.detach(this);
}

}  // namespace hat
