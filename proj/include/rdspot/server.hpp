#pragma once

// WebSocket transport for SessionCore.
//
// One simulation thread calls SessionCore::tick() and fans the output out to
// clients; io threads own the sockets. Each client has an unbounded-in-
// practice control queue (acks, stats, hello, errors are never dropped) and
// a single frame slot where a newer frame replaces an unsent one. Frame
// sequence numbers are stamped per client at send time, so a client sees
// seq 0, 1, 2, ... with no gaps.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "rdspot/session.hpp"

namespace rdspot {

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

class SessionServer {
 public:
  /// Binds immediately; throws ServerError if the port is taken. Port 0
  /// picks a free port (see port()).
  SessionServer(SessionCore& core, unsigned short port, const std::string& address = "127.0.0.1")
      : core_(core), acceptor_(ioc_) {
    boost::system::error_code ec;
    const tcp::endpoint ep(net::ip::make_address(address, ec), port);
    if (ec) throw ServerError("bad listen address " + address);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (ec)
      throw ServerError("cannot listen on " + address + ":" + std::to_string(port) + ": " +
                        ec.message() + (ec == net::error::address_in_use ? " (port busy)" : ""));
    acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw ServerError("listen failed: " + ec.message());
  }

  ~SessionServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Starts io and simulation threads and returns.
  void start() {
    if (running_.exchange(true)) return;
    accept();
    io_thread_ = std::thread([this] { ioc_.run(); });
    sim_thread_ = std::thread([this] { sim_loop(); });
  }

  /// Blocks until stop() is called from another thread (or a signal handler
  /// posts it).
  void run() {
    start();
    std::unique_lock lock(wait_mu_);
    wait_cv_.wait(lock, [this] { return !running_.load(); });
    join();
  }

  void stop() {
    if (running_.exchange(false)) {
      net::post(ioc_, [this] {
        boost::system::error_code ec;
        acceptor_.close(ec);
        std::lock_guard lock(clients_mu_);
        for (auto& [id, c] : clients_) c->close();
      });
      wait_cv_.notify_all();
    }
    join();
  }

  std::size_t client_count() const {
    std::lock_guard lock(clients_mu_);
    return clients_.size();
  }

  /// Frames discarded because a client had not taken the previous one.
  std::uint64_t dropped_frames() const { return dropped_.load(); }

 private:
  class Client : public std::enable_shared_from_this<Client> {
   public:
    Client(SessionServer& srv, int id, tcp::socket sock)
        : srv_(srv), id_(id), ws_(std::move(sock)) {}

    void begin() {
      ws_.binary(false);
      ws_.async_accept(beast::bind_front_handler(&Client::on_accept, shared_from_this()));
    }

    // Called from any thread.
    void send_control(std::string data, bool binary) {
      net::post(ws_.get_executor(), [self = shared_from_this(), d = std::move(data), binary]() mutable {
        self->control_.push_back({std::move(d), binary});
        self->pump();
      });
    }
    void send_frame(std::shared_ptr<const std::string> frame) {
      net::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
        if (self->frame_) self->srv_.dropped_++;
        self->frame_ = std::move(f);
        self->pump();
      });
    }
    void close() {
      net::post(ws_.get_executor(), [self = shared_from_this()] {
        if (self->closed_) return;
        self->closed_ = true;
        beast::get_lowest_layer(self->ws_).close();
      });
    }

   private:
    void on_accept(beast::error_code ec) {
      if (ec) return finish();
      accepted_ = true;
      control_.push_back({srv_.core_.hello(), false});
      control_.push_back({srv_.core_.palette(), false});
      pump();
      read();
    }

    void read() {
      ws_.async_read(in_, beast::bind_front_handler(&Client::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
      if (ec) return finish();
      std::string text = beast::buffers_to_string(in_.data());
      in_.consume(in_.size());
      if (!ws_.got_text()) {
        control_.push_back({error_message("binary messages are not accepted"), false});
      } else if (auto err = srv_.core_.submit(id_, text)) {
        control_.push_back({*err, false});
      }
      pump();
      read();
    }

    void pump() {
      if (writing_ || !accepted_ || closed_) return;
      if (!control_.empty()) {
        out_ = std::move(control_.front());
        control_.pop_front();
      } else if (frame_) {
        out_ = {*frame_, true};
        frame_.reset();
        stamp_frame_seq(out_.first, next_seq_++);
      } else {
        return;
      }
      writing_ = true;
      ws_.binary(out_.second);
      ws_.async_write(net::buffer(out_.first),
                      beast::bind_front_handler(&Client::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
      writing_ = false;
      if (ec) return finish();
      pump();
    }

    void finish() {
      closed_ = true;
      srv_.remove(id_);
    }

    SessionServer& srv_;
    int id_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer in_;
    std::deque<std::pair<std::string, bool>> control_;
    std::shared_ptr<const std::string> frame_;
    std::pair<std::string, bool> out_;
    std::uint64_t next_seq_ = 0;
    bool writing_ = false;
    bool accepted_ = false;
    bool closed_ = false;
  };

  void accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;  // acceptor closed
      auto c = std::make_shared<Client>(*this, next_id_++, std::move(sock));
      {
        std::lock_guard lock(clients_mu_);
        clients_[next_id_ - 1] = c;
      }
      c->begin();
      accept();
    });
  }

  void remove(int id) {
    std::lock_guard lock(clients_mu_);
    clients_.erase(id);
  }

  void dispatch(std::vector<Outbound>& outs) {
    std::lock_guard lock(clients_mu_);
    for (auto& o : outs) {
      if (o.kind == Outbound::Kind::frame) {
        auto shared = std::make_shared<const std::string>(std::move(o.data));
        for (auto& [id, c] : clients_) c->send_frame(shared);
      } else if (o.client < 0) {
        for (auto& [id, c] : clients_) c->send_control(o.data, o.binary);
      } else if (auto it = clients_.find(o.client); it != clients_.end()) {
        it->second->send_control(std::move(o.data), o.binary);
      }
    }
  }

  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const double fps = core_.config().session.fps;
    const auto period = fps > 0 ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / fps))
                                : clock::duration::zero();
    auto next = clock::now();
    while (running_) {
      std::vector<Outbound> outs;
      try {
        outs = core_.tick();
      } catch (const DivergenceError& e) {
        // Keep serving; the state stays at the last good step.
        outs.push_back({Outbound::Kind::control, -1, false, error_message(e.what())});
        core_.submit(-1, R"({"type":"pause"})");
      }
      const bool produced = !outs.empty();
      dispatch(outs);
      if (core_.paused() && !produced) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        next = clock::now();
        continue;
      }
      if (period > clock::duration::zero()) {
        next += period;
        const auto now = clock::now();
        if (next > now) std::this_thread::sleep_until(next);
        else next = now;
      }
    }
  }

  void join() {
    if (sim_thread_.joinable()) sim_thread_.join();
    if (io_thread_.joinable()) {
      ioc_.stop();
      io_thread_.join();
    }
  }

  SessionCore& core_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread io_thread_;
  std::thread sim_thread_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> dropped_{0};
  mutable std::mutex clients_mu_;
  std::map<int, std::shared_ptr<Client>> clients_;
  int next_id_ = 0;
  std::mutex wait_mu_;
  std::condition_variable wait_cv_;
};

}  // namespace rdspot
