#include "swarm_ops/server.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "swarm_ops/error.hpp"
#include "swarm_ops/runner.hpp"

namespace swarm_ops {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;
using Steady = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;

class Connection;

// Callbacks from connections into the server; all run on the io thread.
class ConnectionOwner {
 public:
  virtual ~ConnectionOwner() = default;
  virtual void on_decoded(const std::shared_ptr<Connection>& c, DecodeResult r) = 0;
  virtual void on_closed(const std::shared_ptr<Connection>& c) = 0;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  explicit Connection(ConnectionOwner& owner) : owner_(owner) {}
  virtual ~Connection() = default;

  /// `line` carries its trailing newline.
  virtual void send(std::string line) = 0;
  /// Closes once everything queued so far has been written.
  virtual void close_after_flush() = 0;
  virtual void close_now() = 0;
  virtual std::string framing() const = 0;

  std::string console_id;  // empty until the Hello was accepted

 protected:
  ConnectionOwner& owner_;
  bool closing_ = false;
  bool closed_ = false;
};

class LineConnection : public Connection {
 public:
  LineConnection(ConnectionOwner& owner, tcp::socket socket, std::string initial)
      : Connection(owner), socket_(std::move(socket)), inbuf_(std::move(initial)) {}

  void start() {
    if (!process()) return;
    read();
  }

  void send(std::string line) override {
    if (closed_ || closing_) return;
    outq_.push_back(std::move(line));
    if (outq_.size() == 1) write_next();
  }

  void close_after_flush() override {
    closing_ = true;
    if (outq_.empty()) close_now();
  }

  void close_now() override {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    owner_.on_closed(shared_from_this());
  }

  std::string framing() const override { return "lines"; }

 private:
  void read() {
    socket_.async_read_some(net::buffer(chunk_), [self = std::static_pointer_cast<LineConnection>(shared_from_this())](
                                                     beast::error_code ec, std::size_t n) {
      if (self->closed_) return;
      if (ec) {
        self->close_now();
        return;
      }
      self->inbuf_.append(self->chunk_.data(), n);
      if (self->process()) self->read();
    });
  }

  // False once the connection is closing.
  bool process() {
    std::size_t pos;
    while (!closing_ && !closed_ && (pos = inbuf_.find('\n')) != std::string::npos) {
      std::string line = inbuf_.substr(0, pos + 1);
      inbuf_.erase(0, pos + 1);
      owner_.on_decoded(shared_from_this(), decode_message(line));
    }
    if (!closing_ && !closed_ && inbuf_.size() > kMaxLineBytes) {
      inbuf_.clear();
      DecodeError e;
      e.detail = "line exceeds " + std::to_string(kMaxLineBytes) + " bytes";
      owner_.on_decoded(shared_from_this(), e);
      close_after_flush();
    }
    return !closing_ && !closed_;
  }

  void write_next() {
    net::async_write(socket_, net::buffer(outq_.front()),
                     [self = std::static_pointer_cast<LineConnection>(shared_from_this())](beast::error_code ec, std::size_t) {
                       if (self->closed_) return;
                       if (ec) {
                         self->close_now();
                         return;
                       }
                       self->outq_.pop_front();
                       if (!self->outq_.empty()) {
                         self->write_next();
                       } else if (self->closing_) {
                         self->close_now();
                       }
                     });
  }

  tcp::socket socket_;
  std::string inbuf_;
  std::array<char, 4096> chunk_{};
  std::deque<std::string> outq_;
};

class WsConnection : public Connection {
 public:
  WsConnection(ConnectionOwner& owner, tcp::socket socket, const std::string& initial)
      : Connection(owner), ws_(std::move(socket)) {
    const auto n = net::buffer_copy(buffer_.prepare(initial.size()), net::buffer(initial));
    buffer_.commit(n);
  }

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = self_ptr()](beast::error_code ec, std::size_t) {
                       if (ec || !websocket::is_upgrade(self->request_)) {
                         spdlog::debug("rejecting non-WebSocket HTTP request");
                         self->close_now();
                         return;
                       }
                       self->ws_.text(true);
                       self->ws_.async_accept(self->request_, [self](beast::error_code ec) {
                         if (ec) {
                           self->close_now();
                           return;
                         }
                         self->accepted_ = true;
                         self->read();
                         if (!self->outq_.empty()) self->write_next();
                       });
                     });
  }

  void send(std::string line) override {
    if (closed_ || closing_) return;
    if (!line.empty() && line.back() == '\n') line.pop_back();
    outq_.push_back(std::move(line));
    if (outq_.size() == 1 && accepted_) write_next();
  }

  void close_after_flush() override {
    closing_ = true;
    if (outq_.empty()) close_gracefully();
  }

  void close_now() override {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
    owner_.on_closed(shared_from_this());
  }

  std::string framing() const override { return "websocket"; }

 private:
  std::shared_ptr<WsConnection> self_ptr() { return std::static_pointer_cast<WsConnection>(shared_from_this()); }

  void close_gracefully() {
    if (!accepted_ || closed_) {
      close_now();
      return;
    }
    ws_.async_close(websocket::close_code::normal, [self = self_ptr()](beast::error_code) { self->close_now(); });
  }

  void read() {
    ws_.async_read(buffer_, [self = self_ptr()](beast::error_code ec, std::size_t) {
      if (self->closed_) return;
      if (ec) {
        self->close_now();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      self->owner_.on_decoded(self, decode_unframed(text));
      if (!self->closing_ && !self->closed_) self->read();
    });
  }

  void write_next() {
    ws_.async_write(net::buffer(outq_.front()), [self = self_ptr()](beast::error_code ec, std::size_t) {
      if (self->closed_) return;
      if (ec) {
        self->close_now();
        return;
      }
      self->outq_.pop_front();
      if (!self->outq_.empty()) {
        self->write_next();
      } else if (self->closing_) {
        self->close_gracefully();
      }
    });
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::string> outq_;
  bool accepted_ = false;
};

// Reads until the framing is known: "GET " opens a WebSocket handshake.
class Detector : public std::enable_shared_from_this<Detector> {
 public:
  using Ready = std::function<void(tcp::socket, std::string, bool websocket)>;
  Detector(tcp::socket socket, Ready ready) : socket_(std::move(socket)), ready_(std::move(ready)) {}

  void start() {
    socket_.async_read_some(net::buffer(chunk_), [self = shared_from_this()](beast::error_code ec, std::size_t n) {
      if (ec) return;  // closed before saying anything
      self->seen_.append(self->chunk_.data(), n);
      const bool decided = self->seen_.size() >= 4 || self->seen_.find('\n') != std::string::npos ||
                           std::string_view("GET ").substr(0, self->seen_.size()) != self->seen_;
      if (!decided) {
        self->start();
        return;
      }
      const bool ws = self->seen_.rfind("GET ", 0) == 0;
      self->ready_(std::move(self->socket_), std::move(self->seen_), ws);
    });
  }

 private:
  tcp::socket socket_;
  Ready ready_;
  std::string seen_;
  std::array<char, 512> chunk_{};
};

// Inbound command queue of the simulator task.
class CommandQueue {
 public:
  void push(SimCommand c) {
    {
      std::lock_guard lock(m_);
      q_.push_back(std::move(c));
    }
    cv_.notify_all();
  }
  void shutdown() {
    {
      std::lock_guard lock(m_);
      shutdown_ = true;
    }
    cv_.notify_all();
  }
  std::deque<SimCommand> drain() {
    std::lock_guard lock(m_);
    return std::exchange(q_, {});
  }
  /// Waits for a command or shutdown until `deadline`; true when shut down.
  template <class TimePoint>
  bool wait_until(TimePoint deadline) {
    std::unique_lock lock(m_);
    cv_.wait_until(lock, deadline, [&] { return shutdown_ || !q_.empty(); });
    return shutdown_;
  }
  bool wait_for_any() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return shutdown_ || !q_.empty(); });
    return shutdown_;
  }
  bool is_shutdown() {
    std::lock_guard lock(m_);
    return shutdown_;
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<SimCommand> q_;
  bool shutdown_ = false;
};

}  // namespace

struct MissionServer::Impl : ConnectionOwner {
  Impl(Scenario s, ServerOptions o) : scenario(std::move(s)), options(std::move(o)), hub(scenario, hub_options()) {}

  HubOptions hub_options() const {
    HubOptions h = options.hub;
    h.dt_s = options.sim.dt_s;
    if (options.replay_events) h.replay = true;
    return h;
  }

  double now_ms() const {
    return std::chrono::duration<double, std::milli>(Steady::now() - epoch).count() * options.speed;
  }

  // --- lifecycle -----------------------------------------------------------------

  void start() {
    if (!(options.speed > 0.0)) throw Error("--speed must be positive");
    tcp::endpoint ep;
    try {
      tcp::resolver resolver(ioc);
      auto results = resolver.resolve(options.host, std::to_string(options.port), tcp::resolver::passive);
      if (results.empty()) throw Error("cannot resolve " + options.host);
      ep = *results.begin();
      acceptor.open(ep.protocol());
      acceptor.set_option(net::socket_base::reuse_address(true));
      acceptor.bind(ep);
      acceptor.listen();
    } catch (const boost::system::system_error& e) {
      throw Error("cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " + e.code().message());
    }
    bound_port = acceptor.local_endpoint().port();
    epoch = Steady::now();
    spdlog::info("serving scenario '{}' on {}:{}{}", scenario.id, options.host, bound_port,
                 options.replay_events ? " (replay)" : "");

    if (options.handle_signals) {
      signals.add(SIGINT);
      signals.add(SIGTERM);
      signals.async_wait([self = this](beast::error_code ec, int sig) {
        if (ec) return;
        spdlog::info("signal {} received, shutting down", sig);
        self->shutdown();
      });
    }
    accept();
    schedule_flush();
    if (options.replay_events) {
      {
        std::lock_guard lock(hub_mutex);
        hub.start_session(now_ms());
      }
      source = std::thread([self = this] { self->replay_loop(); });
    } else {
      if (options.autostart) {
        std::lock_guard lock(hub_mutex);
        hub.start_session(now_ms());
        commands.push(StartSim{});
      }
      source = std::thread([self = this] { self->sim_loop(); });
    }
    io = std::thread([self = this] {
      try {
        self->ioc.run();
      } catch (const std::exception& e) {
        spdlog::error("network task failed: {}", e.what());
      }
      self->finish();
    });
  }

  void request_stop() {
    net::post(ioc, [self = this] { self->shutdown(); });
  }

  // io thread
  void shutdown() {
    if (shutting_down) return;
    commands.shutdown();
    flush(true);  // whatever is still in flight goes out before the sockets close
    shutting_down = true;
    write_record();
    beast::error_code ec;
    acceptor.close(ec);
    signals.cancel(ec);
    flush_timer.cancel();
    for (auto& c : std::set<std::shared_ptr<Connection>>(connections)) c->close_after_flush();
    // Give queued writes a moment, then stop regardless.
    auto grace = std::make_shared<net::steady_timer>(ioc, std::chrono::milliseconds(200));
    grace->async_wait([self = this, grace](beast::error_code) {
      for (auto& c : std::set<std::shared_ptr<Connection>>(self->connections)) c->close_now();
      self->ioc.stop();
    });
  }

  void finish() {
    {
      std::lock_guard lock(state_mutex);
      done = true;
    }
    done_cv.notify_all();
  }

  void wait() {
    {
      std::unique_lock lock(state_mutex);
      done_cv.wait(lock, [&] { return done; });
    }
    join();
  }

  void join() {
    commands.shutdown();
    if (source.joinable()) source.join();
    if (io.joinable() && io.get_id() != std::this_thread::get_id()) io.join();
  }

  void write_record() {
    if (options.out.empty()) return;
    json record;
    {
      std::lock_guard lock(hub_mutex);
      record = hub.session_record();
    }
    try {
      write_text(options.out / "session_record.json", record.dump(2) + "\n");
      spdlog::info("session record written to {}", (options.out / "session_record.json").string());
    } catch (const Error& e) {
      spdlog::error("{}", e.what());
    }
  }

  // --- network -------------------------------------------------------------------

  void accept() {
    acceptor.async_accept([self = this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (!self->shutting_down && self->acceptor.is_open()) self->accept();
        return;
      }
      socket.set_option(tcp::no_delay(true));
      auto detector = std::make_shared<Detector>(
          std::move(socket), [self](tcp::socket s, std::string seen, bool ws) {
            if (self->shutting_down) return;
            if (ws) {
              auto c = std::make_shared<WsConnection>(*self, std::move(s), seen);
              self->connections.insert(c);
              c->start();
            } else {
              auto c = std::make_shared<LineConnection>(*self, std::move(s), std::move(seen));
              self->connections.insert(c);
              c->start();
            }
          });
      detector->start();
      self->accept();
    });
  }

  void send_raw(const std::shared_ptr<Connection>& c, MsgType type, json payload) {
    Message m;
    {
      std::lock_guard lock(hub_mutex);
      m = hub.stamp(type, std::move(payload));
    }
    c->send(encode_message(m));
  }

  void on_decoded(const std::shared_ptr<Connection>& c, DecodeResult r) override {
    if (c->console_id.empty()) {
      handshake(c, std::move(r));
      return;
    }
    const double now = now_ms();
    if (auto* err = std::get_if<DecodeError>(&r)) {
      {
        std::lock_guard lock(hub_mutex);
        hub.reject(c->console_id, std::string(to_string(err->kind)), err->message(), now);
      }
      flush();
      if (err->kind == DecodeError::Kind::unsupported_version) c->close_after_flush();
      return;
    }
    const Message& m = std::get<Message>(r);
    {
      std::lock_guard lock(hub_mutex);
      if (m.type == MsgType::Hello) {
        hub.reject(c->console_id, "bad_request", "already greeted", now);
      } else {
        hub.on_console_message(c->console_id, m, now);
      }
    }
    flush();
  }

  void handshake(const std::shared_ptr<Connection>& c, DecodeResult r) {
    auto refuse = [&](const std::string& code, const std::string& text) {
      spdlog::info("refusing {} connection: {}", c->framing(), text);
      send_raw(c, MsgType::Error, {{"code", code}, {"text", text}});
      c->close_after_flush();
    };
    if (auto* err = std::get_if<DecodeError>(&r)) {
      refuse(err->kind == DecodeError::Kind::unsupported_version ? "unsupported_version" : "hello_required",
             err->message());
      return;
    }
    const Message& m = std::get<Message>(r);
    if (m.type != MsgType::Hello) {
      refuse("hello_required", "the first message must be a Hello");
      return;
    }
    if (m.payload.value("role", "") != "console") {
      refuse("bad_role", "only consoles may connect");
      return;
    }
    c->console_id = "console-" + std::to_string(++console_serial);
    json reply;
    {
      std::lock_guard lock(hub_mutex);
      hub.connect_console(c->console_id);
      const MissionSession& s = hub.planner().session();
      reply = {{"role", "planner"},
               {"console_id", c->console_id},
               {"scenario_id", scenario.id},
               {"phase", to_string(s.phase)},
               {"limit_s", s.limit_s},
               {"dt_s", options.sim.dt_s},
               {"replay", options.replay_events.has_value()}};
    }
    consoles[c->console_id] = c;
    spdlog::info("{} connected over {}", c->console_id, c->framing());
    send_raw(c, MsgType::Hello, reply);
  }

  void on_closed(const std::shared_ptr<Connection>& c) override {
    connections.erase(c);
    if (c->console_id.empty()) return;
    consoles.erase(c->console_id);
    std::lock_guard lock(hub_mutex);
    hub.disconnect_console(c->console_id);
    spdlog::info("{} disconnected", c->console_id);
  }

  // --- hub plumbing --------------------------------------------------------------

  void schedule_flush() {
    flush_timer.expires_after(std::chrono::microseconds(static_cast<long>(options.flush_period_ms * 1000.0)));
    flush_timer.async_wait([self = this](beast::error_code ec) {
      if (ec || self->shutting_down) return;
      self->flush();
      self->schedule_flush();
    });
  }

  // io thread
  void flush(bool everything = false) {
    std::vector<ScheduledDelivery> due;
    Phase phase;
    {
      std::lock_guard lock(hub_mutex);
      due = everything ? hub.take_all() : hub.take_due(now_ms());
      phase = hub.planner().session().phase;
    }
    for (auto& d : due) {
      if (d.delivery.to == kSimId) {
        if (auto cmd = MissionHub::sim_command(d.delivery.message); cmd && !options.replay_events) commands.push(*cmd);
        continue;
      }
      if (auto it = consoles.find(d.delivery.to); it != consoles.end()) {
        it->second->send(encode_message(d.delivery.message));
      }
    }
    if (phase != last_phase) {
      last_phase = phase;
      if (phase == Phase::stopped && !options.replay_events) commands.push(StopSim{});
      if (phase == Phase::stopped || phase == Phase::reported) write_record();
    }
    bool finished = false;
    if (options.exit_when_done && !everything) {
      std::lock_guard lock(hub_mutex);
      finished = options.replay_events ? source_done && !hub.next_due_ms() : phase == Phase::reported && !hub.next_due_ms();
    }
    if (finished) shutdown();
  }

  void deliver_events(std::vector<SimEvent> batch) {
    net::post(ioc, [self = this, batch = std::move(batch)] {
      if (self->shutting_down) return;
      {
        std::lock_guard lock(self->hub_mutex);
        self->hub.on_sim_events(batch, self->now_ms());
      }
      self->flush();
    });
  }

  // --- simulator and replay tasks ------------------------------------------------

  void sim_loop() {
    try {
      Simulator sim(scenario, options.sim);
      // Idle until someone starts the mission.
      for (;;) {
        if (commands.wait_for_any()) return;
        bool start = false;
        for (auto& c : commands.drain()) start |= std::holds_alternative<StartSim>(c);
        if (start) break;
      }
      const auto t0 = Steady::now();
      deliver_events(sim.start());
      while (!sim.stopped()) {
        const auto next = t0 + std::chrono::duration_cast<Steady::duration>(std::chrono::duration<double>(
                                   static_cast<double>(sim.state().tick + 1) * options.sim.dt_s / options.speed));
        while (Steady::now() < next) {
          if (commands.wait_until(next)) return;
          apply(sim, commands.drain());
        }
        apply(sim, commands.drain());
        deliver_events(sim.step());
      }
      spdlog::info("simulator stopped at tick {}", sim.state().tick);
    } catch (const std::exception& e) {
      spdlog::error("simulator task failed: {}", e.what());
    }
    net::post(ioc, [self = this] { self->source_done = true; });
  }

  static void apply(Simulator& sim, std::deque<SimCommand> cmds) {
    for (auto& c : cmds) {
      if (std::holds_alternative<StopSim>(c)) {
        sim.request_stop();
      } else if (auto* a = std::get_if<AssignWaypoints>(&c)) {
        try {
          sim.apply_waypoint_mission(a->assignment);
        } catch (const SimulationError& e) {
          spdlog::warn("waypoint mission refused by the simulator: {}", e.what());
        }
      }
    }
  }

  void replay_loop() {
    const auto& events = *options.replay_events;
    const auto t0 = Steady::now();
    std::size_t i = 0;
    while (i < events.size()) {
      const std::int64_t tick = events[i].tick;
      std::vector<SimEvent> batch;
      for (; i < events.size() && events[i].tick == tick; ++i) batch.push_back(events[i]);
      const auto at = t0 + std::chrono::duration_cast<Steady::duration>(std::chrono::duration<double>(
                               static_cast<double>(tick) * options.sim.dt_s / options.speed));
      if (commands.wait_until(at)) return;
      deliver_events(std::move(batch));
    }
    spdlog::info("replay finished after {} events", events.size());
    net::post(ioc, [self = this] { self->source_done = true; });
  }

  Scenario scenario;
  ServerOptions options;
  mutable std::mutex hub_mutex;
  MissionHub hub;

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::steady_timer flush_timer{ioc};
  net::signal_set signals{ioc};
  std::uint16_t bound_port = 0;
  Steady::time_point epoch = Steady::now();

  // io-thread state
  std::set<std::shared_ptr<Connection>> connections;
  std::map<std::string, std::shared_ptr<Connection>> consoles;
  int console_serial = 0;
  bool shutting_down = false;
  bool source_done = false;
  Phase last_phase = Phase::briefing;

  CommandQueue commands;
  std::thread source;
  std::thread io;
  std::mutex state_mutex;
  std::condition_variable done_cv;
  bool done = false;
};

MissionServer::MissionServer(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {}

MissionServer::~MissionServer() {
  if (impl_->io.joinable()) {
    impl_->request_stop();
    impl_->wait();
  }
}

void MissionServer::start() { impl_->start(); }
std::uint16_t MissionServer::port() const { return impl_->bound_port; }
void MissionServer::request_stop() { impl_->request_stop(); }
void MissionServer::wait() { impl_->wait(); }

bool MissionServer::stopped() const {
  std::lock_guard lock(impl_->state_mutex);
  return impl_->done;
}

json MissionServer::session_record() const {
  std::lock_guard lock(impl_->hub_mutex);
  return impl_->hub.session_record();
}

std::vector<DeliveryRecord> MissionServer::audit() const {
  std::lock_guard lock(impl_->hub_mutex);
  return impl_->hub.audit();
}

std::size_t MissionServer::console_count() const {
  std::lock_guard lock(impl_->hub_mutex);
  return impl_->hub.consoles().size();
}

}  // namespace swarm_ops
