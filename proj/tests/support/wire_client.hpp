#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "swarm_ops/protocol.hpp"

namespace swarm_ops::test {

/// Minimal console for exercising a served session: newline or WebSocket
/// framing, every read bounded by a timeout.
class WireClient {
 public:
  enum class Framing { lines, websocket };

  WireClient(std::uint16_t port, Framing framing) : framing_(framing), socket_(ioc_), ws_(ioc_) {
    namespace net = boost::asio;
    const net::ip::tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
    if (framing_ == Framing::lines) {
      socket_.connect(ep);
    } else {
      ws_.next_layer().connect(ep);
      ws_.handshake("127.0.0.1:" + std::to_string(port), "/");
      ws_.text(true);
    }
  }

  ~WireClient() { close(); }

  void close() {
    boost::system::error_code ec;
    if (framing_ == Framing::lines) {
      socket_.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
      socket_.close(ec);
    } else if (ws_.is_open()) {
      ws_.next_layer().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
      ws_.next_layer().close(ec);
    }
  }

  void send_raw(std::string text) {
    if (framing_ == Framing::lines) {
      if (text.empty() || text.back() != '\n') text.push_back('\n');
      boost::asio::write(socket_, boost::asio::buffer(text));
    } else {
      if (!text.empty() && text.back() == '\n') text.pop_back();
      ws_.write(boost::asio::buffer(text));
    }
  }

  void send(MsgType type, nlohmann::json payload, std::int64_t tick = 0) {
    send_raw(encode_message(Message{type, ++seq_, id_.empty() ? "console" : id_, tick, std::move(payload)}));
  }

  /// One raw message, or nullopt on timeout or closed connection.
  std::optional<std::string> recv_raw(std::chrono::milliseconds timeout) {
    if (auto line = pop_line()) return line;
    if (eof_) return std::nullopt;
    if (!pending_) {
      // A read left pending by a timeout stays in flight for the next call.
      pending_ = true;
      done_ = false;
      auto on_read = [this](boost::system::error_code ec, std::size_t) {
        done_ = true;
        result_ = ec;
      };
      if (framing_ == Framing::lines) {
        boost::asio::async_read_until(socket_, buf_, '\n', on_read);
      } else {
        ws_.async_read(wsbuf_, on_read);
      }
    }
    ioc_.restart();
    ioc_.run_for(timeout);
    if (!done_) return std::nullopt;
    pending_ = false;
    if (result_) {
      eof_ = true;
      return pop_line();
    }
    if (framing_ == Framing::websocket) {
      std::string text = boost::beast::buffers_to_string(wsbuf_.data());
      wsbuf_.consume(wsbuf_.size());
      return text;
    }
    return pop_line();
  }

  std::optional<Message> recv(std::chrono::milliseconds timeout) {
    for (;;) {
      auto raw = recv_raw(timeout);
      if (!raw) return std::nullopt;
      std::string line = *raw;
      if (framing_ == Framing::websocket) line.push_back('\n');
      auto r = decode_message(line);
      if (auto* m = std::get_if<Message>(&r)) {
        received.push_back(*m);
        return *m;
      }
      ++undecodable;
    }
  }

  /// Reads until `pred` holds for a message; everything read is kept in `received`.
  std::optional<Message> wait_for(const std::function<bool(const Message&)>& pred,
                                  std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      auto m = recv(std::max(left, std::chrono::milliseconds(1)));
      if (!m) {
        if (eof_) return std::nullopt;
        continue;
      }
      if (pred(*m)) return m;
    }
    return std::nullopt;
  }

  std::optional<Message> wait_for_type(MsgType type, std::chrono::milliseconds timeout) {
    return wait_for([type](const Message& m) { return m.type == type; }, timeout);
  }

  /// Sends Hello and waits for the planner's reply; returns the assigned id.
  std::optional<std::string> hello(int version = kProtocolVersion) {
    nlohmann::json doc = {{"v", version}, {"msg_type", "Hello"}, {"seq", ++seq_}, {"sender", "console"},
                          {"tick", 0},    {"payload", {{"role", "console"}}}};
    send_raw(doc.dump());
    auto reply = wait_for([](const Message& m) { return m.type == MsgType::Hello || m.type == MsgType::Error; },
                          std::chrono::seconds(5));
    if (!reply || reply->type != MsgType::Hello) return std::nullopt;
    id_ = reply->payload.value("console_id", "");
    return id_;
  }

  /// True once the server has closed the connection.
  bool closed_by_peer(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!eof_ && std::chrono::steady_clock::now() < deadline) {
      recv(std::chrono::milliseconds(50));
    }
    return eof_;
  }

  std::size_t count(MsgType type) const {
    std::size_t n = 0;
    for (const auto& m : received) n += m.type == type;
    return n;
  }

  std::vector<Message> received;
  std::size_t undecodable = 0;

 private:
  std::optional<std::string> pop_line() {
    if (framing_ != Framing::lines) return std::nullopt;
    if (buf_.size() > 0) {
      pending_data_ += boost::beast::buffers_to_string(buf_.data());
      buf_.consume(buf_.size());
    }
    const auto pos = pending_data_.find('\n', head_);
    if (pos == std::string::npos) return std::nullopt;
    std::string line = pending_data_.substr(head_, pos + 1 - head_);
    head_ = pos + 1;
    if (head_ > (1u << 16)) {
      pending_data_.erase(0, head_);
      head_ = 0;
    }
    return line;
  }

  Framing framing_;
  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::socket socket_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
  boost::asio::streambuf buf_;
  boost::beast::flat_buffer wsbuf_;
  std::string pending_data_;
  std::size_t head_ = 0;
  std::string id_;
  std::uint64_t seq_ = 0;
  bool eof_ = false;
  bool pending_ = false;
  bool done_ = false;
  boost::system::error_code result_;
};

inline void PrintTo(WireClient::Framing f, std::ostream* os) {
  *os << (f == WireClient::Framing::lines ? "lines" : "websocket");
}

}  // namespace swarm_ops::test
