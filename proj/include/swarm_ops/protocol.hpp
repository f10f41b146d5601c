#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace swarm_ops {

inline constexpr int kProtocolVersion = 1;

enum class MsgType {
  TelemetryUpdate,
  CameraFrame,
  Notification,
  TargetMark,
  MissionCommand,
  DroneSelect,
  ReportSubmission,
  ClockSync,
  Hello,
  Error,
  CompassView,
  MiniMapView,
};

inline constexpr MsgType kAllMsgTypes[] = {
    MsgType::TelemetryUpdate, MsgType::CameraFrame,      MsgType::Notification,
    MsgType::TargetMark,      MsgType::MissionCommand,   MsgType::DroneSelect,
    MsgType::ReportSubmission, MsgType::ClockSync,       MsgType::Hello,
    MsgType::Error,           MsgType::CompassView,      MsgType::MiniMapView,
};

std::string_view to_string(MsgType t);
std::optional<MsgType> parse_msg_type(std::string_view text);

/// Wire envelope. `payload` is a JSON object whose shape depends on `type`;
/// see docs/protocol.md for the per-type grammar.
struct Message {
  MsgType type = MsgType::Hello;
  std::uint64_t seq = 0;
  std::string sender;
  std::int64_t tick = 0;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Message&) const = default;
};

/// Canonical single-line encoding: sorted keys, `v: 1`, trailing '\n'.
std::string encode_message(const Message& m);

struct DecodeError {
  enum class Kind {
    framing,
    malformed_json,
    unsupported_version,
    unknown_type,
    missing_field,
    invalid_field,
  };

  Kind kind = Kind::framing;
  std::string detail;
  std::size_t byte_offset = 0;  // malformed_json / framing
  std::string field;            // missing_field / invalid_field / unknown_type

  std::string message() const;
};

std::string_view to_string(DecodeError::Kind k);

using DecodeResult = std::variant<Message, DecodeError>;

/// Decodes exactly one framed line. Never throws; arbitrary input yields a
/// Message or a DecodeError.
DecodeResult decode_message(std::string_view bytes);

/// Decodes the JSON text of a line whose framing was already stripped
/// (WebSocket frames carry one message each).
DecodeResult decode_unframed(std::string_view text);

/// Stamps outgoing messages with a strictly increasing per-sender sequence.
class SequenceCounter {
 public:
  explicit SequenceCounter(std::string sender) : sender_(std::move(sender)) {}

  Message make(MsgType type, std::int64_t tick, nlohmann::json payload) {
    return Message{type, ++last_, sender_, tick, std::move(payload)};
  }

  const std::string& sender() const { return sender_; }
  std::uint64_t last() const { return last_; }

 private:
  std::string sender_;
  std::uint64_t last_ = 0;
};

}  // namespace swarm_ops
