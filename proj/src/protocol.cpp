#include "swarm_ops/protocol.hpp"

#include <array>

namespace swarm_ops {

using nlohmann::json;

namespace {

enum class FieldKind { integer, number, string, boolean, array, object, integer_or_null };

struct FieldSpec {
  const char* name;
  FieldKind kind;
};

bool matches(const json& v, FieldKind k) {
  switch (k) {
    case FieldKind::integer: return v.is_number_integer();
    case FieldKind::number: return v.is_number();
    case FieldKind::string: return v.is_string();
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::array: return v.is_array();
    case FieldKind::object: return v.is_object();
    case FieldKind::integer_or_null: return v.is_null() || v.is_number_integer();
  }
  return false;
}

std::string_view kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::integer: return "an integer";
    case FieldKind::number: return "a number";
    case FieldKind::string: return "a string";
    case FieldKind::boolean: return "a boolean";
    case FieldKind::array: return "an array";
    case FieldKind::object: return "an object";
    case FieldKind::integer_or_null: return "an integer or null";
  }
  return "?";
}

// Required payload fields per message type. Optional fields are not listed.
std::vector<FieldSpec> required_fields(MsgType t) {
  using K = FieldKind;
  switch (t) {
    case MsgType::TelemetryUpdate:
      return {{"drone_id", K::integer}, {"latitude_deg", K::number}, {"longitude_deg", K::number},
              {"altitude_m", K::number}, {"battery_pct", K::number}, {"speed_mps", K::number},
              {"heading_deg", K::number}, {"mode", K::string}};
    case MsgType::CameraFrame:
      return {{"drone_id", K::integer}, {"facade", K::string}, {"grid", K::array},
              {"visible_sightings", K::array}};
    case MsgType::Notification:
      return {{"severity", K::string}, {"kind", K::string}, {"text", K::string}};
    case MsgType::TargetMark:
      return {{"drone_id", K::integer}};
    case MsgType::MissionCommand:
      return {{"action", K::string}};
    case MsgType::DroneSelect:
      return {{"drone_id", K::integer_or_null}};
    case MsgType::ReportSubmission:
      return {{"report", K::object}};
    case MsgType::ClockSync:
      return {{"elapsed_s", K::number}, {"limit_s", K::number}, {"phase", K::string},
              {"replay", K::boolean}};
    case MsgType::Hello:
      return {{"role", K::string}};
    case MsgType::Error:
      return {{"code", K::string}, {"text", K::string}};
    case MsgType::CompassView:
      return {{"observer", K::object}, {"entries", K::array}};
    case MsgType::MiniMapView:
      return {{"width_px", K::integer}, {"height_px", K::integer}, {"meters_per_px", K::number},
              {"entries", K::array}};
  }
  return {};
}

DecodeError make_error(DecodeError::Kind kind, std::string detail, std::string field = {},
                       std::size_t offset = 0) {
  return DecodeError{kind, std::move(detail), offset, std::move(field)};
}

}  // namespace

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::TelemetryUpdate: return "TelemetryUpdate";
    case MsgType::CameraFrame: return "CameraFrame";
    case MsgType::Notification: return "Notification";
    case MsgType::TargetMark: return "TargetMark";
    case MsgType::MissionCommand: return "MissionCommand";
    case MsgType::DroneSelect: return "DroneSelect";
    case MsgType::ReportSubmission: return "ReportSubmission";
    case MsgType::ClockSync: return "ClockSync";
    case MsgType::Hello: return "Hello";
    case MsgType::Error: return "Error";
    case MsgType::CompassView: return "CompassView";
    case MsgType::MiniMapView: return "MiniMapView";
  }
  return "?";
}

std::optional<MsgType> parse_msg_type(std::string_view text) {
  for (MsgType t : kAllMsgTypes) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(DecodeError::Kind k) {
  switch (k) {
    case DecodeError::Kind::framing: return "framing";
    case DecodeError::Kind::malformed_json: return "malformed_json";
    case DecodeError::Kind::unsupported_version: return "unsupported_version";
    case DecodeError::Kind::unknown_type: return "unknown_type";
    case DecodeError::Kind::missing_field: return "missing_field";
    case DecodeError::Kind::invalid_field: return "invalid_field";
  }
  return "?";
}

std::string DecodeError::message() const {
  std::string out(to_string(kind));
  if (!field.empty()) out += " '" + field + "'";
  if (kind == Kind::malformed_json || kind == Kind::framing) {
    out += " at byte " + std::to_string(byte_offset);
  }
  if (!detail.empty()) out += ": " + detail;
  return out;
}

std::string encode_message(const Message& m) {
  json doc = {
      {"v", kProtocolVersion},
      {"msg_type", to_string(m.type)},
      {"seq", m.seq},
      {"sender", m.sender},
      {"tick", m.tick},
      {"payload", m.payload},
  };
  // Replace keeps the encoder total when a label carries invalid UTF-8.
  return doc.dump(-1, ' ', false, json::error_handler_t::replace) + '\n';
}

DecodeResult decode_message(std::string_view bytes) {
  using K = DecodeError::Kind;
  if (bytes.empty()) return make_error(K::framing, "empty input");
  if (bytes.back() != '\n') {
    return make_error(K::framing, "line is not terminated by '\\n' (truncated?)", {}, bytes.size());
  }
  std::string_view body = bytes.substr(0, bytes.size() - 1);
  if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
  if (auto pos = body.find('\n'); pos != std::string_view::npos) {
    return make_error(K::framing, "more than one line in frame", {}, pos);
  }
  return decode_unframed(body);
}

DecodeResult decode_unframed(std::string_view text) {
  using K = DecodeError::Kind;
  try {
    json doc;
    try {
      doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      return make_error(K::malformed_json, "invalid JSON", {}, e.byte);
    }
    if (!doc.is_object()) return make_error(K::invalid_field, "message must be a JSON object", "<root>");

    auto v = doc.find("v");
    if (v == doc.end()) return make_error(K::missing_field, "protocol version required", "v");
    if (!v->is_number_integer() || v->get<std::int64_t>() != kProtocolVersion) {
      return make_error(K::unsupported_version,
                        "expected v=" + std::to_string(kProtocolVersion) + ", got " + v->dump(), "v");
    }

    auto mt = doc.find("msg_type");
    if (mt == doc.end()) return make_error(K::missing_field, "", "msg_type");
    if (!mt->is_string()) return make_error(K::invalid_field, "expected a string", "msg_type");
    const std::string type_name = mt->get<std::string>();
    auto type = parse_msg_type(type_name);
    if (!type) return make_error(K::unknown_type, "unknown msg_type", type_name);

    Message m;
    m.type = *type;

    auto seq = doc.find("seq");
    if (seq == doc.end()) return make_error(K::missing_field, "", "seq");
    if (!seq->is_number_unsigned()) return make_error(K::invalid_field, "expected a non-negative integer", "seq");
    m.seq = seq->get<std::uint64_t>();

    auto sender = doc.find("sender");
    if (sender == doc.end()) return make_error(K::missing_field, "", "sender");
    if (!sender->is_string() || sender->get_ref<const std::string&>().empty()) {
      return make_error(K::invalid_field, "expected a non-empty string", "sender");
    }
    m.sender = sender->get<std::string>();

    auto tick = doc.find("tick");
    if (tick == doc.end()) return make_error(K::missing_field, "", "tick");
    if (!tick->is_number_integer()) return make_error(K::invalid_field, "expected an integer", "tick");
    if (tick->is_number_unsigned() && tick->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      return make_error(K::invalid_field, "out of range", "tick");
    }
    m.tick = tick->get<std::int64_t>();

    auto payload = doc.find("payload");
    if (payload == doc.end()) return make_error(K::missing_field, "", "payload");
    if (!payload->is_object()) return make_error(K::invalid_field, "expected an object", "payload");
    for (const FieldSpec& f : required_fields(m.type)) {
      auto it = payload->find(f.name);
      const std::string path = std::string("payload.") + f.name;
      if (it == payload->end()) return make_error(K::missing_field, "", path);
      if (!matches(*it, f.kind)) {
        return make_error(K::invalid_field, "expected " + std::string(kind_name(f.kind)), path);
      }
    }
    m.payload = std::move(*payload);
    return m;
  } catch (const std::exception& e) {
    return make_error(K::invalid_field, e.what(), "<root>");
  }
}

}  // namespace swarm_ops
