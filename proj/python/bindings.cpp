// JSON in, JSON out: every document crosses the boundary as a string and the
// Python package turns it into dicts.

#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swarm_ops/error.hpp"
#include "swarm_ops/evaluation.hpp"
#include "swarm_ops/planner.hpp"
#include "swarm_ops/protocol.hpp"
#include "swarm_ops/runner.hpp"
#include "swarm_ops/scenario.hpp"
#include "swarm_ops/sim_events.hpp"
#include "swarm_ops/situational.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace swarm_ops;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string(what) + " is not valid JSON: " + e.what());
  }
}

Scenario scenario_of(const std::string& text) {
  Scenario s = scenario_from_json(parse(text, "scenario"));
  validate(s);
  return s;
}

py::tuple headless_run(const std::string& scenario, std::optional<std::uint64_t> seed, double loss,
                       double latency_ms, double jitter_ms, int consoles) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.loss = loss;
  cfg.latency_ms = latency_ms;
  cfg.jitter_ms = jitter_ms;
  cfg.virtual_consoles = consoles;
  const Scenario s = scenario_of(scenario);
  HeadlessOutput out;
  {
    py::gil_scoped_release unlocked;
    out = run_headless_in_memory(s, cfg);
  }
  return py::make_tuple(out.events_log, out.deliveries_log, out.session_record.dump());
}

std::string score(const std::string& report, const std::string& scenario) {
  return to_json(score_report(report_from_json(parse(report, "report")), scenario_of(scenario))).dump();
}

std::string decode(const std::string& line) {
  const DecodeResult r = decode_message(line);
  if (const auto* err = std::get_if<DecodeError>(&r)) {
    throw py::value_error(std::string(to_string(err->kind)) + ": " + err->message());
  }
  const std::string canonical = encode_message(std::get<Message>(r));
  return canonical.substr(0, canonical.size() - 1);
}

std::string encode(const std::string& message) {
  const DecodeResult r = decode_unframed(message);
  if (const auto* err = std::get_if<DecodeError>(&r)) {
    throw py::value_error(std::string(to_string(err->kind)) + ": " + err->message());
  }
  return encode_message(std::get<Message>(r));
}

std::string hypotheses(const std::string& means) {
  json out = json::array();
  for (const auto& v : validate_hypotheses(parse(means, "means").get<std::map<std::string, double>>())) {
    out.push_back(to_json(v));
  }
  return out.dump();
}

std::string group_means(const std::string& doc, double tolerance) {
  json out = json::array();
  for (const auto& c : check_group_means(parse(doc, "group_means"), tolerance)) out.push_back(to_json(c));
  return out.dump();
}

std::string allocate(const std::string& waypoints, const std::string& drones) {
  std::vector<GeoCoordinate> wps;
  for (const auto& w : parse(waypoints, "waypoints")) wps.push_back(geo_from_json(w));
  std::vector<DroneSlot> slots;
  for (const auto& d : parse(drones, "drones")) slots.push_back({d.at("id").get<int>(), geo_from_json(d.at("position"))});
  json out = json::object();
  for (const auto& [id, indices] : allocate_waypoints(wps, slots)) out[std::to_string(id)] = indices;
  return out.dump();
}

std::string bearing(const std::string& observer, const std::string& target) {
  const BearingDistance bd =
      bearing_distance(geo_from_json(parse(observer, "observer")), geo_from_json(parse(target, "target")));
  return json{{"bearing_deg", bd.bearing_deg}, {"distance_m", bd.distance_m}, {"coincident", bd.coincident}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "swarm_ops native core";
  m.attr("PROTOCOL_VERSION") = kProtocolVersion;
  py::register_exception<Error>(m, "SwarmOpsError", PyExc_ValueError);

  m.def("run_headless", &headless_run, py::arg("scenario"), py::arg("seed") = py::none(), py::arg("loss") = 0.0,
        py::arg("latency_ms") = 0.0, py::arg("jitter_ms") = 0.0, py::arg("consoles") = 1,
        "Full patrol; returns (events_log, deliveries_log, session_record).");
  m.def("score_report", &score, py::arg("report"), py::arg("scenario"));
  m.def("decode_message", &decode, py::arg("line"), "Canonical JSON of one framed line; ValueError when invalid.");
  m.def("encode_message", &encode, py::arg("message"), "Framed canonical line for a message document.");
  m.def("validate_hypotheses", &hypotheses, py::arg("means"));
  m.def("check_group_means", &group_means, py::arg("doc"), py::arg("tolerance") = 0.01);
  m.def("allocate_waypoints", &allocate, py::arg("waypoints"), py::arg("drones"));
  m.def("bearing_distance", &bearing, py::arg("observer"), py::arg("target"));
}
