#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/evaluation.hpp"
#include "swarm_ops/mission_hub.hpp"
#include "swarm_ops/sim_events.hpp"

namespace swarm_ops {

enum class RunMode { headless, serve, replay, score, analyze };

std::string_view to_string(RunMode m);

struct RunConfig {
  RunMode mode = RunMode::headless;
  std::filesystem::path scenario_path;
  std::optional<std::uint64_t> seed;  // defaults to the scenario's seed
  std::string bind;                   // host:port, serve (and served replay)
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  double loss = 0.0;
  std::filesystem::path out;  // output directory (run, serve, replay, analyze) or file (score)
  double speed = 1.0;         // simulated seconds per wall second
  bool autostart = false;
  Technology technology = Technology::PC;
  int attempt_index = 1;
  int virtual_consoles = 1;  // headless runs deliver to this many in-process consoles
  std::filesystem::path log_path;      // replay input
  std::filesystem::path report_path;   // score input
  std::filesystem::path results_dir;   // analyze input
  bool exit_when_done = false;         // serve: exit once the report is in

  /// Throws Error describing the first missing or inconsistent setting.
  void validate() const;
  LinkProfile link(std::uint64_t seed) const;
};

/// Parses "host:port"; port 0 asks the OS for a free one.
std::pair<std::string, std::uint16_t> parse_bind(const std::string& bind);

struct HeadlessResult {
  std::filesystem::path events_log;
  std::filesystem::path deliveries_log;
  std::filesystem::path session_record;
  std::int64_t final_tick = 0;
  std::optional<double> patrol_complete_s;
  std::size_t events = 0;
  std::size_t deliveries = 0;
  std::size_t dropped = 0;
  std::size_t hub_bypass = 0;
};

/// Full patrol with the planner hub and in-process consoles; writes
/// events.jsonl (simulator replay log), deliveries.jsonl (per-delivery
/// audit, the only seed-dependent output) and session_record.json. Nothing
/// is written when the run fails.
HeadlessResult run_headless(const RunConfig& cfg);

/// Same run without touching the filesystem: the event log, the delivery
/// log and the session record as strings.
struct HeadlessOutput {
  std::string events_log;
  std::string deliveries_log;
  nlohmann::json session_record;
  HeadlessResult summary;
};
HeadlessOutput run_headless_in_memory(const Scenario& scenario, const RunConfig& cfg);

// --- replay ---------------------------------------------------------------------

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_s() = 0;
  virtual void sleep_until(double t_s) = 0;
};

class SteadyClock : public Clock {
 public:
  double now_s() override;
  void sleep_until(double t_s) override;
};

/// Time moves only when someone waits.
class VirtualClock : public Clock {
 public:
  double now_s() override { return now_; }
  void sleep_until(double t_s) override { now_ = std::max(now_, t_s); }

 private:
  double now_ = 0.0;
};

struct ReplayStats {
  std::size_t events = 0;
  std::size_t messages = 0;
  std::int64_t last_tick = 0;
  double duration_s = 0.0;
  nlohmann::json session_record;
};

using DeliverySink = std::function<void(const ScheduledDelivery&)>;

/// Re-emits a replay log onto a planner hub at `speed`x with `consoles`
/// in-process consoles attached. Every delivered message goes to `sink`.
ReplayStats replay(const std::vector<SimEvent>& events, const Scenario& scenario, double speed, Clock& clock,
                   const DeliverySink& sink, HubOptions options = {}, int consoles = 1);

// --- evaluation commands --------------------------------------------------------

/// Accepts a mission report or a session record carrying one.
ScoreCard score_file(const std::filesystem::path& report, const std::filesystem::path& scenario);

struct Analysis {
  nlohmann::json document;  // kind "analysis"
  std::string table;        // human-readable summary
};

/// Scans `dir` recursively for JSON documents and dispatches on their
/// `kind`: scorecard, session_record, questionnaire_response, group_means,
/// question_means.
Analysis analyze_directory(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace swarm_ops
