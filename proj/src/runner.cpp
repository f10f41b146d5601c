#include "swarm_ops/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::headless: return "run";
    case RunMode::serve: return "serve";
    case RunMode::replay: return "replay";
    case RunMode::score: return "score";
    case RunMode::analyze: return "analyze";
  }
  return "?";
}

void RunConfig::validate() const {
  const auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw Error(std::string(to_string(mode)) + ": " + what);
  };
  switch (mode) {
    case RunMode::headless:
      need(!scenario_path.empty(), "--scenario is required");
      need(virtual_consoles >= 0, "console count must be non-negative");
      break;
    case RunMode::serve:
      need(!scenario_path.empty(), "--scenario is required");
      need(!bind.empty(), "--bind is required");
      parse_bind(bind);
      break;
    case RunMode::replay:
      need(!log_path.empty(), "a replay log is required");
      need(!scenario_path.empty(), "--scenario is required");
      if (!bind.empty()) parse_bind(bind);
      break;
    case RunMode::score:
      need(!report_path.empty(), "a report is required");
      need(!scenario_path.empty(), "--scenario is required");
      break;
    case RunMode::analyze:
      need(!results_dir.empty(), "a results directory is required");
      break;
  }
  need(speed > 0.0, "--speed must be positive");
  need(attempt_index >= 1, "attempt index starts at 1");
  link(0).validate();
}

LinkProfile RunConfig::link(std::uint64_t s) const { return LinkProfile{latency_ms, jitter_ms, loss, s}; }

std::pair<std::string, std::uint16_t> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw Error("bind address must look like host:port, got '" + bind + "'");
  }
  const std::string host = bind.substr(0, colon);
  const std::string port = bind.substr(colon + 1);
  std::size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || value > 65535) throw Error("invalid port in bind address '" + bind + "'");
  return {host, static_cast<std::uint16_t>(value)};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

// --- headless -------------------------------------------------------------------

HeadlessOutput run_headless_in_memory(const Scenario& scenario, const RunConfig& cfg) {
  const std::uint64_t seed = cfg.seed.value_or(scenario.seed);
  SimConfig sim_cfg;
  sim_cfg.stop_on_patrol_complete = true;
  HubOptions opts;
  opts.link = cfg.link(seed);
  opts.technology = cfg.technology;
  opts.attempt_index = cfg.attempt_index;
  opts.dt_s = sim_cfg.dt_s;

  MissionHub hub(scenario, opts);
  for (int i = 1; i <= cfg.virtual_consoles; ++i) hub.connect_console("console-" + std::to_string(i));

  HeadlessOutput out;
  std::ostringstream events;
  Simulator sim(scenario, sim_cfg);
  auto feed = [&](const std::vector<SimEvent>& batch, std::int64_t tick) {
    for (const auto& e : batch) {
      events << encode_event_line(e);
      if (std::holds_alternative<PatrolCompleteEvent>(e.body)) {
        out.summary.patrol_complete_s = static_cast<double>(e.tick) * sim_cfg.dt_s;
      }
    }
    out.summary.events += batch.size();
    const double now_ms = static_cast<double>(tick) * sim_cfg.dt_s * 1000.0;
    hub.on_sim_events(batch, now_ms);
    hub.take_due(now_ms);  // the in-process consoles accept everything
  };

  hub.start_session(0.0);
  feed(sim.start(), 0);
  while (!sim.stopped()) {
    auto batch = sim.step();
    feed(batch, sim.state().tick);
  }
  hub.take_all();

  std::ostringstream deliveries;
  for (const auto& r : hub.audit()) {
    deliveries << to_json(r).dump() << '\n';
    if (!r.deliver_ms) ++out.summary.dropped;
    if (!r.via_hub) ++out.summary.hub_bypass;
  }
  out.summary.deliveries = hub.audit().size();
  out.summary.final_tick = sim.state().tick;
  out.events_log = events.str();
  out.deliveries_log = deliveries.str();
  out.session_record = hub.session_record();
  out.session_record["seed"] = seed;
  return out;
}

HeadlessResult run_headless(const RunConfig& cfg) {
  cfg.validate();
  const Scenario scenario = load_scenario(cfg.scenario_path);
  HeadlessOutput run = run_headless_in_memory(scenario, cfg);

  const fs::path dir = cfg.out.empty() ? fs::path("out") : cfg.out;
  HeadlessResult r = run.summary;
  r.events_log = dir / "events.jsonl";
  r.deliveries_log = dir / "deliveries.jsonl";
  r.session_record = dir / "session_record.json";
  write_text(r.events_log, run.events_log);
  write_text(r.deliveries_log, run.deliveries_log);
  write_text(r.session_record, run.session_record.dump(2) + "\n");
  spdlog::info("headless run of '{}' finished at tick {} ({} events, {} deliveries, {} dropped)", scenario.id,
               r.final_tick, r.events, r.deliveries, r.dropped);
  return r;
}

// --- replay ---------------------------------------------------------------------

double SteadyClock::now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SteadyClock::sleep_until(double t_s) {
  const double wait = t_s - now_s();
  if (wait > 0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

ReplayStats replay(const std::vector<SimEvent>& events, const Scenario& scenario, double speed, Clock& clock,
                   const DeliverySink& sink, HubOptions options, int consoles) {
  if (!(speed > 0.0)) throw Error("replay speed must be positive");
  options.replay = true;
  MissionHub hub(scenario, options);
  for (int i = 1; i <= consoles; ++i) hub.connect_console("console-" + std::to_string(i));

  ReplayStats stats;
  auto flush = [&](std::vector<ScheduledDelivery> due) {
    for (const auto& d : due) {
      if (d.delivery.to == kSimId) continue;  // the replayed sim takes no commands
      ++stats.messages;
      if (sink) sink(d);
    }
  };

  const double t0 = clock.now_s();
  if (!events.empty()) {
    hub.start_session(0.0);
    std::size_t i = 0;
    while (i < events.size()) {
      const std::int64_t tick = events[i].tick;
      std::vector<SimEvent> batch;
      for (; i < events.size() && events[i].tick == tick; ++i) batch.push_back(events[i]);
      const double sim_s = static_cast<double>(tick) * options.dt_s;
      clock.sleep_until(t0 + sim_s / speed);
      hub.on_sim_events(batch, sim_s * 1000.0);
      flush(hub.take_due(sim_s * 1000.0));
      stats.last_tick = tick;
    }
  }
  flush(hub.take_all());
  stats.events = events.size();
  stats.duration_s = clock.now_s() - t0;
  stats.session_record = hub.session_record();
  return stats;
}

// --- evaluation -------------------------------------------------------------------

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + " is not valid JSON: " + e.what());
  }
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

ScoreCard score_file(const fs::path& report_path, const fs::path& scenario_path) {
  const Scenario scenario = load_scenario(scenario_path);
  json doc = read_json(report_path);
  if (doc.is_object() && doc.value("kind", "") == "session_record") {
    if (!doc.contains("report") || doc["report"].is_null()) {
      throw EvaluationError(report_path.string() + ": session record carries no report");
    }
    json report = doc["report"];
    if (!report.contains("technology") && doc.contains("technology")) report["technology"] = doc["technology"];
    if (!report.contains("attempt_index") && doc.contains("attempt_index")) report["attempt_index"] = doc["attempt_index"];
    doc = report;
  }
  try {
    return score_report(report_from_json(doc), scenario);
  } catch (const EvaluationError& e) {
    throw EvaluationError(report_path.string() + ": " + e.what());
  }
}

Analysis analyze_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("results directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ScoreCard> cards;
  std::vector<QuestionnaireResponse> responses;
  std::optional<std::map<std::string, double>> published_means;
  std::vector<ConsistencyCheck> checks;
  json sources = json::object();
  for (const auto& path : files) {
    const json doc = read_json(path);
    const std::string kind = doc.is_object() ? doc.value("kind", "") : "";
    try {
      if (kind == "scorecard") {
        cards.push_back(scorecard_from_json(doc));
      } else if (kind == "session_record") {
        if (!doc.contains("scorecard") || doc["scorecard"].is_null()) continue;
        cards.push_back(scorecard_from_json(doc["scorecard"]));
      } else if (kind == "questionnaire_response") {
        responses.push_back(questionnaire_from_json(doc));
      } else if (kind == "group_means") {
        auto c = check_group_means(doc);
        checks.insert(checks.end(), c.begin(), c.end());
      } else if (kind == "question_means") {
        published_means = doc.at("means").get<std::map<std::string, double>>();
      } else {
        spdlog::debug("skipping {} (kind '{}')", path.string(), kind);
        continue;
      }
    } catch (const json::exception& e) {
      throw EvaluationError(path.string() + ": " + e.what());
    } catch (const EvaluationError& e) {
      throw EvaluationError(path.string() + ": " + e.what());
    }
    sources[kind] = sources.value(kind, 0) + 1;
  }

  json doc = {{"kind", "analysis"}, {"sources", sources}};
  std::ostringstream table;

  json groups = json::array();
  if (!cards.empty()) {
    const auto stats = aggregate_results(group_scorecards(cards));
    std::set<std::string> techs;
    table << "group            n    mean     min      q1  median      q3     max\n";
    for (const auto& g : stats) {
      groups.push_back(to_json(g));
      techs.insert(g.key.technology);
      char line[160];
      std::snprintf(line, sizeof line, "%-4s attempt %d %4d %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f\n",
                    g.key.technology.c_str(), g.key.attempt, g.n, g.mean, g.summary.min, g.summary.q1,
                    g.summary.median, g.summary.q3, g.summary.max);
      table << line;
    }
    json means = json::object();
    json improvements = json::object();
    for (const auto& t : techs) {
      means[t] = technology_mean(stats, t);
      table << "technology " << t << " mean " << fmt2(means[t].get<double>()) << "%\n";
      bool both = false;
      for (const auto& g : stats) both |= g.key.technology == t && g.key.attempt == 2;
      if (!both) continue;
      for (Section s : kAllSections) {
        try {
          improvements[t][std::string(to_string(s))] = section_improvement(stats, t, s);
        } catch (const EvaluationError&) {
          // attempt 1 missing for this technology
        }
      }
    }
    doc["technology_means"] = means;
    doc["section_improvements"] = improvements;
  }
  doc["groups"] = groups;

  json consistency = json::array();
  if (!checks.empty()) table << "published figure                    computed  published  status\n";
  for (const auto& c : checks) {
    consistency.push_back(to_json(c));
    char line[160];
    std::snprintf(line, sizeof line, "%-34s %9s %10s  %s\n", c.name.c_str(),
                  c.verifiable ? fmt2(c.computed).c_str() : "n/a",
                  c.published ? fmt2(*c.published).c_str() : "-",
                  !c.verifiable ? "unverifiable" : (c.consistent ? "ok" : "INCONSISTENT"));
    table << line;
  }
  doc["consistency"] = consistency;

  std::map<std::string, double> means = question_means(responses);
  if (published_means) {
    for (const auto& [q, v] : *published_means) means[q] = v;
  }
  json hypotheses = json::array();
  if (!means.empty()) {
    for (const auto& v : validate_hypotheses(means)) {
      hypotheses.push_back(to_json(v));
      table << v.hypothesis << (v.pass ? " PASS" : " FAIL") << "\n";
      for (const auto& c : v.criteria) {
        table << "  " << c.expression << "  observed " << fmt2(c.observed) << (c.pass ? "  ok" : "  FAILS") << "\n";
      }
    }
  }
  doc["question_means"] = means;
  doc["hypotheses"] = hypotheses;
  return {doc, table.str()};
}

}  // namespace swarm_ops
