#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "swarm_ops/error.hpp"
#include "swarm_ops/runner.hpp"
#include "swarm_ops/server.hpp"
#include "swarm_ops/sim_events.hpp"

namespace fs = std::filesystem;
using namespace swarm_ops;

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

int fail(const std::string& what, int code = 1) {
  std::cerr << "swarm-ops: error: " << one_line(what) << '\n';
  return code;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("swarm-ops");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SWARM_OPS_LOG"); env && *env) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps anything unknown to "off"; only honour that when asked.
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      throw Error(std::string("SWARM_OPS_LOG must be one of trace, debug, info, warn, error, critical, off; got '") +
                  env + "'");
    }
    spdlog::set_level(level);
  }
}

struct NetworkFlags {
  std::optional<std::uint64_t> seed;
  double loss = 0.0;
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
};

void add_network(CLI::App* app, NetworkFlags& n) {
  app->add_option("--seed", n.seed, "Run seed (defaults to the scenario seed)");
  app->add_option("--loss", n.loss, "Per-delivery loss probability on console links, in [0, 1)");
  app->add_option("--latency-ms", n.latency_ms, "Fixed latency on console links");
  app->add_option("--jitter-ms", n.jitter_ms, "Uniform extra latency in [0, jitter] on console links");
}

Technology technology_flag(const std::string& text) {
  auto t = parse_technology(text);
  if (!t) throw Error("--technology must be PC or AR, got '" + text + "'");
  return *t;
}

int run_server(ServerOptions opts, const Scenario& scenario) {
  opts.handle_signals = true;
  MissionServer server(scenario, std::move(opts));
  server.start();
  std::cout << "listening on port " << server.port() << std::endl;
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drone swarm mission operations: simulate, serve, replay and score"};
  app.set_config("--config", "", "TOML or INI file with default flag values; flags win");
  app.require_subcommand(1);

  std::string scenario_path, bind, technology = "PC", out;
  NetworkFlags net;
  double speed = 1.0;
  int attempt = 1, consoles = 1;
  bool autostart = false, exit_when_done = false;
  std::string log_path, report_path, results_dir;

  auto* run = app.add_subcommand("run", "Headless patrol; writes events.jsonl, deliveries.jsonl, session_record.json");
  run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  add_network(run, net);
  run->add_option("--out", out, "Output directory")->default_val("out");
  run->add_option("--technology", technology, "Study technology label (PC or AR)");
  run->add_option("--attempt", attempt, "Study attempt index");
  run->add_option("--consoles", consoles, "In-process consoles receiving deliveries");

  auto* serve = app.add_subcommand("serve", "Serve the planner hub to consoles over TCP and WebSocket");
  serve->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  serve->add_option("--bind", bind, "host:port to listen on (port 0 picks one)")->required();
  add_network(serve, net);
  serve->add_option("--out", out, "Directory for session_record.json")->default_val("out");
  serve->add_option("--speed", speed, "Simulated seconds per wall second");
  serve->add_flag("--autostart", autostart, "Start the mission without waiting for a console");
  serve->add_flag("--exit-when-done", exit_when_done, "Exit once the report has been scored");
  serve->add_option("--technology", technology, "Study technology label (PC or AR)");
  serve->add_option("--attempt", attempt, "Study attempt index");

  auto* rep = app.add_subcommand("replay", "Re-emit a recorded event log at scaled timing");
  rep->add_option("log", log_path, "events.jsonl from a previous run")->required();
  rep->add_option("--scenario", scenario_path, "Scenario the log was recorded with")->required();
  rep->add_option("--speed", speed, "Replay speed multiplier");
  rep->add_option("--bind", bind, "Serve the replay to consoles instead of printing it");
  rep->add_option("--out", out, "Directory for the replay session record");
  rep->add_flag("--exit-when-done", exit_when_done, "When serving, exit after the last event");
  add_network(rep, net);

  auto* score = app.add_subcommand("score", "Score a mission report against its scenario");
  score->add_option("report", report_path, "Mission report or session record")->required();
  score->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  score->add_option("--out", out, "Write the scorecard here instead of stdout");

  auto* analyze = app.add_subcommand("analyze", "Aggregate scorecards, questionnaires and published means");
  analyze->add_option("results", results_dir, "Directory of result documents")->required();
  analyze->add_option("--out", out, "Directory for analysis.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(e.what(), e.get_exit_code() == 0 ? 2 : e.get_exit_code());
  }

  try {
    setup_logging();

    RunConfig cfg;
    cfg.scenario_path = scenario_path;
    cfg.seed = net.seed;
    cfg.bind = bind;
    cfg.loss = net.loss;
    cfg.latency_ms = net.latency_ms;
    cfg.jitter_ms = net.jitter_ms;
    cfg.out = out;
    cfg.speed = speed;
    cfg.autostart = autostart;
    cfg.exit_when_done = exit_when_done;
    cfg.technology = technology_flag(technology);
    cfg.attempt_index = attempt;
    cfg.virtual_consoles = consoles;
    cfg.log_path = log_path;
    cfg.report_path = report_path;
    cfg.results_dir = results_dir;

    if (*run) {
      cfg.mode = RunMode::headless;
      const HeadlessResult r = run_headless(cfg);
      std::cout << "final tick " << r.final_tick;
      if (r.patrol_complete_s) std::cout << ", patrol complete at " << *r.patrol_complete_s << " s";
      std::cout << ", " << r.events << " events, " << r.deliveries << " deliveries (" << r.dropped
                << " dropped), logs in " << cfg.out.string() << '\n';
      return 0;
    }

    if (*serve || (*rep && !bind.empty())) {
      cfg.mode = *serve ? RunMode::serve : RunMode::replay;
      cfg.validate();
      const Scenario scenario = load_scenario(cfg.scenario_path);
      const auto [host, port] = parse_bind(cfg.bind);
      ServerOptions opts;
      opts.host = host;
      opts.port = port;
      opts.hub.link = cfg.link(cfg.seed.value_or(scenario.seed));
      opts.hub.technology = cfg.technology;
      opts.hub.attempt_index = cfg.attempt_index;
      opts.speed = cfg.speed;
      opts.autostart = cfg.autostart;
      opts.exit_when_done = cfg.exit_when_done;
      opts.out = cfg.out;
      if (*rep) opts.replay_events = read_replay_log(cfg.log_path);
      return run_server(std::move(opts), scenario);
    }

    if (*rep) {
      cfg.mode = RunMode::replay;
      cfg.validate();
      const Scenario scenario = load_scenario(cfg.scenario_path);
      const auto events = read_replay_log(cfg.log_path);
      HubOptions hub;
      hub.link = cfg.link(cfg.seed.value_or(scenario.seed));
      SteadyClock clock;
      const ReplayStats stats = replay(events, scenario, cfg.speed, clock, [](const ScheduledDelivery& d) {
        if (d.delivery.to == "console-1") std::cout << encode_message(d.delivery.message) << std::flush;
      }, hub);
      if (!cfg.out.empty()) write_text(cfg.out / "session_record.json", stats.session_record.dump(2) + "\n");
      spdlog::info("replayed {} events in {:.2f} s", stats.events, stats.duration_s);
      return 0;
    }

    if (*score) {
      cfg.mode = RunMode::score;
      cfg.validate();
      const ScoreCard card = score_file(cfg.report_path, cfg.scenario_path);
      const std::string doc = to_json(card).dump(2) + "\n";
      if (cfg.out.empty()) {
        std::cout << doc;
      } else {
        write_text(cfg.out, doc);
      }
      return 0;
    }

    if (*analyze) {
      cfg.mode = RunMode::analyze;
      cfg.validate();
      const Analysis a = analyze_directory(cfg.results_dir);
      if (!cfg.out.empty()) write_text(cfg.out / "analysis.json", a.document.dump(2) + "\n");
      std::cout << a.table;
      return 0;
    }
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return fail("no subcommand given");
}
