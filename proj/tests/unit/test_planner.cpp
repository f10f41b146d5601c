#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "swarm_ops/error.hpp"
#include "swarm_ops/planner.hpp"
#include "test_support.hpp"

using namespace swarm_ops;

namespace {

const GeoCoordinate kOrigin{45.5017, -73.5617, 0.0};

GeoCoordinate at(double east, double north) { return local_to_geo(kOrigin, {east, north, 10.0}); }

std::vector<DroneSlot> four_drones() {
  return {{1, at(0, 0)}, {2, at(0, 0)}, {3, at(0, 0)}, {4, at(0, 0)}};
}

std::vector<std::size_t> sorted_loads(const Allocation& a) {
  std::vector<std::size_t> loads;
  for (const auto& [id, idx] : a) loads.push_back(idx.size());
  std::sort(loads.rbegin(), loads.rend());
  return loads;
}

std::map<NotificationKind, int> count_kinds(const std::vector<NotificationEvent>& n) {
  std::map<NotificationKind, int> out;
  for (const auto& e : n) ++out[e.kind];
  return out;
}

// Runs a planner fed by the simulator until the session stops; an optional
// operator stop tick ends it early.
MissionPlanner drive(const Scenario& s, std::optional<std::int64_t> stop_at = std::nullopt) {
  MissionPlanner planner(s);
  Simulator sim(s);
  for (const auto& e : sim.start()) planner.on_sim_event(e);
  planner.start(0);
  while (planner.session().phase == Phase::running) {
    if (stop_at && sim.state().tick == *stop_at) {
      planner.stop(sim.state().tick);
      sim.request_stop();
      break;
    }
    for (const auto& e : sim.step()) planner.on_sim_event(e);
    planner.advance(sim.state().tick);
  }
  return planner;
}

}  // namespace

TEST(Session, TransitionTable) {
  const Phase all[] = {Phase::briefing, Phase::running, Phase::stopped, Phase::reported};
  for (Phase a : all) {
    for (Phase b : all) {
      const bool legal = (a == Phase::briefing && b == Phase::running) || (a == Phase::running && b == Phase::stopped) ||
                         (a == Phase::stopped && b == Phase::reported);
      EXPECT_EQ(is_legal_transition(a, b), legal) << to_string(a) << "->" << to_string(b);
    }
  }
  MissionSession s;
  EXPECT_THROW(stop_session(s, 0), PlannerError);
  EXPECT_THROW(mark_reported(s), PlannerError);
  EXPECT_THROW(advance_session(s, 0), PlannerError);
  s = start_session(s, 0).session;
  EXPECT_THROW(start_session(s, 1), PlannerError);
}

TEST(Session, OperatorStopAtFiveForty) {
  MissionSession s = start_session(MissionSession{}, 0).session;
  auto u = stop_session(s, 3400);
  EXPECT_EQ(u.session.phase, Phase::stopped);
  ASSERT_TRUE(u.session.completion_s);
  EXPECT_DOUBLE_EQ(*u.session.completion_s, 340.0);
  ASSERT_EQ(u.notifications.size(), 1u);
  EXPECT_EQ(u.notifications[0].kind, NotificationKind::MissionStopped);
  EXPECT_NE(u.notifications[0].text.find("5:40"), std::string::npos);
}

TEST(Session, WarningThenForcedStop) {
  MissionSession s = start_session(MissionSession{}, 0).session;
  std::vector<NotificationEvent> all;
  std::int64_t warned_at = -1, stopped_at = -1;
  for (std::int64_t t = 1; s.phase == Phase::running; ++t) {
    auto u = advance_session(s, t);
    s = u.session;
    for (const auto& n : u.notifications) {
      if (n.kind == NotificationKind::TimeWarning) warned_at = t;
      if (n.kind == NotificationKind::MissionStopped) stopped_at = t;
      all.push_back(n);
    }
  }
  EXPECT_EQ(warned_at, 3000);
  EXPECT_EQ(stopped_at, 3600);
  EXPECT_EQ(count_kinds(all)[NotificationKind::TimeWarning], 1);
  EXPECT_DOUBLE_EQ(*s.completion_s, 360.0);
  EXPECT_EQ(s.stop_reason, "limit");
}

TEST(Allocation, SingleWaypoint) {
  const auto a = allocate_waypoints({at(5, 5)}, four_drones());
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(is_partition(a, 1));
}

TEST(Allocation, Errors) {
  EXPECT_THROW(allocate_waypoints({}, four_drones()), PlannerError);
  EXPECT_THROW(allocate_waypoints({at(0, 0)}, {}), PlannerError);
}

TEST(Allocation, SixOverFourIsTwoTwoOneOne) {
  std::vector<GeoCoordinate> w;
  for (int i = 0; i < 6; ++i) w.push_back(at(10.0 * i, -5.0 * i));
  const auto a = allocate_waypoints(w, four_drones());
  EXPECT_EQ(sorted_loads(a), (std::vector<std::size_t>{2, 2, 1, 1}));
  EXPECT_TRUE(is_partition(a, 6));
}

TEST(Allocation, MutuallyNearestPairs) {
  const std::vector<DroneSlot> drones{{1, at(-100, 100)}, {2, at(100, 100)}, {3, at(100, -100)}, {4, at(-100, -100)}};
  // Each waypoint sits next to one drone; list order is shuffled.
  const std::vector<GeoCoordinate> w{at(95, -98), at(-97, 103), at(-101, -99), at(102, 96)};
  const std::map<std::size_t, int> expected{{0, 3}, {1, 1}, {2, 4}, {3, 2}};
  const auto a = allocate_waypoints(w, drones);
  for (const auto& [id, idx] : a) {
    ASSERT_EQ(idx.size(), 1u);
    EXPECT_EQ(expected.at(idx[0]), id);
  }
}

TEST(Allocation, TieGoesToLowerId) {
  const std::vector<DroneSlot> drones{{3, at(-10, 0)}, {2, at(10, 0)}};
  const auto a = allocate_waypoints({at(0, 20)}, drones);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.begin()->first, 2);
}

TEST(Allocation, RandomSetsArePartitions) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 25;
    std::vector<GeoCoordinate> w;
    const bool colocated = trial % 4 == 0;
    const GeoCoordinate spot = at(u(rng), u(rng));
    for (std::size_t i = 0; i < n; ++i) w.push_back(colocated ? spot : at(u(rng), u(rng)));
    std::vector<DroneSlot> drones;
    for (int id = 1; id <= 4; ++id) drones.push_back({id, at(u(rng), u(rng))});
    const auto a = allocate_waypoints(w, drones);
    ASSERT_TRUE(is_partition(a, n));
    // The balance rule keeps loads within one whatever the geometry.
    std::vector<std::size_t> loads(4, 0);
    for (const auto& [id, idx] : a) loads[id - 1] = idx.size();
    const auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
    ASSERT_LE(*hi - *lo, 1u);
  }
}

TEST(Allocation, PartitionCheckerRejectsBadAssignments) {
  EXPECT_FALSE(is_partition({{1, {0, 1}}, {2, {1}}}, 2));  // overlap
  EXPECT_FALSE(is_partition({{1, {0}}}, 2));                // incomplete
  EXPECT_FALSE(is_partition({{1, {1, 0}}}, 2));             // out of order
  EXPECT_TRUE(is_partition({{1, {0, 2}}, {2, {1}}}, 3));
}

TEST(Mission, CreateErrors) {
  const Scenario s = test::paper_scenario();
  const SwarmState swarm = init_swarm(s);
  MissionSession session;
  EXPECT_THROW(create_mission("m", {at(1, 1)}, swarm, s, session, 0), PlannerError);
  session = start_session(session, 0).session;
  EXPECT_THROW(create_mission("m", {}, swarm, s, session, 0), PlannerError);
  try {
    create_mission("m", {at(1, 1), at(900, 0)}, swarm, s, session, 0);
    FAIL();
  } catch (const PlannerError& e) {
    EXPECT_NE(std::string(e.what()).find("waypoint 1"), std::string::npos) << e.what();
  }
  const MissionPlan p = create_mission("m", {at(1, 1), at(30, 0), at(0, 30)}, swarm, s, session, 5);
  EXPECT_TRUE(is_partition(p.allocation, 3));
  std::size_t total = 0;
  for (const auto& [id, q] : p.assignment) total += q.size();
  EXPECT_EQ(total, 3u);
}

TEST(Planner, MarksCopyTelemetryAtTheirTick) {
  const Scenario s = test::paper_scenario();
  MissionPlanner planner(s);
  Simulator sim(s);
  for (const auto& e : sim.start()) planner.on_sim_event(e);
  planner.start(0);
  std::map<std::int64_t, GeoCoordinate> drone3;
  for (int i = 0; i < 250; ++i) {
    for (const auto& e : sim.step()) {
      planner.on_sim_event(e);
      if (auto t = std::get_if<TelemetryEvent>(&e.body); t && t->drone_id == 3) drone3[e.tick] = t->position;
    }
    if (sim.state().tick == 120 || sim.state().tick == 240) planner.mark_target(3, sim.state().tick);
  }
  ASSERT_EQ(planner.marks().size(), 2u);
  for (const auto& m : planner.marks()) EXPECT_EQ(m.position, drone3.at(m.tick));
  EXPECT_NE(planner.marks()[0].position, planner.marks()[1].position);
  EXPECT_THROW(planner.mark_target(7, 250), PlannerError);
  planner.stop(250);
  EXPECT_THROW(planner.mark_target(3, 251), PlannerError);
}

TEST(Planner, FocusIsSingle) {
  MissionPlanner planner(test::paper_scenario());
  EXPECT_EQ(planner.select_drone(2).focused, 2);
  EXPECT_EQ(planner.select_drone(3).focused, 3);
  EXPECT_EQ(planner.focus().focused, 3);
  EXPECT_FALSE(planner.select_drone(std::nullopt).focused);
  EXPECT_THROW(planner.select_drone(5), PlannerError);
}

TEST(Planner, NotificationsUniquePerSession) {
  const MissionPlanner p = drive(test::paper_scenario());
  auto kinds = count_kinds(p.notifications());
  EXPECT_EQ(kinds[NotificationKind::MissionStarted], 1);
  EXPECT_EQ(kinds[NotificationKind::PatrolComplete], 1);
  EXPECT_EQ(kinds[NotificationKind::MissionStopped], 1);
  EXPECT_EQ(kinds[NotificationKind::TimeWarning], 1);
  EXPECT_EQ(kinds[NotificationKind::LapComplete], 2);
  EXPECT_EQ(p.session().stop_reason, "limit");
  EXPECT_DOUBLE_EQ(*p.session().completion_s, 360.0);
}

TEST(Planner, EarlyStopRecordsCompletion) {
  MissionPlanner p = drive(test::paper_scenario(), 3400);
  EXPECT_EQ(p.session().phase, Phase::stopped);
  EXPECT_DOUBLE_EQ(*p.session().completion_s, 340.0);
  EXPECT_EQ(count_kinds(p.notifications())[NotificationKind::MissionStopped], 1);
  p.submit_report({{"completion_s", 340.0}});
  EXPECT_EQ(p.session().phase, Phase::reported);
  const auto rec = p.session_record();
  EXPECT_EQ(rec["kind"], "session_record");
  EXPECT_EQ(rec["phase"], "reported");
  EXPECT_EQ(rec["stop_reason"], "operator");
  EXPECT_EQ(rec["technology"], "PC");
  EXPECT_EQ(rec["report"]["completion_s"], 340.0);
  EXPECT_THROW(p.submit_report({}), PlannerError);
}
