#include <gtest/gtest.h>

#include <fstream>

#include "swarm_ops/error.hpp"
#include "swarm_ops/scenario.hpp"
#include "test_support.hpp"

using namespace swarm_ops;
using nlohmann::json;

TEST(Scenario, LoadsBundledScenarioA) {
  const Scenario s = load_scenario(test::scenario_path("scenario-A.json"));
  EXPECT_EQ(s.id, "scenario-A");
  EXPECT_EQ(s.building.floors, 4);
  EXPECT_EQ(s.fire.floor, 3);
  EXPECT_EQ(s.fire.sector, Sector::NE);
  EXPECT_EQ(s.persons.size(), 7u);
  EXPECT_EQ(s.adult_count(), 5);
  EXPECT_EQ(s.child_count(), 2);
  EXPECT_EQ(s.patrol.laps, 2);
  EXPECT_DOUBLE_EQ(s.patrol.duration_s, 270.0);
  EXPECT_DOUBLE_EQ(s.mission_limit_s, 360.0);

  // Field-by-field against the file's own contents.
  std::ifstream in(test::scenario_path("scenario-A.json"));
  const json doc = json::parse(in);
  for (std::size_t i = 0; i < s.persons.size(); ++i) {
    EXPECT_EQ(s.persons[i].id, doc["persons"][i]["id"]);
    EXPECT_EQ(to_string(s.persons[i].kind), doc["persons"][i]["kind"].get<std::string>());
    EXPECT_EQ(s.persons[i].floor, doc["persons"][i]["floor"]);
    EXPECT_EQ(to_string(s.persons[i].sector), doc["persons"][i]["sector"].get<std::string>());
  }
}

TEST(Scenario, BundledConfigurationsDiffer) {
  const Scenario a = load_scenario(test::scenario_path("scenario-A.json"));
  const Scenario b = load_scenario(test::scenario_path("scenario-B.json"));
  EXPECT_FALSE(a.fire.floor == b.fire.floor && a.fire.sector == b.fire.sector);
  bool roster_differs = a.persons.size() != b.persons.size();
  for (std::size_t i = 0; !roster_differs && i < a.persons.size(); ++i) {
    roster_differs = a.persons[i].floor != b.persons[i].floor || a.persons[i].sector != b.persons[i].sector ||
                     a.persons[i].kind != b.persons[i].kind;
  }
  EXPECT_TRUE(roster_differs);
}

TEST(Scenario, FireFloorZeroRejected) {
  json doc = to_json(test::paper_scenario());
  doc["fire"]["floor"] = 0;
  try {
    scenario_from_json(doc);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.field(), "fire.floor");
    EXPECT_NE(std::string(e.what()).find("floor out of range"), std::string::npos);
  }
}

TEST(Scenario, ErrorsNameTheField) {
  auto expect_field = [](json doc, const std::string& field) {
    try {
      scenario_from_json(doc);
      ADD_FAILURE() << "no error for " << field;
    } catch (const ScenarioError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
    }
  };
  const json base = to_json(test::paper_scenario());
  json d = base;
  d["persons"][1]["sector"] = "UP";
  expect_field(d, "persons[1].sector");
  d = base;
  d["persons"][0]["floor"] = 9;
  expect_field(d, "persons[0].floor");
  d = base;
  d["persons"][1]["id"] = d["persons"][0]["id"];
  expect_field(d, "persons[1].id");
  d = base;
  d.erase("patrol");
  expect_field(d, "patrol");
  d = base;
  d["building"]["orientation"] = "rotated";
  expect_field(d, "building.orientation");
  d = base;
  d["seed"] = -1;
  expect_field(d, "seed");
  d = base;
  d["mission_limit_s"] = 100.0;
  expect_field(d, "mission_limit_s");
}

TEST(Scenario, JsonRoundTrip) {
  const Scenario s = load_scenario(test::scenario_path("scenario-B.json"));
  const Scenario back = scenario_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
}

TEST(Scenario, MissingFileIsAnError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(Scenario, DerivedPatrolQuantities) {
  const Scenario s = test::paper_scenario();
  EXPECT_DOUBLE_EQ(s.orbit_radius(), 15.0 + 10.0);
  EXPECT_NEAR(s.angular_rate() * 135.0, 2 * M_PI, 1e-12);
}
