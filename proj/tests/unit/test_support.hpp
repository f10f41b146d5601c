#pragma once

#include <filesystem>
#include <string>

#include "swarm_ops/scenario.hpp"

namespace swarm_ops::test {

inline std::filesystem::path source_dir() { return SWARM_OPS_SOURCE_DIR; }

inline std::filesystem::path scenario_path(const std::string& name) {
  return source_dir() / "scenarios" / name;
}

inline std::filesystem::path fixture_path(const std::string& name) {
  return source_dir() / "tests" / "fixtures" / name;
}

/// Paper timing (2 laps in 270 s, 360 s limit) with a small known roster.
inline Scenario paper_scenario() {
  Scenario s;
  s.id = "unit";
  s.fire = {3, Sector::NE};
  s.persons = {{"a1", PersonKind::adult, 2, Sector::N},
               {"a2", PersonKind::adult, 2, Sector::NW},
               {"a3", PersonKind::adult, 1, Sector::S},
               {"c1", PersonKind::child, 3, Sector::NE},
               {"c2", PersonKind::child, 4, Sector::W}};
  s.seed = 1;
  return s;
}

}  // namespace swarm_ops::test
