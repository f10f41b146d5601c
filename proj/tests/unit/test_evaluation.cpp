#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "swarm_ops/error.hpp"
#include "swarm_ops/evaluation.hpp"
#include "test_support.hpp"

using namespace swarm_ops;
using nlohmann::json;

namespace {

const FireSource kFire{3, Sector::NE};

// Brute-force assignment oracle: tries every injective map of entries into
// persons (or unmatched) and returns the best total.
double brute_force_best(const std::vector<PersonEntry>& entries, const std::vector<Person>& truth) {
  std::vector<bool> used(truth.size(), false);
  std::function<double(std::size_t)> go = [&](std::size_t i) -> double {
    if (i == entries.size()) return 0.0;
    double best = go(i + 1);
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      // Independent restatement of the entry rubric.
      double pts = 0.0;
      if (entries[i].floor == truth[j].floor) {
        if (!entries[i].sector) {
          pts = 3.0;
        } else {
          const Sector a = *entries[i].sector, b = truth[j].sector;
          bool near = a == b;
          if (a != Sector::CENTER && b != Sector::CENTER) {
            const int d = std::abs(static_cast<int>(a) - static_cast<int>(b));
            near = std::min(d, 8 - d) <= 1;
          }
          pts = near ? 4.0 : 2.0;
        }
      }
      if (entries[i].kind == truth[j].kind) pts += 0.5;
      best = std::max(best, pts + go(i + 1));
      used[j] = false;
    }
    return best;
  };
  return go(0);
}

// Sorted-order oracle for type-7 quantiles, written from the definition.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const double lo = std::floor(pos), hi = std::ceil(pos);
  return v[static_cast<std::size_t>(lo)] + (pos - lo) * (v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)]);
}

MissionReport perfect_report(const Scenario& s) {
  MissionReport r;
  r.fire_claim = LocationClaim{s.fire.floor, s.fire.sector};
  r.adult_count = s.adult_count();
  r.child_count = s.child_count();
  for (const auto& p : s.persons) r.person_entries.push_back({p.kind, p.floor, p.sector});
  r.completion_s = 300.0;
  return r;
}

json load_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::map<std::string, double> all_means(double v) {
  std::map<std::string, double> m;
  for (const char* q : {"Q1.1", "Q1.2", "Q1.3", "Q1.4", "Q1.5", "Q1.6", "Q2.1", "Q3.1", "Q3.2", "Q3.3", "Q4.2", "Q4.3"}) {
    m[q] = v;
  }
  return m;
}

}  // namespace

// Fire location rows.
TEST(Rubric, FireRows) {
  EXPECT_EQ(score_fire(LocationClaim{3, Sector::NE}, kFire), 4);
  EXPECT_EQ(score_fire(LocationClaim{3, std::nullopt}, kFire), 3);
  EXPECT_EQ(score_fire(LocationClaim{3, Sector::SW}, kFire), 2);
  EXPECT_EQ(score_fire(std::nullopt, kFire), 1);
  EXPECT_EQ(score_fire(LocationClaim{2, Sector::NE}, kFire), 0);
  EXPECT_EQ(score_fire(LocationClaim{3, Sector::E}, kFire), 4);
}

// Count rows against five people.
TEST(Rubric, CountRows) {
  EXPECT_EQ(score_count(5, 5), 4);
  EXPECT_EQ(score_count(4, 5), 3);
  EXPECT_EQ(score_count(6, 5), 3);
  EXPECT_EQ(score_count(3, 5), 2);
  EXPECT_EQ(score_count(7, 5), 0);
  EXPECT_EQ(score_count(std::nullopt, 5), 1);
}

TEST(Rubric, PersonRows) {
  const std::vector<Person> one{{"p", PersonKind::adult, 2, Sector::NW}};
  const auto exact = score_person_entries({{PersonKind::adult, 2, Sector::NW}}, one);
  EXPECT_DOUBLE_EQ(exact.entry_pts[0], 4.5);
  EXPECT_DOUBLE_EQ(exact.unclamped_pts, 4.5);
  EXPECT_DOUBLE_EQ(exact.section_pts, 4.0);
  EXPECT_DOUBLE_EQ(score_person_entries({}, one).section_pts, 1.0);

  const std::vector<Person> two{{"a", PersonKind::adult, 1, Sector::S}, {"c", PersonKind::child, 4, Sector::E}};
  const auto paired = score_person_entries({{PersonKind::child, 4, Sector::E}, {PersonKind::adult, 1, Sector::S}}, two);
  EXPECT_EQ(paired.matching, (std::vector<int>{1, 0}));
  EXPECT_DOUBLE_EQ(paired.section_pts, 4.0);
}

TEST(Rubric, TimeRows) {
  EXPECT_EQ(score_time(340.0, 360.0), 1);
  EXPECT_EQ(score_time(360.0, 360.0), 0);
  EXPECT_EQ(score_time(359.9, 360.0), 1);
  EXPECT_THROW(score_time(360.1, 360.0), EvaluationError);
}

TEST(Rubric, ExtraEntriesScoreZero) {
  const std::vector<Person> one{{"p", PersonKind::child, 3, Sector::N}};
  const auto r = score_person_entries({{PersonKind::child, 3, Sector::N}, {PersonKind::child, 3, Sector::N}}, one);
  EXPECT_EQ(r.matching, (std::vector<int>{0, -1}));
  EXPECT_DOUBLE_EQ(r.unclamped_pts, 4.5 / 2);
}

TEST(Rubric, TieGoesToLowestPersonIndex) {
  const std::vector<Person> twins{{"x", PersonKind::adult, 2, Sector::N}, {"y", PersonKind::adult, 2, Sector::N}};
  const auto r = score_person_entries({{PersonKind::adult, 2, Sector::N}}, twins);
  EXPECT_EQ(r.matching, (std::vector<int>{0}));
}

TEST(ScoreReport, PerfectIsSeventeen) {
  const Scenario s = test::paper_scenario();
  const ScoreCard c = score_report(perfect_report(s), s);
  EXPECT_DOUBLE_EQ(c.total_pts, 17.0);
  EXPECT_DOUBLE_EQ(c.percent, 100.0);
  EXPECT_DOUBLE_EQ(c.locations_unclamped_pts, 4.5);
}

TEST(ScoreReport, AllAbsentAtLimit) {
  const Scenario s = test::paper_scenario();
  MissionReport r;
  r.completion_s = s.mission_limit_s;
  const ScoreCard c = score_report(r, s);
  EXPECT_DOUBLE_EQ(c.total_pts, 4.0);
  EXPECT_NEAR(c.percent, 23.53, 0.005);
  EXPECT_DOUBLE_EQ(c.percent, 4.0 / 17.0 * 100.0);
}

TEST(ScoreReport, ThirteenPoints) {
  const Scenario s = test::paper_scenario();  // fire (3, NE), 3 adults, 2 children
  MissionReport r;
  r.fire_claim = LocationClaim{3, std::nullopt};
  r.adult_count = 4;
  r.child_count = 2;
  // Floor 2, sector S: only floor-2 adults qualify, neither sector is near S,
  // and the kind is wrong, so the best match is worth exactly 2.
  r.person_entries = {{PersonKind::child, 2, Sector::S}};
  r.completion_s = 340.0;
  const ScoreCard c = score_report(r, s);
  EXPECT_EQ(c.fire_pts, 3);
  EXPECT_EQ(c.adults_pts, 3);
  EXPECT_EQ(c.children_pts, 4);
  EXPECT_DOUBLE_EQ(c.locations_pts, 2.0);
  EXPECT_EQ(c.time_pts, 1);
  EXPECT_DOUBLE_EQ(c.total_pts, 13.0);
  EXPECT_NEAR(c.percent, 76.47, 0.005);
}

TEST(ScoreReport, AssignmentMatchesBruteForce) {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<Person> truth;
    const int m = 1 + static_cast<int>(rng() % 6);
    for (int j = 0; j < m; ++j) {
      truth.push_back({"p" + std::to_string(j), rng() % 2 ? PersonKind::adult : PersonKind::child,
                       1 + static_cast<int>(rng() % 3), static_cast<Sector>(rng() % 9)});
    }
    std::vector<PersonEntry> entries;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      std::optional<Sector> sec;
      if (rng() % 4) sec = static_cast<Sector>(rng() % 9);
      entries.push_back({rng() % 2 ? PersonKind::adult : PersonKind::child, 1 + static_cast<int>(rng() % 3), sec});
    }
    const auto r = score_person_entries(entries, truth);
    const double best = brute_force_best(entries, truth);
    ASSERT_NEAR(r.unclamped_pts * n, best, 1e-9) << "trial " << trial;
    // The reported matching is a valid injective assignment worth the optimum.
    std::vector<int> seen;
    double total = 0.0;
    for (std::size_t i = 0; i < r.matching.size(); ++i) {
      if (r.matching[i] < 0) continue;
      seen.push_back(r.matching[i]);
      total += score_entry(entries[i], truth[r.matching[i]]);
    }
    std::sort(seen.begin(), seen.end());
    ASSERT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
    ASSERT_NEAR(total, best, 1e-9);
  }
}

TEST(ScoreReport, TotalityAndCeiling) {
  const Scenario s = load_scenario(test::scenario_path("scenario-B.json"));
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 3000; ++trial) {
    MissionReport r;
    if (rng() % 3) r.fire_claim = LocationClaim{static_cast<int>(rng() % 6), std::nullopt};
    if (r.fire_claim && rng() % 2) r.fire_claim->sector = static_cast<Sector>(rng() % 9);
    if (rng() % 3) r.adult_count = static_cast<int>(rng() % 10);
    if (rng() % 3) r.child_count = static_cast<int>(rng() % 10);
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      std::optional<Sector> sec;
      if (rng() % 3) sec = static_cast<Sector>(rng() % 9);
      r.person_entries.push_back({rng() % 2 ? PersonKind::adult : PersonKind::child, static_cast<int>(rng() % 6), sec});
    }
    r.completion_s = (rng() % 3601) / 10.0;
    ScoreCard c;
    ASSERT_NO_THROW(c = score_report(r, s));
    ASSERT_GE(c.total_pts, 0.0);
    ASSERT_LE(c.total_pts, kMaxTotalPts);
    ASSERT_LE(c.locations_pts, 4.0);
    ASSERT_NEAR(c.percent, c.total_pts / 17.0 * 100.0, 1e-12);
  }
}

TEST(ScoreReport, ImprovingAClaimNeverLowersTotal) {
  const Scenario s = test::paper_scenario();
  MissionReport base;
  base.completion_s = 200.0;
  auto total = [&](const MissionReport& r) { return score_report(r, s).total_pts; };

  // Fire: wrong floor -> floor only -> floor + wrong sector is not an
  // improvement, so the ladder goes wrong floor -> floor only -> precise.
  MissionReport a = base, b = base, c = base;
  a.fire_claim = LocationClaim{1, Sector::NE};
  b.fire_claim = LocationClaim{3, std::nullopt};
  c.fire_claim = LocationClaim{3, Sector::NE};
  EXPECT_LE(total(a), total(b));
  EXPECT_LE(total(b), total(c));

  // Counts moving toward the truth.
  for (int claimed = 0; claimed < 3; ++claimed) {
    MissionReport lo = base, hi = base;
    lo.adult_count = claimed;
    hi.adult_count = claimed + 1;
    EXPECT_LE(total(lo), total(hi)) << claimed;
  }
  for (int claimed = 8; claimed > 3; --claimed) {
    MissionReport far = base, near = base;
    far.child_count = claimed;
    near.child_count = claimed - 1;
    EXPECT_LE(total(far), total(near)) << claimed;
  }

  // Person entries, each aimed at a distinct roster member and sitting on a
  // rung of wrong floor (an unoccupied one) -> floor only -> floor + sector.
  // Bumping one entry up a rung never lowers the optimal total.
  std::mt19937_64 rng(5);
  auto entry_at = [](const Person& p, PersonKind kind, int rung) {
    if (rung == 0) return PersonEntry{kind, 0, p.sector};
    if (rung == 1) return PersonEntry{kind, p.floor, std::nullopt};
    return PersonEntry{kind, p.floor, p.sector};
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> order(s.persons.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n = 1 + rng() % order.size();
    std::vector<int> rung(n);
    std::vector<PersonKind> kind(n);
    for (std::size_t i = 0; i < n; ++i) {
      rung[i] = static_cast<int>(rng() % 3);
      kind[i] = rng() % 4 ? s.persons[order[i]].kind : PersonKind::child;
    }
    const std::size_t k = rng() % n;
    if (rung[k] == 2) rung[k] = 1;
    MissionReport before = base, after = base;
    for (std::size_t i = 0; i < n; ++i) {
      before.person_entries.push_back(entry_at(s.persons[order[i]], kind[i], rung[i]));
      after.person_entries.push_back(entry_at(s.persons[order[i]], kind[i], rung[i] + (i == k ? 1 : 0)));
    }
    ASSERT_LE(total(before), total(after)) << "trial " << trial;
  }
}

TEST(Report, JsonRoundTripAndFieldErrors) {
  const Scenario s = test::paper_scenario();
  MissionReport r = perfect_report(s);
  r.session = "session-1";
  r.technology = "AR";
  r.attempt_index = 2;
  const MissionReport back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));

  json bad = to_json(r);
  bad["persons"][0]["floor"] = "two";
  try {
    report_from_json(bad);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("persons[0].floor"), std::string::npos) << e.what();
  }
  bad = to_json(r);
  bad["persons"][1]["sector"] = "UP";
  EXPECT_THROW(report_from_json(bad), EvaluationError);
  bad = to_json(r);
  bad.erase("completion_s");
  EXPECT_THROW(report_from_json(bad), EvaluationError);
  bad = to_json(r);
  bad["adult_count"] = -1;
  EXPECT_THROW(report_from_json(bad), EvaluationError);
}

TEST(ScoreCardJson, RoundTrip) {
  const Scenario s = test::paper_scenario();
  MissionReport r = perfect_report(s);
  r.technology = "PC";
  r.attempt_index = 1;
  const ScoreCard c = score_report(r, s);
  const json j = to_json(c);
  EXPECT_EQ(j["kind"], "scorecard");
  EXPECT_EQ(to_json(scorecard_from_json(j)), j);
  EXPECT_THROW(scorecard_from_json(json{{"fire_pts", 1}}), EvaluationError);
}

TEST(Quantile, MatchesSortedOrderOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(n);
      for (auto& x : v) x = trial % 5 == 0 ? std::round(u(rng) / 25.0) : u(rng);  // ties too
      for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        ASSERT_NEAR(quantile(v, p), oracle_quantile(v, p), 1e-12) << n << " " << p;
      }
    }
  }
  EXPECT_THROW(quantile({}, 0.5), EvaluationError);
  EXPECT_THROW(quantile({1.0}, 1.5), EvaluationError);
}

TEST(Quantile, SingletonSummaryCollapses) {
  const FiveNumber f = five_number_summary({42.0});
  EXPECT_EQ(f.min, 42.0);
  EXPECT_EQ(f.q1, 42.0);
  EXPECT_EQ(f.median, 42.0);
  EXPECT_EQ(f.q3, 42.0);
  EXPECT_EQ(f.max, 42.0);
}

TEST(Aggregate, GroupsAndTechnologyMeans) {
  std::vector<ScoreCard> cards;
  auto card = [](const std::string& tech, int attempt, double pct) {
    ScoreCard c;
    c.technology = tech;
    c.attempt_index = attempt;
    c.percent = pct;
    c.time_pts = 1;
    return c;
  };
  cards.push_back(card("PC", 1, 60.0));
  cards.push_back(card("PC", 1, 70.0));
  cards.push_back(card("PC", 2, 80.0));
  cards.push_back(card("PC", 2, 90.0));
  const auto stats = aggregate_results(group_scorecards(cards));
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_DOUBLE_EQ(stats[0].mean, 65.0);
  EXPECT_DOUBLE_EQ(stats[0].summary.median, 65.0);
  EXPECT_DOUBLE_EQ(stats[0].section_percent.at(Section::time), 100.0);
  EXPECT_DOUBLE_EQ(technology_mean(stats, "PC"), 75.0);
  EXPECT_DOUBLE_EQ(section_improvement(stats, "PC", Section::time), 0.0);
  EXPECT_THROW(technology_mean(stats, "AR"), EvaluationError);
  EXPECT_THROW(section_improvement(stats, "AR", Section::fire), EvaluationError);
  EXPECT_THROW(aggregate_results({{GroupKey{"AR", 1}, {}}}), EvaluationError);
  ScoreCard loose;
  EXPECT_THROW(group_scorecards({loose}), EvaluationError);
}

TEST(Aggregate, PublishedTechnologyMeans) {
  auto group = [](const std::string& tech, int attempt, double mean) {
    GroupStats g;
    g.key = {tech, attempt};
    g.n = 12;
    g.mean = mean;
    return g;
  };
  const std::vector<GroupStats> stats{group("PC", 1, 65.12), group("PC", 2, 71.75), group("AR", 1, 54.78),
                                      group("AR", 2, 61.25)};
  EXPECT_NEAR(technology_mean(stats, "PC"), 68.44, 0.01);
  EXPECT_NEAR(technology_mean(stats, "AR"), 58.01, 0.01);
}

TEST(Aggregate, GroupMeansFixture) {
  const json doc = load_json(test::source_dir() / "data/study/group_means.json");
  const auto checks = check_group_means(doc);
  std::map<std::string, ConsistencyCheck> by;
  for (const auto& c : checks) by[c.name] = c;
  ASSERT_EQ(by.size(), checks.size());

  EXPECT_NEAR(by.at("technology_mean.PC").computed, 68.435, 1e-9);
  EXPECT_NEAR(by.at("technology_mean.AR").computed, 58.015, 1e-9);
  EXPECT_NEAR(by.at("technology_difference.PC-AR").computed, 10.42, 1e-9);
  EXPECT_NEAR(by.at("improvement.PC").computed, 6.63, 1e-9);
  EXPECT_NEAR(by.at("improvement.AR").computed, 6.47, 1e-9);
  EXPECT_NEAR(by.at("section_delta.PC.time").computed, 33.33, 1e-9);
  EXPECT_NEAR(by.at("section_delta.AR.children").computed, 10.42, 1e-9);
  EXPECT_NEAR(by.at("section_delta.AR.fire").computed, 3.45, 1e-9);

  // Exactly one published figure disagrees with its own operands.
  std::vector<std::string> inconsistent;
  for (const auto& c : checks) {
    if (c.verifiable && !c.consistent) inconsistent.push_back(c.name);
  }
  EXPECT_EQ(inconsistent, (std::vector<std::string>{"section_delta.AR.fire"}));
  EXPECT_FALSE(by.at("section_delta.PC.adults").verifiable);
  EXPECT_TRUE(to_json(by.at("section_delta.PC.adults"))["computed"].is_null());
}

TEST(Questionnaire, AverageSkipsNoReview) {
  auto resp = [](int v) {
    QuestionnaireResponse r;
    r.answers["Q1.1"] = v;
    return r;
  };
  EXPECT_DOUBLE_EQ(*questionnaire_average({resp(4), resp(5), resp(0), resp(3)}, "Q1.1"), 4.0);
  EXPECT_DOUBLE_EQ(*questionnaire_average({resp(3), resp(3), resp(3)}, "Q1.1"), 3.0);
  EXPECT_FALSE(questionnaire_average({resp(0), resp(0)}, "Q1.1"));
  EXPECT_FALSE(questionnaire_average({resp(2)}, "Q9.9"));
  const auto means = question_means({resp(4), resp(0)});
  EXPECT_DOUBLE_EQ(means.at("Q1.1"), 4.0);
}

TEST(Questionnaire, JsonValidation) {
  const json good = {{"kind", "questionnaire_response"}, {"participant_id", "p7"}, {"technology", "AR"},
                     {"answers", {{"Q1.1", 4}, {"Q1.2", 0}}}};
  const auto r = questionnaire_from_json(good);
  EXPECT_EQ(r.participant_id, "p7");
  EXPECT_EQ(r.answers.at("Q1.2"), 0);
  json bad = good;
  bad["answers"]["Q1.1"] = 6;
  EXPECT_THROW(questionnaire_from_json(bad), EvaluationError);
  bad["answers"]["Q1.1"] = 2.5;
  EXPECT_THROW(questionnaire_from_json(bad), EvaluationError);
}

TEST(Hypotheses, AllThreesFailOnlyQ33) {
  const auto verdicts = validate_hypotheses(all_means(3.0));
  ASSERT_EQ(verdicts.size(), 4u);
  int failures = 0;
  for (const auto& v : verdicts) {
    for (const auto& c : v.criteria) {
      if (!c.pass) {
        ++failures;
        EXPECT_EQ(v.hypothesis, "Ha2");
        EXPECT_NE(c.expression.find("Q3.3"), std::string::npos);
        EXPECT_EQ(c.threshold, 4.0);
      }
    }
    EXPECT_EQ(v.pass, v.hypothesis != "Ha2");
  }
  EXPECT_EQ(failures, 1);
}

TEST(Hypotheses, PublishedMeans) {
  const json doc = load_json(test::source_dir() / "data/study/question_means.json");
  const auto verdicts = validate_hypotheses(doc.at("means").get<std::map<std::string, double>>());
  std::vector<std::string> failing;
  for (const auto& v : verdicts) {
    for (const auto& c : v.criteria) {
      if (!c.pass) failing.push_back(c.expression);
    }
  }
  ASSERT_EQ(failing.size(), 1u);
  EXPECT_NE(failing[0].find("Q1.3"), std::string::npos);
  EXPECT_NEAR(verdicts[0].criteria[2].observed, 2.93, 1e-9);
  EXPECT_TRUE(verdicts[3].pass);
  EXPECT_NEAR(verdicts[3].criteria[0].observed, 3.92, 1e-12);
}

TEST(Hypotheses, MissingMeanNamed) {
  auto m = all_means(4.0);
  m.erase("Q4.3");
  try {
    validate_hypotheses(m);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("Q4.3"), std::string::npos);
  }
}

TEST(Hypotheses, OverallIsConjunction) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto m = all_means(0.0);
    for (auto& [q, v] : m) v = u(rng);
    for (const auto& verdict : validate_hypotheses(m)) {
      const bool all = std::all_of(verdict.criteria.begin(), verdict.criteria.end(),
                                   [](const Criterion& c) { return c.pass; });
      ASSERT_EQ(verdict.pass, all);
      for (const auto& c : verdict.criteria) ASSERT_EQ(c.pass, c.observed >= c.threshold);
    }
  }
}
