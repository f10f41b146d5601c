#include "swarm_ops/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

using nlohmann::json;

namespace {

constexpr double kBonus = 0.5;
constexpr double kSectionCap = 4.0;
// Past this the assignment table gets silly; rosters in the study are < 10.
constexpr int kMaxRoster = 20;

int location_points(int claimed_floor, const std::optional<Sector>& claimed_sector, int floor,
                    Sector sector) {
  if (claimed_floor != floor) return 0;
  if (!claimed_sector) return 3;
  return is_same_or_adjacent(*claimed_sector, sector) ? 4 : 2;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw EvaluationError(field + ": " + what);
}

std::optional<Sector> optional_sector(const json& obj, const std::string& path) {
  auto it = obj.find("sector");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) bad_field(path + ".sector", "expected a sector name");
  auto s = parse_sector(it->get<std::string>());
  if (!s) bad_field(path + ".sector", "unknown sector '" + it->get<std::string>() + "'");
  return s;
}

int required_int(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) bad_field(path + key, "missing");
  if (!it->is_number_integer()) bad_field(path + key, "expected an integer");
  return it->get<int>();
}

std::optional<int> optional_int(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) bad_field(key, "expected an integer or null");
  return it->get<int>();
}

json sector_json(const std::optional<Sector>& s) {
  return s ? json(std::string(to_string(*s))) : json(nullptr);
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// --- reports -----------------------------------------------------------------

void validate(const MissionReport& r) {
  if (r.fire_claim && r.fire_claim->floor < 0) bad_field("fire.floor", "negative floor");
  if (r.adult_count && *r.adult_count < 0) bad_field("adult_count", "negative count");
  if (r.child_count && *r.child_count < 0) bad_field("child_count", "negative count");
  for (std::size_t i = 0; i < r.person_entries.size(); ++i) {
    if (r.person_entries[i].floor < 0) {
      bad_field("persons[" + std::to_string(i) + "].floor", "negative floor");
    }
  }
  if (!std::isfinite(r.completion_s) || r.completion_s < 0.0) {
    bad_field("completion_s", "must be a non-negative number of seconds");
  }
}

MissionReport report_from_json(const json& doc) {
  if (!doc.is_object()) throw EvaluationError("mission report must be a JSON object");
  MissionReport r;
  if (auto it = doc.find("session"); it != doc.end() && it->is_string()) r.session = it->get<std::string>();

  if (auto it = doc.find("fire"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) bad_field("fire", "expected an object or null");
    r.fire_claim = LocationClaim{required_int(*it, "floor", "fire."), optional_sector(*it, "fire")};
  }
  r.adult_count = optional_int(doc, "adult_count");
  r.child_count = optional_int(doc, "child_count");

  if (auto it = doc.find("persons"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) bad_field("persons", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& e = (*it)[i];
      const std::string path = "persons[" + std::to_string(i) + "]";
      if (!e.is_object()) bad_field(path, "expected an object");
      PersonEntry entry;
      auto kind = e.find("kind");
      if (kind == e.end() || !kind->is_string()) bad_field(path + ".kind", "expected adult or child");
      if (*kind == "adult") {
        entry.kind = PersonKind::adult;
      } else if (*kind == "child") {
        entry.kind = PersonKind::child;
      } else {
        bad_field(path + ".kind", "expected adult or child");
      }
      entry.floor = required_int(e, "floor", path + ".");
      entry.sector = optional_sector(e, path);
      r.person_entries.push_back(entry);
    }
  }

  auto completion = doc.find("completion_s");
  if (completion == doc.end() || !completion->is_number()) bad_field("completion_s", "missing or not a number");
  r.completion_s = completion->get<double>();

  if (auto it = doc.find("technology"); it != doc.end() && it->is_string()) r.technology = it->get<std::string>();
  r.attempt_index = optional_int(doc, "attempt_index");
  validate(r);
  return r;
}

json to_json(const MissionReport& r) {
  json persons = json::array();
  for (const auto& e : r.person_entries) {
    persons.push_back({{"kind", std::string(to_string(e.kind))}, {"floor", e.floor}, {"sector", sector_json(e.sector)}});
  }
  json fire = nullptr;
  if (r.fire_claim) fire = {{"floor", r.fire_claim->floor}, {"sector", sector_json(r.fire_claim->sector)}};
  json doc = {{"kind", "mission_report"},
              {"session", r.session},
              {"fire", fire},
              {"adult_count", optional_json(r.adult_count)},
              {"child_count", optional_json(r.child_count)},
              {"persons", persons},
              {"completion_s", r.completion_s}};
  if (r.technology) doc["technology"] = *r.technology;
  if (r.attempt_index) doc["attempt_index"] = *r.attempt_index;
  return doc;
}

MissionReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvaluationError("cannot open report " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw EvaluationError("report " + path.string() + " is not valid JSON: " + e.what());
  }
  return report_from_json(doc);
}

// --- rubric ------------------------------------------------------------------

int score_fire(const std::optional<LocationClaim>& claim, const FireSource& truth) {
  if (!claim) return 1;
  return location_points(claim->floor, claim->sector, truth.floor, truth.sector);
}

int score_count(std::optional<int> claimed, int truth) {
  if (!claimed) return 1;
  const int diff = *claimed - truth;
  if (diff == 0) return 4;
  if (diff == 1 || diff == -1) return 3;
  return diff < 0 ? 2 : 0;
}

double score_entry(const PersonEntry& entry, const Person& truth) {
  double pts = location_points(entry.floor, entry.sector, truth.floor, truth.sector);
  if (entry.kind == truth.kind) pts += kBonus;
  return pts;
}

PersonEntriesScore score_person_entries(const std::vector<PersonEntry>& entries,
                                        const std::vector<Person>& truth) {
  PersonEntriesScore out;
  if (entries.empty()) return out;
  const int n = static_cast<int>(entries.size());
  const int m = static_cast<int>(truth.size());
  if (m > kMaxRoster) throw EvaluationError("roster too large to match exactly (" + std::to_string(m) + ")");

  // best[i][mask]: top score for entries i.. given the persons in mask are taken.
  const std::size_t masks = std::size_t{1} << m;
  std::vector<double> best((n + 1) * masks, 0.0);
  auto at = [&](int i, std::size_t mask) -> double& { return best[i * masks + mask]; };
  for (int i = n - 1; i >= 0; --i) {
    for (std::size_t mask = 0; mask < masks; ++mask) {
      double b = at(i + 1, mask);  // leave entry i unmatched
      for (int j = 0; j < m; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        b = std::max(b, score_entry(entries[i], truth[j]) + at(i + 1, mask | (std::size_t{1} << j)));
      }
      at(i, mask) = b;
    }
  }

  // Walk the table forward; the lowest person index wins ties.
  std::size_t mask = 0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int pick = -1;
    double pts = 0.0;
    for (int j = 0; j < m && pick < 0; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const double s = score_entry(entries[i], truth[j]);
      if (s + at(i + 1, mask | (std::size_t{1} << j)) == at(i, mask)) {
        pick = j;
        pts = s;
      }
    }
    if (pick >= 0) mask |= std::size_t{1} << pick;
    out.matching.push_back(pick);
    out.entry_pts.push_back(pts);
    total += pts;
  }
  out.unclamped_pts = total / n;
  out.section_pts = std::min(out.unclamped_pts, kSectionCap);
  return out;
}

int score_time(double completion_s, double limit_s) {
  if (completion_s > limit_s) {
    throw EvaluationError("completion " + std::to_string(completion_s) + " s exceeds the " +
                          std::to_string(limit_s) + " s limit");
  }
  return completion_s < limit_s ? 1 : 0;
}

ScoreCard score_report(const MissionReport& report, const Scenario& scenario) {
  validate(report);
  ScoreCard c;
  c.scenario_id = scenario.id;
  c.technology = report.technology;
  c.attempt_index = report.attempt_index;
  c.fire_pts = score_fire(report.fire_claim, scenario.fire);
  c.adults_pts = score_count(report.adult_count, scenario.adult_count());
  c.children_pts = score_count(report.child_count, scenario.child_count());
  const auto persons = score_person_entries(report.person_entries, scenario.persons);
  c.locations_pts = persons.section_pts;
  c.locations_unclamped_pts = persons.unclamped_pts;
  c.time_pts = score_time(report.completion_s, scenario.mission_limit_s);
  c.total_pts = c.fire_pts + c.adults_pts + c.children_pts + c.locations_pts + c.time_pts;
  c.percent = c.total_pts / kMaxTotalPts * 100.0;
  return c;
}

json to_json(const ScoreCard& c) {
  json doc = {{"kind", "scorecard"},
              {"scenario_id", c.scenario_id},
              {"fire_pts", c.fire_pts},
              {"adults_pts", c.adults_pts},
              {"children_pts", c.children_pts},
              {"locations_pts", c.locations_pts},
              {"locations_unclamped_pts", c.locations_unclamped_pts},
              {"time_pts", c.time_pts},
              {"total_pts", c.total_pts},
              {"percent", c.percent},
              {"technology", optional_json(c.technology)},
              {"attempt_index", optional_json(c.attempt_index)}};
  return doc;
}

ScoreCard scorecard_from_json(const json& doc) {
  try {
    ScoreCard c;
    c.scenario_id = doc.value("scenario_id", "");
    c.fire_pts = doc.at("fire_pts").get<int>();
    c.adults_pts = doc.at("adults_pts").get<int>();
    c.children_pts = doc.at("children_pts").get<int>();
    c.locations_pts = doc.at("locations_pts").get<double>();
    c.locations_unclamped_pts = doc.value("locations_unclamped_pts", c.locations_pts);
    c.time_pts = doc.at("time_pts").get<int>();
    c.total_pts = doc.at("total_pts").get<double>();
    c.percent = doc.at("percent").get<double>();
    if (auto it = doc.find("technology"); it != doc.end() && it->is_string()) c.technology = it->get<std::string>();
    if (auto it = doc.find("attempt_index"); it != doc.end() && it->is_number_integer()) {
      c.attempt_index = it->get<int>();
    }
    return c;
  } catch (const json::exception& e) {
    throw EvaluationError(std::string("malformed scorecard: ") + e.what());
  }
}

// --- aggregates ----------------------------------------------------------------

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EvaluationError("quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw EvaluationError("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

FiveNumber five_number_summary(const std::vector<double>& values) {
  return {quantile(values, 0.0), quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75),
          quantile(values, 1.0)};
}

std::string_view to_string(Section s) {
  switch (s) {
    case Section::fire: return "fire";
    case Section::adults: return "adults";
    case Section::children: return "children";
    case Section::locations: return "locations";
    case Section::time: return "time";
  }
  return "?";
}

std::optional<Section> parse_section(std::string_view text) {
  for (Section s : kAllSections) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

double section_max(Section s) { return s == Section::time ? 1.0 : 4.0; }

double section_points(const ScoreCard& c, Section s) {
  switch (s) {
    case Section::fire: return c.fire_pts;
    case Section::adults: return c.adults_pts;
    case Section::children: return c.children_pts;
    case Section::locations: return c.locations_pts;
    case Section::time: return c.time_pts;
  }
  return 0.0;
}

std::vector<GroupStats> aggregate_results(const std::map<GroupKey, std::vector<ScoreCard>>& groups) {
  std::vector<GroupStats> out;
  for (const auto& [key, cards] : groups) {
    if (cards.empty()) {
      throw EvaluationError("empty group " + key.technology + " attempt " + std::to_string(key.attempt));
    }
    GroupStats g;
    g.key = key;
    g.n = static_cast<int>(cards.size());
    std::vector<double> percents;
    for (const auto& c : cards) percents.push_back(c.percent);
    g.mean = mean_of(percents);
    g.summary = five_number_summary(percents);
    for (Section s : kAllSections) {
      double sum = 0.0;
      for (const auto& c : cards) sum += section_points(c, s);
      g.section_percent[s] = sum / g.n / section_max(s) * 100.0;
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::map<GroupKey, std::vector<ScoreCard>> group_scorecards(const std::vector<ScoreCard>& cards) {
  std::map<GroupKey, std::vector<ScoreCard>> groups;
  for (const auto& c : cards) {
    if (!c.technology || !c.attempt_index) {
      throw EvaluationError("scorecard for scenario '" + c.scenario_id + "' lacks technology/attempt_index");
    }
    groups[{*c.technology, *c.attempt_index}].push_back(c);
  }
  return groups;
}

double technology_mean(const std::vector<GroupStats>& stats, const std::string& technology) {
  double weighted = 0.0;
  int n = 0;
  for (const auto& g : stats) {
    if (g.key.technology != technology) continue;
    weighted += g.mean * g.n;
    n += g.n;
  }
  if (n == 0) throw EvaluationError("no groups for technology " + technology);
  return weighted / n;
}

double section_improvement(const std::vector<GroupStats>& stats, const std::string& technology,
                           Section section) {
  const GroupStats* first = nullptr;
  const GroupStats* second = nullptr;
  for (const auto& g : stats) {
    if (g.key.technology != technology) continue;
    if (g.key.attempt == 1) first = &g;
    if (g.key.attempt == 2) second = &g;
  }
  if (!first || !second) {
    throw EvaluationError("section improvement for " + technology + " needs attempts 1 and 2");
  }
  auto a = first->section_percent.find(section);
  auto b = second->section_percent.find(section);
  if (a == first->section_percent.end() || b == second->section_percent.end()) {
    throw EvaluationError("section " + std::string(to_string(section)) + " missing for " + technology);
  }
  return b->second - a->second;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// --- questionnaire -------------------------------------------------------------

QuestionnaireResponse questionnaire_from_json(const json& doc) {
  if (!doc.is_object()) throw EvaluationError("questionnaire response must be a JSON object");
  QuestionnaireResponse r;
  r.participant_id = doc.value("participant_id", "");
  if (auto it = doc.find("technology"); it != doc.end() && it->is_string()) r.technology = it->get<std::string>();
  auto answers = doc.find("answers");
  if (answers == doc.end() || !answers->is_object()) bad_field("answers", "expected an object");
  for (const auto& [q, v] : answers->items()) {
    if (!v.is_number_integer()) bad_field("answers." + q, "expected an integer 0-5");
    const int a = v.get<int>();
    if (a < 0 || a > 5) bad_field("answers." + q, "value " + std::to_string(a) + " outside 0-5");
    r.answers[q] = a;
  }
  return r;
}

std::optional<double> questionnaire_average(const std::vector<QuestionnaireResponse>& responses,
                                            const std::string& question) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : responses) {
    auto it = r.answers.find(question);
    if (it == r.answers.end() || it->second == 0) continue;
    sum += it->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::map<std::string, double> question_means(const std::vector<QuestionnaireResponse>& responses) {
  std::map<std::string, double> out;
  for (const auto& r : responses) {
    for (const auto& [q, _] : r.answers) {
      if (out.count(q)) continue;
      if (auto m = questionnaire_average(responses, q)) out[q] = *m;
    }
  }
  return out;
}

std::vector<HypothesisVerdict> validate_hypotheses(const std::map<std::string, double>& means) {
  auto get = [&](const std::string& q) {
    auto it = means.find(q);
    if (it == means.end()) throw EvaluationError("missing question mean " + q);
    return it->second;
  };
  auto single = [&](const std::string& q, double threshold) {
    const double v = get(q);
    return Criterion{q + " >= " + std::to_string(static_cast<int>(threshold)), threshold, v, v >= threshold};
  };
  auto pair = [&](const std::string& a, const std::string& b, double threshold) {
    const double v = (get(a) + get(b)) / 2.0;
    return Criterion{"(" + a + " + " + b + ") / 2 >= " + std::to_string(static_cast<int>(threshold)), threshold, v,
                     v >= threshold};
  };

  std::vector<HypothesisVerdict> out{
      {"Ha1", {single("Q1.1", 3), single("Q1.2", 3), pair("Q1.3", "Q1.4", 3), single("Q2.1", 3)}},
      {"Ha2", {single("Q1.5", 3), single("Q3.1", 3), single("Q3.2", 3), single("Q3.3", 4), single("Q4.3", 3)}},
      {"Ha3", {pair("Q1.6", "Q4.2", 3)}},
      {"Ha4", {single("Q4.2", 3)}},
  };
  for (auto& v : out) {
    v.pass = std::all_of(v.criteria.begin(), v.criteria.end(), [](const Criterion& c) { return c.pass; });
  }
  return out;
}

json to_json(const GroupStats& g) {
  json sections = json::object();
  for (const auto& [s, pct] : g.section_percent) sections[std::string(to_string(s))] = pct;
  return {{"technology", g.key.technology},
          {"attempt", g.key.attempt},
          {"n", g.n},
          {"mean", g.mean},
          {"min", g.summary.min},
          {"q1", g.summary.q1},
          {"median", g.summary.median},
          {"q3", g.summary.q3},
          {"max", g.summary.max},
          {"section_percent", sections}};
}

json to_json(const HypothesisVerdict& v) {
  json criteria = json::array();
  for (const auto& c : v.criteria) {
    criteria.push_back(
        {{"expression", c.expression}, {"threshold", c.threshold}, {"observed", c.observed}, {"pass", c.pass}});
  }
  return {{"hypothesis", v.hypothesis}, {"criteria", criteria}, {"pass", v.pass}};
}

// --- published aggregates ------------------------------------------------------

std::vector<ConsistencyCheck> check_group_means(const json& doc, double tolerance) {
  std::vector<GroupStats> stats;
  std::map<GroupKey, std::size_t> index;
  auto group = [&](const std::string& tech, int attempt) -> GroupStats& {
    GroupKey key{tech, attempt};
    auto it = index.find(key);
    if (it != index.end()) return stats[it->second];
    GroupStats g;
    g.key = key;
    g.n = 1;
    index[key] = stats.size();
    stats.push_back(g);
    return stats.back();
  };

  try {
    for (const auto& g : doc.at("groups")) {
      GroupStats& s = group(g.at("technology").get<std::string>(), g.at("attempt").get<int>());
      s.mean = g.at("mean_percent").get<double>();
      s.n = g.value("n", 1);
    }
    // Sections with both operands feed GroupStats; the others stay report-only.
    for (const auto& row : doc.at("sections")) {
      const auto tech = row.at("technology").get<std::string>();
      auto section = parse_section(row.at("section").get<std::string>());
      if (!section) throw EvaluationError("unknown section " + row.at("section").dump());
      if (row.contains("attempt_1") && row.contains("attempt_2")) {
        group(tech, 1).section_percent[*section] = row.at("attempt_1").get<double>();
        group(tech, 2).section_percent[*section] = row.at("attempt_2").get<double>();
      }
    }

    std::vector<ConsistencyCheck> out;
    auto add = [&](std::string name, double computed, std::optional<double> published) {
      ConsistencyCheck c{std::move(name), computed, published, true, true};
      if (published) c.consistent = std::abs(computed - *published) <= tolerance + 1e-9;
      out.push_back(std::move(c));
    };

    const json& pub = doc.at("published");
    std::map<std::string, double> tech_means;
    for (const auto& [tech, value] : pub.at("technology_mean").items()) {
      tech_means[tech] = technology_mean(stats, tech);
      add("technology_mean." + tech, tech_means[tech], value.get<double>());
    }
    if (auto diff = pub.find("technology_difference"); diff != pub.end()) {
      const auto a = diff->at("minuend").get<std::string>();
      const auto b = diff->at("subtrahend").get<std::string>();
      add("technology_difference." + a + "-" + b, technology_mean(stats, a) - technology_mean(stats, b),
          diff->at("value").get<double>());
    }
    for (const auto& [tech, value] : pub.at("improvement").items()) {
      add("improvement." + tech, group(tech, 2).mean - group(tech, 1).mean, value.get<double>());
    }
    for (const auto& row : doc.at("sections")) {
      const auto tech = row.at("technology").get<std::string>();
      const auto section = *parse_section(row.at("section").get<std::string>());
      const std::string name = "section_delta." + tech + "." + std::string(to_string(section));
      std::optional<double> published;
      if (row.contains("published_delta")) published = row.at("published_delta").get<double>();
      if (row.contains("attempt_1") && row.contains("attempt_2")) {
        add(name, section_improvement(stats, tech, section), published);
      } else {
        out.push_back({name, std::numeric_limits<double>::quiet_NaN(), published, false, true});
      }
    }
    return out;
  } catch (const json::exception& e) {
    throw EvaluationError(std::string("malformed group_means document: ") + e.what());
  }
}

json to_json(const ConsistencyCheck& c) {
  return {{"name", c.name},
          {"computed", c.verifiable ? json(c.computed) : json(nullptr)},
          {"published", optional_json(c.published)},
          {"verifiable", c.verifiable},
          {"consistent", c.consistent}};
}

}  // namespace swarm_ops
