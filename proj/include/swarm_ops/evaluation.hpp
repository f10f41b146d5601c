#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/geo.hpp"
#include "swarm_ops/scenario.hpp"

namespace swarm_ops {

inline constexpr double kMaxTotalPts = 17.0;

// --- mission report rubric --------------------------------------------------

struct LocationClaim {
  int floor = 0;
  std::optional<Sector> sector;
};

struct PersonEntry {
  PersonKind kind = PersonKind::adult;
  int floor = 0;
  std::optional<Sector> sector;
};

struct MissionReport {
  std::string session;  // free-form reference to the session record
  std::optional<LocationClaim> fire_claim;
  std::optional<int> adult_count;
  std::optional<int> child_count;
  std::vector<PersonEntry> person_entries;
  double completion_s = 0.0;
  // Study grouping, copied from the session when known.
  std::optional<std::string> technology;
  std::optional<int> attempt_index;
};

void validate(const MissionReport& r);
MissionReport report_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MissionReport& r);
MissionReport load_report(const std::filesystem::path& path);

/// 4 floor+sector (exact or adjacent octant), 3 floor only, 2 floor with a
/// wrong sector, 1 nothing claimed, 0 wrong floor.
int score_fire(const std::optional<LocationClaim>& claim, const FireSource& truth);

/// 4 exact, 3 off by one, 2 under by two or more, 1 nothing claimed,
/// 0 over by two or more.
int score_count(std::optional<int> claimed, int truth);

/// Location score of one entry against one person, bonus included.
double score_entry(const PersonEntry& entry, const Person& truth);

struct PersonEntriesScore {
  double section_pts = 1.0;   // clamped to 4
  double unclamped_pts = 1.0;
  // matching[i] = index into the roster for entry i, or -1 when unmatched.
  std::vector<int> matching;
  std::vector<double> entry_pts;
};

PersonEntriesScore score_person_entries(const std::vector<PersonEntry>& entries,
                                        const std::vector<Person>& truth);

int score_time(double completion_s, double limit_s);

struct ScoreCard {
  int fire_pts = 0;
  int adults_pts = 0;
  int children_pts = 0;
  double locations_pts = 0.0;
  double locations_unclamped_pts = 0.0;
  int time_pts = 0;
  double total_pts = 0.0;
  double percent = 0.0;

  std::string scenario_id;
  std::optional<std::string> technology;
  std::optional<int> attempt_index;
};

ScoreCard score_report(const MissionReport& report, const Scenario& scenario);

nlohmann::json to_json(const ScoreCard& c);
ScoreCard scorecard_from_json(const nlohmann::json& doc);

// --- aggregates -------------------------------------------------------------

/// Linear interpolation between order statistics (h = (n-1)p).
double quantile(std::vector<double> values, double p);

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

FiveNumber five_number_summary(const std::vector<double>& values);

struct GroupKey {
  std::string technology;
  int attempt = 1;
  auto operator<=>(const GroupKey&) const = default;
};

enum class Section { fire, adults, children, locations, time };
inline constexpr std::array<Section, 5> kAllSections{Section::fire, Section::adults, Section::children,
                                                     Section::locations, Section::time};
std::string_view to_string(Section s);
std::optional<Section> parse_section(std::string_view text);
double section_max(Section s);
double section_points(const ScoreCard& c, Section s);

struct GroupStats {
  GroupKey key;
  int n = 0;
  double mean = 0.0;  // of percents
  FiveNumber summary;
  // Section mean as a percentage of that section's maximum.
  std::map<Section, double> section_percent;
};

std::vector<GroupStats> aggregate_results(const std::map<GroupKey, std::vector<ScoreCard>>& groups);
std::map<GroupKey, std::vector<ScoreCard>> group_scorecards(const std::vector<ScoreCard>& cards);

/// n-weighted mean of the group means for one technology.
double technology_mean(const std::vector<GroupStats>& stats, const std::string& technology);

/// Attempt-2 minus attempt-1 section mean, in percentage points.
double section_improvement(const std::vector<GroupStats>& stats, const std::string& technology,
                           Section section);

double round2(double x);

// --- questionnaire and hypotheses -------------------------------------------

struct QuestionnaireResponse {
  std::string participant_id;
  std::map<std::string, int> answers;  // 0 = "No review"
  std::optional<std::string> technology;
};

QuestionnaireResponse questionnaire_from_json(const nlohmann::json& doc);

/// Mean over non-zero answers; nullopt when nobody gave an opinion.
std::optional<double> questionnaire_average(const std::vector<QuestionnaireResponse>& responses,
                                            const std::string& question);

std::map<std::string, double> question_means(const std::vector<QuestionnaireResponse>& responses);

struct Criterion {
  std::string expression;
  double threshold = 0.0;
  double observed = 0.0;
  bool pass = false;
};

struct HypothesisVerdict {
  std::string hypothesis;
  std::vector<Criterion> criteria;
  bool pass = false;
};

std::vector<HypothesisVerdict> validate_hypotheses(const std::map<std::string, double>& means);

nlohmann::json to_json(const GroupStats& g);
nlohmann::json to_json(const HypothesisVerdict& v);

// --- published aggregates ---------------------------------------------------

/// One derived figure recomputed from published operands.
struct ConsistencyCheck {
  std::string name;
  double computed = 0.0;
  std::optional<double> published;
  bool verifiable = true;
  bool consistent = true;  // |computed - published| <= tolerance
};

/// Recomputes technology means, their difference, per-group improvements and
/// per-section deltas from a `group_means` document and compares each with
/// the value the document says was published.
std::vector<ConsistencyCheck> check_group_means(const nlohmann::json& doc, double tolerance = 0.01);

nlohmann::json to_json(const ConsistencyCheck& c);

}  // namespace swarm_ops
