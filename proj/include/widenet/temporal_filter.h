#ifndef WIDENET_TEMPORAL_FILTER_H
#define WIDENET_TEMPORAL_FILTER_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "widenet/kb_graph.h"

namespace widenet {

// Closed year range [start_year, end_year].
class Period {
 public:
  // Throws Error(invalid_input) when start > end.
  Period(int start_year, int end_year);

  int start_year() const { return start_; }
  int end_year() const { return end_; }
  bool contains(int year) const { return year >= start_ && year <= end_; }
  bool overlaps(const Interval& iv) const {
    return iv.start_year <= end_ && iv.end_year >= start_;
  }
  bool operator==(const Period&) const = default;

 private:
  int start_;
  int end_;
};

enum class TemporalClass { InPeriod, OutOfPeriod, Borderline, Undated };

std::string_view to_string(TemporalClass cls);
std::optional<TemporalClass> parse_temporal_class(std::string_view text);

struct Fraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  bool at_least_half() const { return 2 * numerator >= denominator; }
  bool positive() const { return numerator > 0; }
  bool operator==(const Fraction&) const = default;
};

struct ClassificationFeatures {
  std::optional<Fraction> frac_years_in;           // absent when no years
  std::optional<Fraction> frac_intervals_overlap;  // absent when no intervals
  bool has_year_in_period = false;
};

ClassificationFeatures compute_features(const TemporalClues& clues,
                                        const Period& period);

// Undated when there are no clues at all. InPeriod when every defined
// fraction is >= 1/2 and at least one is positive. Borderline on any other
// in-period evidence (a year inside, or some interval overlapping). The rest
// is OutOfPeriod.
TemporalClass classify_entity(const TemporalClues& clues, const Period& period);

struct CategoryDecision {
  CategoryId category;
  bool auto_selected = true;
  std::int64_t dated_member_count = 0;
  std::int64_t out_of_period_count = 0;

  bool operator==(const CategoryDecision&) const = default;
};

// A category is deselected when strictly more than half of its dated
// (non-Undated) members are OutOfPeriod. Throws Error(invalid_input) if a
// member has no class.
std::vector<CategoryDecision> prune_categories(
    const std::map<CategoryId, std::set<EntityId>>& memberships,
    const std::map<EntityId, TemporalClass>& classes);

struct CandidateEntity {
  EntityId id;
  TemporalClass temporal_class = TemporalClass::Undated;

  bool operator==(const CandidateEntity&) const = default;
};

struct CandidateCategory {
  CategoryId id;
  int depth = 0;  // hops below the group's root
  CategoryDecision decision;
  std::vector<CandidateEntity> entities;  // sorted by id

  bool operator==(const CandidateCategory&) const = default;
};

struct RootGroup {
  CategoryId root;
  std::vector<CandidateCategory> categories;  // by (depth, id); root first

  bool operator==(const RootGroup&) const = default;
};

// Display tree grouped per root plus flat lookups over the union of all
// groups. A category reachable from several roots appears in each group with
// the same decision.
struct CandidateTree {
  Period period{0, 0};
  int max_depth = kDefaultMaxDepth;
  std::vector<RootGroup> groups;
  std::map<CategoryId, CategoryDecision> decisions;
  std::map<EntityId, TemporalClass> classes;
  std::map<CategoryId, std::set<EntityId>> members;
  std::map<EntityId, std::set<CategoryId>> containing;  // reverse of members

  bool has_category(const CategoryId& id) const {
    return decisions.count(id) > 0;
  }
  bool has_entity(const EntityId& id) const { return classes.count(id) > 0; }

  bool operator==(const CandidateTree&) const = default;
};

CandidateTree candidate_set(const KnowledgeGraph& graph,
                            const std::set<CategoryId>& roots,
                            const Period& period,
                            int max_depth = kDefaultMaxDepth);

}  // namespace widenet

#endif  // WIDENET_TEMPORAL_FILTER_H
