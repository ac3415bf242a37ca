#include "widenet/temporal_filter.h"

#include <algorithm>
#include <string>

#include "widenet/error.h"

namespace widenet {

Period::Period(int start_year, int end_year)
    : start_(start_year), end_(end_year) {
  if (start_year > end_year) {
    throw Error(ErrorCode::invalid_input,
                "invalid period: start " + std::to_string(start_year) +
                    " after end " + std::to_string(end_year));
  }
}

std::string_view to_string(TemporalClass cls) {
  switch (cls) {
    case TemporalClass::InPeriod: return "in_period";
    case TemporalClass::OutOfPeriod: return "out_of_period";
    case TemporalClass::Borderline: return "borderline";
    case TemporalClass::Undated: return "undated";
  }
  return "undated";
}

std::optional<TemporalClass> parse_temporal_class(std::string_view text) {
  if (text == "in_period") return TemporalClass::InPeriod;
  if (text == "out_of_period") return TemporalClass::OutOfPeriod;
  if (text == "borderline") return TemporalClass::Borderline;
  if (text == "undated") return TemporalClass::Undated;
  return std::nullopt;
}

ClassificationFeatures compute_features(const TemporalClues& clues,
                                        const Period& period) {
  ClassificationFeatures f;
  if (!clues.years.empty()) {
    auto inside = std::count_if(clues.years.begin(), clues.years.end(),
                                [&](int y) { return period.contains(y); });
    f.frac_years_in =
        Fraction{inside, static_cast<std::int64_t>(clues.years.size())};
    f.has_year_in_period = inside > 0;
  }
  if (!clues.intervals.empty()) {
    auto overlapping =
        std::count_if(clues.intervals.begin(), clues.intervals.end(),
                      [&](const Interval& iv) { return period.overlaps(iv); });
    f.frac_intervals_overlap =
        Fraction{overlapping, static_cast<std::int64_t>(clues.intervals.size())};
  }
  return f;
}

TemporalClass classify_entity(const TemporalClues& clues,
                              const Period& period) {
  if (clues.empty()) return TemporalClass::Undated;
  auto f = compute_features(clues, period);
  const auto& years = f.frac_years_in;
  const auto& intervals = f.frac_intervals_overlap;
  bool years_ok = !years || years->at_least_half();
  bool intervals_ok = !intervals || intervals->at_least_half();
  bool any_positive =
      (years && years->positive()) || (intervals && intervals->positive());
  if (years_ok && intervals_ok && any_positive) return TemporalClass::InPeriod;
  if (f.has_year_in_period || (intervals && intervals->positive())) {
    return TemporalClass::Borderline;
  }
  return TemporalClass::OutOfPeriod;
}

std::vector<CategoryDecision> prune_categories(
    const std::map<CategoryId, std::set<EntityId>>& memberships,
    const std::map<EntityId, TemporalClass>& classes) {
  std::vector<CategoryDecision> out;
  out.reserve(memberships.size());
  for (const auto& [category, entities] : memberships) {
    CategoryDecision d{category, true, 0, 0};
    for (const auto& e : entities) {
      auto it = classes.find(e);
      if (it == classes.end()) {
        throw Error(ErrorCode::invalid_input,
                    "entity '" + e + "' in '" + category + "' has no class");
      }
      if (it->second == TemporalClass::Undated) continue;
      ++d.dated_member_count;
      if (it->second == TemporalClass::OutOfPeriod) ++d.out_of_period_count;
    }
    d.auto_selected = !(2 * d.out_of_period_count > d.dated_member_count);
    out.push_back(std::move(d));
  }
  return out;
}

CandidateTree candidate_set(const KnowledgeGraph& graph,
                            const std::set<CategoryId>& roots,
                            const Period& period, int max_depth) {
  CandidateTree tree;
  tree.period = period;
  tree.max_depth = max_depth;
  if (roots.empty()) return tree;

  std::set<CategoryId> all = descendant_categories(graph, roots, max_depth);
  tree.members = member_entities(graph, all);
  for (const auto& [category, entities] : tree.members) {
    for (const auto& e : entities) {
      tree.containing[e].insert(category);
      if (!tree.classes.count(e)) {
        tree.classes.emplace(e,
                             classify_entity(graph.find_entity(e)->clues, period));
      }
    }
  }
  for (auto& d : prune_categories(tree.members, tree.classes)) {
    tree.decisions.emplace(d.category, std::move(d));
  }

  for (const auto& root : roots) {
    RootGroup group{root, {}};
    for (const auto& [id, depth] : descendant_depths(graph, {root}, max_depth)) {
      CandidateCategory node{id, depth, tree.decisions.at(id), {}};
      for (const auto& e : tree.members.at(id)) {
        node.entities.push_back({e, tree.classes.at(e)});
      }
      group.categories.push_back(std::move(node));
    }
    std::stable_sort(group.categories.begin(), group.categories.end(),
                     [](const CandidateCategory& a, const CandidateCategory& b) {
                       return a.depth < b.depth;
                     });
    tree.groups.push_back(std::move(group));
  }
  return tree;
}

}  // namespace widenet
