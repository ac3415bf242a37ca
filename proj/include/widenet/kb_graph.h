#ifndef WIDENET_KB_GRAPH_H
#define WIDENET_KB_GRAPH_H

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace widenet {

using CategoryId = std::string;
using EntityId = std::string;

// MemberOf: entity -> category (dct:subject).
// Broader: narrower category -> broader category (skos:broader).
enum class EdgeKind { MemberOf, Broader };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

struct Interval {
  int start_year = 0;
  int end_year = 0;

  auto operator<=>(const Interval&) const = default;
};

struct TemporalClues {
  std::set<int> years;
  std::set<Interval> intervals;

  bool empty() const { return years.empty() && intervals.empty(); }
  bool operator==(const TemporalClues&) const = default;
};

// Scans free text for year mentions. Years are standalone four-digit tokens
// in [1000, 2099]; a token glued to a letter, digit or underscore is not a
// year. Intervals are two such tokens joined by a single "-", U+2013 or U+2014
// with no surrounding spaces and start <= end. Interval endpoints are also
// reported as years. Chains like "1940-1945-1950" yield every adjacent pair.
TemporalClues extract_clues(std::string_view description);

struct Edge {
  std::string source;
  EdgeKind kind = EdgeKind::MemberOf;
  std::string target;

  auto operator<=>(const Edge&) const = default;
};

struct CategoryNode {
  CategoryId id;
  std::string label;

  bool operator==(const CategoryNode&) const = default;
};

struct EntityNode {
  EntityId id;
  std::string label;
  std::string description;
  TemporalClues clues;  // cached from description at load time

  bool operator==(const EntityNode&) const = default;
};

struct LoadReport {
  std::size_t categories = 0;
  std::size_t entities = 0;
  std::size_t edges = 0;
  std::size_t duplicate_edges = 0;
};

// Category/entity subgraph of a SKOS-style knowledge base. Immutable once
// built; all accessors are safe for concurrent readers.
class KnowledgeGraph {
 public:
  class Builder;

  const std::vector<CategoryNode>& categories() const { return categories_; }
  const std::vector<EntityNode>& entities() const { return entities_; }
  // Sorted, deduplicated.
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_category(std::string_view id) const;
  bool has_entity(std::string_view id) const;
  const CategoryNode* find_category(std::string_view id) const;
  const EntityNode* find_entity(std::string_view id) const;

  // Categories whose Broader edge points at `category`.
  const std::vector<CategoryId>& narrower(std::string_view category) const;
  // Entities with a MemberOf edge to `category`.
  const std::vector<EntityId>& members(std::string_view category) const;
  const std::vector<CategoryId>& categories_of(std::string_view entity) const;

  bool operator==(const KnowledgeGraph& other) const {
    return categories_ == other.categories_ && entities_ == other.entities_ &&
           edges_ == other.edges_;
  }

 private:
  std::vector<CategoryNode> categories_;
  std::vector<EntityNode> entities_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> category_index_;
  std::unordered_map<std::string, std::size_t> entity_index_;
  std::vector<std::vector<CategoryId>> narrower_;
  std::vector<std::vector<EntityId>> members_;
  std::vector<std::vector<CategoryId>> entity_categories_;
};

// Programmatic construction; enforces the same rules as load_graph.
class KnowledgeGraph::Builder {
 public:
  Builder& add_category(CategoryId id, std::string label = {});
  Builder& add_entity(EntityId id, std::string label = {},
                      std::string description = {});
  Builder& add_edge(std::string source, EdgeKind kind, std::string target);

  KnowledgeGraph build();
  const LoadReport& report() const { return report_; }

 private:
  void check_new_id(const std::string& id) const;

  KnowledgeGraph graph_;
  std::set<Edge> edges_;
  LoadReport report_;
};

struct LoadedGraph {
  KnowledgeGraph graph;
  LoadReport report;
};

// Reads the tab-separated node and edge files. Throws ParseError naming the
// offending line for malformed records, duplicate ids and dangling or
// ill-typed edges.
LoadedGraph load_graph(std::istream& nodes, std::istream& edges);
LoadedGraph load_graph_files(const std::string& nodes_path,
                             const std::string& edges_path);

void write_nodes(const KnowledgeGraph& graph, std::ostream& out);
void write_edges(const KnowledgeGraph& graph, std::ostream& out);

// Field escaping used by the node file: backslash, tab, newline, CR.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

inline constexpr int kDefaultMaxDepth = 5;

// Categories reachable from `roots` by walking Broader edges from broader to
// narrower, at most `max_depth` hops. Roots are at depth 0. Each category is
// reported once with the minimum depth at which it is reached.
std::map<CategoryId, int> descendant_depths(const KnowledgeGraph& graph,
                                            const std::set<CategoryId>& roots,
                                            int max_depth);

std::set<CategoryId> descendant_categories(const KnowledgeGraph& graph,
                                           const std::set<CategoryId>& roots,
                                           int max_depth);

std::map<CategoryId, std::set<EntityId>> member_entities(
    const KnowledgeGraph& graph, const std::set<CategoryId>& categories);

}  // namespace widenet

#endif  // WIDENET_KB_GRAPH_H
