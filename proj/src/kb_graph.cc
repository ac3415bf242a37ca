#include "widenet/kb_graph.h"

#include <algorithm>
#include <deque>
#include <fstream>

#include "widenet/error.h"

namespace widenet {

namespace {

const std::vector<std::string> kEmpty;

bool is_word_byte(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct YearToken {
  std::size_t begin;
  std::size_t end;
  int value;
};

bool is_dash(std::string_view gap) {
  return gap == "-" || gap == "\xE2\x80\x93" || gap == "\xE2\x80\x94";
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string_view to_string(EdgeKind kind) {
  return kind == EdgeKind::MemberOf ? "member_of" : "broader";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  if (text == "member_of") return EdgeKind::MemberOf;
  if (text == "broader") return EdgeKind::Broader;
  return std::nullopt;
}

TemporalClues extract_clues(std::string_view text) {
  std::vector<YearToken> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_digit(text[j])) ++j;
    bool bounded = (i == 0 || !is_word_byte(text[i - 1])) &&
                   (j == text.size() || !is_word_byte(text[j]));
    if (bounded && j - i == 4) {
      int value = std::stoi(std::string(text.substr(i, 4)));
      if (value >= 1000 && value <= 2099) tokens.push_back({i, j, value});
    }
    i = j;
  }

  TemporalClues clues;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    clues.years.insert(tokens[k].value);
    if (k + 1 == tokens.size()) continue;
    const auto& a = tokens[k];
    const auto& b = tokens[k + 1];
    if (is_dash(text.substr(a.end, b.begin - a.end)) && a.value <= b.value) {
      clues.intervals.insert({a.value, b.value});
    }
  }
  return clues;
}

// --- KnowledgeGraph --------------------------------------------------------

bool KnowledgeGraph::has_category(std::string_view id) const {
  return category_index_.count(std::string(id)) > 0;
}

bool KnowledgeGraph::has_entity(std::string_view id) const {
  return entity_index_.count(std::string(id)) > 0;
}

const CategoryNode* KnowledgeGraph::find_category(std::string_view id) const {
  auto it = category_index_.find(std::string(id));
  return it == category_index_.end() ? nullptr : &categories_[it->second];
}

const EntityNode* KnowledgeGraph::find_entity(std::string_view id) const {
  auto it = entity_index_.find(std::string(id));
  return it == entity_index_.end() ? nullptr : &entities_[it->second];
}

const std::vector<CategoryId>& KnowledgeGraph::narrower(
    std::string_view category) const {
  auto it = category_index_.find(std::string(category));
  return it == category_index_.end() ? kEmpty : narrower_[it->second];
}

const std::vector<EntityId>& KnowledgeGraph::members(
    std::string_view category) const {
  auto it = category_index_.find(std::string(category));
  return it == category_index_.end() ? kEmpty : members_[it->second];
}

const std::vector<CategoryId>& KnowledgeGraph::categories_of(
    std::string_view entity) const {
  auto it = entity_index_.find(std::string(entity));
  return it == entity_index_.end() ? kEmpty : entity_categories_[it->second];
}

void KnowledgeGraph::Builder::check_new_id(const std::string& id) const {
  if (id.empty()) throw Error(ErrorCode::invalid_input, "empty node id");
  if (graph_.category_index_.count(id) || graph_.entity_index_.count(id)) {
    throw Error(ErrorCode::conflict, "duplicate node id '" + id + "'");
  }
}

KnowledgeGraph::Builder& KnowledgeGraph::Builder::add_category(
    CategoryId id, std::string label) {
  check_new_id(id);
  graph_.category_index_.emplace(id, graph_.categories_.size());
  graph_.categories_.push_back({std::move(id), std::move(label)});
  ++report_.categories;
  return *this;
}

KnowledgeGraph::Builder& KnowledgeGraph::Builder::add_entity(
    EntityId id, std::string label, std::string description) {
  check_new_id(id);
  graph_.entity_index_.emplace(id, graph_.entities_.size());
  TemporalClues clues = extract_clues(description);
  graph_.entities_.push_back(
      {std::move(id), std::move(label), std::move(description), std::move(clues)});
  ++report_.entities;
  return *this;
}

KnowledgeGraph::Builder& KnowledgeGraph::Builder::add_edge(std::string source,
                                                           EdgeKind kind,
                                                           std::string target) {
  bool source_ok = kind == EdgeKind::MemberOf
                       ? graph_.entity_index_.count(source) > 0
                       : graph_.category_index_.count(source) > 0;
  if (!source_ok) {
    bool known = graph_.entity_index_.count(source) ||
                 graph_.category_index_.count(source);
    throw Error(known ? ErrorCode::invalid_input : ErrorCode::not_found,
                std::string(known ? "wrong node kind" : "unknown node") +
                    " '" + source + "' as source of " +
                    std::string(to_string(kind)) + " edge");
  }
  if (!graph_.category_index_.count(target)) {
    bool known = graph_.entity_index_.count(target) > 0;
    throw Error(known ? ErrorCode::invalid_input : ErrorCode::not_found,
                std::string(known ? "wrong node kind" : "unknown node") +
                    " '" + target + "' as target of " +
                    std::string(to_string(kind)) + " edge");
  }
  if (!edges_.insert({std::move(source), kind, std::move(target)}).second) {
    ++report_.duplicate_edges;
  }
  return *this;
}

KnowledgeGraph KnowledgeGraph::Builder::build() {
  KnowledgeGraph g = std::move(graph_);
  g.edges_.assign(edges_.begin(), edges_.end());
  g.narrower_.assign(g.categories_.size(), {});
  g.members_.assign(g.categories_.size(), {});
  g.entity_categories_.assign(g.entities_.size(), {});
  for (const auto& e : g.edges_) {
    std::size_t target = g.category_index_.at(e.target);
    if (e.kind == EdgeKind::Broader) {
      g.narrower_[target].push_back(e.source);
    } else {
      g.members_[target].push_back(e.source);
      g.entity_categories_[g.entity_index_.at(e.source)].push_back(e.target);
    }
  }
  // edges_ is sorted by source first, so re-sort the per-target lists.
  for (auto& v : g.narrower_) std::sort(v.begin(), v.end());
  for (auto& v : g.members_) std::sort(v.begin(), v.end());
  report_.edges = g.edges_.size();
  graph_ = KnowledgeGraph{};
  edges_.clear();
  return g;
}

// --- file formats ----------------------------------------------------------

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out.push_back(text[i]);
      continue;
    }
    char next = text[++i];
    switch (next) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case '\\': out.push_back('\\'); break;
      default:
        out.push_back('\\');
        out.push_back(next);
    }
  }
  return out;
}

LoadedGraph load_graph(std::istream& nodes, std::istream& edges) {
  KnowledgeGraph::Builder builder;
  std::string raw;
  std::int64_t line_no = 0;
  while (std::getline(nodes, raw)) {
    ++line_no;
    std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields[0] != "C" && fields[0] != "E") {
      throw ParseError(line_no, "node kind must be C or E, got '" +
                                    std::string(fields[0]) + "'");
    }
    bool entity = fields[0] == "E";
    std::size_t max_fields = entity ? 4 : 3;
    if (fields.size() < 2 || fields.size() > max_fields) {
      throw ParseError(line_no, "expected 2-" + std::to_string(max_fields) +
                                    " tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    std::string id = unescape_field(fields[1]);
    std::string label = fields.size() > 2 ? unescape_field(fields[2]) : "";
    try {
      if (entity) {
        std::string description =
            fields.size() > 3 ? unescape_field(fields[3]) : "";
        builder.add_entity(std::move(id), std::move(label),
                           std::move(description));
      } else {
        builder.add_category(std::move(id), std::move(label));
      }
    } catch (const Error& e) {
      throw ParseError(line_no, std::string("nodes: ") + e.what());
    }
  }

  line_no = 0;
  while (std::getline(edges, raw)) {
    ++line_no;
    std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(line_no, "edges: expected 3 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    auto kind = parse_edge_kind(fields[1]);
    if (!kind) {
      throw ParseError(line_no, "edges: unknown edge kind '" +
                                    std::string(fields[1]) + "'");
    }
    try {
      builder.add_edge(unescape_field(fields[0]), *kind,
                       unescape_field(fields[2]));
    } catch (const Error& e) {
      throw ParseError(line_no, std::string("edges: ") + e.what());
    }
  }
  LoadedGraph out;
  out.graph = builder.build();
  out.report = builder.report();
  return out;
}

LoadedGraph load_graph_files(const std::string& nodes_path,
                             const std::string& edges_path) {
  std::ifstream nodes(nodes_path);
  if (!nodes) throw Error(ErrorCode::not_found, "cannot open " + nodes_path);
  std::ifstream edges(edges_path);
  if (!edges) throw Error(ErrorCode::not_found, "cannot open " + edges_path);
  return load_graph(nodes, edges);
}

void write_nodes(const KnowledgeGraph& graph, std::ostream& out) {
  for (const auto& c : graph.categories()) {
    out << "C\t" << escape_field(c.id) << '\t' << escape_field(c.label) << '\n';
  }
  for (const auto& e : graph.entities()) {
    out << "E\t" << escape_field(e.id) << '\t' << escape_field(e.label) << '\t'
        << escape_field(e.description) << '\n';
  }
}

void write_edges(const KnowledgeGraph& graph, std::ostream& out) {
  for (const auto& e : graph.edges()) {
    out << escape_field(e.source) << '\t' << to_string(e.kind) << '\t'
        << escape_field(e.target) << '\n';
  }
}

// --- traversal -------------------------------------------------------------

std::map<CategoryId, int> descendant_depths(const KnowledgeGraph& graph,
                                            const std::set<CategoryId>& roots,
                                            int max_depth) {
  if (max_depth < 1) {
    throw Error(ErrorCode::invalid_input, "max_depth must be positive");
  }
  std::map<CategoryId, int> depth;
  std::deque<CategoryId> frontier;
  for (const auto& root : roots) {
    if (!graph.has_category(root)) {
      throw Error(ErrorCode::not_found, "unknown category '" + root + "'");
    }
    depth.emplace(root, 0);
    frontier.push_back(root);
  }
  // Multi-source BFS: first visit is at minimum depth.
  while (!frontier.empty()) {
    CategoryId current = std::move(frontier.front());
    frontier.pop_front();
    int d = depth.at(current);
    if (d == max_depth) continue;
    for (const auto& child : graph.narrower(current)) {
      if (depth.emplace(child, d + 1).second) frontier.push_back(child);
    }
  }
  return depth;
}

std::set<CategoryId> descendant_categories(const KnowledgeGraph& graph,
                                           const std::set<CategoryId>& roots,
                                           int max_depth) {
  std::set<CategoryId> out;
  for (auto& [id, d] : descendant_depths(graph, roots, max_depth)) {
    out.insert(id);
  }
  return out;
}

std::map<CategoryId, std::set<EntityId>> member_entities(
    const KnowledgeGraph& graph, const std::set<CategoryId>& categories) {
  std::map<CategoryId, std::set<EntityId>> out;
  for (const auto& c : categories) {
    if (!graph.has_category(c)) {
      throw Error(ErrorCode::not_found, "unknown category '" + c + "'");
    }
    const auto& m = graph.members(c);
    out.emplace(c, std::set<EntityId>(m.begin(), m.end()));
  }
  return out;
}

}  // namespace widenet
