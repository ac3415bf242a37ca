#ifndef WIDENET_INGEST_H
#define WIDENET_INGEST_H

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "widenet/kb_graph.h"
#include "widenet/temporal_filter.h"

namespace widenet {

using DocId = std::string;

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  // Accepts ISO-8601 calendar dates ("YYYY-MM-DD"), with an optional
  // time part after 'T' that is ignored.
  static std::optional<Date> parse(std::string_view text);
  std::string to_string() const;
  auto operator<=>(const Date&) const = default;
};

// Stand-off link from a text span to a knowledge-base entity. Offsets are
// code points, end exclusive.
struct EntityAnnotation {
  EntityId entity;
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::string surface;
  double confidence = 1.0;

  bool operator==(const EntityAnnotation&) const = default;
};

struct AnnotatedDocument {
  DocId doc_id;
  std::string text;  // UTF-8
  Date date;
  std::string speaker;
  std::string party;
  std::string debate_title;
  std::vector<EntityAnnotation> annotations;  // sorted by begin

  bool operator==(const AnnotatedDocument&) const = default;
};

struct IngestWarning {
  std::int64_t line = 0;
  DocId doc_id;
  std::string message;
};

struct ParsedCorpus {
  std::vector<AnnotatedDocument> documents;
  std::vector<IngestWarning> warnings;
  std::int64_t annotation_count = 0;  // after dropping invalid ones
};

// Reads a JSON-lines corpus. Annotations whose offsets fall outside the text
// or whose surface form does not match the text slice are dropped with a
// warning. Malformed lines and duplicate doc ids throw ParseError.
ParsedCorpus parse_corpus(std::istream& in);
ParsedCorpus parse_corpus_file(const std::string& path);

void write_corpus(const std::vector<AnnotatedDocument>& docs, std::ostream& out);
std::string serialize_document(const AnnotatedDocument& doc);

// --- synthetic fixtures ----------------------------------------------------

// One slice of the generated corpus: documents dated inside `dates` that
// mention entities drawn from `entities`.
struct MixComponent {
  Period dates{1950, 2015};
  std::vector<EntityId> entities;
  int weight = 1;
};

struct FixtureMix {
  std::vector<MixComponent> components;
  std::vector<std::string> parties{"PvdA", "VVD", "CDA", "D66", "SP", "GL"};
  int max_entities_per_doc = 3;
  int max_mentions_per_entity = 2;
  // Share of documents (in percent) that mention nothing.
  int empty_doc_percent = 10;

  // Every graph entity in one component spanning 1950-2015.
  static FixtureMix whole_graph(const KnowledgeGraph& graph);
  static FixtureMix from_json(std::string_view json_text,
                              const KnowledgeGraph& graph);
};

struct MentionTruth {
  std::int64_t mentions = 0;
  std::int64_t documents = 0;

  bool operator==(const MentionTruth&) const = default;
};

struct Fixture {
  std::vector<AnnotatedDocument> documents;
  // Covers every graph entity, zero rows included.
  std::map<EntityId, MentionTruth> truth;
};

// Deterministic for (seed, n_docs, graph, mix). Throws Error(invalid_input)
// for n_docs == 0 or an empty graph.
Fixture generate_fixture(std::uint64_t seed, std::int64_t n_docs,
                         const KnowledgeGraph& graph, const FixtureMix& mix);

void write_truth(const std::map<EntityId, MentionTruth>& truth,
                 std::ostream& out);
std::map<EntityId, MentionTruth> read_truth(std::istream& in);

}  // namespace widenet

#endif  // WIDENET_INGEST_H
