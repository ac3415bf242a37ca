#ifndef WIDENET_INDEX_H
#define WIDENET_INDEX_H

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "widenet/ingest.h"
#include "widenet/temporal_filter.h"

namespace widenet {

struct Posting {
  DocId doc_id;
  std::vector<std::int64_t> offsets;  // mention begin offsets, ascending

  bool operator==(const Posting&) const = default;
};

struct FrequencyRow {
  EntityId entity;
  std::int64_t documents = 0;
  std::int64_t mentions = 0;
  bool absent = true;

  bool operator==(const FrequencyRow&) const = default;
};

// One row per queried entity, sorted by entity id.
using FrequencyReport = std::vector<FrequencyRow>;

struct PreviewSnippet {
  DocId doc_id;
  EntityId entity;
  std::string snippet;
  std::int64_t mention_offset = 0;   // in the document, code points
  std::int64_t snippet_offset = 0;   // where the snippet starts in the document
  std::int64_t mention_length = 0;

  bool operator==(const PreviewSnippet&) const = default;
};

struct PreviewOptions {
  int per_entity_limit = 3;
  int window = 150;  // code points on each side of the mention
};

struct RetrievedDocument {
  DocId doc_id;
  std::set<EntityId> matched;
  std::int64_t mentions = 0;

  bool operator==(const RetrievedDocument&) const = default;
};

enum class Dimension { Year, Party };

// Throws Error(invalid_input) for anything but "year" or "party".
Dimension parse_dimension(std::string_view text);
std::string_view to_string(Dimension d);

struct AggregateBucket {
  std::int64_t documents = 0;
  std::int64_t mentions = 0;

  bool operator==(const AggregateBucket&) const = default;
};

// Snippet text for a mention at code-point range [begin, end) with up to
// `window` code points of context per side. A side cut that lands inside a
// word is pulled back to the nearest whitespace within the window; the
// result is trimmed of surrounding whitespace. Returns the snippet and its
// starting offset.
std::pair<std::u32string, std::int64_t> snippet_window(std::u32string_view text,
                                                       std::int64_t begin,
                                                       std::int64_t end,
                                                       int window);

// Entity-centric in-memory index over an annotated corpus. Immutable after
// construction.
class CorpusIndex {
 public:
  CorpusIndex() = default;
  // Throws Error(conflict) on duplicate doc ids.
  explicit CorpusIndex(std::vector<AnnotatedDocument> docs);

  const std::vector<AnnotatedDocument>& documents() const { return docs_; }
  const AnnotatedDocument* find(std::string_view doc_id) const;
  const std::map<EntityId, std::vector<Posting>>& postings() const {
    return postings_;
  }
  const std::map<int, std::vector<DocId>>& by_year() const { return by_year_; }
  const std::map<std::string, std::vector<DocId>>& by_party() const {
    return by_party_;
  }
  std::int64_t annotation_count() const { return annotation_count_; }

  FrequencyReport frequencies(const std::set<EntityId>& entities) const;

  // Snippets per entity, newest documents first.
  std::map<EntityId, std::vector<PreviewSnippet>> preview(
      const std::set<EntityId>& entities, const PreviewOptions& options = {}) const;

  // Documents mentioning any of `entities`, ordered by (date desc, doc_id
  // asc). `date_filter` keeps documents whose year lies in the period.
  std::vector<RetrievedDocument> retrieve(
      const std::set<EntityId>& entities,
      const std::optional<Period>& date_filter = std::nullopt) const;

  std::map<std::string, AggregateBucket> aggregate(
      const std::set<EntityId>& entities, Dimension dimension) const;

  // Versioned snapshot. load_snapshot rejects unknown versions and snapshots
  // whose postings disagree with the stored documents.
  void save_snapshot(std::ostream& out) const;
  static CorpusIndex load_snapshot(std::istream& in);

 private:
  std::vector<AnnotatedDocument> docs_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::map<EntityId, std::vector<Posting>> postings_;
  std::map<int, std::vector<DocId>> by_year_;
  std::map<std::string, std::vector<DocId>> by_party_;
  std::int64_t annotation_count_ = 0;
};

CorpusIndex build_index(std::vector<AnnotatedDocument> docs);

inline constexpr int kSnapshotVersion = 1;

}  // namespace widenet

#endif  // WIDENET_INDEX_H
