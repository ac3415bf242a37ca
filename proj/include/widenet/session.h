#ifndef WIDENET_SESSION_H
#define WIDENET_SESSION_H

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "widenet/index.h"
#include "widenet/kb_graph.h"
#include "widenet/temporal_filter.h"

namespace widenet {

enum class Verdict { relevant, irrelevant, unjudged };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);

struct SessionParams {
  std::set<CategoryId> roots;
  Period period{0, 0};
  int max_depth = kDefaultMaxDepth;

  bool operator==(const SessionParams&) const = default;
};

enum class AuditAction { create, toggle_category, toggle_entity, assess };

std::string_view to_string(AuditAction a);

// One line of the append-only audit file. For toggles prior/next hold
// "selected"/"deselected"; for assessments they hold verdicts. The create
// record carries the session parameters instead.
struct AuditRecord {
  std::string ts;
  std::string session_id;
  AuditAction action = AuditAction::create;
  std::string target;
  std::optional<std::string> prior;
  std::optional<std::string> next;
  std::optional<std::string> reason;
  std::optional<SessionParams> params;

  bool operator==(const AuditRecord&) const = default;
};

std::string serialize_audit_record(const AuditRecord& record);
AuditRecord parse_audit_record(std::string_view line, std::int64_t line_no = 0);
std::vector<AuditRecord> read_audit(std::istream& in);

// Returns an ISO-8601 UTC timestamp; injectable for deterministic tests.
using Clock = std::function<std::string()>;
std::string utc_now();

struct ExportOptions {
  bool include_unjudged = false;
};

struct ExportedDocument {
  AnnotatedDocument document;  // annotations restricted to matched entities
  Verdict verdict = Verdict::unjudged;
  std::set<EntityId> matched;
};

struct ExportHeader {
  std::string session_id;
  SessionParams params;
  bool include_unjudged = false;
  std::set<CategoryId> selected_categories;
  std::set<CategoryId> deselected_categories;
  std::set<EntityId> selected_entities;
  std::set<EntityId> deselected_entities;
  std::set<EntityId> effective_query;
  std::int64_t document_count = 0;
  std::int64_t audit_records = 0;
  std::string audit_sha256;
};

struct ExportedCorpus {
  ExportHeader header;
  std::vector<ExportedDocument> documents;
};

ExportedCorpus parse_export(std::istream& in);

// Reversible query-sculpting state over one candidate tree.
//
// Selection defaults come from the temporal filter: a category starts
// selected iff it was auto-selected, an entity starts selected unless it is
// OutOfPeriod. Overrides record the user's explicit choices. An entity is in
// the effective query iff it is selected and at least one of its containing
// categories is selected. Every mutation appends to the audit log, and
// replaying the log rebuilds the same state.
class Session {
 public:
  // Throws Error(invalid_input) for empty roots or a bad depth and
  // Error(not_found) for unknown roots.
  static Session create(const KnowledgeGraph& graph, SessionParams params,
                        std::string session_id, Clock clock = utc_now);

  // Rebuilds a session from its audit records. Records are kept verbatim.
  // When `index` is given, assessments are re-validated against it.
  // Throws Error(conflict) if a record's prior state disagrees with the
  // replayed state.
  static Session replay(const KnowledgeGraph& graph,
                        const std::vector<AuditRecord>& records,
                        const CorpusIndex* index = nullptr,
                        Clock clock = utc_now);

  const std::string& id() const { return id_; }
  const SessionParams& params() const { return params_; }
  const CandidateTree& tree() const { return tree_; }

  bool category_selected(const CategoryId& category) const;
  bool entity_selected(const EntityId& entity) const;

  // Throw Error(not_found) for targets outside the candidate tree.
  void toggle_category(const CategoryId& category,
                       std::optional<std::string> reason = std::nullopt);
  void toggle_entity(const EntityId& entity,
                     std::optional<std::string> reason = std::nullopt);

  std::set<EntityId> effective_query() const;

  // Throws Error(not_found) when doc_id is not in the current result set.
  void assess_document(const CorpusIndex& index, const DocId& doc_id,
                       Verdict verdict);
  Verdict verdict(const DocId& doc_id) const;

  std::vector<RetrievedDocument> results(const CorpusIndex& index) const;
  std::set<EntityId> missing_entities(const CorpusIndex& index) const;

  // Writes the header record followed by one record per exported document.
  // Returns the number of documents written.
  std::int64_t export_corpus(const CorpusIndex& index,
                             const ExportOptions& options,
                             std::ostream& out) const;

  const std::map<CategoryId, bool>& category_overrides() const {
    return category_overrides_;
  }
  const std::map<EntityId, bool>& entity_overrides() const {
    return entity_overrides_;
  }
  const std::map<DocId, Verdict>& assessments() const { return assessments_; }
  const std::vector<AuditRecord>& audit_log() const { return audit_; }

 private:
  Session() = default;
  void apply(const AuditRecord& record, const CorpusIndex* index,
             bool check_prior);
  AuditRecord make_record(AuditAction action, std::string target) const;

  std::string id_;
  SessionParams params_;
  CandidateTree tree_;
  std::map<CategoryId, bool> category_overrides_;
  std::map<EntityId, bool> entity_overrides_;
  std::map<DocId, Verdict> assessments_;
  std::vector<AuditRecord> audit_;
  Clock clock_;
};

}  // namespace widenet

#endif  // WIDENET_SESSION_H
