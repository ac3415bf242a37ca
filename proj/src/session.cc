#include "widenet/session.h"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>

#include "json_codec.h"
#include "widenet/error.h"

namespace widenet {

using codec::Json;

namespace {

constexpr const char* kSelected = "selected";
constexpr const char* kDeselected = "deselected";

const char* flag_name(bool selected) { return selected ? kSelected : kDeselected; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::internal, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

Json params_to_json(const SessionParams& p) {
  Json j;
  j["roots"] = p.roots;
  j["period"] = {{"start", p.period.start_year()}, {"end", p.period.end_year()}};
  j["max_depth"] = p.max_depth;
  return j;
}

SessionParams params_from_json(const Json& j) {
  return {j.at("roots").get<std::set<CategoryId>>(),
          Period(j.at("period").at("start").get<int>(),
                 j.at("period").at("end").get<int>()),
          j.at("max_depth").get<int>()};
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::relevant: return "relevant";
    case Verdict::irrelevant: return "irrelevant";
    case Verdict::unjudged: return "unjudged";
  }
  return "unjudged";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "relevant") return Verdict::relevant;
  if (text == "irrelevant") return Verdict::irrelevant;
  if (text == "unjudged") return Verdict::unjudged;
  return std::nullopt;
}

std::string_view to_string(AuditAction a) {
  switch (a) {
    case AuditAction::create: return "create";
    case AuditAction::toggle_category: return "toggle_category";
    case AuditAction::toggle_entity: return "toggle_entity";
    case AuditAction::assess: return "assess";
  }
  return "create";
}

std::string utc_now() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

// --- audit records -----------------------------------------------------------

std::string serialize_audit_record(const AuditRecord& r) {
  Json j;
  j["ts"] = r.ts;
  j["session_id"] = r.session_id;
  j["action"] = to_string(r.action);
  j["target"] = r.target;
  j["prior"] = r.prior ? Json(*r.prior) : Json(nullptr);
  if (r.action == AuditAction::create && r.params) {
    j["new"] = params_to_json(*r.params);
  } else {
    j["new"] = r.next ? Json(*r.next) : Json(nullptr);
  }
  if (r.reason) j["reason"] = *r.reason;
  return j.dump();
}

AuditRecord parse_audit_record(std::string_view line, std::int64_t line_no) {
  try {
    Json j = Json::parse(line);
    AuditRecord r;
    r.ts = j.at("ts").get<std::string>();
    r.session_id = j.at("session_id").get<std::string>();
    auto action = j.at("action").get<std::string>();
    if (action == "create") r.action = AuditAction::create;
    else if (action == "toggle_category") r.action = AuditAction::toggle_category;
    else if (action == "toggle_entity") r.action = AuditAction::toggle_entity;
    else if (action == "assess") r.action = AuditAction::assess;
    else throw ParseError(line_no, "unknown audit action '" + action + "'");
    r.target = j.at("target").get<std::string>();
    if (!j.at("prior").is_null()) r.prior = j.at("prior").get<std::string>();
    const Json& next = j.at("new");
    if (r.action == AuditAction::create) {
      r.params = params_from_json(next);
    } else if (!next.is_null()) {
      r.next = next.get<std::string>();
    }
    if (j.contains("reason") && !j.at("reason").is_null()) {
      r.reason = j.at("reason").get<std::string>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("audit record: ") + e.what());
  }
}

std::vector<AuditRecord> read_audit(std::istream& in) {
  std::vector<AuditRecord> out;
  std::string line;
  std::int64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_audit_record(line, n));
  }
  return out;
}

// --- Session -----------------------------------------------------------------

Session Session::create(const KnowledgeGraph& graph, SessionParams params,
                        std::string session_id, Clock clock) {
  if (params.roots.empty()) {
    throw Error(ErrorCode::invalid_input, "at least one root category required");
  }
  if (params.max_depth < 1) {
    throw Error(ErrorCode::invalid_input, "max_depth must be positive");
  }
  Session s;
  s.id_ = std::move(session_id);
  s.clock_ = std::move(clock);
  s.tree_ = candidate_set(graph, params.roots, params.period, params.max_depth);
  s.params_ = std::move(params);
  AuditRecord r = s.make_record(AuditAction::create, s.id_);
  r.params = s.params_;
  s.audit_.push_back(std::move(r));
  return s;
}

Session Session::replay(const KnowledgeGraph& graph,
                        const std::vector<AuditRecord>& records,
                        const CorpusIndex* index, Clock clock) {
  if (records.empty() || records.front().action != AuditAction::create ||
      !records.front().params) {
    throw Error(ErrorCode::invalid_input,
                "audit log must start with a create record");
  }
  Session s = create(graph, *records.front().params,
                     records.front().session_id, std::move(clock));
  s.audit_ = {records.front()};
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.session_id != s.id_) {
      throw Error(ErrorCode::conflict, "audit record " + std::to_string(i) +
                                           " belongs to session " + r.session_id);
    }
    if (r.action == AuditAction::create) {
      throw Error(ErrorCode::conflict, "duplicate create record in audit log");
    }
    s.apply(r, index, true);
    s.audit_.push_back(r);
  }
  return s;
}

AuditRecord Session::make_record(AuditAction action, std::string target) const {
  AuditRecord r;
  r.ts = clock_ ? clock_() : utc_now();
  r.session_id = id_;
  r.action = action;
  r.target = std::move(target);
  return r;
}

bool Session::category_selected(const CategoryId& category) const {
  auto it = category_overrides_.find(category);
  if (it != category_overrides_.end()) return it->second;
  auto d = tree_.decisions.find(category);
  return d != tree_.decisions.end() && d->second.auto_selected;
}

bool Session::entity_selected(const EntityId& entity) const {
  auto it = entity_overrides_.find(entity);
  if (it != entity_overrides_.end()) return it->second;
  auto c = tree_.classes.find(entity);
  return c != tree_.classes.end() && c->second != TemporalClass::OutOfPeriod;
}

void Session::apply(const AuditRecord& r, const CorpusIndex* index,
                    bool check_prior) {
  auto check = [&](const std::string& current) {
    if (check_prior && r.prior && *r.prior != current) {
      throw Error(ErrorCode::conflict,
                  std::string(to_string(r.action)) + " on '" + r.target +
                      "': recorded prior '" + *r.prior + "' but state is '" +
                      current + "'");
    }
  };
  auto flag = [&](bool current) -> bool {
    if (!r.next || (*r.next != kSelected && *r.next != kDeselected)) {
      throw Error(ErrorCode::invalid_input,
                  "toggle record on '" + r.target + "' has no valid new state");
    }
    bool next = *r.next == kSelected;
    if (next == current) {
      throw Error(ErrorCode::conflict,
                  "toggle record on '" + r.target + "' does not flip the flag");
    }
    return next;
  };

  switch (r.action) {
    case AuditAction::create:
      throw Error(ErrorCode::conflict, "create record applied to live session");
    case AuditAction::toggle_category: {
      if (!tree_.has_category(r.target)) {
        throw Error(ErrorCode::not_found,
                    "category '" + r.target + "' is not in the candidate tree");
      }
      bool current = category_selected(r.target);
      check(flag_name(current));
      category_overrides_[r.target] = flag(current);
      break;
    }
    case AuditAction::toggle_entity: {
      if (!tree_.has_entity(r.target)) {
        throw Error(ErrorCode::not_found,
                    "entity '" + r.target + "' is not in the candidate tree");
      }
      bool current = entity_selected(r.target);
      check(flag_name(current));
      entity_overrides_[r.target] = flag(current);
      break;
    }
    case AuditAction::assess: {
      auto v = r.next ? parse_verdict(*r.next) : std::nullopt;
      if (!v) {
        throw Error(ErrorCode::invalid_input,
                    "assess record on '" + r.target + "' has no valid verdict");
      }
      if (index) {
        bool found = false;
        for (const auto& hit : results(*index)) {
          if (hit.doc_id == r.target) {
            found = true;
            break;
          }
        }
        if (!found) {
          throw Error(ErrorCode::not_found, "document '" + r.target +
                                                "' is not in the current results");
        }
      }
      check(std::string(to_string(verdict(r.target))));
      assessments_[r.target] = *v;
      break;
    }
  }
}

void Session::toggle_category(const CategoryId& category,
                              std::optional<std::string> reason) {
  if (!tree_.has_category(category)) {
    throw Error(ErrorCode::not_found,
                "category '" + category + "' is not in the candidate tree");
  }
  AuditRecord r = make_record(AuditAction::toggle_category, category);
  bool current = category_selected(category);
  r.prior = flag_name(current);
  r.next = flag_name(!current);
  r.reason = std::move(reason);
  apply(r, nullptr, true);
  audit_.push_back(std::move(r));
}

void Session::toggle_entity(const EntityId& entity,
                            std::optional<std::string> reason) {
  if (!tree_.has_entity(entity)) {
    throw Error(ErrorCode::not_found,
                "entity '" + entity + "' is not in the candidate tree");
  }
  AuditRecord r = make_record(AuditAction::toggle_entity, entity);
  bool current = entity_selected(entity);
  r.prior = flag_name(current);
  r.next = flag_name(!current);
  r.reason = std::move(reason);
  apply(r, nullptr, true);
  audit_.push_back(std::move(r));
}

std::set<EntityId> Session::effective_query() const {
  std::set<EntityId> out;
  for (const auto& [entity, categories] : tree_.containing) {
    if (!entity_selected(entity)) continue;
    for (const auto& c : categories) {
      if (category_selected(c)) {
        out.insert(entity);
        break;
      }
    }
  }
  return out;
}

void Session::assess_document(const CorpusIndex& index, const DocId& doc_id,
                              Verdict v) {
  AuditRecord r = make_record(AuditAction::assess, doc_id);
  r.prior = std::string(to_string(verdict(doc_id)));
  r.next = std::string(to_string(v));
  apply(r, &index, true);
  audit_.push_back(std::move(r));
}

Verdict Session::verdict(const DocId& doc_id) const {
  auto it = assessments_.find(doc_id);
  return it == assessments_.end() ? Verdict::unjudged : it->second;
}

std::vector<RetrievedDocument> Session::results(const CorpusIndex& index) const {
  return index.retrieve(effective_query());
}

std::set<EntityId> Session::missing_entities(const CorpusIndex& index) const {
  std::set<EntityId> out;
  for (const auto& row : index.frequencies(effective_query())) {
    if (row.mentions == 0) out.insert(row.entity);
  }
  return out;
}

// --- export ------------------------------------------------------------------

std::int64_t Session::export_corpus(const CorpusIndex& index,
                                    const ExportOptions& options,
                                    std::ostream& out) const {
  std::vector<std::pair<const RetrievedDocument*, Verdict>> chosen;
  auto hits = results(index);
  for (const auto& hit : hits) {
    Verdict v = verdict(hit.doc_id);
    if (v == Verdict::relevant ||
        (v == Verdict::unjudged && options.include_unjudged)) {
      chosen.emplace_back(&hit, v);
    }
  }

  std::string audit_text;
  for (const auto& r : audit_) audit_text += serialize_audit_record(r) + "\n";

  Json header;
  header["record"] = "header";
  header["format"] = "widenet-export";
  header["version"] = 1;
  header["session_id"] = id_;
  Json params = params_to_json(params_);
  for (auto& [k, v] : params.items()) header[k] = v;
  header["include_unjudged"] = options.include_unjudged;
  std::set<CategoryId> cat_on, cat_off;
  for (const auto& [c, d] : tree_.decisions) {
    (category_selected(c) ? cat_on : cat_off).insert(c);
  }
  std::set<EntityId> ent_on, ent_off;
  for (const auto& [e, cls] : tree_.classes) {
    (entity_selected(e) ? ent_on : ent_off).insert(e);
  }
  header["selected_categories"] = cat_on;
  header["deselected_categories"] = cat_off;
  header["selected_entities"] = ent_on;
  header["deselected_entities"] = ent_off;
  header["effective_query"] = effective_query();
  header["documents"] = chosen.size();
  header["audit"] = {{"records", audit_.size()},
                     {"sha256", sha256_hex(audit_text)}};
  out << header.dump() << '\n';

  for (const auto& [hit, v] : chosen) {
    AnnotatedDocument doc = *index.find(hit->doc_id);
    std::erase_if(doc.annotations, [&](const EntityAnnotation& a) {
      return !hit->matched.count(a.entity);
    });
    Json j = codec::to_json(doc);
    j["verdict"] = to_string(v);
    j["matched_entities"] = hit->matched;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::internal, "export write failed");
  return static_cast<std::int64_t>(chosen.size());
}

ExportedCorpus parse_export(std::istream& in) {
  ExportedCorpus out;
  std::string line;
  std::int64_t n = 0;
  bool have_header = false;
  std::vector<IngestWarning> warnings;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("record", "") != "header" ||
            j.value("format", "") != "widenet-export") {
          throw ParseError(n, "export must start with a header record");
        }
        auto& h = out.header;
        h.session_id = j.at("session_id").get<std::string>();
        h.params = params_from_json(j);
        h.include_unjudged = j.at("include_unjudged").get<bool>();
        h.selected_categories = j.at("selected_categories").get<std::set<CategoryId>>();
        h.deselected_categories =
            j.at("deselected_categories").get<std::set<CategoryId>>();
        h.selected_entities = j.at("selected_entities").get<std::set<EntityId>>();
        h.deselected_entities = j.at("deselected_entities").get<std::set<EntityId>>();
        h.effective_query = j.at("effective_query").get<std::set<EntityId>>();
        h.document_count = j.at("documents").get<std::int64_t>();
        h.audit_records = j.at("audit").at("records").get<std::int64_t>();
        h.audit_sha256 = j.at("audit").at("sha256").get<std::string>();
        have_header = true;
        continue;
      }
      ExportedDocument doc;
      doc.document = codec::document_from_json(j, n, warnings);
      auto v = parse_verdict(j.at("verdict").get<std::string>());
      if (!v) throw ParseError(n, "invalid verdict");
      doc.verdict = *v;
      doc.matched = j.at("matched_entities").get<std::set<EntityId>>();
      out.documents.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, std::string("export record: ") + e.what());
    }
  }
  if (!have_header) throw ParseError(n, "export has no header record");
  if (!warnings.empty()) {
    throw ParseError(warnings.front().line, warnings.front().message);
  }
  if (out.header.document_count != static_cast<std::int64_t>(out.documents.size())) {
    throw Error(ErrorCode::invalid_input,
                "export header announces " +
                    std::to_string(out.header.document_count) +
                    " documents but file has " +
                    std::to_string(out.documents.size()));
  }
  return out;
}

}  // namespace widenet
