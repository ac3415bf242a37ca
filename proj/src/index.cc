#include "widenet/index.h"

#include <algorithm>

#include "json_codec.h"
#include "widenet/error.h"
#include "widenet/utf8.h"

namespace widenet {

Dimension parse_dimension(std::string_view text) {
  if (text == "year") return Dimension::Year;
  if (text == "party") return Dimension::Party;
  throw Error(ErrorCode::invalid_input,
              "unsupported dimension '" + std::string(text) +
                  "' (expected year or party)");
}

std::string_view to_string(Dimension d) {
  return d == Dimension::Year ? "year" : "party";
}

std::pair<std::u32string, std::int64_t> snippet_window(std::u32string_view text,
                                                       std::int64_t begin,
                                                       std::int64_t end,
                                                       int window) {
  const auto n = static_cast<std::int64_t>(text.size());
  auto space = [&](std::int64_t i) { return utf8::is_space(text[i]); };

  std::int64_t s = std::max<std::int64_t>(0, begin - window);
  if (s > 0 && !space(s - 1) && !space(s)) {
    std::int64_t i = s;
    while (i < begin && !space(i)) ++i;
    s = i < begin ? i + 1 : begin;
  }
  std::int64_t t = std::min<std::int64_t>(n, end + window);
  if (t < n && !space(t - 1) && !space(t)) {
    std::int64_t i = t - 1;
    while (i >= end && !space(i)) --i;
    t = i >= end ? i : end;
  }
  while (s < begin && space(s)) ++s;
  while (t > end && space(t - 1)) --t;
  return {std::u32string(text.substr(s, t - s)), s};
}

CorpusIndex::CorpusIndex(std::vector<AnnotatedDocument> docs)
    : docs_(std::move(docs)) {
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    const auto& doc = docs_[i];
    if (!doc_index_.emplace(doc.doc_id, i).second) {
      throw Error(ErrorCode::conflict, "duplicate doc_id '" + doc.doc_id + "'");
    }
    by_year_[doc.date.year].push_back(doc.doc_id);
    by_party_[doc.party].push_back(doc.doc_id);
    std::map<EntityId, std::vector<std::int64_t>> local;
    for (const auto& a : doc.annotations) local[a.entity].push_back(a.begin);
    for (auto& [entity, offsets] : local) {
      std::sort(offsets.begin(), offsets.end());
      postings_[entity].push_back({doc.doc_id, std::move(offsets)});
    }
    annotation_count_ += static_cast<std::int64_t>(doc.annotations.size());
  }
}

CorpusIndex build_index(std::vector<AnnotatedDocument> docs) {
  return CorpusIndex(std::move(docs));
}

const AnnotatedDocument* CorpusIndex::find(std::string_view doc_id) const {
  auto it = doc_index_.find(std::string(doc_id));
  return it == doc_index_.end() ? nullptr : &docs_[it->second];
}

FrequencyReport CorpusIndex::frequencies(
    const std::set<EntityId>& entities) const {
  FrequencyReport report;
  report.reserve(entities.size());
  for (const auto& e : entities) {
    FrequencyRow row{e, 0, 0, true};
    auto it = postings_.find(e);
    if (it != postings_.end()) {
      row.documents = static_cast<std::int64_t>(it->second.size());
      for (const auto& p : it->second) {
        row.mentions += static_cast<std::int64_t>(p.offsets.size());
      }
    }
    row.absent = row.mentions == 0;
    report.push_back(std::move(row));
  }
  return report;
}

std::map<EntityId, std::vector<PreviewSnippet>> CorpusIndex::preview(
    const std::set<EntityId>& entities, const PreviewOptions& options) const {
  if (options.per_entity_limit < 1 || options.window < 1) {
    throw Error(ErrorCode::invalid_input,
                "preview limit and window must be positive");
  }
  std::map<EntityId, std::vector<PreviewSnippet>> out;
  for (const auto& e : entities) {
    auto& snippets = out[e];
    auto it = postings_.find(e);
    if (it == postings_.end()) continue;
    std::vector<const AnnotatedDocument*> docs;
    for (const auto& p : it->second) docs.push_back(find(p.doc_id));
    std::sort(docs.begin(), docs.end(),
              [](const AnnotatedDocument* a, const AnnotatedDocument* b) {
                if (a->date != b->date) return a->date > b->date;
                return a->doc_id < b->doc_id;
              });
    for (const AnnotatedDocument* doc : docs) {
      if (static_cast<int>(snippets.size()) >= options.per_entity_limit) break;
      std::u32string text = *utf8::decode(doc->text);
      for (const auto& a : doc->annotations) {
        if (a.entity != e) continue;
        if (static_cast<int>(snippets.size()) >= options.per_entity_limit) break;
        auto [window, start] = snippet_window(text, a.begin, a.end, options.window);
        snippets.push_back({doc->doc_id, e, utf8::encode(window), a.begin, start,
                            a.end - a.begin});
      }
    }
  }
  return out;
}

std::vector<RetrievedDocument> CorpusIndex::retrieve(
    const std::set<EntityId>& entities,
    const std::optional<Period>& date_filter) const {
  std::map<std::size_t, RetrievedDocument> hits;
  for (const auto& e : entities) {
    auto it = postings_.find(e);
    if (it == postings_.end()) continue;
    for (const auto& p : it->second) {
      std::size_t idx = doc_index_.at(p.doc_id);
      if (date_filter && !date_filter->contains(docs_[idx].date.year)) continue;
      auto& hit = hits[idx];
      hit.doc_id = p.doc_id;
      hit.matched.insert(e);
      hit.mentions += static_cast<std::int64_t>(p.offsets.size());
    }
  }
  std::vector<std::pair<std::size_t, RetrievedDocument>> ordered(
      std::make_move_iterator(hits.begin()), std::make_move_iterator(hits.end()));
  std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
    const auto& da = docs_[a.first];
    const auto& db = docs_[b.first];
    if (da.date != db.date) return da.date > db.date;
    return da.doc_id < db.doc_id;
  });
  std::vector<RetrievedDocument> out;
  out.reserve(ordered.size());
  for (auto& [idx, hit] : ordered) out.push_back(std::move(hit));
  return out;
}

std::map<std::string, AggregateBucket> CorpusIndex::aggregate(
    const std::set<EntityId>& entities, Dimension dimension) const {
  std::map<std::string, AggregateBucket> out;
  for (const auto& hit : retrieve(entities)) {
    const AnnotatedDocument* doc = find(hit.doc_id);
    std::string key = dimension == Dimension::Year
                          ? std::to_string(doc->date.year)
                          : doc->party;
    auto& bucket = out[key];
    ++bucket.documents;
    bucket.mentions += hit.mentions;
  }
  return out;
}

void CorpusIndex::save_snapshot(std::ostream& out) const {
  codec::Json j;
  j["format"] = "widenet-index";
  j["version"] = kSnapshotVersion;
  codec::Json docs = codec::Json::array();
  for (const auto& d : docs_) docs.push_back(codec::to_json(d));
  j["documents"] = std::move(docs);
  codec::Json postings = codec::Json::object();
  for (const auto& [entity, list] : postings_) {
    codec::Json rows = codec::Json::array();
    for (const auto& p : list) rows.push_back({p.doc_id, p.offsets});
    postings[entity] = std::move(rows);
  }
  j["postings"] = std::move(postings);
  out << j.dump() << '\n';
}

CorpusIndex CorpusIndex::load_snapshot(std::istream& in) {
  codec::Json j;
  try {
    j = codec::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("snapshot: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "widenet-index") {
    throw Error(ErrorCode::invalid_input, "snapshot: not a widenet index");
  }
  if (j.value("version", 0) != kSnapshotVersion) {
    throw Error(ErrorCode::invalid_input,
                "snapshot: unsupported version " + j.value("version", codec::Json()).dump());
  }
  std::vector<AnnotatedDocument> docs;
  std::vector<IngestWarning> warnings;
  std::int64_t n = 0;
  for (const auto& record : j.at("documents")) {
    docs.push_back(codec::document_from_json(record, ++n, warnings));
  }
  if (!warnings.empty()) {
    throw Error(ErrorCode::invalid_input,
                "snapshot: invalid annotation in " + warnings.front().doc_id);
  }
  CorpusIndex index(std::move(docs));

  std::map<EntityId, std::vector<Posting>> stored;
  try {
    for (const auto& [entity, rows] : j.at("postings").items()) {
      auto& list = stored[entity];
      for (const auto& row : rows) {
        list.push_back({row.at(0).get<std::string>(),
                        row.at(1).get<std::vector<std::int64_t>>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("snapshot: ") + e.what());
  }
  if (stored != index.postings_) {
    throw Error(ErrorCode::invalid_input,
                "snapshot: postings disagree with stored documents");
  }
  return index;
}

}  // namespace widenet
