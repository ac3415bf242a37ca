#include "widenet/ingest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <unordered_set>

#include "json_codec.h"
#include "widenet/error.h"
#include "widenet/utf8.h"

namespace widenet {

// --- Date ------------------------------------------------------------------

std::optional<Date> Date::parse(std::string_view text) {
  auto t = text.find('T');
  if (t != std::string_view::npos) text = text.substr(0, t);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto number = [&](std::size_t pos, std::size_t len) -> int {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return -1;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  Date d{number(0, 4), number(5, 2), number(8, 2)};
  if (d.year < 0 || d.month < 1 || d.month > 12 || d.day < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
  int max_day = d.month == 2 && !leap ? 28 : kDays[d.month - 1];
  if (d.day > max_day) return std::nullopt;
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

// --- codec -----------------------------------------------------------------

namespace codec {

Json to_json(const EntityAnnotation& a) {
  Json j;
  j["entity"] = a.entity;
  j["begin"] = a.begin;
  j["end"] = a.end;
  j["surface"] = a.surface;
  j["confidence"] = a.confidence;
  return j;
}

Json to_json(const AnnotatedDocument& doc) {
  Json j;
  j["doc_id"] = doc.doc_id;
  j["text"] = doc.text;
  j["date"] = doc.date.to_string();
  j["speaker"] = doc.speaker;
  j["party"] = doc.party;
  j["debate_title"] = doc.debate_title;
  Json anns = Json::array();
  for (const auto& a : doc.annotations) anns.push_back(to_json(a));
  j["annotations"] = std::move(anns);
  return j;
}

namespace {

const Json& require(const Json& obj, const char* key, std::int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(line, std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_string(const Json& obj, const char* key, std::int64_t line) {
  const Json& v = require(obj, key, line);
  if (!v.is_string()) {
    throw ParseError(line, std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::int64_t require_integer(const Json& obj, const char* key,
                             std::int64_t line) {
  const Json& v = require(obj, key, line);
  if (!v.is_number_integer()) {
    throw ParseError(line, std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace

AnnotatedDocument document_from_json(const Json& record, std::int64_t line,
                                     std::vector<IngestWarning>& warnings) {
  if (!record.is_object()) throw ParseError(line, "record is not an object");
  AnnotatedDocument doc;
  doc.doc_id = require_string(record, "doc_id", line);
  if (doc.doc_id.empty()) throw ParseError(line, "empty doc_id");
  doc.text = require_string(record, "text", line);
  auto decoded = utf8::decode(doc.text);
  if (!decoded) throw ParseError(line, "text is not valid UTF-8");
  auto date = Date::parse(require_string(record, "date", line));
  if (!date) throw ParseError(line, "field 'date' is not an ISO-8601 date");
  doc.date = *date;
  doc.speaker = require_string(record, "speaker", line);
  doc.party = require_string(record, "party", line);
  doc.debate_title = require_string(record, "debate_title", line);

  const Json& anns = require(record, "annotations", line);
  if (!anns.is_array()) throw ParseError(line, "field 'annotations' must be an array");
  const auto text_len = static_cast<std::int64_t>(decoded->size());
  std::size_t index = 0;
  for (const Json& a : anns) {
    if (!a.is_object()) throw ParseError(line, "annotation is not an object");
    EntityAnnotation ann;
    ann.entity = require_string(a, "entity", line);
    ann.begin = require_integer(a, "begin", line);
    ann.end = require_integer(a, "end", line);
    ann.surface = require_string(a, "surface", line);
    const Json& conf = require(a, "confidence", line);
    if (!conf.is_number()) {
      throw ParseError(line, "field 'confidence' must be a number");
    }
    ann.confidence = conf.get<double>();

    auto drop = [&](const std::string& why) {
      warnings.push_back({line, doc.doc_id,
                          "annotation " + std::to_string(index) + " (" +
                              ann.entity + ") dropped: " + why});
    };
    ++index;
    if (ann.entity.empty()) {
      drop("empty entity id");
    } else if (ann.begin < 0 || ann.begin >= ann.end || ann.end > text_len) {
      drop("offsets [" + std::to_string(ann.begin) + ", " +
           std::to_string(ann.end) + ") out of bounds for text length " +
           std::to_string(text_len));
    } else if (utf8::encode(std::u32string_view(*decoded).substr(
                   ann.begin, ann.end - ann.begin)) != ann.surface) {
      drop("surface form does not match text");
    } else if (!(ann.confidence >= 0.0 && ann.confidence <= 1.0)) {
      drop("confidence outside [0, 1]");
    } else {
      doc.annotations.push_back(std::move(ann));
    }
  }
  std::stable_sort(doc.annotations.begin(), doc.annotations.end(),
                   [](const EntityAnnotation& x, const EntityAnnotation& y) {
                     return x.begin < y.begin;
                   });
  return doc;
}

}  // namespace codec

// --- corpus files ------------------------------------------------------------

ParsedCorpus parse_corpus(std::istream& in) {
  ParsedCorpus out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    codec::Json record;
    try {
      record = codec::Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    auto doc = codec::document_from_json(record, line_no, out.warnings);
    if (!seen.insert(doc.doc_id).second) {
      throw ParseError(line_no, "duplicate doc_id '" + doc.doc_id + "'");
    }
    out.annotation_count += static_cast<std::int64_t>(doc.annotations.size());
    out.documents.push_back(std::move(doc));
  }
  if (in.bad()) throw Error(ErrorCode::internal, "read error in corpus");
  return out;
}

ParsedCorpus parse_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open corpus " + path);
  return parse_corpus(in);
}

std::string serialize_document(const AnnotatedDocument& doc) {
  return codec::to_json(doc).dump();
}

void write_corpus(const std::vector<AnnotatedDocument>& docs,
                  std::ostream& out) {
  for (const auto& d : docs) out << serialize_document(d) << '\n';
}

// --- fixtures ----------------------------------------------------------------

namespace {

// Portable bounded draws; std::uniform_int_distribution is
// implementation-defined and would make fixtures differ across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int between(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

const std::vector<std::string> kFirstNames = {
    "Anna", "Bram", "Carla", "Dirk", "Els", "Frits", "Greetje", "Hans",
    "Ineke", "Joost", "Karin", "Lodewijk", "Marieke", "Niels", "Oda", "Pieter"};
const std::vector<std::string> kLastNames = {
    "de Vries", "Jansen", "Bakker", "Visser", "Smit", "Meijer", "de Boer",
    "Mulder", "de Groot", "Bos", "Vos", "Peters", "Hendriks", "van Dijk"};
const std::vector<std::string> kDebateTopics = {
    "education", "the national budget", "cultural heritage", "defence",
    "foreign affairs", "the history curriculum", "maritime policy",
    "commemoration", "museum funding", "public broadcasting"};
const std::vector<std::string> kFiller = {
    "The chamber resumed the session.",
    "The motion was put to a vote.",
    "The speaker thanked the minister for the answers.",
    "Several members asked for clarification.",
    "The debate was adjourned until the next week.",
    "The minister promised a written response.",
    "This point deserves more attention.",
    "The committee will report back to the chamber."};
const std::vector<std::pair<std::string, std::string>> kMentionTemplates = {
    {"The member recalled ", " in the debate."},
    {"According to the minister, ", " remains relevant today."},
    {"", " was cited as an example."},
    {"Several speakers referred to ", "."},
    {"One cannot discuss this without mentioning ", "."},
    {"The legacy of ", " was debated at length."}};

std::string surface_for(const EntityNode& e) {
  if (!e.label.empty()) return e.label;
  std::string s = e.id;
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

class TextBuilder {
 public:
  void append(const std::string& s) {
    if (!text_.empty()) {
      text_ += ' ';
      ++length_;
    }
    raw(s);
  }
  void raw(const std::string& s) {
    text_ += s;
    length_ += static_cast<std::int64_t>(*utf8::length(s));
  }
  std::int64_t length() const { return length_; }
  std::string take() { return std::move(text_); }

 private:
  std::string text_;
  std::int64_t length_ = 0;
};

}  // namespace

FixtureMix FixtureMix::whole_graph(const KnowledgeGraph& graph) {
  FixtureMix mix;
  MixComponent all;
  for (const auto& e : graph.entities()) all.entities.push_back(e.id);
  mix.components.push_back(std::move(all));
  return mix;
}

FixtureMix FixtureMix::from_json(std::string_view json_text,
                                 const KnowledgeGraph& graph) {
  codec::Json j;
  try {
    j = codec::Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("fixture mix: ") + e.what());
  }
  FixtureMix mix;
  try {
    if (j.contains("parties")) {
      mix.parties = j.at("parties").get<std::vector<std::string>>();
    }
    mix.max_entities_per_doc =
        j.value("max_entities_per_doc", mix.max_entities_per_doc);
    mix.max_mentions_per_entity =
        j.value("max_mentions_per_entity", mix.max_mentions_per_entity);
    mix.empty_doc_percent = j.value("empty_doc_percent", mix.empty_doc_percent);
    for (const auto& c : j.at("components")) {
      MixComponent comp{Period(c.at("dates").at(0).get<int>(),
                               c.at("dates").at(1).get<int>()),
                        c.at("entities").get<std::vector<EntityId>>(),
                        c.value("weight", 1)};
      for (const auto& e : comp.entities) {
        if (!graph.has_entity(e)) {
          throw Error(ErrorCode::not_found, "fixture mix: unknown entity '" + e + "'");
        }
      }
      mix.components.push_back(std::move(comp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("fixture mix: ") + e.what());
  }
  return mix;
}

Fixture generate_fixture(std::uint64_t seed, std::int64_t n_docs,
                         const KnowledgeGraph& graph, const FixtureMix& mix) {
  if (n_docs <= 0) throw Error(ErrorCode::invalid_input, "n_docs must be positive");
  if (graph.entities().empty()) {
    throw Error(ErrorCode::invalid_input, "graph has no entities");
  }
  if (mix.components.empty() || mix.parties.empty() ||
      mix.max_entities_per_doc < 1 || mix.max_mentions_per_entity < 1) {
    throw Error(ErrorCode::invalid_input, "fixture mix is incomplete");
  }
  int total_weight = 0;
  for (const auto& c : mix.components) {
    if (c.weight < 1) throw Error(ErrorCode::invalid_input, "mix weight must be >= 1");
    total_weight += c.weight;
  }

  Rng rng(seed);
  Fixture out;
  for (const auto& e : graph.entities()) out.truth[e.id] = {};

  for (std::int64_t n = 0; n < n_docs; ++n) {
    int ticket = rng.between(0, total_weight - 1);
    const MixComponent* comp = &mix.components.front();
    for (const auto& c : mix.components) {
      if (ticket < c.weight) {
        comp = &c;
        break;
      }
      ticket -= c.weight;
    }

    AnnotatedDocument doc;
    char id[32];
    std::snprintf(id, sizeof(id), "fx-%05lld", static_cast<long long>(n + 1));
    doc.doc_id = id;
    doc.date = {rng.between(comp->dates.start_year(), comp->dates.end_year()),
                rng.between(1, 12), rng.between(1, 28)};
    doc.party = rng.pick(mix.parties);
    doc.speaker = rng.pick(kFirstNames) + " " + rng.pick(kLastNames);
    doc.debate_title = "Debate on " + rng.pick(kDebateTopics);

    std::vector<EntityId> chosen;
    bool empty = comp->entities.empty() ||
                 rng.between(0, 99) < mix.empty_doc_percent;
    if (!empty) {
      int k = rng.between(1, std::min<int>(mix.max_entities_per_doc,
                                           static_cast<int>(comp->entities.size())));
      while (static_cast<int>(chosen.size()) < k) {
        const auto& e = rng.pick(comp->entities);
        if (std::find(chosen.begin(), chosen.end(), e) == chosen.end()) {
          chosen.push_back(e);
        }
      }
    }
    std::vector<const EntityNode*> mentions;
    for (const auto& e : chosen) {
      int m = rng.between(1, mix.max_mentions_per_entity);
      for (int i = 0; i < m; ++i) mentions.push_back(graph.find_entity(e));
    }
    for (std::size_t i = mentions.size(); i > 1; --i) {
      std::swap(mentions[i - 1], mentions[rng.below(i)]);
    }

    TextBuilder text;
    text.append(rng.pick(kFiller));
    for (const EntityNode* e : mentions) {
      if (rng.between(0, 1) == 1) text.append(rng.pick(kFiller));
      const auto& [prefix, suffix] = rng.pick(kMentionTemplates);
      std::string surface = surface_for(*e);
      text.append(prefix);
      std::int64_t begin = text.length();
      text.raw(surface);
      std::int64_t end = text.length();
      text.raw(suffix);
      double confidence = rng.between(50, 100) / 100.0;
      doc.annotations.push_back({e->id, begin, end, surface, confidence});
    }
    text.append(rng.pick(kFiller));
    doc.text = text.take();

    std::set<EntityId> distinct;
    for (const auto& a : doc.annotations) {
      ++out.truth[a.entity].mentions;
      distinct.insert(a.entity);
    }
    for (const auto& e : distinct) ++out.truth[e].documents;
    out.documents.push_back(std::move(doc));
  }
  return out;
}

void write_truth(const std::map<EntityId, MentionTruth>& truth,
                 std::ostream& out) {
  codec::Json j = codec::Json::object();
  for (const auto& [entity, t] : truth) {
    j[entity] = {{"mentions", t.mentions}, {"documents", t.documents}};
  }
  out << j.dump(2) << '\n';
}

std::map<EntityId, MentionTruth> read_truth(std::istream& in) {
  std::map<EntityId, MentionTruth> out;
  try {
    auto j = codec::Json::parse(in);
    for (const auto& [entity, v] : j.items()) {
      out[entity] = {v.at("mentions").get<std::int64_t>(),
                     v.at("documents").get<std::int64_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("truth file: ") + e.what());
  }
  return out;
}

}  // namespace widenet
