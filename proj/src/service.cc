#include "widenet/service.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "json_codec.h"

namespace widenet {

using codec::Json;

namespace {

ApiResponse json_response(int status, Json body) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  for (auto& [k, v] : body.items()) out[k] = std::move(v);
  return {status, "application/json", out.dump(), {}};
}

ApiResponse error_response(ErrorCode code, const std::string& message,
                           int status = 0) {
  Json body;
  body["error"] = {{"code", to_string(code)}, {"message", message}};
  return json_response(status ? status : http_status(code), std::move(body));
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

Json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) {
      throw Error(ErrorCode::invalid_input, "request body must be a JSON object");
    }
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("invalid JSON body: ") + e.what());
  }
}

int parse_positive(const std::map<std::string, std::string>& query,
                   const std::string& key, int fallback, int max) {
  auto it = query.find(key);
  if (it == query.end()) return fallback;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size() || v < 1 || v > max) throw std::out_of_range(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_input,
                "query parameter '" + key + "' must be an integer in [1, " +
                    std::to_string(max) + "]");
  }
}

std::string random_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  std::uint64_t x = rng();
  for (int i = 0; i < 16; ++i, x >>= 4) id.push_back(kHex[x & 0xF]);
  return id;
}

bool valid_session_id(std::string_view id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
         });
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::invalid_input: return 400;
    case ErrorCode::conflict: return 409;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

Api::Api(std::shared_ptr<const KnowledgeGraph> graph,
         std::shared_ptr<const CorpusIndex> index)
    : Api(std::move(graph), std::move(index), Options{}) {}

Api::Api(std::shared_ptr<const KnowledgeGraph> graph,
         std::shared_ptr<const CorpusIndex> index, Options options)
    : graph_(std::move(graph)), index_(std::move(index)),
      options_(std::move(options)) {
  if (!options_.new_session_id) options_.new_session_id = random_session_id;
  if (!options_.clock) options_.clock = utc_now;
  if (options_.session_dir) load_sessions();
}

std::size_t Api::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

void Api::load_sessions() {
  namespace fs = std::filesystem;
  fs::path dir(*options_.session_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::internal, "cannot create session dir " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    auto records = read_audit(in);
    Session s = Session::replay(*graph_, records, index_.get(), options_.clock);
    std::string id = s.id();
    sessions_.emplace(std::move(id), std::make_shared<SessionSlot>(std::move(s)));
  }
}

void Api::persist(const Session& session, std::size_t from_record) const {
  if (!options_.session_dir) return;
  auto path = std::filesystem::path(*options_.session_dir) / (session.id() + ".jsonl");
  std::ofstream out(path, std::ios::app);
  const auto& log = session.audit_log();
  for (std::size_t i = from_record; i < log.size(); ++i) {
    out << serialize_audit_record(log[i]) << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorCode::internal, "cannot append audit log " + path.string());
}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorCode::internal, e.what());
  }
}

ApiResponse Api::route(const ApiRequest& request) {
  auto parts = split_path(request.path);
  const std::string& m = request.method;
  auto method_not_allowed = [&]() {
    return error_response(ErrorCode::invalid_input,
                          "method " + m + " not allowed on " + request.path, 405);
  };
  if (parts.size() == 1 && parts[0] == "health") {
    return m == "GET" ? health() : method_not_allowed();
  }
  if (parts.size() == 1 && parts[0] == "categories") {
    return m == "GET" ? categories(request) : method_not_allowed();
  }
  if (!parts.empty() && parts[0] == "sessions") {
    if (parts.size() == 1) {
      return m == "POST" ? create_session(request) : method_not_allowed();
    }
    if (parts.size() == 2) {
      return m == "GET" ? session_action(request, parts[1], "")
                        : method_not_allowed();
    }
    if (parts.size() == 3) {
      static const std::map<std::string, std::string> kMethods = {
          {"toggle", "POST"}, {"results", "GET"}, {"assess", "POST"},
          {"aggregate", "GET"}, {"missing", "GET"}, {"export", "POST"}};
      auto it = kMethods.find(parts[2]);
      if (it != kMethods.end()) {
        return m == it->second ? session_action(request, parts[1], parts[2])
                               : method_not_allowed();
      }
    }
  }
  return error_response(ErrorCode::not_found, "no route for " + request.path);
}

ApiResponse Api::health() const {
  Json j;
  j["status"] = "ok";
  j["docs"] = index_->documents().size();
  j["annotations"] = index_->annotation_count();
  j["entities"] = graph_->entities().size();
  j["categories"] = graph_->categories().size();
  j["edges"] = graph_->edges().size();
  j["sessions"] = session_count();
  return json_response(200, std::move(j));
}

ApiResponse Api::categories(const ApiRequest& request) const {
  auto it = request.query.find("q");
  if (it == request.query.end() || it->second.empty()) {
    throw Error(ErrorCode::invalid_input, "query parameter 'q' is required");
  }
  std::string needle = lower_ascii(it->second);
  struct Match {
    bool prefix;
    std::string label;
    const CategoryNode* node;
  };
  std::vector<Match> matches;
  for (const auto& c : graph_->categories()) {
    std::string label = c.label.empty() ? c.id : c.label;
    auto pos = lower_ascii(label).find(needle);
    if (pos != std::string::npos) matches.push_back({pos == 0, label, &c});
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.prefix != b.prefix) return a.prefix;
    if (a.label != b.label) return a.label < b.label;
    return a.node->id < b.node->id;
  });
  Json results = Json::array();
  for (std::size_t i = 0; i < matches.size() && i < kTypeaheadLimit; ++i) {
    results.push_back({{"id", matches[i].node->id}, {"label", matches[i].label}});
  }
  Json j;
  j["query"] = it->second;
  j["results"] = std::move(results);
  j["truncated"] = matches.size() > kTypeaheadLimit;
  return json_response(200, std::move(j));
}

std::string Api::session_json(const Session& s) const {
  auto query = s.effective_query();
  const auto& tree = s.tree();
  std::set<EntityId> all_entities;
  for (const auto& [e, cls] : tree.classes) all_entities.insert(e);
  std::map<EntityId, FrequencyRow> freq;
  for (auto& row : index_->frequencies(all_entities)) freq.emplace(row.entity, row);
  auto previews = index_->preview(all_entities, options_.preview);

  Json groups = Json::array();
  for (const auto& g : tree.groups) {
    Json cats = Json::array();
    for (const auto& c : g.categories) {
      Json ents = Json::array();
      for (const auto& e : c.entities) {
        const EntityNode* node = graph_->find_entity(e.id);
        const FrequencyRow& f = freq.at(e.id);
        Json prev = Json::array();
        for (const auto& p : previews.at(e.id)) {
          prev.push_back({{"doc_id", p.doc_id},
                          {"snippet", p.snippet},
                          {"mention_offset", p.mention_offset},
                          {"snippet_offset", p.snippet_offset},
                          {"mention_length", p.mention_length}});
        }
        ents.push_back({{"id", e.id},
                        {"label", node ? node->label : ""},
                        {"class", to_string(e.temporal_class)},
                        {"selected", s.entity_selected(e.id)},
                        {"in_query", query.count(e.id) > 0},
                        {"frequency",
                         {{"documents", f.documents},
                          {"mentions", f.mentions},
                          {"absent", f.absent}}},
                        {"previews", std::move(prev)}});
      }
      const CategoryNode* node = graph_->find_category(c.id);
      cats.push_back({{"id", c.id},
                      {"label", node ? node->label : ""},
                      {"depth", c.depth},
                      {"selected", s.category_selected(c.id)},
                      {"auto_selected", c.decision.auto_selected},
                      {"dated_member_count", c.decision.dated_member_count},
                      {"out_of_period_count", c.decision.out_of_period_count},
                      {"entities", std::move(ents)}});
    }
    groups.push_back({{"root", g.root}, {"categories", std::move(cats)}});
  }

  std::set<EntityId> missing;
  for (const auto& e : query) {
    if (freq.at(e).mentions == 0) missing.insert(e);
  }
  Json j;
  j["id"] = s.id();
  j["roots"] = s.params().roots;
  j["period"] = {{"start", s.params().period.start_year()},
                 {"end", s.params().period.end_year()}};
  j["max_depth"] = s.params().max_depth;
  j["groups"] = std::move(groups);
  j["effective_query"] = query;
  j["result_count"] = index_->retrieve(query).size();
  j["missing"] = missing;
  Json assessments = Json::object();
  for (const auto& [doc, v] : s.assessments()) assessments[doc] = to_string(v);
  j["assessments"] = std::move(assessments);
  j["audit_records"] = s.audit_log().size();
  return j.dump();
}

ApiResponse Api::create_session(const ApiRequest& request) {
  Json body = parse_body(request.body);
  SessionParams params;
  try {
    const Json& roots = body.at("roots");
    if (!roots.is_array()) {
      throw Error(ErrorCode::invalid_input, "'roots' must be an array of category ids");
    }
    params.roots = roots.get<std::set<CategoryId>>();
    const Json& period = body.at("period");
    if (period.is_array()) {
      params.period = Period(period.at(0).get<int>(), period.at(1).get<int>());
    } else {
      params.period =
          Period(period.at("start").get<int>(), period.at("end").get<int>());
    }
    params.max_depth = body.value("max_depth", kDefaultMaxDepth);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input,
                std::string("expected {roots, period: {start, end}, max_depth}: ") +
                    e.what());
  }
  std::string id = options_.new_session_id();
  if (!valid_session_id(id)) {
    throw Error(ErrorCode::internal, "session id generator produced '" + id + "'");
  }
  Session session = Session::create(*graph_, std::move(params), id, options_.clock);
  auto slot = std::make_shared<SessionSlot>(std::move(session));
  {
    std::unique_lock lock(sessions_mutex_);
    if (sessions_.count(id)) {
      throw Error(ErrorCode::conflict, "session id '" + id + "' already exists");
    }
    persist(slot->session, 0);
    sessions_.emplace(id, slot);
  }
  std::lock_guard guard(slot->mutex);
  ApiResponse r{201, "application/json",
                "{\"schema_version\":" + std::to_string(kSchemaVersion) +
                    ",\"session\":" + session_json(slot->session) + "}",
                {}};
  r.headers["Location"] = "/sessions/" + id;
  return r;
}

std::shared_ptr<Api::SessionSlot> Api::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
  }
  return it->second;
}

ApiResponse Api::session_action(const ApiRequest& request, const std::string& id,
                                const std::string& action) {
  auto slot = find_session(id);
  std::lock_guard guard(slot->mutex);
  Session& s = slot->session;
  auto wrap_session = [&](int status) {
    return ApiResponse{status, "application/json",
                       "{\"schema_version\":" + std::to_string(kSchemaVersion) +
                           ",\"session\":" + session_json(s) + "}",
                       {}};
  };

  if (action.empty()) return wrap_session(200);

  if (action == "toggle") {
    Json body = parse_body(request.body);
    std::string kind = body.value("kind", "");
    if (!body.contains("target") || !body["target"].is_string()) {
      throw Error(ErrorCode::invalid_input, "'target' must be a string");
    }
    std::string target = body["target"].get<std::string>();
    std::optional<std::string> reason;
    if (body.contains("reason") && body["reason"].is_string()) {
      reason = body["reason"].get<std::string>();
    }
    std::size_t before = s.audit_log().size();
    if (kind == "category") {
      s.toggle_category(target, reason);
    } else if (kind == "entity") {
      s.toggle_entity(target, reason);
    } else {
      throw Error(ErrorCode::invalid_input, "'kind' must be 'category' or 'entity'");
    }
    persist(s, before);
    return wrap_session(200);
  }

  if (action == "results") {
    int page = parse_positive(request.query, "page", 1, 1 << 30);
    int size = parse_positive(request.query, "page_size", options_.page_size, 500);
    auto hits = s.results(*index_);
    Json rows = Json::array();
    std::size_t first = static_cast<std::size_t>(page - 1) * size;
    for (std::size_t i = first; i < hits.size() && i < first + size; ++i) {
      const auto& h = hits[i];
      const AnnotatedDocument* doc = index_->find(h.doc_id);
      rows.push_back({{"doc_id", h.doc_id},
                      {"date", doc->date.to_string()},
                      {"speaker", doc->speaker},
                      {"party", doc->party},
                      {"debate_title", doc->debate_title},
                      {"matched_entities", h.matched},
                      {"mentions", h.mentions},
                      {"verdict", to_string(s.verdict(h.doc_id))}});
    }
    Json j;
    j["page"] = page;
    j["page_size"] = size;
    j["total"] = hits.size();
    j["results"] = std::move(rows);
    return json_response(200, std::move(j));
  }

  if (action == "assess") {
    Json body = parse_body(request.body);
    if (!body.contains("doc_id") || !body["doc_id"].is_string()) {
      throw Error(ErrorCode::invalid_input, "'doc_id' must be a string");
    }
    auto verdict = parse_verdict(body.value("verdict", ""));
    if (!verdict) {
      throw Error(ErrorCode::invalid_input,
                  "'verdict' must be relevant, irrelevant or unjudged");
    }
    std::string doc_id = body["doc_id"].get<std::string>();
    Verdict prior = s.verdict(doc_id);
    std::size_t before = s.audit_log().size();
    s.assess_document(*index_, doc_id, *verdict);
    persist(s, before);
    Json j;
    j["doc_id"] = doc_id;
    j["verdict"] = to_string(*verdict);
    j["prior"] = to_string(prior);
    return json_response(200, std::move(j));
  }

  if (action == "aggregate") {
    auto it = request.query.find("dimension");
    if (it == request.query.end()) {
      throw Error(ErrorCode::invalid_input, "query parameter 'dimension' is required");
    }
    Dimension dim = parse_dimension(it->second);
    Json buckets = Json::array();
    std::int64_t docs = 0, mentions = 0;
    for (const auto& [key, b] : index_->aggregate(s.effective_query(), dim)) {
      buckets.push_back({{"key", key}, {"documents", b.documents}, {"mentions", b.mentions}});
      docs += b.documents;
      mentions += b.mentions;
    }
    Json j;
    j["dimension"] = to_string(dim);
    j["buckets"] = std::move(buckets);
    j["total_documents"] = docs;
    j["total_mentions"] = mentions;
    return json_response(200, std::move(j));
  }

  if (action == "missing") {
    Json j;
    j["missing"] = s.missing_entities(*index_);
    return json_response(200, std::move(j));
  }

  if (action == "export") {
    Json body = parse_body(request.body);
    ExportOptions opts;
    if (body.contains("include_unjudged")) {
      if (!body["include_unjudged"].is_boolean()) {
        throw Error(ErrorCode::invalid_input, "'include_unjudged' must be a boolean");
      }
      opts.include_unjudged = body["include_unjudged"].get<bool>();
    }
    std::ostringstream out;
    s.export_corpus(*index_, opts, out);
    ApiResponse r{200, "application/x-ndjson", out.str(), {}};
    r.headers["Content-Disposition"] =
        "attachment; filename=\"" + s.id() + "-export.jsonl\"";
    return r;
  }
  throw Error(ErrorCode::not_found, "no route for " + request.path);
}

// --- HTTP ---------------------------------------------------------------------

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Api& a) : api(a) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      r.body = req.body;
      ApiResponse out = api.handle(r);
      res.status = out.status;
      for (const auto& [k, v] : out.headers) res.set_header(k, v);
      res.set_header("X-Schema-Version", std::to_string(kSchemaVersion));
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Put(".*", dispatch);
    server.Delete(".*", dispatch);
    server.Patch(".*", dispatch);
  }
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::internal,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::internal,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace widenet
