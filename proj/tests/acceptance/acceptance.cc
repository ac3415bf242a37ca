// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "support/oracles.h"
#include "widenet/service.h"

using namespace widenet;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

using SteadyClock = std::chrono::steady_clock;

// Runs `body`, printing one line. A criterion with a time budget fails when
// it overruns.
bool criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
  auto t0 = SteadyClock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(SteadyClock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s && o.pass) {
    o = {false, "over time budget"};
  }
  std::printf("%s %-22s %8.3fs%s%s\n", o.pass ? "PASS" : "FAIL", name, secs,
              o.detail.empty() ? "" : "  ", o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

const TemporalClass kClasses[] = {TemporalClass::InPeriod, TemporalClass::OutOfPeriod,
                                  TemporalClass::Borderline, TemporalClass::Undated};

Outcome majority_rule() {
  Outcome o;
  std::int64_t checked = 0;
  for (int k = 0; k <= 6; ++k) {
    int total = 1;
    for (int i = 0; i < k; ++i) total *= 4;
    for (int code = 0; code < total; ++code) {
      std::map<EntityId, TemporalClass> classes;
      std::set<EntityId> members;
      int counts[4] = {0, 0, 0, 0};
      int c = code;
      for (int i = 0; i < k; ++i) {
        int cls = c % 4;
        c /= 4;
        ++counts[cls];
        auto id = "e" + std::to_string(i);
        members.insert(id);
        classes[id] = kClasses[cls];
      }
      // out of period must not exceed in-period plus borderline
      bool expected = counts[1] <= counts[0] + counts[2];
      auto got = prune_categories({{"c", members}}, classes);
      ++checked;
      if (got.size() != 1 || got[0].auto_selected != expected) {
        fail(o, "mismatch at sequence " + std::to_string(code) + " of size " + std::to_string(k));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " sequences";
  return o;
}

int rank(TemporalClass c) {
  switch (c) {
    case TemporalClass::InPeriod: return 2;
    case TemporalClass::Borderline: return 1;
    case TemporalClass::OutOfPeriod: return 0;
    default: return -1;
  }
}

Outcome monotonicity() {
  Outcome o;
  std::mt19937_64 rng(2024);
  auto year = [&] { return 1000 + static_cast<int>(rng() % 1100); };
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    TemporalClues clues;
    int ny = static_cast<int>(rng() % 5), ni = static_cast<int>(rng() % 4);
    for (int i = 0; i < ny; ++i) clues.years.insert(year());
    for (int i = 0; i < ni; ++i) {
      int a = year(), b = year();
      clues.intervals.insert({std::min(a, b), std::max(a, b)});
    }
    int a = year(), b = year();
    Period narrow(std::min(a, b), std::max(a, b));
    Period wide(std::max(1000, narrow.start_year() - static_cast<int>(rng() % 300)),
                std::min(2099, narrow.end_year() + static_cast<int>(rng() % 300)));
    auto before = classify_entity(clues, narrow);
    auto after = classify_entity(clues, wide);
    if ((before == TemporalClass::Undated) != (after == TemporalClass::Undated) ||
        rank(after) < rank(before)) {
      ++violations;
    }
  }
  if (violations) fail(o, std::to_string(violations) + " demotions");
  return o;
}

Outcome traversal() {
  Outcome o;
  std::mt19937_64 rng(99);
  int comparisons = 0;
  for (int g_i = 0; g_i < 100; ++g_i) {
    int n = 1 + static_cast<int>(rng() % 100);
    int edges = static_cast<int>(rng() % (3 * n + 1));
    KnowledgeGraph::Builder b;
    for (int i = 0; i < n; ++i) b.add_category("c" + std::to_string(i));
    for (int k = 0; k < edges; ++k) {
      b.add_edge("c" + std::to_string(rng() % n), EdgeKind::Broader,
                 "c" + std::to_string(rng() % n));
    }
    auto g = b.build();
    std::set<CategoryId> roots;
    int nroots = 1 + static_cast<int>(rng() % 3);
    for (int r = 0; r < nroots; ++r) roots.insert("c" + std::to_string(rng() % n));
    for (int depth = 1; depth <= 6; ++depth) {
      ++comparisons;
      if (descendant_categories(g, roots, depth) != oracle::reachable(g.edges(), roots, depth)) {
        fail(o, "graph " + std::to_string(g_i) + " depth " + std::to_string(depth));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(comparisons) + " comparisons";
  return o;
}

Outcome index_oracle() {
  Outcome o;
  auto g = oracle::fixture_graph();
  auto fx = oracle::fixture_corpus(g);
  CorpusIndex idx(fx.documents);
  auto scan = oracle::scan_counts(fx.documents);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::set<EntityId> set;
    int k = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < k; ++i) set.insert(g.entities()[rng() % g.entities().size()].id);
    auto tag = "set " + std::to_string(trial) + ": ";
    for (const auto& row : idx.frequencies(set)) {
      auto it = scan.find(row.entity);
      oracle::Scan s = it == scan.end() ? oracle::Scan{} : it->second;
      if (row.documents != s.documents || row.mentions != s.mentions ||
          row.absent != (s.mentions == 0)) {
        fail(o, tag + "frequency of " + row.entity);
      }
    }
    auto got = idx.retrieve(set);
    auto want = oracle::scan_retrieve(fx.documents, set);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].doc_id == want[i].doc_id && got[i].matched == want[i].matched &&
             got[i].mentions == want[i].mentions;
    }
    if (!same) fail(o, tag + "retrieve");
    for (bool by_year : {true, false}) {
      auto agg = idx.aggregate(set, by_year ? Dimension::Year : Dimension::Party);
      auto ref = oracle::scan_group_by(fx.documents, set, by_year);
      bool eq = agg.size() == ref.size();
      for (const auto& [key, b] : agg) {
        auto it = ref.find(key);
        eq = eq && it != ref.end() && it->second.documents == b.documents &&
             it->second.mentions == b.mentions;
      }
      if (!eq) fail(o, tag + (by_year ? "aggregate year" : "aggregate party"));
    }
  }
  return o;
}

Outcome clue_extraction() {
  Outcome o;
  struct Example {
    std::string text;
    std::set<int> years;
    std::set<Interval> intervals;
  };
  std::vector<Example> examples = {
      {"founded in 1602 and dissolved in 1799", {1602, 1799}, {}},
      {"the occupation of 1940-1945", {1940, 1945}, {{1940, 1945}}},
      {"ISBN 9781602000000", {}, {}},
      {"", {}, {}},
  };
  for (const auto& ex : examples) {
    auto c = extract_clues(ex.text);
    if (c.years != ex.years || c.intervals != ex.intervals) fail(o, "example '" + ex.text + "'");
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto text = oracle::random_description(rng);
    auto got = extract_clues(text);
    auto want = oracle::regex_clues(text);
    if (got.years != want.years || got.intervals != want.intervals) {
      fail(o, "generated '" + text + "'");
    }
  }
  return o;
}

Outcome session_replay() {
  Outcome o;
  auto g = oracle::fixture_graph();
  auto fx = oracle::fixture_corpus(g);
  CorpusIndex idx(fx.documents);
  int tick = 0;
  widenet::Clock clock = [&tick] { return "2024-01-01T00:00:" + std::to_string(10 + tick++ % 50) + "Z"; };
  auto s = Session::create(g, {{"Dutch_Golden_Age", "World_War_II_in_the_Netherlands"},
                               Period(1588, 1702), 5},
                           "acceptance", clock);
  std::vector<CategoryId> cats;
  for (const auto& [c, _] : s.tree().decisions) cats.push_back(c);
  std::vector<EntityId> ents;
  for (const auto& [e, _] : s.tree().classes) ents.push_back(e);
  std::mt19937_64 rng(100);
  for (int op = 0; op < 100; ++op) {
    switch (rng() % 3) {
      case 0: s.toggle_category(cats[rng() % cats.size()]); break;
      case 1: s.toggle_entity(ents[rng() % ents.size()]); break;
      default: {
        auto res = s.results(idx);
        if (res.empty()) {
          s.toggle_category(cats[rng() % cats.size()]);
          break;
        }
        s.assess_document(idx, res[rng() % res.size()].doc_id, static_cast<Verdict>(rng() % 3));
      }
    }
  }
  std::ostringstream log;
  for (const auto& r : s.audit_log()) log << serialize_audit_record(r) << '\n';
  std::istringstream log_in(log.str());
  auto replayed = Session::replay(g, read_audit(log_in), &idx);
  if (replayed.category_overrides() != s.category_overrides() ||
      replayed.entity_overrides() != s.entity_overrides()) {
    fail(o, "override maps differ after replay");
  }
  if (replayed.assessments() != s.assessments()) fail(o, "assessments differ after replay");

  for (bool unjudged : {false, true}) {
    std::set<DocId> expected;
    for (const auto& r : s.results(idx)) {
      auto v = s.verdict(r.doc_id);
      if (v == Verdict::relevant || (unjudged && v == Verdict::unjudged)) expected.insert(r.doc_id);
    }
    std::ostringstream out;
    s.export_corpus(idx, {unjudged}, out);
    std::istringstream in(out.str());
    std::set<DocId> got;
    for (const auto& d : parse_export(in).documents) got.insert(d.document.doc_id);
    if (got != expected) fail(o, "export doc_id set differs");
  }

  auto snapshot = [&](const Session& x) {
    std::vector<bool> state;
    for (const auto& c : cats) state.push_back(x.category_selected(c));
    for (const auto& e : ents) state.push_back(x.entity_selected(e));
    return std::make_pair(state, x.effective_query());
  };
  auto base = snapshot(s);
  for (const auto& c : cats) {
    s.toggle_category(c);
    s.toggle_category(c);
    if (snapshot(s) != base) fail(o, "toggle twice changed state for " + c);
  }
  for (const auto& e : ents) {
    s.toggle_entity(e);
    s.toggle_entity(e);
    if (snapshot(s) != base) fail(o, "toggle twice changed state for " + e);
  }
  return o;
}

Outcome end_to_end() {
  Outcome o;
  auto golden = json::parse(oracle::read_file(std::string(WIDENET_GOLDEN_DIR) + "/end_to_end.json"));
  auto g = oracle::fixture_graph();
  CorpusIndex idx(parse_corpus_file(oracle::data_path("fixture_corpus.jsonl")).documents);
  SessionParams params{golden["roots"].get<std::set<CategoryId>>(),
                       Period(golden["period"][0].get<int>(), golden["period"][1].get<int>()),
                       golden["max_depth"].get<int>()};
  auto s = Session::create(g, params, "golden");

  json cats = json::array();
  for (const auto& grp : s.tree().groups) {
    for (const auto& c : grp.categories) {
      cats.push_back({{"id", c.id},
                      {"depth", c.depth},
                      {"auto_selected", c.decision.auto_selected},
                      {"dated_member_count", c.decision.dated_member_count},
                      {"out_of_period_count", c.decision.out_of_period_count}});
    }
  }
  if (cats != golden["categories"]) fail(o, "candidate categories differ");
  json classes = json::object();
  for (const auto& [e, cls] : s.tree().classes) classes[e] = std::string(to_string(cls));
  if (classes != golden["classes"]) fail(o, "entity classes differ");
  if (json(s.effective_query()) != golden["effective_query"]) fail(o, "effective query differs");
  json results = json::array();
  for (const auto& r : s.results(idx)) {
    results.push_back({{"doc_id", r.doc_id}, {"matched", r.matched}, {"mentions", r.mentions}});
  }
  if (results != golden["results"]) fail(o, "result list differs");
  if (json(s.missing_entities(idx)) != golden["missing"]) fail(o, "missing entities differ");
  if (o.pass) {
    o.detail = std::to_string(s.effective_query().size()) + " entities, " +
               std::to_string(results.size()) + " documents";
  }
  return o;
}

Outcome service_contract() {
  Outcome o;
  auto graph = std::make_shared<KnowledgeGraph>(oracle::fixture_graph());
  auto index = std::make_shared<CorpusIndex>(
      parse_corpus_file(oracle::data_path("fixture_corpus.jsonl")).documents);
  Api api(graph, index);
  HttpServer server(api);
  int port = server.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  int calls = 0;

  auto expect = [&](const httplib::Result& r, int status, const std::string& what) -> json {
    ++calls;
    if (!r) {
      fail(o, what + ": no response");
      return json();
    }
    if (r->status != status) {
      fail(o, what + ": status " + std::to_string(r->status));
      return json();
    }
    if (r->get_header_value("X-Schema-Version") != std::to_string(kSchemaVersion)) {
      fail(o, what + ": missing schema header");
    }
    if (r->get_header_value("Content-Type").rfind("application/x-ndjson", 0) == 0) return r->body;
    json j = json::parse(r->body, nullptr, false);
    if (j.is_discarded()) fail(o, what + ": body is not JSON");
    if (status >= 400) {
      if (!j.is_object() || j.value("schema_version", 0) != kSchemaVersion ||
          !j.contains("error") || !j["error"].contains("code") || !j["error"].contains("message")) {
        fail(o, what + ": bad error shape");
      }
    }
    return j;
  };
  auto post = [&](const std::string& path, const std::string& body) {
    return cli.Post(path, body, "application/json");
  };

  auto h = expect(cli.Get("/health"), 200, "health");
  if (h.value("docs", 0) != 200) fail(o, "health: doc count");
  auto cats = expect(cli.Get("/categories?q=golden"), 200, "categories");
  if (!cats.contains("results") || cats["results"].empty()) fail(o, "categories: no results");
  expect(cli.Get("/categories"), 400, "categories without q");

  auto created = expect(post("/sessions", R"({"roots":["Dutch_Golden_Age"],"period":{"start":1588,"end":1702},"max_depth":5})"),
                        201, "create session");
  std::string id = created.is_object() ? created["session"].value("id", "") : "";
  if (id.empty()) {
    fail(o, "create session: no id");
    server.stop();
    return o;
  }
  std::string base = "/sessions/" + id;
  expect(post("/sessions", R"({"roots":[],"period":[1600,1700]})"), 400, "create with empty roots");
  expect(post("/sessions", R"({"roots":["Nope"],"period":[1600,1700]})"), 404, "create with unknown root");
  expect(post("/sessions", "{bad"), 400, "create with malformed body");

  auto s = expect(cli.Get(base.c_str()), 200, "get session");
  if (s.is_object() && s["session"]["effective_query"].size() != 20) fail(o, "get session: query size");
  expect(cli.Get("/sessions/doesnotexist"), 404, "get unknown session");

  auto t = expect(post(base + "/toggle", R"({"kind":"category","target":"Anglo-Dutch_Wars"})"), 200, "toggle");
  if (t.is_object() && t["session"]["effective_query"].size() >= 20) fail(o, "toggle: query not narrowed");
  expect(post(base + "/toggle", R"({"kind":"category","target":"Anglo-Dutch_Wars"})"), 200, "toggle back");
  expect(post(base + "/toggle", R"({"kind":"entity","target":"Mark_Rutte"})"), 404, "toggle outside tree");
  expect(post(base + "/toggle", R"({"kind":"x","target":"VOC"})"), 400, "toggle bad kind");

  auto res = expect(cli.Get((base + "/results?page=1&page_size=10").c_str()), 200, "results");
  std::string doc;
  if (res.is_object() && !res["results"].empty()) doc = res["results"][0]["doc_id"];
  expect(cli.Get((base + "/results?page=-1").c_str()), 400, "results bad page");
  expect(post(base + "/assess", R"({"doc_id":")" + doc + R"(","verdict":"relevant"})"), 200, "assess");
  expect(post(base + "/assess", R"({"doc_id":"fx-99999","verdict":"relevant"})"), 404, "assess absent doc");
  expect(post(base + "/assess", R"({"doc_id":")" + doc + R"(","verdict":"perhaps"})"), 400, "assess bad verdict");

  auto agg = expect(cli.Get((base + "/aggregate?dimension=year").c_str()), 200, "aggregate year");
  if (res.is_object() && agg.is_object() && agg["total_documents"] != res["total"]) {
    fail(o, "aggregate total differs from result count");
  }
  expect(cli.Get((base + "/aggregate?dimension=party").c_str()), 200, "aggregate party");
  expect(cli.Get((base + "/aggregate?dimension=speaker").c_str()), 400, "aggregate bad dimension");
  auto miss = expect(cli.Get((base + "/missing").c_str()), 200, "missing");
  if (miss.is_object() && miss["missing"].size() != 3) fail(o, "missing: count");

  auto ex = cli.Post(base + "/export", "{}", "application/json");
  ++calls;
  if (!ex || ex->status != 200 ||
      ex->get_header_value("Content-Type").rfind("application/x-ndjson", 0) != 0) {
    fail(o, "export");
  } else {
    std::istringstream in(ex->body);
    auto parsed = parse_export(in);
    if (parsed.documents.size() != 1 || parsed.documents[0].document.doc_id != doc) {
      fail(o, "export contents");
    }
  }
  expect(cli.Delete(base.c_str()), 405, "wrong method");
  expect(cli.Get("/no/such/route"), 404, "unknown route");
  server.stop();
  if (o.pass) o.detail = std::to_string(calls) + " HTTP calls";
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  failed += !criterion("majority-rule", 1.0, majority_rule);
  failed += !criterion("temporal-monotonicity", 1.0, monotonicity);
  failed += !criterion("traversal-oracle", 5.0, traversal);
  failed += !criterion("index-oracle", 5.0, index_oracle);
  failed += !criterion("clue-extraction", 0, clue_extraction);
  failed += !criterion("session-replay", 0, session_replay);
  failed += !criterion("end-to-end-golden", 0, end_to_end);
  failed += !criterion("service-contract", 0, service_contract);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
