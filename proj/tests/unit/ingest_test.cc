#include <sstream>

#include "doctest.h"
#include "support/oracles.h"
#include "widenet/error.h"
#include "widenet/ingest.h"

using namespace widenet;

namespace {

ParsedCorpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

const char* kDoc =
    R"({"doc_id":"d1","text":"Rembrandt painted in Amsterdam.","date":"1999-03-04",)"
    R"("speaker":"A","party":"VVD","debate_title":"Culture","annotations":[)"
    R"({"entity":"Rembrandt","begin":0,"end":9,"surface":"Rembrandt","confidence":0.9},)"
    R"({"entity":"Amsterdam","begin":21,"end":30,"surface":"Amsterdam","confidence":0.7}]})";

}  // namespace

TEST_CASE("Date parsing") {
  CHECK(Date::parse("1999-03-04") == Date{1999, 3, 4});
  CHECK(Date::parse("2000-02-29T10:00:00Z") == Date{2000, 2, 29});
  CHECK_FALSE(Date::parse("1999-02-29"));
  CHECK_FALSE(Date::parse("1999-13-01"));
  CHECK_FALSE(Date::parse("99-01-01"));
  CHECK(Date{1602, 3, 20}.to_string() == "1602-03-20");
}

TEST_CASE("parse_corpus accepts a valid document") {
  auto c = parse(std::string(kDoc) + "\n");
  REQUIRE(c.documents.size() == 1);
  CHECK(c.warnings.empty());
  CHECK(c.annotation_count == 2);
  const auto& d = c.documents[0];
  CHECK(d.doc_id == "d1");
  CHECK(d.party == "VVD");
  CHECK(d.annotations[1].entity == "Amsterdam");
  CHECK(d.annotations[1].confidence == doctest::Approx(0.7));
}

TEST_CASE("parse_corpus drops out-of-bounds annotations with a warning") {
  std::string line =
      R"({"doc_id":"d1","text":"short","date":"2001-01-01","speaker":"","party":"",)"
      R"("debate_title":"","annotations":[{"entity":"x","begin":0,"end":50,)"
      R"("surface":"short","confidence":1}]})";
  auto c = parse(line);
  REQUIRE(c.documents.size() == 1);
  CHECK(c.documents[0].annotations.empty());
  REQUIRE(c.warnings.size() == 1);
  CHECK(c.warnings[0].doc_id == "d1");
  CHECK(c.warnings[0].line == 1);
}

TEST_CASE("parse_corpus uses code-point offsets") {
  std::string line =
      "{\"doc_id\":\"u\",\"text\":\"Peace of M\xC3\xBCnster signed\",\"date\":\"1998-05-15\","
      "\"speaker\":\"\",\"party\":\"\",\"debate_title\":\"\",\"annotations\":["
      "{\"entity\":\"Peace_of_M\xC3\xBCnster\",\"begin\":0,\"end\":16,"
      "\"surface\":\"Peace of M\xC3\xBCnster\",\"confidence\":0.8},"
      "{\"entity\":\"bad\",\"begin\":17,\"end\":22,\"surface\":\"signx\",\"confidence\":0.8}]}";
  auto c = parse(line);
  REQUIRE(c.documents.size() == 1);
  CHECK(c.documents[0].annotations.size() == 1);
  CHECK(c.warnings.size() == 1);  // surface mismatch
}

TEST_CASE("parse_corpus sorts annotations and keeps overlaps") {
  std::string line =
      R"({"doc_id":"d","text":"Jan Pieterszoon Coen","date":"2001-01-01","speaker":"",)"
      R"("party":"","debate_title":"","annotations":[)"
      R"({"entity":"Coen","begin":16,"end":20,"surface":"Coen","confidence":0.5},)"
      R"({"entity":"JPC","begin":0,"end":20,"surface":"Jan Pieterszoon Coen","confidence":0.9}]})";
  auto c = parse(line);
  REQUIRE(c.documents[0].annotations.size() == 2);
  CHECK(c.documents[0].annotations[0].entity == "JPC");
}

TEST_CASE("parse_corpus hard errors") {
  CHECK_THROWS_AS(parse(std::string(kDoc) + "\n" + kDoc + "\n"), ParseError);
  try {
    parse(std::string(kDoc) + "\n" + kDoc + "\n");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("d1") != std::string::npos);
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("{not json}"), ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d"})"), ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","text":"t","date":"yesterday","speaker":"",)"
                        R"("party":"","debate_title":"","annotations":[]})"),
                  ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","text":"t","date":"2000-01-01","speaker":"",)"
                        R"("party":"","debate_title":"","annotations":[{"entity":"e"}]})"),
                  ParseError);
  CHECK_THROWS_AS(parse_corpus_file("/nonexistent/corpus.jsonl"), Error);
}

TEST_CASE("corpus round-trips through serialization") {
  auto g = oracle::fixture_graph();
  auto fx = oracle::fixture_corpus(g);
  std::ostringstream out;
  write_corpus(fx.documents, out);
  auto again = parse(out.str());
  CHECK(again.warnings.empty());
  CHECK(again.documents == fx.documents);
  std::int64_t total = 0;
  for (const auto& d : again.documents) total += static_cast<std::int64_t>(d.annotations.size());
  CHECK(total == again.annotation_count);
}

TEST_CASE("generate_fixture is deterministic") {
  auto g = oracle::fixture_graph();
  auto mix = oracle::fixture_mix(g);
  std::ostringstream a, b;
  write_corpus(generate_fixture(7, 200, g, mix).documents, a);
  write_corpus(generate_fixture(7, 200, g, mix).documents, b);
  CHECK(a.str() == b.str());
  std::ostringstream c;
  write_corpus(generate_fixture(8, 200, g, mix).documents, c);
  CHECK(a.str() != c.str());
  // matches the committed copy byte for byte
  CHECK(a.str() == oracle::read_file(oracle::data_path("fixture_corpus.jsonl")));
}

TEST_CASE("fixture truth equals a full scan") {
  auto g = oracle::fixture_graph();
  auto fx = oracle::fixture_corpus(g);
  auto scan = oracle::scan_counts(fx.documents);
  CHECK(fx.truth.size() == g.entities().size());
  for (const auto& [entity, t] : fx.truth) {
    CAPTURE(entity);
    auto it = scan.find(entity);
    oracle::Scan s = it == scan.end() ? oracle::Scan{} : it->second;
    CHECK(t.mentions == s.mentions);
    CHECK(t.documents == s.documents);
  }
  // entities outside the mix never appear
  for (const char* absent : {"Judith_Leyster", "Halve_Maen", "Raid_on_the_Medway",
                             "Nachtwacht_musical", "Johannes_Post", "Golden_Age_catalogue"}) {
    CHECK(fx.truth.at(absent) == MentionTruth{0, 0});
  }
  std::ostringstream out;
  write_truth(fx.truth, out);
  std::istringstream in(out.str());
  CHECK(read_truth(in) == fx.truth);
}

TEST_CASE("generate_fixture validation") {
  auto g = oracle::fixture_graph();
  CHECK_THROWS_AS(generate_fixture(1, 0, g, FixtureMix::whole_graph(g)), Error);
  KnowledgeGraph empty;
  CHECK_THROWS_AS(generate_fixture(1, 5, empty, FixtureMix{}), Error);
  CHECK_THROWS_AS(FixtureMix::from_json(R"({"components":[{"dates":[1950,1960],)"
                                        R"("entities":["nope"]}]})", g),
                  Error);
  CHECK_THROWS_AS(FixtureMix::from_json("[", g), Error);
}
