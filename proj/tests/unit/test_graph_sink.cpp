#include <doctest.h>

#include <random>

#include "fake_neo4j.hpp"
#include "oracles.hpp"
#include "storygraph/errors.hpp"
#include "storygraph/graph_sink.hpp"
#include "storygraph/graph_transform.hpp"

using namespace storygraph;
using namespace storygraph::testing;

namespace {

GraphDocument story_doc(const std::string& text, const std::string& persona,
                        const std::string& action, const std::string& entity) {
  KgComponents c;
  c.add_relationship({{persona, NodeKind::Persona}, {action, NodeKind::Action}, RelKind::Triggers});
  c.add_relationship({{action, NodeKind::Action}, {entity, NodeKind::Entity}, RelKind::Targets});
  return build_graph_document(c, text);
}

SinkConfig config_for(const FakeNeo4j& db) {
  SinkConfig c;
  c.uri = db.uri();
  c.user = "neo4j";
  c.password = "s3cret";
  c.request_timeout_s = 5;
  return c;
}

}  // namespace

TEST_CASE("single story node is one MERGE") {
  GraphDocument d;
  d.source_text = "story";
  d.nodes.push_back({"story", NodeKind::Userstory, {}});
  auto stmts = to_cypher(d);
  REQUIRE(stmts.size() == 1);
  CHECK(stmts[0].text == "MERGE (n:Userstory {id: $id}) SET n += $properties");
  CHECK(stmts[0].parameters["id"] == "story");
}

TEST_CASE("statement count and parameterisation") {
  std::mt19937 rng(17);
  for (int i = 0; i < 200; ++i) {
    auto d = random_valid_document(rng);
    auto stmts = to_cypher(d);
    CHECK(stmts.size() == d.nodes.size() + d.relationships.size());
    for (const auto& s : stmts) {
      CHECK(s.text.find(d.source_text) == std::string::npos);
      for (const auto& n : d.nodes) {
        CHECK(s.text.find("'" + n.id) == std::string::npos);
      }
    }
  }
}

TEST_CASE("id length cap") {
  auto d = story_doc("story", std::string(50, 'p'), "act", "thing");
  CHECK_THROWS_AS(to_cypher(d, 20), SinkError);
  CHECK_NOTHROW(to_cypher(d, 50));
}

TEST_CASE("cypher script round trip") {
  std::mt19937 rng(2);
  std::vector<std::vector<CypherStatement>> groups;
  for (int i = 0; i < 20; ++i) groups.push_back(to_cypher(random_valid_document(rng)));
  auto odd = story_doc("it's a \"quoted\"\nstory with `ticks` and \\ slashes", "p", "a", "e");
  odd.nodes[0].properties["we`ird key"] = "v'al";
  groups.push_back(to_cypher(odd));
  auto script = cypher_script(groups);
  CHECK(parse_cypher_script(script) == groups);
  CHECK_THROWS_AS(parse_cypher_script(":begin\nMERGE (n:X {id: $id});\n"), ParseError);
}

TEST_CASE("export_json round trip") {
  std::mt19937 rng(6);
  std::vector<GraphDocument> docs;
  for (int i = 0; i < 100; ++i) docs.push_back(random_valid_document(rng));
  auto text = export_json(docs);
  CHECK(import_json(text) == docs);
  CHECK(export_json(import_json(text)) == text);

  GraphDocument lone;
  lone.source_text = "s";
  lone.nodes.push_back({"s", NodeKind::Userstory, {}});
  auto one = nlohmann::json::parse(export_json({lone}));
  CHECK(one.is_array());
  CHECK(one.size() == 1);
}

TEST_CASE("store is idempotent and merges shared personas") {
  FakeNeo4j db("neo4j", "s3cret");
  auto cfg = config_for(db);
  auto d1 = story_doc("first story", "user", "sync", "data");
  auto d2 = story_doc("second story", "user", "upload", "file");

  auto s1 = store(cfg, {d1});
  CHECK(s1.nodes_created == 4);
  CHECK(s1.rels_created == 5);
  CHECK(s1.documents_loaded == 1);

  auto s2 = store(cfg, {d2});
  CHECK(s2.nodes_created == 3);  // the Persona "user" already exists
  CHECK(s2.nodes_matched == 1);

  auto again = store(cfg, {d1, d2});
  CHECK(again.nodes_created == 0);
  CHECK(again.rels_created == 0);
  CHECK(again.nodes_matched == 8);
  CHECK(db.node_count() == 7);
}

TEST_CASE("large documents use an explicit transaction") {
  FakeNeo4j db("neo4j", "s3cret");
  auto cfg = config_for(db);
  cfg.batch_size = 3;
  std::mt19937 rng(9);
  auto d = random_valid_document(rng);
  auto s = store(cfg, {d});
  CHECK(s.documents_loaded == 1);
  CHECK(s.nodes_created == d.nodes.size());
  CHECK(db.node_count() == d.nodes.size());
  CHECK(db.requests() == (to_cypher(d).size() + 2) / 3);
}

TEST_CASE("a failing document rolls back alone") {
  FakeNeo4j db("neo4j", "s3cret");
  db.fail_on("poison");
  auto good = story_doc("good story", "user", "sync", "data");
  auto bad = story_doc("bad story", "user", "poison", "thing");
  auto s = store(config_for(db), {good, bad});
  CHECK(s.documents_loaded == 1);
  REQUIRE(s.failures.size() == 1);
  CHECK(s.failures[0].find("document 1") == 0);
  CHECK_FALSE(db.has_node("Userstory", "bad story"));
  CHECK(db.has_node("Userstory", "good story"));
}

TEST_CASE("bad credentials are reported without the password") {
  FakeNeo4j db("neo4j", "right");
  auto cfg = config_for(db);
  cfg.password = "wrong-password";
  try {
    store(cfg, {story_doc("s", "u", "a", "e")});
    FAIL("expected SinkError");
  } catch (const SinkError& e) {
    std::string what = e.what();
    CHECK(what.find("wrong-password") == std::string::npos);
    CHECK(what.find(db.host_port()) != std::string::npos);
  }
}

TEST_CASE("unreachable host is named") {
  SinkConfig cfg;
  cfg.uri = "http://user:pw@127.0.0.1:1";
  cfg.user = "neo4j";
  cfg.password = "pw";
  cfg.request_timeout_s = 2;
  try {
    store(cfg, {story_doc("s", "u", "a", "e")});
    FAIL("expected SinkError");
  } catch (const SinkError& e) {
    std::string what = e.what();
    CHECK(what.find("127.0.0.1:1") != std::string::npos);
    CHECK(what.find("pw") == std::string::npos);
  }
}

TEST_CASE("uri handling and environment fallback") {
  CHECK(redact_uri("http://u:p@host:7474/x") == "http://host:7474/x");
  CHECK(redact_uri("bolt://host:7687") == "bolt://host:7687");
  ::setenv("NEO4J_URI", "bolt://localhost:7687", 1);
  ::setenv("NEO4J_USER", "neo4j", 1);
  ::setenv("NEO4J_PASSWORD", "pw", 1);
  auto cfg = resolve_sink_config({});
  CHECK(cfg.uri == "bolt://localhost:7687");
  CHECK(cfg.password == "pw");
  ::unsetenv("NEO4J_URI");
  ::unsetenv("NEO4J_USER");
  ::unsetenv("NEO4J_PASSWORD");
  CHECK_THROWS_AS(resolve_sink_config({}), ConfigError);
}
