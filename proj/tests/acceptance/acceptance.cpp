// Acceptance checks. One line per criterion: PASS, FAIL or SKIP.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fake_neo4j.hpp"
#include "oracles.hpp"
#include "storygraph/corpus.hpp"
#include "storygraph/errors.hpp"
#include "storygraph/evaluation.hpp"
#include "storygraph/extraction.hpp"
#include "storygraph/graph_sink.hpp"
#include "storygraph/graph_transform.hpp"
#include "storygraph/pipeline.hpp"

using namespace storygraph;
using namespace storygraph::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kTol = 1e-9;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Pass;
  std::string detail;
};

Outcome pass(std::string d = {}) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::Skip, std::move(d)}; }

bool near(double a, double b) { return std::fabs(a - b) <= kTol; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("storygraph-acc-" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

// ---------------------------------------------------------------------------

Outcome comparison_oracle() {
  auto rows = comparison_table_rows();
  std::size_t i = 0;
  for (const auto& row : rows) {
    ++i;
    if (evaluate_row(row) != row.expected) {
      return fail("row " + std::to_string(i) + " (" + std::string(to_string(row.mode)) +
                  ", gt \"" + row.gt + "\") disagrees");
    }
  }
  return pass(std::to_string(rows.size()) + " rows");
}

Outcome self_identity() {
  fs::path dir = sample_corpus();
  std::string label = "bundled sample";
  if (const char* d = env("STORYGRAPH_DATASET_DIR")) {
    dir = d;
    label = dir.string();
  }
  auto files = list_backlog_files(dir);
  if (files.empty()) return fail("no backlogs in " + dir.string());
  const std::vector<ComparisonMode> modes(kAllModes.begin(), kAllModes.end());
  std::size_t checked = 0;
  for (const auto& f : files) {
    auto gt = load_backlog_file(f);
    std::vector<std::optional<KgComponents>> self;
    for (const auto& s : gt.stories) self.emplace_back(story_to_components(s));
    auto ev = evaluate_backlog(gt, self, modes, nullptr);
    for (NodeKind k : kEvaluatedKinds) {
      for (ComparisonMode m : kAllModes) {
        if (!mode_applies(k, m)) continue;
        auto it = std::find_if(ev.rows.begin(), ev.rows.end(), [&](const ReportRow& r) {
          return r.kind == to_string(k) && r.mode == to_string(m);
        });
        if (it == ev.rows.end()) {
          // A backlog without any benefit has no defined Benefit row.
          if (k == NodeKind::Benefit) continue;
          return fail(gt.name + ": no " + std::string(to_string(k)) + "/" +
                      std::string(to_string(m)) + " row");
        }
        const auto& mr = it->metrics;
        if (!near(mr.precision, 1) || !near(mr.recall, 1) || !near(mr.f_measure, 1)) {
          return fail(gt.name + ": " + it->kind + "/" + it->mode + " F=" +
                      std::to_string(mr.f_measure));
        }
        ++checked;
      }
    }
  }
  return pass(std::to_string(files.size()) + " backlogs, " + std::to_string(checked) +
              " rows, " + label);
}

Outcome metric_arithmetic() {
  auto m = metrics_for(Counts{2, 1, 1});
  if (!m || !near(m->precision, 2.0 / 3) || !near(m->recall, 2.0 / 3) ||
      !near(m->f_measure, 2.0 / 3)) {
    return fail("Counts(2,1,1)");
  }
  auto one = metrics_for(Counts{1, 0, 0});
  if (!one || !near(one->precision, 1) || !near(one->recall, 1) || !near(one->f_measure, 1)) {
    return fail("Counts(1,0,0)");
  }
  if (metrics_for(Counts{0, 0, 0}).has_value()) return fail("both-empty is defined");

  // Story 1 matches its persona exactly; story 2 has no persona on either side.
  Backlog gt{"synthetic", {}};
  AnnotatedStory s1;
  s1.pid = "#1#";
  s1.text = "#1# As a user, I want to read books.";
  s1.personas = {"user"};
  s1.primary_actions = {"read"};
  s1.primary_entities = {"books"};
  s1.triggers = {{"user", "read"}};
  s1.targets = {{"read", "books"}};
  AnnotatedStory s2;
  s2.pid = "#2#";
  s2.text = "#2# I want to export reports.";
  s2.primary_actions = {"export"};
  s2.primary_entities = {"reports"};
  s2.targets = {{"export", "reports"}};
  gt.stories = {s1, s2};
  std::vector<std::optional<KgComponents>> ex = {story_to_components(s1),
                                                 story_to_components(s2)};
  auto ev = evaluate_backlog(gt, ex, {ComparisonMode::Strict}, nullptr);
  for (const auto& r : ev.rows) {
    if (r.kind == "Persona" && r.mode == "strict") {
      if (r.stories_counted != 1 || r.stories_undefined != 1 || !near(r.metrics.f_measure, 1)) {
        return fail("persona mean over the synthetic backlog is " +
                    std::to_string(r.metrics.f_measure));
      }
      return pass();
    }
  }
  return fail("no Persona/strict row");
}

Outcome end_to_end_replay() {
  ExtractorConfig cfg;
  cfg.backend = BackendKind::ReplayFixture;
  cfg.fixture_path = sync_fixture();
  auto comps = extract_components(cfg, kSyncStory);
  auto doc = build_graph_document(comps, kSyncStory);
  auto count_nodes = [&](NodeKind k) {
    return std::count_if(doc.nodes.begin(), doc.nodes.end(),
                         [&](const GraphNode& n) { return n.kind == k; });
  };
  auto count_rels = [&](RelKind k) {
    return std::count_if(doc.relationships.begin(), doc.relationships.end(),
                         [&](const GraphRelationship& r) { return r.kind == k; });
  };
  std::ostringstream shape;
  shape << doc.nodes.size() << " nodes (" << count_nodes(NodeKind::Userstory) << "/"
        << count_nodes(NodeKind::Persona) << "/" << count_nodes(NodeKind::Action) << "/"
        << count_nodes(NodeKind::Entity) << "/" << count_nodes(NodeKind::Benefit) << "), "
        << doc.relationships.size() << " rels";
  bool ok = doc.nodes.size() == 8 && count_nodes(NodeKind::Userstory) == 1 &&
            count_nodes(NodeKind::Persona) == 1 && count_nodes(NodeKind::Action) == 2 &&
            count_nodes(NodeKind::Entity) == 3 && count_nodes(NodeKind::Benefit) == 1 &&
            doc.relationships.size() == 10 && count_rels(RelKind::Triggers) == 1 &&
            count_rels(RelKind::Targets) == 2;
  if (!ok) return fail(shape.str());
  auto v = validate_ontology(doc);
  if (!v.empty()) return fail(std::to_string(v.size()) + " violations: " + v[0].message);
  return pass(shape.str());
}

Outcome logical_rels_property() {
  std::mt19937 rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<NodeRef> nodes;
    for (int i = 0; i < n; ++i) {
      auto k = kAllNodeKinds[std::uniform_int_distribution<std::size_t>(0, 4)(rng)];
      nodes.push_back({"n" + std::to_string(std::uniform_int_distribution<int>(0, 6)(rng)), k});
    }
    auto stories = std::count_if(nodes.begin(), nodes.end(),
                                 [](const NodeRef& r) { return r.kind == NodeKind::Userstory; });
    auto expected = brute_force_logical_rels(nodes);
    if (stories != 1) {
      bool threw = false;
      try {
        create_logical_rels(nodes);
      } catch (const StructuralError&) {
        threw = true;
      }
      if (!threw) return fail("trial " + std::to_string(trial) + ": no error without one story");
      continue;
    }
    if (create_logical_rels(nodes) != expected) {
      return fail("trial " + std::to_string(trial) + " differs from oracle");
    }
  }
  return pass("1000 multisets");
}

Outcome bertscore_properties() {
  OneHotEmbedder one_hot;
  std::vector<std::string> ident = {"sync", "data", "anywhere"};
  auto id = bertscore(ident, ident, one_hot);
  if (!near(id.precision, 1) || !near(id.recall, 1) || !near(id.f_measure, 1)) {
    return fail("identity lists");
  }
  auto half = bertscore({"a", "b"}, {"a", "c"}, one_hot);
  if (!near(half.precision, 0.5) || !near(half.recall, 0.5) || !near(half.f_measure, 0.5)) {
    return fail("one-hot a,b / a,c");
  }
  TinyEmbedder tiny;
  auto lists = all_token_lists({"a", "b", "c"}, 5);
  std::size_t pairs = 0;
  for (const auto& gt : lists) {
    for (const auto& pred : lists) {
      auto got = bertscore(gt, pred, tiny);
      auto want = brute_force_bertscore(gt, pred, &TinyEmbedder::similarity);
      if (!near(got.precision, want.precision) || !near(got.recall, want.recall) ||
          !near(got.f_measure, want.f_measure)) {
        return fail("oracle disagreement after " + std::to_string(pairs) + " pairs");
      }
      ++pairs;
    }
  }
  return pass(std::to_string(pairs) + " list pairs");
}

Outcome validation_fuzz() {
  std::mt19937 rng(7);
  const char* aspects[3] = {"persona-cardinality", "benefit-cardinality", "endpoint-kind"};
  int by_kind[3] = {0, 0, 0};
  for (int i = 0; i < 500; ++i) {
    auto doc = random_valid_document(rng);
    if (!validate_ontology(doc).empty()) return fail("generator produced an invalid document");
    int kind = i % 3;
    switch (kind) {
      case 0:
        doc.nodes.erase(std::find_if(doc.nodes.begin(), doc.nodes.end(), [](const GraphNode& n) {
          return n.kind == NodeKind::Persona;
        }));
        break;
      case 1: {
        bool has = std::any_of(doc.nodes.begin(), doc.nodes.end(),
                               [](const GraphNode& n) { return n.kind == NodeKind::Benefit; });
        for (int b = has ? 1 : 0; b < 2; ++b) {
          GraphNode extra{"extra benefit " + std::to_string(b), NodeKind::Benefit, {}};
          doc.nodes.push_back(extra);
          doc.relationships.push_back(
              {doc.nodes[0].ref(), extra.ref(), RelKind::HasBenefit, {}});
        }
        break;
      }
      case 2: {
        auto& r = doc.relationships[std::uniform_int_distribution<std::size_t>(
            0, doc.relationships.size() - 1)(rng)];
        NodeRef& end = std::uniform_int_distribution<int>(0, 1)(rng) ? r.source : r.target;
        auto original = end.kind;
        do {
          end.kind = kAllNodeKinds[std::uniform_int_distribution<std::size_t>(0, 4)(rng)];
        } while (end.kind == original || endpoints_allowed(r.kind, r.source.kind, r.target.kind));
        break;
      }
    }
    auto v = validate_ontology(doc);
    bool named = std::any_of(v.begin(), v.end(), [&](const Violation& x) {
      return x.aspect == aspects[kind] && x.severity == Severity::Error;
    });
    if (!named) return fail("mutation " + std::to_string(i) + " not reported as " + aspects[kind]);
    ++by_kind[kind];
  }
  return pass(std::to_string(by_kind[0]) + "/" + std::to_string(by_kind[1]) + "/" +
              std::to_string(by_kind[2]) + " mutations");
}

Outcome sink_idempotence() {
  TempDir tmp;
  std::ostringstream log;
  ExtractOptions ex;
  ex.experiment = "acceptance";
  ex.input_dir = sample_corpus();
  ex.output_root = tmp.path;
  if (run_extract(ex, log).exit_code != 0) return fail("extract failed: " + log.str());

  std::unique_ptr<FakeNeo4j> fake;
  LoadOptions opt;
  opt.experiment = "acceptance";
  opt.output_root = tmp.path;
  std::string label;
  if (env("NEO4J_URI") != nullptr) {
    label = "live database " + redact_uri(env("NEO4J_URI"));
  } else {
    fake = std::make_unique<FakeNeo4j>("neo4j", "acceptance");
    opt.sink.uri = fake->uri();
    opt.sink.user = "neo4j";
    opt.sink.password = "acceptance";
    label = "in-process HTTP stand-in";
  }
  auto first = run_load(opt, log);
  if (first.exit_code != 0) return fail("first load failed: " + log.str());
  auto second = run_load(opt, log);
  if (second.exit_code != 0) return fail("second load failed: " + log.str());
  if (second.summary.nodes_created != 0) {
    return fail("second load created " + std::to_string(second.summary.nodes_created) +
                " nodes (" + label + ")");
  }

  auto groups = parse_cypher_script(slurp(first.output_dir / "graph.cypher"));
  auto config = resolve_sink_config(opt.sink);
  auto replay = store_statements(config, groups);
  if (replay.nodes_created != second.summary.nodes_created ||
      replay.rels_created != second.summary.rels_created ||
      replay.nodes_matched != second.summary.nodes_matched) {
    return fail("replayed script counts differ from the second load (" + label + ")");
  }
  if (fake) {
    FakeNeo4j fresh("neo4j", "acceptance");
    config.uri = fresh.uri();
    auto replay_fresh = store_statements(config, groups);
    if (replay_fresh.nodes_created != first.summary.nodes_created ||
        replay_fresh.rels_created != first.summary.rels_created) {
      return fail("script into an empty store differs from the first load");
    }
  }
  return pass(std::to_string(first.summary.nodes_created) + " nodes then 0, " + label);
}

Outcome determinism() {
  TempDir tmp;
  std::ostringstream log;
  ExtractOptions ex;
  ex.experiment = "det";
  ex.input_dir = sample_corpus();
  std::vector<fs::path> dirs;
  for (const char* run : {"one", "two"}) {
    ex.output_root = tmp.path / run;
    auto r = run_extract(ex, log);
    if (r.exit_code != 0) return fail("extract failed");
    dirs.push_back(r.output_dir);
  }
  for (const auto& f : list_backlog_files(dirs[0])) {
    if (slurp(f) != slurp(dirs[1] / f.filename())) {
      return fail(f.filename().string() + " differs between runs");
    }
  }
  std::vector<std::string> csv;
  for (const auto& root : {tmp.path / "one", tmp.path / "two"}) {
    EvaluateOptions ev;
    ev.experiment = "det";
    ev.baseline_dir = sample_corpus();
    ev.output_root = root;
    auto r = run_evaluate(ev, log);
    if (r.exit_code != 0) return fail("evaluate failed");
    csv.push_back(slurp(r.output_dir / "report.csv"));
  }
  if (csv[0] != csv[1]) return fail("report.csv differs between runs");
  return pass();
}

Outcome live_smoke() {
  const char* dataset = env("STORYGRAPH_DATASET_DIR");
  const char* endpoint = env("STORYGRAPH_LIVE_ENDPOINT");
  const char* model = env("STORYGRAPH_LIVE_MODEL");
  if (dataset == nullptr || endpoint == nullptr || model == nullptr) {
    return skip("set STORYGRAPH_DATASET_DIR, STORYGRAPH_LIVE_ENDPOINT, STORYGRAPH_LIVE_MODEL");
  }
  fs::path g02 = fs::path(dataset) / "g02.json";
  if (!fs::exists(g02)) return skip(g02.string() + " not found");
  TempDir tmp;
  fs::create_directories(tmp.path / "in");
  fs::copy_file(g02, tmp.path / "in" / "g02.json");
  std::ostringstream log;
  ExtractOptions ex;
  ex.experiment = "live";
  ex.input_dir = tmp.path / "in";
  ex.output_root = tmp.path;
  ex.extractor.backend = BackendKind::ChatHttp;
  ex.extractor.endpoint = endpoint;
  ex.extractor.model_name = model;
  ex.extractor.temperature = 0.0;
  ex.extractor.supports_function_calls = env("STORYGRAPH_LIVE_FUNCTION_CALLS") != nullptr;
  auto r = run_extract(ex, log);
  if (r.exit_code != 0) return fail("extract exit " + std::to_string(r.exit_code));
  load_backlog_file(r.output_dir / "g02.json");  // throws on a schema violation
  EvaluateOptions ev;
  ev.experiment = "live";
  ev.baseline_dir = tmp.path / "in";
  ev.output_root = tmp.path;
  auto e = run_evaluate(ev, log);
  if (e.exit_code != 0 || e.report.rows.empty()) return fail("evaluate produced no report");
  std::cout << log.str();
  return pass(std::to_string(r.failed_stories) + " of " + std::to_string(r.stories) +
              " stories failed");
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;  // 0: no time bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "comparison-mode oracle", 1.0, comparison_oracle},
      {2, "self-evaluation identity", 30.0, self_identity},
      {3, "metric arithmetic", 0, metric_arithmetic},
      {4, "end-to-end replay", 1.0, end_to_end_replay},
      {5, "inferred relations property", 0, logical_rels_property},
      {6, "bertscore properties", 5.0, bertscore_properties},
      {7, "ontology validation fuzz", 0, validation_fuzz},
      {8, "sink idempotence", 0, sink_idempotence},
      {9, "determinism", 0, determinism},
      {10, "live smoke test", 0, live_smoke},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.verdict == Verdict::Pass && c.limit_s > 0 && secs >= c.limit_s) {
      o = fail("took " + std::to_string(secs) + " s");
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::Fail) ++failures;
    std::cout << tag << " " << c.number << " " << c.name;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << " [" << std::fixed;
    std::cout.precision(3);
    std::cout << secs << " s]\n";
  }
  return failures == 0 ? 0 : 1;
}
