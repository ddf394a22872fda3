#pragma once

// Naive reference implementations and generators for the tests. They share
// no code paths with the library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "storygraph/evaluation.hpp"
#include "storygraph/graph_model.hpp"
#include "storygraph/graph_transform.hpp"

namespace storygraph::testing {

inline std::filesystem::path data_dir() { return STORYGRAPH_DATA_DIR; }
inline std::filesystem::path sample_corpus() { return data_dir() / "sample" / "pos_baseline"; }
inline std::filesystem::path sync_fixture() {
  return data_dir() / "fixtures" / "sync_story_replay.json";
}
inline std::filesystem::path sample_fixture() {
  return data_dir() / "fixtures" / "sample_replay.json";
}

inline const std::string kSyncStory =
    "As a user, I want to sync my data so that I can access my information from anywhere.";

// Comparison-mode example tables (ground truth, prediction, expected).
struct ComparisonRow {
  ComparisonMode mode;
  std::string gt;
  std::variant<std::string, std::vector<std::string>> pred;
  bool expected;
};

inline std::vector<ComparisonRow> comparison_table_rows() {
  using V = std::vector<std::string>;
  std::vector<ComparisonRow> rows;
  const bool expected[3][4] = {
      {false, false, false, true},  // strict
      {true, false, false, true},   // inclusive
      {false, true, false, true},   // relaxed
  };
  const ComparisonMode modes[3] = {ComparisonMode::Strict, ComparisonMode::Inclusive,
                                   ComparisonMode::Relaxed};
  for (int m = 0; m < 3; ++m) {
    rows.push_back({modes[m], "webpage", std::string("webpages"), expected[m][0]});
    rows.push_back({modes[m], "all webpages", std::string("webpages"), expected[m][1]});
    rows.push_back({modes[m], "user's webpage", V{"user", "webpage"}, expected[m][2]});
    rows.push_back({modes[m], "webpage", std::string("webpage"), expected[m][3]});
  }
  return rows;
}

inline bool evaluate_row(const ComparisonRow& row) {
  if (const auto* s = std::get_if<std::string>(&row.pred)) {
    return compare_element(row.gt, *s, row.mode);
  }
  return compare_element(row.gt, std::get<std::vector<std::string>>(row.pred), row.mode);
}

// HAS_* edges: one per non-story node, relationship name spelled out.
inline std::vector<GraphRelationship> brute_force_logical_rels(const std::vector<NodeRef>& nodes) {
  std::vector<NodeRef> stories;
  std::copy_if(nodes.begin(), nodes.end(), std::back_inserter(stories),
               [](const NodeRef& n) { return n.kind == NodeKind::Userstory; });
  if (stories.size() != 1) return {};
  std::vector<GraphRelationship> out;
  for (const auto& n : nodes) {
    std::string name;
    switch (n.kind) {
      case NodeKind::Persona: name = "HAS_PERSONA"; break;
      case NodeKind::Action: name = "HAS_ACTION"; break;
      case NodeKind::Entity: name = "HAS_ENTITY"; break;
      case NodeKind::Benefit: name = "HAS_BENEFIT"; break;
      case NodeKind::Userstory: continue;
    }
    out.push_back({stories[0], n, *rel_kind_from_string(name), {}});
  }
  return out;
}

using Similarity = std::function<double(const std::string&, const std::string&)>;

// Direct transcription of the greedy-max aggregation.
inline MetricRow brute_force_bertscore(const std::vector<std::string>& gt,
                                       const std::vector<std::string>& pred,
                                       const Similarity& sim) {
  double p = 0;
  for (const auto& x : pred) {
    double best = -2;
    for (const auto& y : gt) best = std::max(best, sim(x, y));
    p += best;
  }
  p /= static_cast<double>(pred.size());
  double r = 0;
  for (const auto& y : gt) {
    double best = -2;
    for (const auto& x : pred) best = std::max(best, sim(y, x));
    r += best;
  }
  r /= static_cast<double>(gt.size());
  double f = (p + r) == 0 ? 0 : 2 * p * r / (p + r);
  return {p, r, f};
}

// Fixed 2-d vectors over the vocabulary {a, b, c}.
class TinyEmbedder : public Embedder {
 public:
  std::vector<Vector> embed(const std::vector<std::string>& tokens) override {
    std::vector<Vector> out;
    for (const auto& t : tokens) out.push_back(vector_of(t));
    return out;
  }
  static Vector vector_of(const std::string& t) {
    if (t == "a") return {1.0, 0.0};
    if (t == "b") return {1.0, 1.0};
    return {0.0, 1.0};
  }
  static double similarity(const std::string& x, const std::string& y) {
    auto u = vector_of(x), v = vector_of(y);
    double dot = u[0] * v[0] + u[1] * v[1];
    return dot / (std::hypot(u[0], u[1]) * std::hypot(v[0], v[1]));
  }
};

// All token lists of length 1..max_len over `vocab`.
inline std::vector<std::vector<std::string>> all_token_lists(const std::vector<std::string>& vocab,
                                                             std::size_t max_len) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::vector<std::string>> level{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : level) {
      for (const auto& v : vocab) {
        auto l = prefix;
        l.push_back(v);
        next.push_back(l);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

inline std::string random_word(std::mt19937& rng) {
  static const std::vector<std::string> words = {
      "user", "admin", "data", "report", "sync", "upload", "file", "page", "team",
      "manager", "view", "edit", "record", "book", "catalogue", "profile", "export"};
  return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

// A random ontology-valid document assembled by hand.
inline GraphDocument random_valid_document(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  GraphDocument doc;
  doc.source_text = "story " + std::to_string(pick(0, 1 << 30));
  NodeRef story{doc.source_text, NodeKind::Userstory};
  doc.nodes.push_back({story.id, story.kind, {}});
  auto add = [&](NodeKind kind, const std::string& id) {
    doc.nodes.push_back({id, kind, {}});
    return NodeRef{id, kind};
  };
  NodeRef persona = add(NodeKind::Persona, "persona " + random_word(rng));
  std::vector<NodeRef> actions, entities;
  int na = pick(1, 3), ne = pick(1, 4);
  for (int i = 0; i < na; ++i) actions.push_back(add(NodeKind::Action, "act" + std::to_string(i) + " " + random_word(rng)));
  for (int i = 0; i < ne; ++i) entities.push_back(add(NodeKind::Entity, "ent" + std::to_string(i) + " " + random_word(rng)));
  if (pick(0, 1)) add(NodeKind::Benefit, "benefit " + random_word(rng));
  doc.relationships.push_back({persona, actions[0], RelKind::Triggers, {}});
  for (const auto& e : entities) {
    doc.relationships.push_back({actions[static_cast<std::size_t>(pick(0, na - 1))], e, RelKind::Targets, {}});
  }
  std::vector<NodeRef> refs;
  for (const auto& n : doc.nodes) refs.push_back(n.ref());
  for (auto& r : brute_force_logical_rels(refs)) doc.relationships.push_back(r);
  return doc;
}

}  // namespace storygraph::testing
