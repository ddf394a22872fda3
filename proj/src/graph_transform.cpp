#include "storygraph/graph_transform.hpp"

#include <map>
#include <set>

#include "storygraph/errors.hpp"

namespace storygraph {

namespace {

bool is_has_kind(RelKind kind) {
  return kind != RelKind::Triggers && kind != RelKind::Targets;
}

using DedupKey = std::pair<NodeKind, std::string>;

DedupKey key_of(const NodeRef& n) { return {n.kind, normalize_id(n.id)}; }

}  // namespace

KgComponents enrich_with_story_node(const KgComponents& components,
                                    const std::string& story_text) {
  NodeRef story{story_text, NodeKind::Userstory};
  for (const auto& n : components.nodes) {
    if (n == story) return components;
  }
  KgComponents out = components;
  out.nodes.insert(out.nodes.begin(), story);
  return out;
}

std::vector<GraphRelationship> create_logical_rels(
    const std::vector<NodeRef>& nodes) {
  const NodeRef* story = nullptr;
  for (const auto& n : nodes) {
    if (n.kind != NodeKind::Userstory) continue;
    if (story != nullptr) throw StructuralError("multiple Userstory nodes");
    story = &n;
  }
  if (story == nullptr) throw StructuralError("no Userstory node");

  std::vector<GraphRelationship> rels;
  for (const auto& n : nodes) {
    if (auto kind = has_relation_for(n.kind)) {
      rels.push_back({*story, n, *kind, {}});
    }
  }
  return rels;
}

GraphDocument build_graph_document(const KgComponents& components,
                                   const std::string& story_text,
                                   TransformStats* stats) {
  TransformStats local;
  TransformStats& st = stats ? *stats : local;
  st = {};

  // Model-emitted story nodes other than the input itself are not kept.
  KgComponents filtered;
  for (const auto& n : components.nodes) {
    if (n.kind == NodeKind::Userstory && n.id != story_text) continue;
    filtered.nodes.push_back(n);
  }
  for (const auto& r : components.relationships) {
    filtered.add_relationship(r);
  }
  KgComponents enriched = enrich_with_story_node(filtered, story_text);

  GraphDocument doc;
  doc.source_text = story_text;
  std::map<DedupKey, NodeRef> survivor;
  std::vector<NodeRef> kept;
  for (const auto& n : enriched.nodes) {
    if (n.kind == NodeKind::Userstory && n.id != story_text) continue;
    auto [it, inserted] = survivor.emplace(key_of(n), n);
    if (!inserted) {
      ++st.merged_nodes;
      continue;
    }
    kept.push_back(n);
    doc.nodes.push_back({n.id, n.kind, {}});
  }

  std::set<std::tuple<NodeRef, NodeRef, RelKind>> seen;
  for (const auto& r : enriched.relationships) {
    if (is_has_kind(r.kind)) {
      ++st.discarded_has_edges;
      continue;
    }
    auto s = survivor.find(key_of(r.source));
    auto t = survivor.find(key_of(r.target));
    if (s == survivor.end() || t == survivor.end() ||
        !endpoints_allowed(r.kind, s->second.kind, t->second.kind)) {
      ++st.dropped_relationships;
      continue;
    }
    if (!seen.emplace(s->second, t->second, r.kind).second) {
      ++st.duplicate_relationships;
      continue;
    }
    doc.relationships.push_back({s->second, t->second, r.kind, {}});
  }
  for (auto& rel : create_logical_rels(kept)) {
    doc.relationships.push_back(std::move(rel));
  }
  return doc;
}

KgComponents components_of(const GraphDocument& doc) {
  KgComponents out;
  for (const auto& n : doc.nodes) out.nodes.push_back(n.ref());
  for (const auto& r : doc.relationships) {
    out.relationships.push_back({r.source, r.target, r.kind});
  }
  return out;
}

}  // namespace storygraph
