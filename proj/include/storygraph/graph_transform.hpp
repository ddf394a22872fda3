#pragma once

#include <string>
#include <vector>

#include "storygraph/extraction.hpp"
#include "storygraph/graph_model.hpp"

namespace storygraph {

/// Adds the Userstory node (id = story text) in front of the components.
/// No-op when that node is already present.
KgComponents enrich_with_story_node(const KgComponents& components,
                                    const std::string& story_text);

/// One HAS_* edge from the single Userstory node to every other node, in
/// node order. Throws StructuralError unless exactly one Userstory exists.
std::vector<GraphRelationship> create_logical_rels(
    const std::vector<NodeRef>& nodes);

struct TransformStats {
  std::size_t merged_nodes = 0;          // collapsed by (kind, normalized id)
  std::size_t dropped_relationships = 0; // endpoint kinds outside the table
  std::size_t discarded_has_edges = 0;   // model-emitted HAS_* edges
  std::size_t duplicate_relationships = 0;
};

/// Enriches, deduplicates, rewires and appends the inferred edges.
GraphDocument build_graph_document(const KgComponents& components,
                                   const std::string& story_text,
                                   TransformStats* stats = nullptr);

/// Nodes and relationships of a document as components (HAS_* edges kept).
KgComponents components_of(const GraphDocument& doc);

}  // namespace storygraph
