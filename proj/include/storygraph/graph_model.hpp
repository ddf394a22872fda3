#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace storygraph {

enum class NodeKind { Userstory, Persona, Action, Entity, Benefit };

enum class RelKind {
  Triggers,
  Targets,
  HasPersona,
  HasAction,
  HasEntity,
  HasBenefit,
};

inline constexpr std::array<NodeKind, 5> kAllNodeKinds = {
    NodeKind::Userstory, NodeKind::Persona, NodeKind::Action,
    NodeKind::Entity, NodeKind::Benefit};

inline constexpr std::array<RelKind, 6> kAllRelKinds = {
    RelKind::Triggers,  RelKind::Targets,   RelKind::HasPersona,
    RelKind::HasAction, RelKind::HasEntity, RelKind::HasBenefit};

std::string_view to_string(NodeKind kind);
std::string_view to_string(RelKind kind);

/// Exact-name lookups ("Persona", "TRIGGERS"). Unknown names yield nullopt.
std::optional<NodeKind> node_kind_from_string(std::string_view name);
std::optional<RelKind> rel_kind_from_string(std::string_view name);

/// Endpoint kinds allowed for each relationship kind.
struct EndpointRule {
  NodeKind source;
  NodeKind target;
};
EndpointRule endpoint_rule(RelKind kind);
bool endpoints_allowed(RelKind kind, NodeKind source, NodeKind target);

/// The HAS_* kind linking a story node to a satellite of `kind`;
/// nullopt for Userstory.
std::optional<RelKind> has_relation_for(NodeKind kind);

using Properties = std::map<std::string, std::string>;

/// Trim, collapse inner whitespace runs, lowercase (ASCII).
std::string normalize_id(std::string_view raw);

/// Identity of a node inside a document: (kind, display id).
struct NodeRef {
  std::string id;
  NodeKind kind = NodeKind::Entity;

  bool operator==(const NodeRef&) const = default;
  auto operator<=>(const NodeRef&) const = default;
};

struct GraphNode {
  std::string id;
  NodeKind kind = NodeKind::Entity;
  Properties properties;

  NodeRef ref() const { return {id, kind}; }
  bool operator==(const GraphNode&) const = default;
};

struct GraphRelationship {
  NodeRef source;
  NodeRef target;
  RelKind kind = RelKind::Targets;
  Properties properties;

  bool operator==(const GraphRelationship&) const = default;
};

struct GraphDocument {
  std::vector<GraphNode> nodes;
  std::vector<GraphRelationship> relationships;
  std::string source_text;

  bool operator==(const GraphDocument&) const = default;
};

enum class Severity { Error, Warning };

struct Violation {
  Severity severity = Severity::Error;
  std::string aspect;  // stable machine-readable tag, e.g. "persona-cardinality"
  std::string message;
};

/// Checks a document against the story ontology: node cardinalities,
/// endpoint kinds, a single TRIGGERS edge and one HAS_* edge per satellite.
/// More than one persona is reported with warning severity.
std::vector<Violation> validate_ontology(const GraphDocument& doc);

nlohmann::ordered_json to_json(const GraphDocument& doc);
/// Inverse of to_json. Throws SchemaError on unknown kinds or missing fields.
GraphDocument graph_document_from_json(const nlohmann::json& j);

}  // namespace storygraph
