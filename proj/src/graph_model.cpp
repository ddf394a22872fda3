#include "storygraph/graph_model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "storygraph/errors.hpp"

namespace storygraph {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Userstory: return "Userstory";
    case NodeKind::Persona: return "Persona";
    case NodeKind::Action: return "Action";
    case NodeKind::Entity: return "Entity";
    case NodeKind::Benefit: return "Benefit";
  }
  return "?";
}

std::string_view to_string(RelKind kind) {
  switch (kind) {
    case RelKind::Triggers: return "TRIGGERS";
    case RelKind::Targets: return "TARGETS";
    case RelKind::HasPersona: return "HAS_PERSONA";
    case RelKind::HasAction: return "HAS_ACTION";
    case RelKind::HasEntity: return "HAS_ENTITY";
    case RelKind::HasBenefit: return "HAS_BENEFIT";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view name) {
  for (NodeKind k : kAllNodeKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<RelKind> rel_kind_from_string(std::string_view name) {
  for (RelKind k : kAllRelKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

EndpointRule endpoint_rule(RelKind kind) {
  switch (kind) {
    case RelKind::Triggers: return {NodeKind::Persona, NodeKind::Action};
    case RelKind::Targets: return {NodeKind::Action, NodeKind::Entity};
    case RelKind::HasPersona: return {NodeKind::Userstory, NodeKind::Persona};
    case RelKind::HasAction: return {NodeKind::Userstory, NodeKind::Action};
    case RelKind::HasEntity: return {NodeKind::Userstory, NodeKind::Entity};
    case RelKind::HasBenefit: return {NodeKind::Userstory, NodeKind::Benefit};
  }
  return {NodeKind::Userstory, NodeKind::Userstory};
}

bool endpoints_allowed(RelKind kind, NodeKind source, NodeKind target) {
  auto rule = endpoint_rule(kind);
  return rule.source == source && rule.target == target;
}

std::optional<RelKind> has_relation_for(NodeKind kind) {
  switch (kind) {
    case NodeKind::Persona: return RelKind::HasPersona;
    case NodeKind::Action: return RelKind::HasAction;
    case NodeKind::Entity: return RelKind::HasEntity;
    case NodeKind::Benefit: return RelKind::HasBenefit;
    case NodeKind::Userstory: break;
  }
  return std::nullopt;
}

std::string normalize_id(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

std::string lower_name(NodeKind kind) {
  std::string s(to_string(kind));
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

bool is_integer_rendering(const std::string& id) {
  auto s = normalize_id(id);
  if (s.empty()) return false;
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (start == s.size()) return false;
  return std::all_of(s.begin() + start, s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

std::string describe(const GraphRelationship& r) {
  return std::string(to_string(r.kind)) + " (" + r.source.id + ":" +
         std::string(to_string(r.source.kind)) + " -> " + r.target.id + ":" +
         std::string(to_string(r.target.kind)) + ")";
}

}  // namespace

std::vector<Violation> validate_ontology(const GraphDocument& doc) {
  std::vector<Violation> out;
  auto add = [&out](Severity sev, std::string aspect, std::string msg) {
    out.push_back({sev, std::move(aspect), std::move(msg)});
  };

  std::map<NodeKind, std::size_t> count;
  std::set<std::pair<NodeKind, std::string>> seen;
  std::set<NodeRef> refs;
  const GraphNode* story = nullptr;
  for (const auto& n : doc.nodes) {
    ++count[n.kind];
    if (n.kind == NodeKind::Userstory && story == nullptr) story = &n;
    refs.insert(n.ref());
    if (normalize_id(n.id).empty()) {
      add(Severity::Error, "node-id",
          "empty id on " + std::string(to_string(n.kind)) + " node");
    } else if (is_integer_rendering(n.id)) {
      add(Severity::Error, "node-id",
          "integer id \"" + n.id + "\" on " + std::string(to_string(n.kind)) +
              " node");
    }
    if (!seen.emplace(n.kind, normalize_id(n.id)).second) {
      add(Severity::Error, "duplicate-node",
          "duplicate " + std::string(to_string(n.kind)) + " node \"" + n.id +
              "\"");
    }
  }

  auto exactly_one = [&](NodeKind k) {
    std::size_t c = count[k];
    if (c != 1) {
      auto sev = (k == NodeKind::Persona && c > 1) ? Severity::Warning
                                                   : Severity::Error;
      add(sev, lower_name(k) + "-cardinality",
          lower_name(k) + " cardinality " + std::to_string(c) +
              (c > 1 ? " > 1" : " ≠ 1"));
    }
  };
  exactly_one(NodeKind::Userstory);
  exactly_one(NodeKind::Persona);
  for (NodeKind k : {NodeKind::Action, NodeKind::Entity}) {
    if (count[k] == 0) {
      add(Severity::Error, lower_name(k) + "-cardinality",
          lower_name(k) + " cardinality 0 < 1");
    }
  }
  if (count[NodeKind::Benefit] > 1) {
    add(Severity::Error, "benefit-cardinality",
        "benefit cardinality " + std::to_string(count[NodeKind::Benefit]) +
            " > 1");
  }
  if (story != nullptr && story->id != doc.source_text) {
    add(Severity::Error, "userstory-id",
        "userstory node id differs from the source text");
  }

  std::size_t triggers = 0;
  std::map<NodeRef, std::size_t> has_edges;
  for (const auto& r : doc.relationships) {
    if (!refs.contains(r.source) || !refs.contains(r.target)) {
      add(Severity::Error, "dangling-endpoint",
          "relationship endpoint missing from nodes: " + describe(r));
    }
    if (!endpoints_allowed(r.kind, r.source.kind, r.target.kind)) {
      add(Severity::Error, "endpoint-kind",
          "endpoint kinds not allowed for " + describe(r));
    }
    if (r.kind == RelKind::Triggers) ++triggers;
    auto expected = has_relation_for(r.target.kind);
    if (story != nullptr && r.source == story->ref() && expected &&
        *expected == r.kind) {
      ++has_edges[r.target];
    }
  }
  if (triggers != 1) {
    add(Severity::Error, "triggers-count",
        "triggers count " + std::to_string(triggers) + " ≠ 1");
  }
  for (const auto& n : doc.nodes) {
    if (n.kind == NodeKind::Userstory) continue;
    std::size_t c = has_edges[n.ref()];
    if (c != 1) {
      add(Severity::Error, "has-edge",
          std::string(to_string(n.kind)) + " node \"" + n.id + "\" has " +
              std::to_string(c) + " HAS_* edges from the story node");
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json props_json(const Properties& p) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

Properties props_from(const nlohmann::json& j) {
  Properties p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw SchemaError("properties must be an object");
  for (const auto& [k, v] : j.items()) {
    p[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return p;
}

NodeKind node_kind_field(const nlohmann::json& j) {
  auto name = j.at("type").get<std::string>();
  auto kind = node_kind_from_string(name);
  if (!kind) throw SchemaError("unknown node type \"" + name + "\"");
  return *kind;
}

NodeRef ref_from(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("endpoint must be an object");
  return {j.at("id").get<std::string>(), node_kind_field(j)};
}

}  // namespace

nlohmann::ordered_json to_json(const GraphDocument& doc) {
  nlohmann::ordered_json j;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : doc.nodes) {
    nlohmann::ordered_json o;
    o["id"] = n.id;
    o["type"] = to_string(n.kind);
    o["properties"] = props_json(n.properties);
    nodes.push_back(std::move(o));
  }
  auto rels = nlohmann::ordered_json::array();
  for (const auto& r : doc.relationships) {
    nlohmann::ordered_json o;
    o["source"] = {{"id", r.source.id}, {"type", to_string(r.source.kind)}};
    o["target"] = {{"id", r.target.id}, {"type", to_string(r.target.kind)}};
    o["type"] = to_string(r.kind);
    o["properties"] = props_json(r.properties);
    rels.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  j["relationships"] = std::move(rels);
  j["source"] = doc.source_text;
  return j;
}

GraphDocument graph_document_from_json(const nlohmann::json& j) {
  try {
    GraphDocument doc;
    for (const auto& n : j.at("nodes")) {
      doc.nodes.push_back({n.at("id").get<std::string>(), node_kind_field(n),
                           props_from(n.value("properties", nlohmann::json()))});
    }
    for (const auto& r : j.at("relationships")) {
      auto name = r.at("type").get<std::string>();
      auto kind = rel_kind_from_string(name);
      if (!kind) throw SchemaError("unknown relationship type \"" + name + "\"");
      doc.relationships.push_back(
          {ref_from(r.at("source")), ref_from(r.at("target")), *kind,
           props_from(r.value("properties", nlohmann::json()))});
    }
    doc.source_text = j.at("source").get<std::string>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("graph document: ") + e.what());
  }
}

}  // namespace storygraph
