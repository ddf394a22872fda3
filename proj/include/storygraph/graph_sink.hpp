#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygraph/graph_model.hpp"

namespace storygraph {

struct SinkConfig {
  // http(s)://host:port, or bolt:// / neo4j:// which are mapped to the HTTP
  // port of the same host.
  std::string uri;
  std::string user;
  std::string password;
  std::optional<std::string> database_name;  // "neo4j" when unset
  std::size_t batch_size = 500;              // statements per HTTP request
  std::size_t max_id_length = 1000;
  double request_timeout_s = 30.0;
};

/// Fills empty uri/user/password from NEO4J_URI, NEO4J_USER and
/// NEO4J_PASSWORD. Throws ConfigError if anything is still missing.
SinkConfig resolve_sink_config(SinkConfig config);

/// `uri` with any user-info removed, safe to print.
std::string redact_uri(const std::string& uri);

struct CypherStatement {
  std::string text;
  nlohmann::json parameters = nlohmann::json::object();

  bool operator==(const CypherStatement&) const = default;
};

/// One MERGE per node, then one per relationship. Values are always passed
/// as parameters. Throws SinkError when an id exceeds `max_id_length`.
std::vector<CypherStatement> to_cypher(const GraphDocument& doc,
                                       std::size_t max_id_length = 1000);

struct LoadSummary {
  std::size_t nodes_created = 0;
  std::size_t rels_created = 0;
  std::size_t nodes_matched = 0;  // node MERGEs that found an existing node
  std::size_t documents_loaded = 0;
  std::vector<std::string> failures;  // one message per rolled-back document

  LoadSummary& operator+=(const LoadSummary& o);
};

/// Runs each statement group in its own transaction, sequentially.
/// Connection and authentication failures throw SinkError; a statement error
/// rolls back only its group and is recorded in `failures`.
LoadSummary store_statements(
    const SinkConfig& config,
    const std::vector<std::vector<CypherStatement>>& groups);

/// to_cypher per document, then store_statements.
LoadSummary store(const SinkConfig& config,
                  const std::vector<GraphDocument>& docs);

/// Canonical JSON array of documents, 2-space indented, trailing newline.
std::string export_json(const std::vector<GraphDocument>& docs);
std::vector<GraphDocument> import_json(std::string_view text);

/// Script for cypher-shell: each document between :begin and :commit, each
/// statement preceded by a `:params` line holding its parameter map.
std::string cypher_script(const std::vector<std::vector<CypherStatement>>& groups);
/// Reads a script produced by cypher_script. Throws ParseError.
std::vector<std::vector<CypherStatement>> parse_cypher_script(std::string_view text);

/// Cypher literal for a JSON value (maps use backticked keys).
std::string cypher_literal(const nlohmann::json& value);

}  // namespace storygraph
