#include "storygraph/graph_sink.hpp"

#include <cstdlib>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "internal/http.hpp"
#include "storygraph/errors.hpp"

namespace storygraph {

using nlohmann::json;

SinkConfig resolve_sink_config(SinkConfig config) {
  auto fill = [](std::string& field, const char* var) {
    if (!field.empty()) return;
    if (const char* v = std::getenv(var)) field = v;
  };
  fill(config.uri, "NEO4J_URI");
  fill(config.user, "NEO4J_USER");
  fill(config.password, "NEO4J_PASSWORD");
  if (config.uri.empty()) throw ConfigError("graph database URI is not set (NEO4J_URI)");
  if (config.user.empty()) throw ConfigError("graph database user is not set (NEO4J_USER)");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  return config;
}

std::string redact_uri(const std::string& uri) {
  auto scheme_end = uri.find("://");
  std::size_t start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto at = uri.find('@', start);
  auto slash = uri.find('/', start);
  if (at == std::string::npos || (slash != std::string::npos && at > slash)) {
    return uri;
  }
  return uri.substr(0, start) + uri.substr(at + 1);
}

namespace {

internal::Url http_endpoint(const std::string& raw_uri) {
  std::string uri = redact_uri(raw_uri);
  static const std::regex binary(R"(^(bolt|neo4j)(\+s|\+ssc)?://([^/:]+)(:\d+)?/?$)",
                                 std::regex::icase);
  std::smatch m;
  if (std::regex_match(uri, m, binary)) {
    bool tls = m[2].matched;
    uri = std::string(tls ? "https://" : "http://") + m[3].str() +
          (tls ? ":7473" : ":7474");
  }
  auto url = internal::parse_url(uri);
  if (!url) throw ConfigError("unsupported graph database URI: " + uri);
  return *url;
}

std::string check_id(const std::string& id, std::size_t cap) {
  if (id.size() > cap) {
    throw SinkError("node id of " + std::to_string(id.size()) +
                    " bytes exceeds the cap of " + std::to_string(cap));
  }
  return id;
}

json properties_json(const Properties& props) {
  json out = json::object();
  for (const auto& [k, v] : props) out[k] = v;
  return out;
}

bool is_node_statement(const CypherStatement& s) {
  return s.text.rfind("MERGE (n:", 0) == 0;
}

}  // namespace

std::vector<CypherStatement> to_cypher(const GraphDocument& doc,
                                       std::size_t max_id_length) {
  std::vector<CypherStatement> out;
  out.reserve(doc.nodes.size() + doc.relationships.size());
  for (const auto& n : doc.nodes) {
    out.push_back({"MERGE (n:" + std::string(to_string(n.kind)) +
                       " {id: $id}) SET n += $properties",
                   {{"id", check_id(n.id, max_id_length)},
                    {"properties", properties_json(n.properties)}}});
  }
  for (const auto& r : doc.relationships) {
    out.push_back({"MATCH (s:" + std::string(to_string(r.source.kind)) +
                       " {id: $source_id}) MATCH (t:" +
                       std::string(to_string(r.target.kind)) +
                       " {id: $target_id}) MERGE (s)-[r:" +
                       std::string(to_string(r.kind)) +
                       "]->(t) SET r += $properties",
                   {{"source_id", check_id(r.source.id, max_id_length)},
                    {"target_id", check_id(r.target.id, max_id_length)},
                    {"properties", properties_json(r.properties)}}});
  }
  return out;
}

LoadSummary& LoadSummary::operator+=(const LoadSummary& o) {
  nodes_created += o.nodes_created;
  rels_created += o.rels_created;
  nodes_matched += o.nodes_matched;
  documents_loaded += o.documents_loaded;
  failures.insert(failures.end(), o.failures.begin(), o.failures.end());
  return *this;
}

namespace {

class TxClient {
 public:
  explicit TxClient(const SinkConfig& config)
      : url_(http_endpoint(config.uri)),
        base_("/db/" + config.database_name.value_or("neo4j") + "/tx") {
    opts_.timeout = std::chrono::milliseconds(
        static_cast<long>(config.request_timeout_s * 1000));
    opts_.basic_auth = std::make_pair(config.user, config.password);
  }

  // Returns the parsed response; throws SinkError on transport/auth problems.
  json post(const std::string& path, const std::vector<CypherStatement>& batch,
            int* status = nullptr) {
    json body;
    body["statements"] = json::array();
    for (const auto& s : batch) {
      body["statements"].push_back({{"statement", s.text},
                                    {"parameters", s.parameters},
                                    {"includeStats", true}});
    }
    auto target = url_;
    target.path = path;
    auto res = internal::post_json(target, body.dump(), opts_);
    if (!res.transport_ok()) {
      throw SinkError("cannot reach graph database at " + where() + ": " +
                      res.error);
    }
    if (res.status == 401 || res.status == 403) {
      throw SinkError("graph database at " + where() +
                      " rejected the credentials (HTTP " +
                      std::to_string(res.status) + ")");
    }
    if (res.status == 404) {
      throw SinkError("graph database at " + where() + " has no endpoint " + path);
    }
    if (res.status >= 300) {
      throw SinkError("graph database at " + where() + " answered HTTP " +
                      std::to_string(res.status));
    }
    if (status) *status = res.status;
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw SinkError("graph database at " + where() + " sent a non-JSON reply");
    }
    return j;
  }

  const std::string& base() const { return base_; }
  std::string where() const { return url_.host + ":" + std::to_string(url_.port); }

 private:
  internal::Url url_;
  std::string base_;
  internal::HttpOptions opts_;
};

std::string first_error(const json& reply) {
  auto it = reply.find("errors");
  if (it == reply.end() || !it->is_array() || it->empty()) return {};
  const auto& e = (*it)[0];
  return e.value("code", std::string("error")) + ": " +
         e.value("message", std::string());
}

void add_stats(const json& reply, const std::vector<CypherStatement>& batch,
               LoadSummary& summary) {
  auto results = reply.find("results");
  if (results == reply.end() || !results->is_array()) return;
  for (std::size_t i = 0; i < results->size() && i < batch.size(); ++i) {
    auto stats = (*results)[i].find("stats");
    if (stats == (*results)[i].end()) continue;
    auto created = stats->value("nodes_created", std::size_t{0});
    summary.nodes_created += created;
    summary.rels_created += stats->value("relationships_created", std::size_t{0});
    if (is_node_statement(batch[i]) && created == 0) ++summary.nodes_matched;
  }
}

std::string tx_path_from_commit(const json& reply, const std::string& base) {
  // "commit": "http://host:7474/db/neo4j/tx/12/commit"
  auto commit = reply.value("commit", std::string());
  auto pos = commit.find(base + "/");
  if (pos == std::string::npos) {
    throw SinkError("graph database did not open a transaction");
  }
  auto path = commit.substr(pos);
  auto suffix = path.rfind("/commit");
  return suffix == std::string::npos ? path : path.substr(0, suffix);
}

LoadSummary load_group(TxClient& client,
                       const std::vector<CypherStatement>& group,
                       std::size_t batch_size) {
  LoadSummary summary;
  if (group.size() <= batch_size) {
    auto reply = client.post(client.base() + "/commit", group);
    if (auto err = first_error(reply); !err.empty()) {
      summary.failures.push_back(err);
      return summary;
    }
    add_stats(reply, group, summary);
    ++summary.documents_loaded;
    return summary;
  }

  std::string tx;
  LoadSummary pending;
  for (std::size_t start = 0; start < group.size(); start += batch_size) {
    std::vector<CypherStatement> batch(
        group.begin() + static_cast<std::ptrdiff_t>(start),
        group.begin() + static_cast<std::ptrdiff_t>(
                            std::min(group.size(), start + batch_size)));
    bool last = start + batch_size >= group.size();
    std::string path = tx.empty() ? client.base()
                       : last     ? tx + "/commit"
                                  : tx;
    auto reply = client.post(path, batch);
    if (auto err = first_error(reply); !err.empty()) {
      // The server rolls the transaction back on a statement error.
      summary.failures.push_back(err);
      return summary;
    }
    if (tx.empty()) tx = tx_path_from_commit(reply, client.base());
    add_stats(reply, batch, pending);
  }
  summary = pending;
  ++summary.documents_loaded;
  return summary;
}

}  // namespace

LoadSummary store_statements(
    const SinkConfig& config,
    const std::vector<std::vector<CypherStatement>>& groups) {
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  TxClient client(config);
  LoadSummary total;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto s = load_group(client, groups[i], config.batch_size);
    for (auto& f : s.failures) {
      f = "document " + std::to_string(i) + ": " + f;
      spdlog::warn("rolled back {}", f);
    }
    total += s;
  }
  return total;
}

LoadSummary store(const SinkConfig& config,
                  const std::vector<GraphDocument>& docs) {
  std::vector<std::vector<CypherStatement>> groups;
  groups.reserve(docs.size());
  for (const auto& d : docs) groups.push_back(to_cypher(d, config.max_id_length));
  return store_statements(config, groups);
}

std::string export_json(const std::vector<GraphDocument>& docs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : docs) arr.push_back(to_json(d));
  return arr.dump(2) + "\n";
}

std::vector<GraphDocument> import_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte, std::string(text));
  }
  if (!j.is_array()) throw SchemaError("graph export must be a JSON array");
  std::vector<GraphDocument> out;
  for (const auto& d : j) out.push_back(graph_document_from_json(d));
  return out;
}

// ---------------------------------------------------------------------------
// Cypher script
// ---------------------------------------------------------------------------

std::string cypher_literal(const json& value) {
  switch (value.type()) {
    case json::value_t::null:
      return "null";
    case json::value_t::boolean:
      return value.get<bool>() ? "true" : "false";
    case json::value_t::string: {
      std::string out = "'";
      for (char c : value.get_ref<const std::string&>()) {
        switch (c) {
          case '\\': out += "\\\\"; break;
          case '\'': out += "\\'"; break;
          case '\n': out += "\\n"; break;
          case '\r': out += "\\r"; break;
          case '\t': out += "\\t"; break;
          default: out.push_back(c);
        }
      }
      return out + "'";
    }
    case json::value_t::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ", ";
        out += cypher_literal(value[i]);
      }
      return out + "]";
    }
    case json::value_t::object: {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, v] : value.items()) {
        if (!first) out += ", ";
        first = false;
        std::string key;
        for (char c : k) {
          if (c == '`') key += "``";
          else key.push_back(c);
        }
        out += "`" + key + "`: " + cypher_literal(v);
      }
      return out + "}";
    }
    default:
      return value.dump();
  }
}

namespace {

class LiteralReader {
 public:
  explicit LiteralReader(std::string_view s) : s_(s) {}

  json read() {
    auto v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("cypher literal: " + what, pos_, std::string(s_));
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '\'') return string();
    if (c == '{') return map();
    if (c == '[') return list();
    auto rest = s_.substr(pos_);
    for (auto [word, v] : {std::pair<std::string_view, json>{"null", nullptr},
                           {"true", true},
                           {"false", false}}) {
      if (rest.substr(0, word.size()) == word) {
        pos_ += word.size();
        return v;
      }
    }
    std::size_t end = pos_;
    while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) ||
                               s_[end] == '-' || s_[end] == '.' || s_[end] == 'e' ||
                               s_[end] == 'E' || s_[end] == '+')) {
      ++end;
    }
    if (end == pos_) fail("unexpected character");
    auto num = json::parse(s_.substr(pos_, end - pos_), nullptr, false);
    if (num.is_discarded()) fail("bad number");
    pos_ = end;
    return num;
  }

  json string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '\'') {
      char c = s_[pos_++];
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("dangling escape");
      char e = s_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(e);
      }
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string key() {
    skip_ws();
    std::string out;
    if (eat('`')) {
      while (pos_ < s_.size()) {
        if (s_[pos_] == '`') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '`') {
            out.push_back('`');
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out.push_back(s_[pos_++]);
      }
      fail("unterminated key");
    }
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_')) {
      out.push_back(s_[pos_++]);
    }
    if (out.empty()) fail("expected key");
    return out;
  }

  json map() {
    ++pos_;
    json out = json::object();
    if (eat('}')) return out;
    do {
      auto k = key();
      expect(':');
      out[k] = value();
    } while (eat(','));
    expect('}');
    return out;
  }

  json list() {
    ++pos_;
    json out = json::array();
    if (eat(']')) return out;
    do {
      out.push_back(value());
    } while (eat(','));
    expect(']');
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string cypher_script(const std::vector<std::vector<CypherStatement>>& groups) {
  std::ostringstream os;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    os << "// document " << i << "\n:begin\n";
    for (const auto& s : groups[i]) {
      os << ":params " << cypher_literal(s.parameters) << "\n" << s.text << ";\n";
    }
    os << ":commit\n";
  }
  return os.str();
}

std::vector<std::vector<CypherStatement>> parse_cypher_script(std::string_view text) {
  std::vector<std::vector<CypherStatement>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool open = false;
  std::optional<json> params;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("cypher script line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("//", 0) == 0) continue;
    if (line == ":begin") {
      if (open) fail(":begin inside a transaction");
      open = true;
      out.emplace_back();
    } else if (line == ":commit") {
      if (!open) fail(":commit without :begin");
      open = false;
    } else if (line.rfind(":params ", 0) == 0) {
      params = LiteralReader(std::string_view(line).substr(8)).read();
    } else {
      if (!open) fail("statement outside a transaction");
      if (line.back() == ';') line.pop_back();
      out.back().push_back({line, params.value_or(json::object())});
      params.reset();
    }
  }
  if (open) fail("missing :commit");
  return out;
}

}  // namespace storygraph
