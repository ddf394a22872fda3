#include <algorithm>
#include <cctype>
#include <regex>

#include "storygraph/errors.hpp"
#include "storygraph/extraction.hpp"

namespace storygraph {

void KgComponents::add_node(const NodeRef& node) {
  if (std::find(nodes.begin(), nodes.end(), node) == nodes.end()) {
    nodes.push_back(node);
  }
}

void KgComponents::add_relationship(const ComponentRelationship& rel) {
  add_node(rel.source);
  add_node(rel.target);
  relationships.push_back(rel);
}

std::size_t KgComponents::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(),
                    [kind](const NodeRef& n) { return n.kind == kind; }));
}

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Lenient kind lookups for model output: case-insensitive, plural tolerant.
std::optional<NodeKind> loose_node_kind(std::string_view name) {
  auto n = lower(trim(name));
  if (n == "persona" || n == "personas") return NodeKind::Persona;
  if (n == "action" || n == "actions") return NodeKind::Action;
  if (n == "entity" || n == "entities") return NodeKind::Entity;
  if (n == "benefit" || n == "benefits") return NodeKind::Benefit;
  if (n == "userstory" || n == "user story") return NodeKind::Userstory;
  return std::nullopt;
}

std::optional<RelKind> loose_rel_kind(std::string_view name) {
  std::string n;
  for (char c : trim(name)) {
    n.push_back(c == ' ' || c == '-' ? '_'
                                     : static_cast<char>(std::toupper(
                                           static_cast<unsigned char>(c))));
  }
  return rel_kind_from_string(n);
}

std::optional<std::string> id_string(const json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_number()) {
    s = v.dump();
  } else {
    return std::nullopt;
  }
  s = trim(s);
  if (s.empty()) return std::nullopt;
  return s;
}

// Scans forward from an opening bracket to its match, honouring JSON strings.
std::size_t matching_close(std::string_view s, std::size_t open) {
  std::vector<char> stack;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      stack.push_back(c == '[' ? ']' : '}');
    } else if (c == ']' || c == '}') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i;
    }
  }
  return std::string_view::npos;
}

// Models imitating Python dict literals leave trailing commas behind.
std::string strip_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        out.push_back(s[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::optional<json> first_json_value(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '[' && raw[i] != '{') continue;
    auto close = matching_close(raw, i);
    if (close == std::string_view::npos) continue;
    auto candidate = strip_trailing_commas(raw.substr(i, close - i + 1));
    auto parsed = json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

// Minimal reader for Python list literals such as [['user', 'sync']].
class PyListReader {
 public:
  explicit PyListReader(std::string_view s) : s_(s) {}

  std::optional<json> read() {
    auto v = value();
    skip_ws();
    if (!v || pos_ != s_.size()) return std::nullopt;
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::optional<json> value() {
    skip_ws();
    if (pos_ >= s_.size()) return std::nullopt;
    char c = s_[pos_];
    if (c == '[') return list();
    if (c == '\'' || c == '"') return quoted();
    return std::nullopt;
  }

  std::optional<json> list() {
    ++pos_;
    json arr = json::array();
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) return std::nullopt;
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      auto v = value();
      if (!v) return std::nullopt;
      arr.push_back(std::move(*v));
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') ++pos_;
    }
  }

  std::optional<json> quoted() {
    char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size()) {
      char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        out.push_back(s_[pos_++]);
      } else if (c == quote) {
        return json(out);
      } else {
        out.push_back(c);
      }
    }
    return std::nullopt;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<json> read_list_literal(std::string_view text) {
  if (auto j = json::parse(text, nullptr, false); !j.is_discarded()) return j;
  return PyListReader(text).read();
}

// "Persona: ['user']" / "TRIGGERS: [['user', 'sync']]" lines.
std::optional<KgComponents> parse_listing_layout(std::string_view raw) {
  static const std::regex line_re(
      R"(^\s*[-*]?\s*(persona|personas|action|actions|entity|entities|benefit|triggers|targets)\s*:\s*(\[.*\])\s*$)",
      std::regex::icase);
  KgComponents out;
  bool matched = false;
  std::vector<std::pair<RelKind, json>> pending;
  std::string text(raw);
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    auto list = read_list_literal(m[2].str());
    if (!list || !list->is_array()) continue;
    matched = true;
    auto key = lower(m[1].str());
    if (auto kind = loose_node_kind(key)) {
      for (const auto& item : *list) {
        if (auto id = id_string(item)) out.add_node({*id, *kind});
      }
    } else {
      pending.emplace_back(key == "triggers" ? RelKind::Triggers
                                             : RelKind::Targets,
                           *list);
    }
  }
  if (!matched) return std::nullopt;

  // Pair endpoints take their kinds from the edge kind.
  for (const auto& [kind, list] : pending) {
    auto rule = endpoint_rule(kind);
    for (const auto& pair : list) {
      if (!pair.is_array() || pair.size() != 2) {
        ++out.dropped_relationships;
        continue;
      }
      auto a = id_string(pair[0]);
      auto b = id_string(pair[1]);
      if (!a || !b) {
        ++out.dropped_relationships;
        continue;
      }
      out.add_relationship({{*a, rule.source}, {*b, rule.target}, kind});
    }
  }
  return out;
}

bool looks_structured(const json& j) {
  return j.is_object() && (j.contains("nodes") || j.contains("relationships"));
}

bool looks_like_records(const json& j) {
  if (j.is_object()) return j.contains("head") || j.contains("tail");
  if (!j.is_array()) return false;
  return std::all_of(j.begin(), j.end(),
                     [](const json& e) { return e.is_object(); });
}

KgComponents parse_text(std::string_view raw, bool allow_structured) {
  if (auto j = first_json_value(raw)) {
    if (allow_structured && looks_structured(*j)) {
      return parse_structured_response(*j);
    }
    if (looks_like_records(*j)) {
      return components_from_records(records_from_json(*j, raw));
    }
  }
  if (auto listing = parse_listing_layout(raw)) return *listing;
  throw ParseError("no extraction records found in model response",
                   std::string::npos, std::string(raw));
}

std::optional<NodeRef> endpoint(const json& rel, const char* flat_id,
                                const char* flat_type, const char* nested,
                                const KgComponents& known) {
  std::optional<std::string> id;
  std::optional<std::string> type;
  if (auto it = rel.find(nested); it != rel.end()) {
    if (it->is_object()) {
      if (auto i = it->find("id"); i != it->end()) id = id_string(*i);
      if (auto t = it->find("type"); t != it->end() && t->is_string()) {
        type = t->get<std::string>();
      }
    } else {
      id = id_string(*it);
    }
  }
  if (auto it = rel.find(flat_id); !id && it != rel.end()) id = id_string(*it);
  if (auto it = rel.find(flat_type); !type && it != rel.end() && it->is_string()) {
    type = it->get<std::string>();
  }
  if (!id) return std::nullopt;
  if (type) {
    auto kind = loose_node_kind(*type);
    if (!kind) return std::nullopt;
    return NodeRef{*id, *kind};
  }
  for (const auto& n : known.nodes) {
    if (n.id == *id) return n;
  }
  return std::nullopt;
}

}  // namespace

KgComponents parse_structured_response(const json& payload) {
  if (!payload.is_object() ||
      (!payload.contains("nodes") && !payload.contains("relationships"))) {
    throw ParseError("structured response lacks nodes and relationships",
                     std::string::npos, payload.dump());
  }
  KgComponents out;
  if (auto it = payload.find("nodes"); it != payload.end() && it->is_array()) {
    for (const auto& n : *it) {
      if (!n.is_object()) {
        ++out.dropped_nodes;
        continue;
      }
      auto id = n.contains("id") ? id_string(n["id"]) : std::nullopt;
      auto type = n.value("type", std::string());
      auto kind = loose_node_kind(type);
      if (!id || !kind) {
        ++out.dropped_nodes;
        continue;
      }
      out.add_node({*id, *kind});
    }
  }
  if (auto it = payload.find("relationships");
      it != payload.end() && it->is_array()) {
    for (const auto& r : *it) {
      if (!r.is_object()) {
        ++out.dropped_relationships;
        continue;
      }
      std::string name = r.value("type", r.value("relation", std::string()));
      auto kind = loose_rel_kind(name);
      auto src = endpoint(r, "source_node_id", "source_node_type", "source", out);
      auto dst = endpoint(r, "target_node_id", "target_node_type", "target", out);
      if (!kind || !src || !dst) {
        ++out.dropped_relationships;
        continue;
      }
      out.add_relationship({*src, *dst, *kind});
    }
  }
  return out;
}

std::vector<ExtractionRecord> records_from_json(const json& j,
                                                std::string_view raw) {
  std::vector<ExtractionRecord> out;
  auto one = [&](const json& obj, std::size_t index) {
    if (!obj.is_object()) {
      throw ParseError("record " + std::to_string(index) + " is not an object",
                       std::string::npos, std::string(raw));
    }
    auto field = [&](const char* key, bool required) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) {
        if (!required) return {};
        throw ParseError("record " + std::to_string(index) + " lacks \"" +
                             key + "\"",
                         std::string::npos, std::string(raw));
      }
      return it->is_string() ? it->get<std::string>() : it->dump();
    };
    out.push_back({field("text", false), field("head", true),
                   field("head_type", true), field("relation", true),
                   field("tail", true), field("tail_type", true)});
  };
  if (j.is_object()) {
    one(j, 0);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], i);
  } else {
    throw ParseError("records must be a JSON array", std::string::npos,
                     std::string(raw));
  }
  return out;
}

KgComponents components_from_records(const std::vector<ExtractionRecord>& recs) {
  KgComponents out;
  for (const auto& r : recs) {
    auto head_kind = loose_node_kind(r.head_type);
    auto tail_kind = loose_node_kind(r.tail_type);
    auto head = trim(r.head);
    auto tail = trim(r.tail);
    bool head_ok = head_kind && !head.empty();
    bool tail_ok = tail_kind && !tail.empty();
    if (head_ok) out.add_node({head, *head_kind});
    else ++out.dropped_nodes;
    if (tail_ok) out.add_node({tail, *tail_kind});
    else ++out.dropped_nodes;
    auto rel = loose_rel_kind(r.relation);
    if (!rel || !head_ok || !tail_ok) {
      ++out.dropped_relationships;
      continue;
    }
    out.add_relationship({{head, *head_kind}, {tail, *tail_kind}, *rel});
  }
  return out;
}

KgComponents parse_unstructured_response(std::string_view raw) {
  return parse_text(raw, /*allow_structured=*/false);
}

KgComponents parse_main_response(std::string_view raw) {
  return parse_text(raw, /*allow_structured=*/true);
}

std::optional<std::string> parse_benefit_payload(const json& payload) {
  if (payload.is_string()) {
    auto s = trim(payload.get<std::string>());
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (payload.is_array()) {
    for (const auto& item : payload) {
      if (auto b = parse_benefit_payload(item)) return b;
    }
    return std::nullopt;
  }
  if (!payload.is_object()) return std::nullopt;
  if (auto it = payload.find("nodes"); it != payload.end()) {
    if (!it->is_array()) return std::nullopt;
    for (const auto& n : *it) {
      if (!n.is_object()) continue;
      auto kind = loose_node_kind(n.value("type", std::string("Benefit")));
      if (kind != NodeKind::Benefit) continue;
      if (auto id = n.contains("id") ? id_string(n["id"]) : std::nullopt) {
        return id;
      }
    }
    return std::nullopt;
  }
  if (auto it = payload.find("id"); it != payload.end()) {
    auto kind = loose_node_kind(payload.value("type", std::string("Benefit")));
    if (kind != NodeKind::Benefit) return std::nullopt;
    return id_string(*it);
  }
  for (const char* key : {"benefit", "Benefit"}) {
    if (auto it = payload.find(key); it != payload.end()) {
      return parse_benefit_payload(*it);
    }
  }
  throw ParseError("benefit payload has no recognizable benefit field",
                   std::string::npos, payload.dump());
}

std::optional<std::string> parse_benefit_response(std::string_view raw) {
  static const std::regex node_re(
      R"re(Node\(\s*id\s*=\s*(?:'([^']*)'|"([^"]*)")\s*,\s*type\s*=\s*['"]?(\w+)['"]?)re");
  std::string text = trim(raw);

  // Code fences.
  if (text.rfind("```", 0) == 0) {
    auto nl = text.find('\n');
    auto fence_end = text.rfind("```");
    if (nl != std::string::npos && fence_end != std::string::npos &&
        fence_end > nl) {
      text = trim(std::string_view(text).substr(nl + 1, fence_end - nl - 1));
    }
  }
  if (auto lowered = lower(text); lowered.rfind("answer:", 0) == 0) {
    text = trim(std::string_view(text).substr(7));
  }
  if (text.empty() || text == "''" || text == "\"\"") return std::nullopt;

  std::smatch m;
  if (std::regex_search(text, m, node_re)) {
    if (loose_node_kind(m[3].str()) != NodeKind::Benefit) return std::nullopt;
    auto id = trim(m[1].matched ? m[1].str() : m[2].str());
    if (id.empty()) return std::nullopt;
    return id;
  }
  if (text.front() == '{' || text.front() == '[') {
    if (auto j = first_json_value(text)) return parse_benefit_payload(*j);
  }
  if (text.size() >= 2 && (text.front() == '\'' || text.front() == '"') &&
      text.back() == text.front()) {
    text = trim(std::string_view(text).substr(1, text.size() - 2));
  }
  if (text.empty()) return std::nullopt;
  return text;
}

// ---------------------------------------------------------------------------
// Rule-based extraction
// ---------------------------------------------------------------------------

namespace {

std::size_t find_ci(const std::string& lowered, std::string_view needle,
                    std::size_t from = 0) {
  return lowered.find(needle, from);
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' ||
                        s.back() == '!' ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.pop_back();
  }
  return s;
}

// Leading words removed from the entity phrase.
bool is_leading_function_word(const std::string& w) {
  static const char* kWords[] = {"a",    "an",   "the",  "by",   "with",
                                 "for",  "to",   "on",   "in",   "at",
                                 "of",   "from", "into", "about", "via",
                                 "using"};
  auto lw = lower(w);
  return std::any_of(std::begin(kWords), std::end(kWords),
                     [&](const char* k) { return lw == k; });
}

}  // namespace

KgComponents rule_based_extract(std::string_view story_text) {
  KgComponents out;
  const std::string text = trim(story_text);
  const std::string lowered = lower(text);

  std::optional<std::string> persona;
  std::size_t persona_end = 0;
  for (std::string_view marker : {"as an ", "as a "}) {
    if (lowered.rfind(marker, 0) != 0) continue;
    auto begin = marker.size();
    auto comma = lowered.find(',', begin);
    auto want = find_ci(lowered, " i want", begin);
    auto end = std::min(comma, want);
    if (end == std::string::npos) break;
    auto p = trim(std::string_view(text).substr(begin, end - begin));
    if (!p.empty()) persona = p;
    persona_end = end;
    break;
  }

  std::optional<std::string> benefit;
  std::size_t benefit_marker = std::string::npos;
  for (std::string_view marker : {"so that ", "in order to "}) {
    auto pos = find_ci(lowered, marker, persona_end);
    if (pos == std::string::npos || pos >= benefit_marker) continue;
    benefit_marker = pos;
    auto b = strip_trailing_punct(trim(text.substr(pos + marker.size())));
    benefit = b.empty() ? std::nullopt : std::optional<std::string>(b);
  }

  std::optional<std::string> action;
  std::optional<std::string> entity;
  std::size_t clause = std::string::npos;
  bool has_infinitive = false;
  for (std::string_view marker : {"i want to be able to ", "i want to "}) {
    auto pos = find_ci(lowered, marker, persona_end);
    if (pos != std::string::npos && pos < benefit_marker) {
      clause = pos + marker.size();
      has_infinitive = true;
      break;
    }
  }
  if (clause == std::string::npos) {
    auto pos = find_ci(lowered, "i want ", persona_end);
    if (pos != std::string::npos && pos < benefit_marker) clause = pos + 7;
  }
  if (clause != std::string::npos) {
    auto end = benefit_marker == std::string::npos ? text.size() : benefit_marker;
    std::string rest = strip_trailing_punct(trim(text.substr(clause, end - clause)));
    if (has_infinitive && !rest.empty()) {
      auto space = rest.find(' ');
      action = strip_trailing_punct(rest.substr(0, space));
      rest = space == std::string::npos ? "" : trim(rest.substr(space + 1));
    }
    while (!rest.empty()) {
      auto space = rest.find(' ');
      auto word = rest.substr(0, space);
      if (space == std::string::npos || !is_leading_function_word(word)) break;
      rest = trim(rest.substr(space + 1));
    }
    if (!rest.empty() && !is_leading_function_word(rest)) entity = rest;
    if (action && action->empty()) action.reset();
  }

  if (persona) out.add_node({*persona, NodeKind::Persona});
  if (action) out.add_node({*action, NodeKind::Action});
  if (entity) out.add_node({*entity, NodeKind::Entity});
  if (benefit) out.add_node({*benefit, NodeKind::Benefit});
  if (persona && action) {
    out.add_relationship(
        {{*persona, NodeKind::Persona}, {*action, NodeKind::Action},
         RelKind::Triggers});
  }
  if (action && entity) {
    out.add_relationship(
        {{*action, NodeKind::Action}, {*entity, NodeKind::Entity},
         RelKind::Targets});
  }
  return out;
}

}  // namespace storygraph
