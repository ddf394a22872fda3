#include "storygraph/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "storygraph/errors.hpp"

namespace storygraph {

namespace {

using nlohmann::json;

std::string at_story(std::size_t index) {
  return "story " + std::to_string(index);
}

const json& require(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError("missing key \"" + std::string(key) + "\" in " +
                      at_story(index));
  }
  return *it;
}

std::vector<std::string> string_list(const json& value, const std::string& key,
                                     std::size_t index) {
  if (value.is_null()) return {};
  if (!value.is_array()) {
    throw SchemaError("\"" + key + "\" must be an array in " + at_story(index));
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw SchemaError("\"" + key + "\" must hold strings in " +
                        at_story(index));
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<std::string> sub_list(const json& obj, const char* outer,
                                  const char* inner, std::size_t index) {
  if (!obj.is_object()) {
    throw SchemaError("\"" + std::string(outer) + "\" must be an object in " +
                      at_story(index));
  }
  auto it = obj.find(inner);
  if (it == obj.end()) return {};
  return string_list(*it, std::string(outer) + "." + inner, index);
}

std::vector<StringPair> pair_list(const json& value, const char* key,
                                  std::size_t index) {
  if (value.is_null()) return {};
  if (!value.is_array()) {
    throw SchemaError("\"" + std::string(key) + "\" must be an array in " +
                      at_story(index));
  }
  std::vector<StringPair> out;
  for (const auto& item : value) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_string() ||
        !item[1].is_string()) {
      throw SchemaError("\"" + std::string(key) +
                        "\" entries must be [string, string] pairs in " +
                        at_story(index));
    }
    out.emplace_back(item[0].get<std::string>(), item[1].get<std::string>());
  }
  return out;
}

std::string require_string(const json& obj, const char* key,
                           std::size_t index) {
  const json& v = require(obj, key, index);
  if (!v.is_string()) {
    throw SchemaError("\"" + std::string(key) + "\" must be a string in " +
                      at_story(index));
  }
  return v.get<std::string>();
}

AnnotatedStory parse_story(const json& obj, std::size_t index) {
  if (!obj.is_object()) {
    throw SchemaError(at_story(index) + " is not an object");
  }
  AnnotatedStory s;
  s.pid = require_string(obj, "PID", index);
  s.text = require_string(obj, "Text", index);
  s.personas = string_list(require(obj, "Persona", index), "Persona", index);

  const json& action = require(obj, "Action", index);
  s.primary_actions = sub_list(action, "Action", "Primary Action", index);
  s.secondary_actions = sub_list(action, "Action", "Secondary Action", index);
  const json& entity = require(obj, "Entity", index);
  s.primary_entities = sub_list(entity, "Entity", "Primary Entity", index);
  s.secondary_entities = sub_list(entity, "Entity", "Secondary Entity", index);

  if (auto it = obj.find("Benefit"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw SchemaError("\"Benefit\" must be a string in " + at_story(index));
    }
    if (!it->get_ref<const std::string&>().empty()) {
      s.benefit = it->get<std::string>();
    }
  }

  s.triggers = pair_list(require(obj, "Triggers", index), "Triggers", index);
  s.targets = pair_list(require(obj, "Targets", index), "Targets", index);
  if (auto it = obj.find("Contains"); it != obj.end() && !it->is_null()) {
    s.contains = *it;
  }
  if (auto it = obj.find("Error"); it != obj.end() && it->is_string()) {
    s.error = it->get<std::string>();
  }
  return s;
}

nlohmann::ordered_json pairs_to_json(const std::vector<StringPair>& pairs) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

}  // namespace

Backlog parse_backlog_file(std::string_view raw, std::string name) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed backlog JSON at byte " +
                         std::to_string(e.byte) + ": " + e.what(),
                     e.byte);
  }
  if (!doc.is_array()) throw SchemaError("backlog must be a JSON array");
  if (doc.empty()) throw SchemaError("empty backlog");

  Backlog backlog{std::move(name), {}};
  backlog.stories.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    backlog.stories.push_back(parse_story(doc[i], i));
  }
  return backlog;
}

Backlog load_backlog_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_backlog_file(buf.str(), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json story_to_json(const AnnotatedStory& s) {
  nlohmann::ordered_json out;
  out["PID"] = s.pid;
  out["Text"] = s.text;
  out["Persona"] = s.personas;
  out["Action"] = {{"Primary Action", s.primary_actions},
                   {"Secondary Action", s.secondary_actions}};
  out["Entity"] = {{"Primary Entity", s.primary_entities},
                   {"Secondary Entity", s.secondary_entities}};
  out["Benefit"] = s.benefit.value_or("");
  out["Triggers"] = pairs_to_json(s.triggers);
  out["Targets"] = pairs_to_json(s.targets);
  out["Contains"] = nlohmann::ordered_json::parse(s.contains.dump());
  if (s.error) out["Error"] = *s.error;
  return out;
}

std::string serialize_backlog(const Backlog& backlog) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : backlog.stories) arr.push_back(story_to_json(s));
  return arr.dump(4) + "\n";
}

std::string clean_story_text(std::string_view text) {
  if (text.empty() || text.front() != '#') return std::string(text);
  auto close = text.find('#', 1);
  if (close == std::string_view::npos || close == 1) return std::string(text);
  // A tag is a single token: no whitespace between the two hashes.
  auto tag = text.substr(0, close + 1);
  if (std::any_of(tag.begin(), tag.end(),
                  [](unsigned char c) { return std::isspace(c); })) {
    return std::string(text);
  }
  auto rest = text.substr(close + 1);
  std::size_t skip = 0;
  while (skip < rest.size() &&
         std::isspace(static_cast<unsigned char>(rest[skip]))) {
    ++skip;
  }
  return std::string(rest.substr(skip));
}

std::string clean_story_text(const AnnotatedStory& story) {
  return clean_story_text(story.text);
}

std::vector<std::string> validate_story(const AnnotatedStory& s) {
  std::vector<std::string> violations;
  auto contains = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  if (s.text.empty()) violations.emplace_back("Text: empty story text");
  for (const auto& [persona, action] : s.triggers) {
    if (!contains(s.personas, persona)) {
      violations.push_back("Triggers: persona \"" + persona +
                           "\" not in Persona");
    }
    if (!contains(s.primary_actions, action)) {
      violations.push_back("Triggers: action \"" + action +
                           "\" not in Primary Action");
    }
  }
  for (const auto& [action, entity] : s.targets) {
    if (!contains(s.primary_actions, action) &&
        !contains(s.secondary_actions, action)) {
      violations.push_back("Targets: action \"" + action +
                           "\" not in Primary/Secondary Action");
    }
  }
  return violations;
}

std::vector<std::filesystem::path> list_backlog_files(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.extension() != ".json" || p.filename() == "manifest.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace storygraph
