#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace storygraph {

using StringPair = std::pair<std::string, std::string>;

/// One annotated backlog item, flattened from the backlog JSON schema
/// (PID, Text, Persona, Action{Primary,Secondary}, Entity{Primary,Secondary},
/// Benefit, Triggers, Targets, Contains).
struct AnnotatedStory {
  std::string pid;
  std::string text;
  std::vector<std::string> personas;
  std::vector<std::string> primary_actions;
  std::vector<std::string> secondary_actions;
  std::vector<std::string> primary_entities;
  std::vector<std::string> secondary_entities;
  std::optional<std::string> benefit;
  std::vector<StringPair> triggers;  // (persona, action)
  std::vector<StringPair> targets;   // (action, entity)
  nlohmann::json contains = nlohmann::json::array();  // opaque, kept verbatim
  // Only set on extraction output entries whose backend call failed.
  std::optional<std::string> error;

  bool operator==(const AnnotatedStory&) const = default;
};

struct Backlog {
  std::string name;  // file stem, e.g. "g02"
  std::vector<AnnotatedStory> stories;
};

/// Parses a backlog file (a JSON array of story objects).
/// Throws ParseError (with byte offset) on malformed JSON and SchemaError on
/// an empty array, a missing key or a wrongly typed value.
Backlog parse_backlog_file(std::string_view raw, std::string name);

/// Reads and parses `path`; the backlog name is the file stem.
Backlog load_backlog_file(const std::filesystem::path& path);

nlohmann::ordered_json story_to_json(const AnnotatedStory& story);
std::string serialize_backlog(const Backlog& backlog);

/// Strips one leading `#...#` tag and the whitespace after it.
std::string clean_story_text(const AnnotatedStory& story);
std::string clean_story_text(std::string_view text);

/// Referential-integrity check. Empty result means the story is usable.
std::vector<std::string> validate_story(const AnnotatedStory& story);

/// Backlog files (`*.json`) in `dir`, sorted by file name. Files named
/// manifest.json are ignored.
std::vector<std::filesystem::path> list_backlog_files(
    const std::filesystem::path& dir);

}  // namespace storygraph
