#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygraph/graph_model.hpp"

namespace storygraph {

// ---------------------------------------------------------------------------
// LLM-derived graph components
// ---------------------------------------------------------------------------

struct ComponentRelationship {
  NodeRef source;
  NodeRef target;
  RelKind kind = RelKind::Targets;

  bool operator==(const ComponentRelationship&) const = default;
};

/// Raw nodes and relationships produced by an extractor, before the story
/// node and the inferred HAS_* edges are added.
struct KgComponents {
  std::vector<NodeRef> nodes;
  std::vector<ComponentRelationship> relationships;
  // Items discarded by the parsers because their kind is outside the ontology.
  std::size_t dropped_nodes = 0;
  std::size_t dropped_relationships = 0;

  /// Appends `node` unless an identical (id, kind) node is already present.
  void add_node(const NodeRef& node);
  /// Appends the relationship and makes sure both endpoints are nodes.
  void add_relationship(const ComponentRelationship& rel);
  std::size_t count(NodeKind kind) const;

  bool operator==(const KgComponents&) const = default;
};

/// One line of the non-function-calling output format.
struct ExtractionRecord {
  std::string text;
  std::string head;
  std::string head_type;
  std::string relation;
  std::string tail;
  std::string tail_type;
};

// ---------------------------------------------------------------------------
// Prompt catalog
// ---------------------------------------------------------------------------

enum class Role { System, Human };
std::string_view to_string(Role role);

struct PromptSegment {
  Role role;
  std::string text;
};

/// Ordered role-tagged segments; exactly one segment holds `{input}`.
struct PromptTemplate {
  std::vector<PromptSegment> segments;
};

struct ChatMessage {
  Role role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

inline constexpr std::string_view kPromptCatalogVersion = "1";
inline constexpr std::string_view kInputPlaceholder = "{input}";

/// Main prompt: persona, action and entity nodes plus TRIGGERS/TARGETS.
const PromptTemplate& main_prompt();
/// Benefit prompt: extracts the optional benefit sentence.
const PromptTemplate& benefit_prompt();
/// Main prompt extended with output-format instructions and the few-shot
/// records, for models without function calling.
const PromptTemplate& main_prompt_without_function_calls();

/// The five few-shot records shipped with the non-function-calling prompt.
const std::vector<ExtractionRecord>& few_shot_records();

/// Function-call schema (OpenAI tool shape) for structured responses.
nlohmann::json graph_output_tool();

/// Throws TemplateError unless the template holds exactly one placeholder.
void check_template(const PromptTemplate& tmpl);
std::vector<ChatMessage> render_prompt(const PromptTemplate& tmpl,
                                       std::string_view story_text);

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

/// Parses a function-call payload with `nodes` and/or `relationships`.
/// Nodes are {id, type}; relationships are {source_node_id,
/// source_node_type, target_node_id, target_node_type, type}. Nested
/// {source:{id,type}} endpoints and a `relation` key are also accepted.
/// Unknown node or relationship kinds are dropped and counted.
KgComponents parse_structured_response(const nlohmann::json& payload);

/// Parses free-text model output. Looks for the first JSON value (code
/// fences and surrounding prose are tolerated) holding ExtractionRecord
/// objects; falls back to the "Persona: [...] / TRIGGERS: [[...]]" layout
/// used by the main prompt's example. Throws ParseError with the raw text.
KgComponents parse_unstructured_response(std::string_view raw);

/// Dispatches on content: structured object, record list or listing layout.
KgComponents parse_main_response(std::string_view raw);

/// Benefit chain output. Accepts Node(id='...', type='Benefit'), JSON node
/// structures or plain text; '' or whitespace means no benefit.
std::optional<std::string> parse_benefit_response(std::string_view raw);
std::optional<std::string> parse_benefit_payload(const nlohmann::json& payload);

std::vector<ExtractionRecord> records_from_json(const nlohmann::json& j,
                                                std::string_view raw);
KgComponents components_from_records(const std::vector<ExtractionRecord>& recs);

/// Deterministic Connextra-template extractor ("As a <persona>, I want to
/// <action> <entity> so that <benefit>").
KgComponents rule_based_extract(std::string_view story_text);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

enum class BackendKind { ChatHttp, ReplayFixture, RuleBased };
std::string_view to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view name);

struct ExtractorConfig {
  BackendKind backend = BackendKind::RuleBased;
  // Request adapter for chat-http: "openai" (chat completions) or "ollama".
  std::string provider = "openai";
  std::string endpoint;
  std::string model_name;
  double temperature = 0.0;
  bool supports_function_calls = false;
  std::string auth_token;
  // Consulted when auth_token is empty.
  std::string api_key_env = "OPENAI_API_KEY";
  double request_timeout_s = 60.0;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  bool reask_on_parse_error = false;
  std::filesystem::path fixture_path;
};

/// Throws ConfigError on an unusable configuration.
void validate_config(const ExtractorConfig& config);

enum class Chain { Main, Benefit };

struct ChatRequest {
  Chain chain = Chain::Main;
  std::string story_text;
  std::vector<ChatMessage> messages;
  std::optional<nlohmann::json> tool;  // set when function calling is used
};

struct ChatReply {
  std::string content;
  std::optional<std::string> tool_arguments;
};

/// A chat model endpoint. Implementations must be safe to call concurrently.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
};

/// Generic chat-completions client over HTTP with retry/backoff on transport
/// errors, 429 and 5xx responses.
std::unique_ptr<ChatModel> make_http_chat_model(const ExtractorConfig& config);

/// Replays recorded responses keyed by story text. Fixture file shape:
/// {"<story>": {"main_response": "...", "benefit_response": "..."}}.
class ReplayChatModel : public ChatModel {
 public:
  explicit ReplayChatModel(const nlohmann::json& fixture);
  static std::unique_ptr<ReplayChatModel> from_file(
      const std::filesystem::path& path);

  ChatReply complete(const ChatRequest& request) override;

 private:
  struct Entry {
    std::string main_response;
    std::string benefit_response;
  };
  std::map<std::string, Entry> entries_;
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual KgComponents extract(const std::string& story_text) = 0;
};

/// Two sequential requests per story (main, then benefit) merged into one
/// KgComponents value.
class LlmExtractor : public Extractor {
 public:
  LlmExtractor(std::shared_ptr<ChatModel> model, bool function_calls,
               bool reask_on_parse_error = false);
  KgComponents extract(const std::string& story_text) override;

 private:
  ChatReply ask(Chain chain, const std::string& story_text);

  std::shared_ptr<ChatModel> model_;
  bool function_calls_;
  bool reask_;
};

class RuleBasedExtractor : public Extractor {
 public:
  KgComponents extract(const std::string& story_text) override {
    return rule_based_extract(story_text);
  }
};

/// Builds the extractor selected by `config`. Throws ConfigError.
std::unique_ptr<Extractor> make_extractor(const ExtractorConfig& config);

/// One-shot convenience over make_extractor.
KgComponents extract_components(const ExtractorConfig& config,
                                const std::string& story_text);

}  // namespace storygraph
