#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "internal/http.hpp"
#include "storygraph/errors.hpp"
#include "storygraph/extraction.hpp"

namespace storygraph {

using nlohmann::json;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::ChatHttp: return "chat-http";
    case BackendKind::ReplayFixture: return "replay-fixture";
    case BackendKind::RuleBased: return "rule-based";
  }
  return "?";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view name) {
  for (auto k : {BackendKind::ChatHttp, BackendKind::ReplayFixture,
                 BackendKind::RuleBased}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void validate_config(const ExtractorConfig& c) {
  if (!(c.temperature >= 0.0 && c.temperature <= 1.0)) {
    throw ConfigError("temperature must lie in [0, 1]");
  }
  if (c.max_retries < 0 || c.max_retries > 10) {
    throw ConfigError("max_retries must lie in [0, 10]");
  }
  if (c.request_timeout_s <= 0) {
    throw ConfigError("request timeout must be positive");
  }
  switch (c.backend) {
    case BackendKind::ChatHttp:
      if (c.endpoint.empty()) throw ConfigError("chat-http needs an endpoint");
      if (!internal::parse_url(c.endpoint)) {
        throw ConfigError("invalid endpoint URL: " + c.endpoint);
      }
      if (c.model_name.empty()) throw ConfigError("chat-http needs a model name");
      if (c.provider != "openai" && c.provider != "ollama") {
        throw ConfigError("unknown provider adapter: " + c.provider);
      }
      break;
    case BackendKind::ReplayFixture:
      if (c.fixture_path.empty()) {
        throw ConfigError("replay-fixture needs a fixture file");
      }
      if (!std::filesystem::is_regular_file(c.fixture_path)) {
        throw ConfigError("fixture file not found: " + c.fixture_path.string());
      }
      break;
    case BackendKind::RuleBased:
      break;
  }
}

// ---------------------------------------------------------------------------
// HTTP chat model
// ---------------------------------------------------------------------------

namespace {

json wire_messages(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", m.role == Role::System ? "system" : "user"},
                   {"content", m.content}});
  }
  return arr;
}

std::optional<std::string> arguments_text(const json& call) {
  const json* fn = &call;
  if (auto it = call.find("function"); it != call.end()) fn = &*it;
  auto args = fn->find("arguments");
  if (args == fn->end()) return std::nullopt;
  return args->is_string() ? args->get<std::string>() : args->dump();
}

class HttpChatModel : public ChatModel {
 public:
  explicit HttpChatModel(ExtractorConfig config) : config_(std::move(config)) {
    url_ = *internal::parse_url(config_.endpoint);
    token_ = config_.auth_token;
    if (token_.empty() && !config_.api_key_env.empty()) {
      if (const char* v = std::getenv(config_.api_key_env.c_str())) token_ = v;
    }
  }

  ChatReply complete(const ChatRequest& request) override {
    const std::string body = build_body(request).dump();
    internal::HttpOptions opts;
    opts.timeout = std::chrono::milliseconds(
        static_cast<long>(config_.request_timeout_s * 1000));
    opts.bearer_token = token_;

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        auto delay = config_.backoff_base * (1L << (attempt - 1));
        spdlog::warn("retrying {} in {} ms ({})", url_.host, delay.count(),
                     last_error);
        std::this_thread::sleep_for(delay);
      }
      auto res = internal::post_json(url_, body, opts);
      if (!res.transport_ok()) {
        last_error = "transport error: " + res.error;
        continue;
      }
      if (res.status == 429 || res.status >= 500) {
        last_error = "HTTP " + std::to_string(res.status);
        continue;
      }
      if (res.status == 401 || res.status == 403) {
        throw BackendError("authentication rejected by " + url_.host +
                           " (HTTP " + std::to_string(res.status) + ")");
      }
      if (res.status < 200 || res.status >= 300) {
        throw BackendError("HTTP " + std::to_string(res.status) + " from " +
                           url_.host + ": " + res.body.substr(0, 300));
      }
      return read_reply(res.body);
    }
    throw BackendError("request to " + url_.host + " failed after " +
                       std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
  }

 private:
  json build_body(const ChatRequest& request) const {
    json body;
    body["model"] = config_.model_name;
    body["messages"] = wire_messages(request.messages);
    if (config_.provider == "ollama") {
      body["stream"] = false;
      body["options"] = {{"temperature", config_.temperature}};
      if (request.tool) body["tools"] = json::array({*request.tool});
      return body;
    }
    body["temperature"] = config_.temperature;
    if (request.tool) {
      body["tools"] = json::array({*request.tool});
      body["tool_choice"] = {
          {"type", "function"},
          {"function", {{"name", (*request.tool)["function"]["name"]}}}};
    }
    return body;
  }

  ChatReply read_reply(const std::string& text) const {
    auto j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError("provider returned non-JSON body", std::string::npos,
                       text);
    }
    const json* message = nullptr;
    if (config_.provider == "ollama") {
      if (auto it = j.find("message"); it != j.end()) message = &*it;
    } else if (auto it = j.find("choices");
               it != j.end() && it->is_array() && !it->empty()) {
      if (auto m = (*it)[0].find("message"); m != (*it)[0].end()) message = &*m;
    }
    if (message == nullptr || !message->is_object()) {
      throw ParseError("provider reply lacks an assistant message",
                       std::string::npos, text);
    }
    ChatReply reply;
    if (auto c = message->find("content"); c != message->end() && c->is_string()) {
      reply.content = c->get<std::string>();
    }
    if (auto calls = message->find("tool_calls");
        calls != message->end() && calls->is_array() && !calls->empty()) {
      reply.tool_arguments = arguments_text((*calls)[0]);
    } else if (auto fc = message->find("function_call");
               fc != message->end() && fc->is_object()) {
      reply.tool_arguments = arguments_text(*fc);
    }
    return reply;
  }

  ExtractorConfig config_;
  internal::Url url_;
  std::string token_;
};

std::string as_raw(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

std::unique_ptr<ChatModel> make_http_chat_model(const ExtractorConfig& config) {
  validate_config(config);
  return std::make_unique<HttpChatModel>(config);
}

// ---------------------------------------------------------------------------
// Replay fixture
// ---------------------------------------------------------------------------

ReplayChatModel::ReplayChatModel(const json& fixture) {
  if (!fixture.is_object()) {
    throw ConfigError("replay fixture must be a JSON object keyed by story");
  }
  for (const auto& [story, entry] : fixture.items()) {
    if (!entry.is_object() || !entry.contains("main_response")) {
      throw ConfigError("replay fixture entry lacks main_response: " + story);
    }
    entries_[story] = {as_raw(entry["main_response"]),
                       entry.contains("benefit_response")
                           ? as_raw(entry["benefit_response"])
                           : std::string()};
  }
}

std::unique_ptr<ReplayChatModel> ReplayChatModel::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open fixture " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("fixture is not valid JSON: " + path.string());
  return std::make_unique<ReplayChatModel>(j);
}

ChatReply ReplayChatModel::complete(const ChatRequest& request) {
  auto it = entries_.find(request.story_text);
  if (it == entries_.end()) {
    throw BackendError("no recorded response for story: " + request.story_text);
  }
  return {request.chain == Chain::Main ? it->second.main_response
                                       : it->second.benefit_response,
          std::nullopt};
}

// ---------------------------------------------------------------------------
// Extractors
// ---------------------------------------------------------------------------

LlmExtractor::LlmExtractor(std::shared_ptr<ChatModel> model,
                           bool function_calls, bool reask_on_parse_error)
    : model_(std::move(model)),
      function_calls_(function_calls),
      reask_(reask_on_parse_error) {}

ChatReply LlmExtractor::ask(Chain chain, const std::string& story_text) {
  const PromptTemplate& tmpl =
      chain == Chain::Benefit ? benefit_prompt()
      : function_calls_       ? main_prompt()
                              : main_prompt_without_function_calls();
  ChatRequest req;
  req.chain = chain;
  req.story_text = story_text;
  req.messages = render_prompt(tmpl, story_text);
  if (function_calls_) req.tool = graph_output_tool();
  return model_->complete(req);
}

namespace {

json tool_json(const std::string& args) {
  auto j = json::parse(args, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("function-call arguments are not valid JSON",
                     std::string::npos, args);
  }
  return j;
}

template <typename Fn>
auto with_reask(bool reask, Fn&& attempt) {
  try {
    return attempt();
  } catch (const ParseError& e) {
    if (!reask) throw;
    spdlog::warn("unparseable response, asking again: {}", e.what());
    return attempt();
  }
}

}  // namespace

KgComponents LlmExtractor::extract(const std::string& story_text) {
  if (story_text.empty()) throw Error("story text is empty");

  KgComponents main = with_reask(reask_, [&] {
    auto reply = ask(Chain::Main, story_text);
    if (reply.tool_arguments) {
      return parse_structured_response(tool_json(*reply.tool_arguments));
    }
    return parse_main_response(reply.content);
  });

  auto benefit = with_reask(reask_, [&] {
    auto reply = ask(Chain::Benefit, story_text);
    if (reply.tool_arguments) {
      return parse_benefit_payload(tool_json(*reply.tool_arguments));
    }
    return parse_benefit_response(reply.content);
  });

  // Benefit nodes come from the benefit chain only.
  KgComponents out;
  out.dropped_nodes = main.dropped_nodes;
  out.dropped_relationships = main.dropped_relationships;
  for (const auto& n : main.nodes) {
    if (n.kind == NodeKind::Benefit) {
      ++out.dropped_nodes;
    } else {
      out.add_node(n);
    }
  }
  for (const auto& r : main.relationships) {
    if (r.source.kind == NodeKind::Benefit || r.target.kind == NodeKind::Benefit) {
      ++out.dropped_relationships;
    } else {
      out.add_relationship(r);
    }
  }
  if (benefit) out.add_node({*benefit, NodeKind::Benefit});
  return out;
}

std::unique_ptr<Extractor> make_extractor(const ExtractorConfig& config) {
  validate_config(config);
  switch (config.backend) {
    case BackendKind::RuleBased:
      return std::make_unique<RuleBasedExtractor>();
    case BackendKind::ReplayFixture:
      return std::make_unique<LlmExtractor>(
          ReplayChatModel::from_file(config.fixture_path),
          config.supports_function_calls, config.reask_on_parse_error);
    case BackendKind::ChatHttp:
      return std::make_unique<LlmExtractor>(make_http_chat_model(config),
                                            config.supports_function_calls,
                                            config.reask_on_parse_error);
  }
  throw ConfigError("unknown backend");
}

KgComponents extract_components(const ExtractorConfig& config,
                                const std::string& story_text) {
  return make_extractor(config)->extract(story_text);
}

}  // namespace storygraph
