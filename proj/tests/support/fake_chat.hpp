#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace storygraph::testing {

struct CannedReply {
  int status = 200;
  std::string body;
};

/// Local HTTP server answering POSTs from a queue of canned replies, then
/// from `fallback` (HTTP 500 when unset). Records every request.
class FakeChatServer {
 public:
  FakeChatServer();
  ~FakeChatServer();

  FakeChatServer(const FakeChatServer&) = delete;
  FakeChatServer& operator=(const FakeChatServer&) = delete;

  std::string url(const std::string& path = "/v1/chat/completions") const;

  void push(int status, const std::string& body);
  void push_json(const nlohmann::json& body) { push(200, body.dump()); }
  void set_fallback(std::function<CannedReply(const nlohmann::json&)> fn);

  std::vector<nlohmann::json> requests() const;
  std::vector<std::string> auth_headers() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::deque<CannedReply> queue_;
  std::function<CannedReply(const nlohmann::json&)> fallback_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_;
};

/// OpenAI chat-completions reply with plain content.
nlohmann::json openai_text_reply(const std::string& content);
/// OpenAI chat-completions reply carrying one tool call.
nlohmann::json openai_tool_reply(const nlohmann::json& arguments);

}  // namespace storygraph::testing
