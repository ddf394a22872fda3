#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "fake_chat.hpp"

namespace storygraph::testing {

using nlohmann::json;

FakeChatServer::FakeChatServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Post(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    CannedReply reply{500, "{}"};
    {
      std::lock_guard lock(mu_);
      requests_.push_back(body);
      auth_.push_back(req.get_header_value("Authorization"));
      if (!queue_.empty()) {
        reply = queue_.front();
        queue_.pop_front();
      } else if (fallback_) {
        reply = fallback_(body);
      }
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FakeChatServer::~FakeChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string FakeChatServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

void FakeChatServer::push(int status, const std::string& body) {
  std::lock_guard lock(mu_);
  queue_.push_back({status, body});
}

void FakeChatServer::set_fallback(std::function<CannedReply(const json&)> fn) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(fn);
}

std::vector<json> FakeChatServer::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<std::string> FakeChatServer::auth_headers() const {
  std::lock_guard lock(mu_);
  return auth_;
}

json openai_text_reply(const std::string& content) {
  return {{"choices",
           json::array({{{"index", 0},
                         {"message", {{"role", "assistant"}, {"content", content}}}}})}};
}

json openai_tool_reply(const json& arguments) {
  json call = {{"id", "call_1"},
               {"type", "function"},
               {"function", {{"name", "DynamicGraph"}, {"arguments", arguments.dump()}}}};
  return {{"choices",
           json::array({{{"index", 0},
                         {"message",
                          {{"role", "assistant"},
                           {"content", nullptr},
                           {"tool_calls", json::array({call})}}}}})}};
}

}  // namespace storygraph::testing
