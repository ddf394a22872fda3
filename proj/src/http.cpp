#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <regex>

#include "internal/http.hpp"

namespace storygraph::internal {

std::optional<Url> parse_url(std::string_view url) {
  static const std::regex re(R"(^(https?)://([^/:]+|\[[^\]]+\])(?::(\d+))?(/.*)?$)",
                             std::regex::icase);
  std::string s(url);
  std::smatch m;
  if (!std::regex_match(s, m, re)) return std::nullopt;
  Url out;
  out.scheme = m[1].str();
  for (auto& c : out.scheme) c = static_cast<char>(std::tolower(c));
  out.host = m[2].str();
  out.port = m[3].matched ? std::stoi(m[3].str())
                          : (out.scheme == "https" ? 443 : 80);
  out.path = m[4].matched ? m[4].str() : "/";
  return out;
}

HttpResult post_json(const Url& url, const std::string& body,
                     const HttpOptions& options) {
  httplib::Client client(url.scheme + "://" + url.host + ":" +
                         std::to_string(url.port));
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      options.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (options.basic_auth) {
    client.set_basic_auth(options.basic_auth->first, options.basic_auth->second);
  }
  if (!options.bearer_token.empty()) {
    client.set_bearer_token_auth(options.bearer_token);
  }
  httplib::Headers headers{{"Accept", "application/json"}};
  for (const auto& [k, v] : options.headers) headers.emplace(k, v);

  HttpResult result;
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    result.error = httplib::to_string(res.error());
    return result;
  }
  result.status = res->status;
  result.body = res->body;
  return result;
}

}  // namespace storygraph::internal
