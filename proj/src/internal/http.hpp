#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace storygraph::internal {

struct Url {
  std::string scheme;  // http or https
  std::string host;
  int port = 0;
  std::string path;  // always starts with '/'
};

/// Parses scheme://host[:port][/path]. Returns nullopt on anything else.
std::optional<Url> parse_url(std::string_view url);

struct HttpOptions {
  std::chrono::milliseconds timeout{60000};
  std::map<std::string, std::string> headers;
  std::optional<std::pair<std::string, std::string>> basic_auth;
  std::string bearer_token;
};

struct HttpResult {
  // Transport failures leave status at 0 and fill `error`.
  int status = 0;
  std::string body;
  std::string error;

  bool transport_ok() const { return status != 0; }
};

/// POSTs a JSON body. Never throws for network errors.
HttpResult post_json(const Url& url, const std::string& body,
                     const HttpOptions& options);

}  // namespace storygraph::internal
