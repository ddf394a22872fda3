#include "storygraph/embedder.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "internal/http.hpp"
#include "storygraph/errors.hpp"

namespace storygraph {

std::vector<Vector> OneHotEmbedder::embed(const std::vector<std::string>& tokens) {
  std::map<std::string, std::size_t> vocab;
  for (const auto& t : tokens) vocab.emplace(t, 0);
  std::size_t i = 0;
  for (auto& [_, index] : vocab) index = i++;

  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    Vector v(vocab.size(), 0.0);
    v[vocab[t]] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw Error("zero embedding vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
    auto url = internal::parse_url(config_.endpoint);
    if (!url) throw ConfigError("invalid embeddings endpoint: " + config_.endpoint);
    url_ = *url;
    token_ = config_.auth_token;
    if (token_.empty() && !config_.api_key_env.empty()) {
      if (const char* v = std::getenv(config_.api_key_env.c_str())) token_ = v;
    }
  }

  std::vector<Vector> embed(const std::vector<std::string>& tokens) override {
    nlohmann::json body = {{"model", config_.model_name}, {"input", tokens}};
    internal::HttpOptions opts;
    opts.timeout = std::chrono::milliseconds(
        static_cast<long>(config_.request_timeout_s * 1000));
    opts.bearer_token = token_;
    std::string last;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200L << attempt));
      }
      auto res = internal::post_json(url_, body.dump(), opts);
      if (!res.transport_ok()) {
        last = res.error;
        continue;
      }
      if (res.status == 429 || res.status >= 500) {
        last = "HTTP " + std::to_string(res.status);
        continue;
      }
      if (res.status != 200) {
        throw BackendError("embeddings endpoint " + url_.host + " returned HTTP " +
                           std::to_string(res.status));
      }
      return read(res.body, tokens.size());
    }
    throw BackendError("embeddings request to " + url_.host + " failed: " + last);
  }

 private:
  static std::vector<Vector> read(const std::string& body, std::size_t expected) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
      throw ParseError("malformed embeddings response", std::string::npos, body);
    }
    std::vector<Vector> out(expected);
    std::size_t pos = 0;
    for (const auto& item : j["data"]) {
      std::size_t index = item.value("index", pos);
      if (index >= expected) throw ParseError("embedding index out of range");
      out[index] = item.at("embedding").get<Vector>();
      ++pos;
    }
    if (pos != expected) throw ParseError("embedding count mismatch");
    return out;
  }

  HttpEmbedderConfig config_;
  internal::Url url_;
  std::string token_;
};

}  // namespace

std::unique_ptr<Embedder> make_http_embedder(const HttpEmbedderConfig& config) {
  return std::make_unique<HttpEmbedder>(config);
}

}  // namespace storygraph
