#pragma once

#include <memory>
#include <string>
#include <vector>

namespace storygraph {

using Vector = std::vector<double>;

/// Maps tokens to fixed-length, nonzero vectors. Same input, same output.
/// Implementations must be safe for concurrent callers.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Vector> embed(const std::vector<std::string>& tokens) = 0;
};

/// Orthonormal vector per distinct token, built over the vocabulary of each
/// call. Cosine similarity is 1 for equal tokens and 0 otherwise.
class OneHotEmbedder : public Embedder {
 public:
  std::vector<Vector> embed(const std::vector<std::string>& tokens) override;
};

/// OpenAI-compatible embeddings endpoint ({model, input} ->
/// data[].embedding), with the same retry policy as the chat backend.
struct HttpEmbedderConfig {
  std::string endpoint;
  std::string model_name;
  std::string auth_token;
  std::string api_key_env = "OPENAI_API_KEY";
  double request_timeout_s = 60.0;
  int max_retries = 3;
};
std::unique_ptr<Embedder> make_http_embedder(const HttpEmbedderConfig& config);

double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace storygraph
