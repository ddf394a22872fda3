// storygraph: extract user-story knowledge graphs, evaluate them against an
// annotated baseline and load them into a graph database.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "storygraph/env.hpp"
#include "storygraph/errors.hpp"
#include "storygraph/pipeline.hpp"

using namespace storygraph;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("storygraph"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"User-story knowledge graph toolchain"};
  app.require_subcommand(1);

  std::string env_file = ".env";
  std::string output_root = ".";
  bool verbose = false;
  app.add_option("--env-file", env_file, "Variables to load when not already set")
      ->capture_default_str();
  app.add_option("--output-root", output_root,
                 "Directory holding extracted-user-stories/, evaluation/ and graphs/")
      ->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // extract
  ExtractOptions ex;
  std::string backend = "rule-based";
  std::string input = "pos_baseline";
  std::string fixture;
  double timeout_s = 60.0;
  auto* extract = app.add_subcommand("extract", "Extract graphs from backlog files");
  extract->add_option("--experiment", ex.experiment, "Experiment name")->required();
  extract->add_option("--backend", backend, "chat-http, replay-fixture or rule-based")
      ->check(CLI::IsMember({"chat-http", "replay-fixture", "rule-based"}))
      ->capture_default_str();
  extract->add_option("--input", input, "Directory of backlog JSON files")
      ->capture_default_str();
  extract->add_option("--model", ex.extractor.model_name, "Model name (chat-http)");
  extract->add_option("--temperature", ex.extractor.temperature, "Sampling temperature")
      ->capture_default_str();
  extract->add_option("--endpoint", ex.extractor.endpoint,
                      "Chat endpoint URL, e.g. https://api.openai.com/v1/chat/completions");
  extract->add_option("--provider", ex.extractor.provider, "Request adapter: openai or ollama")
      ->capture_default_str();
  extract->add_flag("--function-calls", ex.extractor.supports_function_calls,
                    "Request structured output through a function schema");
  extract->add_option("--api-key-env", ex.extractor.api_key_env,
                      "Environment variable holding the API key")
      ->capture_default_str();
  extract->add_option("--fixture", fixture, "Replay fixture file (replay-fixture)");
  extract->add_option("--max-retries", ex.extractor.max_retries)->capture_default_str();
  extract->add_option("--timeout", timeout_s, "Request timeout in seconds")
      ->capture_default_str();
  extract->add_flag("--reask", ex.extractor.reask_on_parse_error,
                    "Ask once more when a response cannot be parsed");
  extract->add_option("--concurrency", ex.concurrency, "Stories in flight")
      ->capture_default_str();

  // evaluate
  EvaluateOptions ev;
  std::string baseline = "pos_baseline";
  std::string extracted;
  std::string embedder = "one-hot";
  std::vector<std::string> modes;
  auto* evaluate = app.add_subcommand("evaluate", "Compare extractions with the baseline");
  evaluate->add_option("--experiment", ev.experiment, "Experiment name")->required();
  evaluate->add_option("--baseline", baseline, "Ground-truth backlog directory")
      ->capture_default_str();
  evaluate->add_option("--extracted", extracted,
                       "Extraction directory (default: extracted-user-stories/<experiment>)");
  evaluate->add_option("--mode", modes, "strict, inclusive and/or relaxed (default: all)")
      ->check(CLI::IsMember({"strict", "inclusive", "relaxed"}));
  evaluate->add_flag("--fold-plurals", ev.compare.fold_plurals,
                     "Relaxed: treat singular and plural head nouns as equal");
  evaluate->add_flag("--token-boundary", ev.compare.token_boundary,
                     "Inclusive: match whole tokens only");
  evaluate->add_option("--embedder", embedder, "BERTScore embeddings: none, one-hot or http")
      ->check(CLI::IsMember({"none", "one-hot", "http"}))
      ->capture_default_str();
  evaluate->add_option("--embedding-endpoint", ev.http_embedder.endpoint,
                       "Embeddings URL for --embedder http");
  evaluate->add_option("--embedding-model", ev.http_embedder.model_name);

  // load
  LoadOptions ld;
  std::string load_extracted;
  std::string database;
  auto* load = app.add_subcommand("load", "Store extracted graphs in Neo4j");
  load->add_option("--experiment", ld.experiment, "Experiment name")->required();
  load->add_option("--extracted", load_extracted,
                   "Extraction directory (default: extracted-user-stories/<experiment>)");
  load->add_flag("--dry-run", ld.dry_run, "Only write graph.cypher and graph.json");
  load->add_option("--uri", ld.sink.uri, "Database URI (default: $NEO4J_URI)");
  load->add_option("--user", ld.sink.user, "Database user (default: $NEO4J_USER)");
  load->add_option("--database", database, "Database name (default: neo4j)");
  load->add_option("--batch-size", ld.sink.batch_size, "Statements per request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    load_env_file(env_file);
  } catch (const Error& e) {
    spdlog::error("{}: {}", env_file, e.what());
    return kExitConfig;
  }

  try {
    if (*extract) {
      ex.input_dir = input;
      ex.output_root = output_root;
      ex.extractor.backend = *backend_kind_from_string(backend);
      ex.extractor.fixture_path = fixture;
      ex.extractor.request_timeout_s = timeout_s;
      return run_extract(ex, std::cout).exit_code;
    }
    if (*evaluate) {
      ev.baseline_dir = baseline;
      ev.output_root = output_root;
      if (!extracted.empty()) ev.extracted_dir = extracted;
      if (!modes.empty()) {
        ev.modes.clear();
        for (const auto& m : modes) ev.modes.push_back(*comparison_mode_from_string(m));
      }
      ev.embedder = embedder == "none"      ? EmbedderChoice::None
                    : embedder == "one-hot" ? EmbedderChoice::OneHot
                                            : EmbedderChoice::Http;
      return run_evaluate(ev, std::cout).exit_code;
    }
    ld.output_root = output_root;
    if (!load_extracted.empty()) ld.extracted_dir = load_extracted;
    if (!database.empty()) ld.sink.database_name = database;
    return run_load(ld, std::cout).exit_code;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}
