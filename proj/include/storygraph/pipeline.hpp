#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygraph/corpus.hpp"
#include "storygraph/embedder.hpp"
#include "storygraph/evaluation.hpp"
#include "storygraph/extraction.hpp"
#include "storygraph/graph_sink.hpp"

namespace storygraph {

// Exit codes shared by the commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;

/// Letters, digits, '.', '_' and '-'; not empty, no leading dot.
bool valid_experiment_name(const std::string& name);

struct ExperimentManifest {
  std::string experiment_name;
  ExtractorConfig extractor;
  std::filesystem::path input_dir;
  std::string created_at;  // ISO 8601, UTC
  std::string prompt_catalog_version{kPromptCatalogVersion};
};

/// Credentials are never written.
nlohmann::ordered_json manifest_to_json(const ExperimentManifest& manifest);

/// Extraction output entry in the ground-truth schema. The TRIGGERS target
/// is the primary action; entities it TARGETS are primary entities.
AnnotatedStory story_from_components(const AnnotatedStory& source,
                                     const KgComponents& components);
AnnotatedStory failed_story(const AnnotatedStory& source, const std::string& error);

struct ExtractOptions {
  std::string experiment;
  std::filesystem::path input_dir = "pos_baseline";
  std::filesystem::path output_root = ".";
  ExtractorConfig extractor;
  std::size_t concurrency = 4;
};

struct ExtractOutcome {
  int exit_code = kExitOk;
  std::size_t backlogs = 0;
  std::size_t stories = 0;
  std::size_t failed_stories = 0;
  std::filesystem::path output_dir;
};

/// Writes extracted-user-stories/<experiment>/<backlog>.json and
/// manifest.json under `output_root`.
ExtractOutcome run_extract(const ExtractOptions& options, std::ostream& out);

/// Same, with an injected extractor (used by tests and by the replay path).
ExtractOutcome run_extract(const ExtractOptions& options, Extractor& extractor,
                           std::ostream& out);

enum class EmbedderChoice { None, OneHot, Http };

struct EvaluateOptions {
  std::string experiment;
  // Defaults to <output_root>/extracted-user-stories/<experiment>.
  std::optional<std::filesystem::path> extracted_dir;
  std::filesystem::path baseline_dir = "pos_baseline";
  std::filesystem::path output_root = ".";
  std::vector<ComparisonMode> modes{kAllModes.begin(), kAllModes.end()};
  CompareOptions compare;
  EmbedderChoice embedder = EmbedderChoice::OneHot;
  HttpEmbedderConfig http_embedder;
};

struct EvaluateOutcome {
  int exit_code = kExitOk;
  EvaluationReport report;
  std::filesystem::path output_dir;
};

/// Writes evaluation/<experiment>/report.csv and report.json and prints one
/// F-measure table per mode.
EvaluateOutcome run_evaluate(const EvaluateOptions& options, std::ostream& out);

struct LoadOptions {
  std::string experiment;
  std::optional<std::filesystem::path> extracted_dir;
  std::filesystem::path output_root = ".";
  SinkConfig sink;
  bool dry_run = false;
};

struct LoadOutcome {
  int exit_code = kExitOk;
  std::vector<GraphDocument> documents;
  LoadSummary summary;
  std::filesystem::path output_dir;
};

/// Graph documents rebuilt from the extraction entries of one backlog.
/// Failed entries are skipped.
std::vector<GraphDocument> documents_from_backlog(const Backlog& extracted);

/// Writes graphs/<experiment>/graph.cypher and graph.json, then stores the
/// documents unless `dry_run`.
LoadOutcome run_load(const LoadOptions& options, std::ostream& out);

}  // namespace storygraph
