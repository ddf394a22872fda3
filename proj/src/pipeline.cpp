#include "storygraph/pipeline.hpp"

#include <atomic>
#include <ctime>
#include <fstream>
#include <ostream>
#include <regex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "storygraph/errors.hpp"
#include "storygraph/graph_transform.hpp"

namespace storygraph {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("write failed: " + path.string());
}

bool has_backlogs(const fs::path& dir) {
  return fs::is_directory(dir) && !list_backlog_files(dir).empty();
}

}  // namespace

bool valid_experiment_name(const std::string& name) {
  static const std::regex re(R"(^[A-Za-z0-9_-][A-Za-z0-9._-]*$)");
  return name.size() <= 128 && std::regex_match(name, re);
}

nlohmann::ordered_json manifest_to_json(const ExperimentManifest& m) {
  const auto& c = m.extractor;
  nlohmann::ordered_json ex;
  ex["backend"] = std::string(to_string(c.backend));
  if (c.backend == BackendKind::ChatHttp) {
    ex["provider"] = c.provider;
    ex["endpoint"] = c.endpoint;
    ex["model"] = c.model_name;
    ex["api_key_env"] = c.api_key_env;
  }
  if (c.backend == BackendKind::ReplayFixture) ex["fixture"] = c.fixture_path.string();
  ex["temperature"] = c.temperature;
  ex["function_calls"] = c.supports_function_calls;
  ex["max_retries"] = c.max_retries;
  ex["reask_on_parse_error"] = c.reask_on_parse_error;

  nlohmann::ordered_json j;
  j["experiment_name"] = m.experiment_name;
  j["extractor"] = std::move(ex);
  j["input_dir"] = m.input_dir.string();
  j["created_at"] = m.created_at;
  j["prompt_catalog_version"] = m.prompt_catalog_version;
  return j;
}

AnnotatedStory story_from_components(const AnnotatedStory& source,
                                     const KgComponents& components) {
  auto doc = build_graph_document(components, clean_story_text(source));
  AnnotatedStory out;
  out.pid = source.pid;
  out.text = source.text;

  std::set<std::string> primary_actions;
  std::set<std::string> primary_entities;
  for (const auto& r : doc.relationships) {
    if (r.kind == RelKind::Triggers) {
      out.triggers.emplace_back(r.source.id, r.target.id);
      primary_actions.insert(r.target.id);
    }
  }
  for (const auto& r : doc.relationships) {
    if (r.kind != RelKind::Targets) continue;
    out.targets.emplace_back(r.source.id, r.target.id);
    if (primary_actions.count(r.source.id)) primary_entities.insert(r.target.id);
  }
  for (const auto& n : doc.nodes) {
    switch (n.kind) {
      case NodeKind::Persona:
        out.personas.push_back(n.id);
        break;
      case NodeKind::Action:
        (primary_actions.count(n.id) ? out.primary_actions : out.secondary_actions)
            .push_back(n.id);
        break;
      case NodeKind::Entity:
        (primary_entities.count(n.id) ? out.primary_entities : out.secondary_entities)
            .push_back(n.id);
        break;
      case NodeKind::Benefit:
        if (!out.benefit) out.benefit = n.id;
        break;
      case NodeKind::Userstory:
        break;
    }
  }
  return out;
}

AnnotatedStory failed_story(const AnnotatedStory& source, const std::string& error) {
  AnnotatedStory out;
  out.pid = source.pid;
  out.text = source.text;
  out.error = error;
  return out;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

namespace {

std::vector<AnnotatedStory> extract_backlog(const Backlog& backlog,
                                            Extractor& extractor,
                                            std::size_t concurrency,
                                            std::size_t& failures) {
  const std::size_t n = backlog.stories.size();
  std::vector<AnnotatedStory> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& story = backlog.stories[i];
      try {
        results[i] = story_from_components(story, extractor.extract(clean_story_text(story)));
      } catch (const std::exception& e) {
        spdlog::warn("{} story {} failed: {}", backlog.name, i, e.what());
        results[i] = failed_story(story, e.what());
        ++failed;
      }
    }
  };
  std::size_t threads = std::max<std::size_t>(1, std::min(concurrency, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  failures += failed;
  return results;
}

}  // namespace

ExtractOutcome run_extract(const ExtractOptions& options, std::ostream& out) {
  ExtractOutcome outcome;
  if (!valid_experiment_name(options.experiment)) {
    spdlog::error("invalid experiment name '{}'", options.experiment);
    outcome.exit_code = kExitInput;
    return outcome;
  }
  if (!has_backlogs(options.input_dir)) {
    spdlog::error("no backlog files in {}", options.input_dir.string());
    outcome.exit_code = kExitInput;
    return outcome;
  }
  std::unique_ptr<Extractor> extractor;
  try {
    extractor = make_extractor(options.extractor);
  } catch (const ConfigError& e) {
    spdlog::error("backend configuration: {}", e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  }
  return run_extract(options, *extractor, out);
}

ExtractOutcome run_extract(const ExtractOptions& options, Extractor& extractor,
                           std::ostream& out) {
  ExtractOutcome outcome;
  if (!valid_experiment_name(options.experiment)) {
    spdlog::error("invalid experiment name '{}'", options.experiment);
    outcome.exit_code = kExitInput;
    return outcome;
  }
  if (!has_backlogs(options.input_dir)) {
    spdlog::error("no backlog files in {}", options.input_dir.string());
    outcome.exit_code = kExitInput;
    return outcome;
  }
  if (options.concurrency == 0) {
    spdlog::error("concurrency must be positive");
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  outcome.output_dir =
      options.output_root / "extracted-user-stories" / options.experiment;
  fs::create_directories(outcome.output_dir);

  ExperimentManifest manifest{options.experiment, options.extractor,
                              options.input_dir, utc_now()};
  write_file(outcome.output_dir / "manifest.json",
             manifest_to_json(manifest).dump(4) + "\n");

  for (const auto& path : list_backlog_files(options.input_dir)) {
    Backlog backlog;
    try {
      backlog = load_backlog_file(path);
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", path.string(), e.what());
      continue;
    }
    Backlog result{backlog.name,
                   extract_backlog(backlog, extractor, options.concurrency,
                                   outcome.failed_stories)};
    write_file(outcome.output_dir / (backlog.name + ".json"), serialize_backlog(result));
    ++outcome.backlogs;
    outcome.stories += result.stories.size();
  }

  out << "extracted " << outcome.stories << " stories from " << outcome.backlogs
      << " backlogs into " << outcome.output_dir.string() << "\n";
  if (outcome.failed_stories > 0) {
    out << "warning: " << outcome.failed_stories
        << " stories failed; see the Error fields\n";
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

EvaluateOutcome run_evaluate(const EvaluateOptions& options, std::ostream& out) {
  EvaluateOutcome outcome;
  if (!valid_experiment_name(options.experiment)) {
    spdlog::error("invalid experiment name '{}'", options.experiment);
    outcome.exit_code = kExitInput;
    return outcome;
  }
  fs::path extracted_dir = options.extracted_dir.value_or(
      options.output_root / "extracted-user-stories" / options.experiment);
  for (const auto& dir : {extracted_dir, options.baseline_dir}) {
    if (!has_backlogs(dir)) {
      spdlog::error("no backlog files in {}", dir.string());
      outcome.exit_code = kExitInput;
      return outcome;
    }
  }

  std::unique_ptr<Embedder> embedder;
  try {
    switch (options.embedder) {
      case EmbedderChoice::None: break;
      case EmbedderChoice::OneHot: embedder = std::make_unique<OneHotEmbedder>(); break;
      case EmbedderChoice::Http: embedder = make_http_embedder(options.http_embedder); break;
    }
  } catch (const ConfigError& e) {
    spdlog::error("embedder configuration: {}", e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  std::map<std::string, fs::path> gt_files, ex_files;
  for (const auto& p : list_backlog_files(options.baseline_dir)) gt_files[p.stem().string()] = p;
  for (const auto& p : list_backlog_files(extracted_dir)) ex_files[p.stem().string()] = p;

  auto& report = outcome.report;
  report.experiment = options.experiment;
  report.created_at = utc_now();
  for (const auto& [name, _] : gt_files) {
    if (!ex_files.count(name)) report.warnings.push_back("no extraction for backlog " + name);
  }
  for (const auto& [name, _] : ex_files) {
    if (!gt_files.count(name)) report.warnings.push_back("no ground truth for backlog " + name);
  }

  try {
    for (const auto& [name, gt_path] : gt_files) {
      auto it = ex_files.find(name);
      if (it == ex_files.end()) continue;
      auto gt = load_backlog_file(gt_path);
      auto extracted = load_backlog_file(it->second);
      auto ev = evaluate_backlog(gt, align_extractions(gt, extracted), options.modes,
                                 embedder.get(), options.compare);
      report.backlogs.push_back(ev.summary);
      report.rows.insert(report.rows.end(), ev.rows.begin(), ev.rows.end());
    }
  } catch (const BackendError& e) {
    spdlog::error("embedder: {}", e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    outcome.exit_code = kExitInput;
    return outcome;
  }
  if (report.backlogs.empty()) {
    spdlog::error("no backlog appears in both {} and {}", extracted_dir.string(),
                  options.baseline_dir.string());
    outcome.exit_code = kExitInput;
    return outcome;
  }

  outcome.output_dir = options.output_root / "evaluation" / options.experiment;
  fs::create_directories(outcome.output_dir);
  write_file(outcome.output_dir / "report.csv", report_to_csv(report));
  write_file(outcome.output_dir / "report.json", report_to_json(report).dump(2) + "\n");

  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  for (auto mode : options.modes) {
    out << "F-measure, " << to_string(mode) << " comparison\n"
        << format_f_table(report, to_string(mode)) << "\n";
  }
  if (embedder) {
    out << "F-measure, bertscore\n" << format_f_table(report, "bertscore") << "\n";
  }
  out << "reports written to " << outcome.output_dir.string() << "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// load
// ---------------------------------------------------------------------------

std::vector<GraphDocument> documents_from_backlog(const Backlog& extracted) {
  std::vector<GraphDocument> docs;
  for (const auto& story : extracted.stories) {
    if (story.error) continue;
    auto doc = build_graph_document(story_to_components(story), clean_story_text(story));
    for (auto& n : doc.nodes) {
      if (n.kind != NodeKind::Userstory) continue;
      n.properties["backlog"] = extracted.name;
      if (!story.pid.empty()) n.properties["pid"] = story.pid;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

LoadOutcome run_load(const LoadOptions& options, std::ostream& out) {
  LoadOutcome outcome;
  if (!valid_experiment_name(options.experiment)) {
    spdlog::error("invalid experiment name '{}'", options.experiment);
    outcome.exit_code = kExitInput;
    return outcome;
  }
  fs::path extracted_dir = options.extracted_dir.value_or(
      options.output_root / "extracted-user-stories" / options.experiment);
  if (!has_backlogs(extracted_dir)) {
    spdlog::error("no extraction files in {}", extracted_dir.string());
    outcome.exit_code = kExitInput;
    return outcome;
  }

  std::vector<std::vector<CypherStatement>> groups;
  try {
    for (const auto& path : list_backlog_files(extracted_dir)) {
      for (auto& doc : documents_from_backlog(load_backlog_file(path))) {
        for (const auto& v : validate_ontology(doc)) {
          if (v.severity == Severity::Error) {
            spdlog::warn("{}: {} ({})", path.stem().string(), v.message, v.aspect);
          }
        }
        groups.push_back(to_cypher(doc, options.sink.max_id_length));
        outcome.documents.push_back(std::move(doc));
      }
    }
  } catch (const SinkError& e) {
    spdlog::error("{}", e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    outcome.exit_code = kExitInput;
    return outcome;
  }

  outcome.output_dir = options.output_root / "graphs" / options.experiment;
  fs::create_directories(outcome.output_dir);
  write_file(outcome.output_dir / "graph.cypher", cypher_script(groups));
  write_file(outcome.output_dir / "graph.json", export_json(outcome.documents));

  std::size_t rels = 0;
  for (const auto& d : outcome.documents) rels += d.relationships.size();
  out << outcome.documents.size() << " documents, " << groups.size()
      << " transactions, " << rels << " relationships written to "
      << outcome.output_dir.string() << "\n";
  if (options.dry_run) return outcome;

  try {
    auto config = resolve_sink_config(options.sink);
    outcome.summary = store_statements(config, groups);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    outcome.exit_code = kExitConfig;
    return outcome;
  }
  const auto& s = outcome.summary;
  out << "loaded " << s.documents_loaded << " documents: " << s.nodes_created
      << " nodes created, " << s.nodes_matched << " nodes matched, "
      << s.rels_created << " relationships created\n";
  if (!s.failures.empty()) {
    out << "warning: " << s.failures.size() << " documents rolled back\n";
  }
  return outcome;
}

}  // namespace storygraph
