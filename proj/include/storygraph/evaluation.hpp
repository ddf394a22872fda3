#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storygraph/corpus.hpp"
#include "storygraph/embedder.hpp"
#include "storygraph/extraction.hpp"
#include "storygraph/graph_model.hpp"

namespace storygraph {

enum class ComparisonMode { Strict, Inclusive, Relaxed };

inline constexpr std::array<ComparisonMode, 3> kAllModes = {
    ComparisonMode::Strict, ComparisonMode::Inclusive, ComparisonMode::Relaxed};

std::string_view to_string(ComparisonMode mode);
std::optional<ComparisonMode> comparison_mode_from_string(std::string_view s);

struct CompareOptions {
  // Relaxed: also treat singular and plural head nouns as equal.
  bool fold_plurals = false;
  // Inclusive: require the ground truth to match whole tokens of the
  // prediction instead of any character substring.
  bool token_boundary = false;
};

inline constexpr std::string_view kQualifierListVersion = "1";

/// Leading words dropped in Relaxed mode: determiners, quantifiers,
/// possessive pronouns and a few common qualifiers. Any token ending in
/// 's or s' is treated as a possessive as well.
const std::vector<std::string>& qualifier_stop_list();

/// normalize_id followed by removal of leading qualifiers. Never strips the
/// final token.
std::string strip_qualifiers(std::string_view text);

bool compare_element(std::string_view gt, std::string_view pred,
                     ComparisonMode mode, const CompareOptions& options = {});
/// A list prediction never matches in Strict or Relaxed mode; in Inclusive
/// mode it matches iff a single element contains the ground truth.
bool compare_element(std::string_view gt, const std::vector<std::string>& pred,
                     ComparisonMode mode, const CompareOptions& options = {});

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const Counts&) const = default;
  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// Greedy one-to-one matching: each ground-truth item, in order, consumes
/// the first unconsumed prediction it matches.
Counts match_sets(const std::vector<std::string>& gt,
                  const std::vector<std::string>& pred, ComparisonMode mode,
                  const CompareOptions& options = {});

double precision(const Counts& c);
double recall(const Counts& c);
double f_measure(double p, double r);

struct MetricRow {
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
};

/// nullopt when both sides are empty (the story is excluded from averages).
std::optional<MetricRow> metrics_for(const Counts& c);

/// Greedy-max cosine aggregation: precision averages over predicted tokens,
/// recall over ground-truth tokens. Throws Error on an empty list.
MetricRow bertscore(const std::vector<std::string>& gt_tokens,
                    const std::vector<std::string>& pred_tokens,
                    Embedder& embedder);

/// normalize_id each item, then split on spaces.
std::vector<std::string> bert_tokens(const std::vector<std::string>& items);

/// Evaluated concept kinds (everything but Userstory).
inline constexpr std::array<NodeKind, 4> kEvaluatedKinds = {
    NodeKind::Persona, NodeKind::Action, NodeKind::Entity, NodeKind::Benefit};

/// Ground-truth list for `kind`: personas, primary+secondary actions,
/// primary+secondary entities or the 0/1-element benefit list.
std::vector<std::string> ground_truth_items(const AnnotatedStory& gt,
                                            NodeKind kind);
std::vector<std::string> extracted_items(const KgComponents& extracted,
                                         NodeKind kind);

/// The annotations of a story as components (for self-evaluation and for
/// reading extraction files that mirror the ground-truth schema).
KgComponents story_to_components(const AnnotatedStory& story);

bool mode_applies(NodeKind kind, ComparisonMode mode);

struct StoryEvaluation {
  std::map<std::pair<NodeKind, ComparisonMode>, std::optional<MetricRow>> rows;
  std::map<NodeKind, std::optional<MetricRow>> bertscore;
  std::map<std::pair<RelKind, ComparisonMode>, std::optional<MetricRow>>
      relations;
};

/// Per-kind, per-mode metrics for one story. `embedder` may be null to skip
/// BERTScore.
StoryEvaluation evaluate_story(const AnnotatedStory& gt,
                               const KgComponents& extracted,
                               const std::vector<ComparisonMode>& modes,
                               Embedder* embedder,
                               const CompareOptions& options = {});

/// Pair matching for TRIGGERS and TARGETS.
std::map<RelKind, Counts> evaluate_relations(const AnnotatedStory& gt,
                                             const KgComponents& extracted,
                                             ComparisonMode mode,
                                             const CompareOptions& options = {});

struct ReportRow {
  std::string backlog;
  std::string kind;  // node kind, TRIGGERS or TARGETS
  std::string mode;  // strict, inclusive, relaxed or bertscore
  MetricRow metrics;
  std::size_t stories_counted = 0;
  std::size_t stories_undefined = 0;
};

struct BacklogSummary {
  std::string backlog;
  std::size_t stories_total = 0;
  std::size_t stories_evaluated = 0;
  std::size_t stories_skipped = 0;  // no extraction or extraction error
  std::size_t stories_invalid = 0;  // ground truth failed validate_story
  std::vector<std::string> notes;
};

struct BacklogEvaluation {
  BacklogSummary summary;
  std::vector<ReportRow> rows;
};

/// `extractions[i]` belongs to `gt.stories[i]`; nullopt marks a skipped
/// story. Rows hold the arithmetic mean of the defined story metrics.
BacklogEvaluation evaluate_backlog(
    const Backlog& gt, const std::vector<std::optional<KgComponents>>& extractions,
    const std::vector<ComparisonMode>& modes, Embedder* embedder,
    const CompareOptions& options = {});

/// Pairs extraction entries with ground-truth stories by Text (first unused
/// entry with equal text). Entries carrying an error are left unmatched.
std::vector<std::optional<KgComponents>> align_extractions(
    const Backlog& gt, const Backlog& extracted);

struct EvaluationReport {
  std::string experiment;
  std::string created_at;
  std::vector<BacklogSummary> backlogs;
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;
};

/// CSV columns: backlog,kind,mode,precision,recall,f_measure,
/// stories_counted,stories_undefined.
std::string report_to_csv(const EvaluationReport& report);
nlohmann::ordered_json report_to_json(const EvaluationReport& report);
/// Backlog x kind F-measure table for one mode.
std::string format_f_table(const EvaluationReport& report, std::string_view mode);

}  // namespace storygraph
