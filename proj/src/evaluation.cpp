#include "storygraph/evaluation.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "storygraph/errors.hpp"

namespace storygraph {

std::string_view to_string(ComparisonMode mode) {
  switch (mode) {
    case ComparisonMode::Strict: return "strict";
    case ComparisonMode::Inclusive: return "inclusive";
    case ComparisonMode::Relaxed: return "relaxed";
  }
  return "?";
}

std::optional<ComparisonMode> comparison_mode_from_string(std::string_view s) {
  for (auto m : kAllModes) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

const std::vector<std::string>& qualifier_stop_list() {
  static const std::vector<std::string> words = {
      "a",     "an",      "the",     "all",    "any",     "some",
      "each",  "every",   "no",      "this",   "that",    "these",
      "those", "my",      "your",    "his",    "her",     "its",
      "our",   "their",   "own",     "new",    "other",   "another",
      "several", "many",  "more",    "most",   "few",     "certain",
      "such",  "various", "specific", "multiple", "existing", "current",
  };
  return words;
}

namespace {

std::vector<std::string> split_tokens(const std::string& normalized) {
  std::vector<std::string> out;
  std::istringstream in(normalized);
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool is_qualifier(const std::string& token) {
  const auto& list = qualifier_stop_list();
  if (std::find(list.begin(), list.end(), token) != list.end()) return true;
  auto ends_with = [&](std::string_view suffix) {
    return token.size() > suffix.size() &&
           token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with("'s") || ends_with("s'") || ends_with("\xE2\x80\x99s");
}

std::string singular(const std::string& word) {
  auto ends = [&](std::string_view s) {
    return word.size() > s.size() &&
           word.compare(word.size() - s.size(), s.size(), s) == 0;
  };
  if (ends("ies") && word.size() > 4) return word.substr(0, word.size() - 3) + "y";
  if (ends("sses")) return word.substr(0, word.size() - 2);
  for (std::string_view s : {"xes", "ches", "shes", "zes"}) {
    if (ends(s)) return word.substr(0, word.size() - 2);
  }
  if (ends("s") && !ends("ss") && !ends("us") && !ends("is") && word.size() > 3) {
    return word.substr(0, word.size() - 1);
  }
  return word;
}

std::string relaxed_form(std::string_view text, const CompareOptions& options) {
  auto tokens = split_tokens(strip_qualifiers(text));
  if (options.fold_plurals && !tokens.empty()) {
    tokens.back() = singular(tokens.back());
  }
  return join(tokens);
}

bool contains_tokens(const std::string& haystack, const std::string& needle) {
  auto h = split_tokens(haystack);
  auto n = split_tokens(needle);
  if (n.empty() || n.size() > h.size()) return false;
  return std::search(h.begin(), h.end(), n.begin(), n.end()) != h.end();
}

}  // namespace

std::string strip_qualifiers(std::string_view text) {
  auto tokens = split_tokens(normalize_id(text));
  std::size_t start = 0;
  while (start + 1 < tokens.size() && is_qualifier(tokens[start])) ++start;
  return join(tokens, start);
}

bool compare_element(std::string_view gt, std::string_view pred,
                     ComparisonMode mode, const CompareOptions& options) {
  switch (mode) {
    case ComparisonMode::Strict:
      return normalize_id(gt) == normalize_id(pred);
    case ComparisonMode::Inclusive: {
      auto g = normalize_id(gt);
      auto p = normalize_id(pred);
      if (g.empty()) return false;
      return options.token_boundary ? contains_tokens(p, g)
                                    : p.find(g) != std::string::npos;
    }
    case ComparisonMode::Relaxed:
      return relaxed_form(gt, options) == relaxed_form(pred, options);
  }
  return false;
}

bool compare_element(std::string_view gt, const std::vector<std::string>& pred,
                     ComparisonMode mode, const CompareOptions& options) {
  if (mode != ComparisonMode::Inclusive) return false;
  return std::any_of(pred.begin(), pred.end(), [&](const std::string& p) {
    return compare_element(gt, p, mode, options);
  });
}

Counts match_sets(const std::vector<std::string>& gt,
                  const std::vector<std::string>& pred, ComparisonMode mode,
                  const CompareOptions& options) {
  std::vector<bool> used(pred.size(), false);
  Counts c;
  for (const auto& g : gt) {
    bool matched = false;
    for (std::size_t j = 0; j < pred.size(); ++j) {
      if (used[j] || !compare_element(g, pred[j], mode, options)) continue;
      used[j] = true;
      matched = true;
      break;
    }
    if (matched) ++c.tp;
    else ++c.fn;
  }
  c.fp = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return c;
}

double precision(const Counts& c) {
  auto d = c.tp + c.fp;
  return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double recall(const Counts& c) {
  auto d = c.tp + c.fn;
  return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double f_measure(double p, double r) {
  if (p + r == 0) return 0.0;
  return 2.0 * p * r / (p + r);
}

std::optional<MetricRow> metrics_for(const Counts& c) {
  if (c.tp + c.fp == 0 && c.tp + c.fn == 0) return std::nullopt;
  double p = precision(c);
  double r = recall(c);
  return MetricRow{p, r, f_measure(p, r)};
}

MetricRow bertscore(const std::vector<std::string>& gt_tokens,
                    const std::vector<std::string>& pred_tokens,
                    Embedder& embedder) {
  if (gt_tokens.empty() || pred_tokens.empty()) {
    throw Error("bertscore needs non-empty token lists");
  }
  // One call so that both sides share the embedding space.
  std::vector<std::string> all = pred_tokens;
  all.insert(all.end(), gt_tokens.begin(), gt_tokens.end());
  auto vectors = embedder.embed(all);
  if (vectors.size() != all.size()) throw Error("embedder returned wrong count");
  const std::size_t n = pred_tokens.size();
  const std::size_t m = gt_tokens.size();

  std::vector<double> best_pred(n, -1.0), best_gt(m, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = cosine_similarity(vectors[i], vectors[n + j]);
      best_pred[i] = std::max(best_pred[i], s);
      best_gt[j] = std::max(best_gt[j], s);
    }
  }
  double p = std::accumulate(best_pred.begin(), best_pred.end(), 0.0) / n;
  double r = std::accumulate(best_gt.begin(), best_gt.end(), 0.0) / m;
  return {p, r, f_measure(p, r)};
}

std::vector<std::string> bert_tokens(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    for (auto& t : split_tokens(normalize_id(item))) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> ground_truth_items(const AnnotatedStory& gt,
                                            NodeKind kind) {
  std::vector<std::string> out;
  switch (kind) {
    case NodeKind::Persona:
      out = gt.personas;
      break;
    case NodeKind::Action:
      out = gt.primary_actions;
      out.insert(out.end(), gt.secondary_actions.begin(),
                 gt.secondary_actions.end());
      break;
    case NodeKind::Entity:
      out = gt.primary_entities;
      out.insert(out.end(), gt.secondary_entities.begin(),
                 gt.secondary_entities.end());
      break;
    case NodeKind::Benefit:
      if (gt.benefit) out.push_back(*gt.benefit);
      break;
    case NodeKind::Userstory:
      break;
  }
  return out;
}

std::vector<std::string> extracted_items(const KgComponents& extracted,
                                         NodeKind kind) {
  std::vector<std::string> out;
  for (const auto& n : extracted.nodes) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

KgComponents story_to_components(const AnnotatedStory& s) {
  KgComponents out;
  for (const auto& p : s.personas) out.add_node({p, NodeKind::Persona});
  for (const auto& a : s.primary_actions) out.add_node({a, NodeKind::Action});
  for (const auto& a : s.secondary_actions) out.add_node({a, NodeKind::Action});
  for (const auto& e : s.primary_entities) out.add_node({e, NodeKind::Entity});
  for (const auto& e : s.secondary_entities) out.add_node({e, NodeKind::Entity});
  if (s.benefit) out.add_node({*s.benefit, NodeKind::Benefit});
  for (const auto& [p, a] : s.triggers) {
    out.add_relationship(
        {{p, NodeKind::Persona}, {a, NodeKind::Action}, RelKind::Triggers});
  }
  for (const auto& [a, e] : s.targets) {
    out.add_relationship(
        {{a, NodeKind::Action}, {e, NodeKind::Entity}, RelKind::Targets});
  }
  return out;
}

bool mode_applies(NodeKind kind, ComparisonMode mode) {
  return !(kind == NodeKind::Benefit && mode == ComparisonMode::Relaxed);
}

std::map<RelKind, Counts> evaluate_relations(const AnnotatedStory& gt,
                                             const KgComponents& extracted,
                                             ComparisonMode mode,
                                             const CompareOptions& options) {
  std::map<RelKind, Counts> out;
  for (RelKind kind : {RelKind::Triggers, RelKind::Targets}) {
    const auto& gt_pairs = kind == RelKind::Triggers ? gt.triggers : gt.targets;
    std::vector<StringPair> pred;
    for (const auto& r : extracted.relationships) {
      if (r.kind == kind) pred.emplace_back(r.source.id, r.target.id);
    }
    std::vector<bool> used(pred.size(), false);
    Counts c;
    for (const auto& [a, b] : gt_pairs) {
      bool matched = false;
      for (std::size_t j = 0; j < pred.size(); ++j) {
        if (used[j] || !compare_element(a, pred[j].first, mode, options) ||
            !compare_element(b, pred[j].second, mode, options)) {
          continue;
        }
        used[j] = matched = true;
        break;
      }
      if (matched) ++c.tp;
      else ++c.fn;
    }
    c.fp = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
    out[kind] = c;
  }
  return out;
}

StoryEvaluation evaluate_story(const AnnotatedStory& gt,
                               const KgComponents& extracted,
                               const std::vector<ComparisonMode>& modes,
                               Embedder* embedder,
                               const CompareOptions& options) {
  StoryEvaluation out;
  for (NodeKind kind : kEvaluatedKinds) {
    auto gt_items = ground_truth_items(gt, kind);
    auto pred_items = extracted_items(extracted, kind);
    for (ComparisonMode mode : modes) {
      if (!mode_applies(kind, mode)) continue;
      out.rows[{kind, mode}] =
          metrics_for(match_sets(gt_items, pred_items, mode, options));
    }
    if (embedder != nullptr) {
      auto g = bert_tokens(gt_items);
      auto p = bert_tokens(pred_items);
      out.bertscore[kind] =
          (g.empty() || p.empty())
              ? std::nullopt
              : std::optional<MetricRow>(bertscore(g, p, *embedder));
    }
  }
  for (ComparisonMode mode : modes) {
    for (const auto& [kind, counts] :
         evaluate_relations(gt, extracted, mode, options)) {
      out.relations[{kind, mode}] = metrics_for(counts);
    }
  }
  return out;
}

namespace {

struct Accumulator {
  double p = 0, r = 0, f = 0;
  std::size_t counted = 0, undefined = 0;

  void add(const std::optional<MetricRow>& row) {
    if (!row) {
      ++undefined;
      return;
    }
    p += row->precision;
    r += row->recall;
    f += row->f_measure;
    ++counted;
  }
};

}  // namespace

BacklogEvaluation evaluate_backlog(
    const Backlog& gt, const std::vector<std::optional<KgComponents>>& extractions,
    const std::vector<ComparisonMode>& modes, Embedder* embedder,
    const CompareOptions& options) {
  BacklogEvaluation out;
  out.summary.backlog = gt.name;
  out.summary.stories_total = gt.stories.size();

  // Keys keep kind/mode order stable: kind index, mode name.
  std::map<std::pair<std::string, std::string>, Accumulator> acc;
  std::vector<std::pair<std::string, std::string>> order;
  auto slot = [&](const std::string& kind, const std::string& mode) -> Accumulator& {
    auto key = std::make_pair(kind, mode);
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    return it->second;
  };
  // Fix the row order up front.
  for (NodeKind kind : kEvaluatedKinds) {
    for (ComparisonMode mode : modes) {
      if (mode_applies(kind, mode)) {
        slot(std::string(to_string(kind)), std::string(to_string(mode)));
      }
    }
    if (embedder) slot(std::string(to_string(kind)), "bertscore");
  }
  for (RelKind kind : {RelKind::Triggers, RelKind::Targets}) {
    for (ComparisonMode mode : modes) {
      slot(std::string(to_string(kind)), std::string(to_string(mode)));
    }
  }

  for (std::size_t i = 0; i < gt.stories.size(); ++i) {
    const auto& story = gt.stories[i];
    if (auto v = validate_story(story); !v.empty()) {
      ++out.summary.stories_invalid;
      out.summary.notes.push_back("story " + std::to_string(i) +
                                  " excluded: " + v.front());
      continue;
    }
    if (i >= extractions.size() || !extractions[i]) {
      ++out.summary.stories_skipped;
      continue;
    }
    ++out.summary.stories_evaluated;
    auto ev = evaluate_story(story, *extractions[i], modes, embedder, options);
    for (const auto& [key, row] : ev.rows) {
      slot(std::string(to_string(key.first)), std::string(to_string(key.second)))
          .add(row);
    }
    for (const auto& [kind, row] : ev.bertscore) {
      slot(std::string(to_string(kind)), "bertscore").add(row);
    }
    for (const auto& [key, row] : ev.relations) {
      slot(std::string(to_string(key.first)), std::string(to_string(key.second)))
          .add(row);
    }
  }

  for (const auto& key : order) {
    const auto& a = acc[key];
    if (a.counted == 0) {
      if (out.summary.stories_evaluated > 0) {
        out.summary.notes.push_back(key.first + "/" + key.second +
                                    " omitted: undefined for every story");
      }
      continue;
    }
    double n = static_cast<double>(a.counted);
    out.rows.push_back({gt.name, key.first, key.second,
                        {a.p / n, a.r / n, a.f / n}, a.counted, a.undefined});
  }
  return out;
}

std::vector<std::optional<KgComponents>> align_extractions(
    const Backlog& gt, const Backlog& extracted) {
  std::map<std::string, std::deque<const AnnotatedStory*>> by_text;
  for (const auto& s : extracted.stories) by_text[s.text].push_back(&s);
  std::vector<std::optional<KgComponents>> out(gt.stories.size());
  for (std::size_t i = 0; i < gt.stories.size(); ++i) {
    auto it = by_text.find(gt.stories[i].text);
    if (it == by_text.end() || it->second.empty()) continue;
    const AnnotatedStory* entry = it->second.front();
    it->second.pop_front();
    if (entry->error) continue;
    out[i] = story_to_components(*entry);
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "backlog,kind,mode,precision,recall,f_measure,stories_counted,"
        "stories_undefined\n";
  for (const auto& r : report.rows) {
    os << csv_field(r.backlog) << ',' << r.kind << ',' << r.mode << ','
       << fixed(r.metrics.precision, 6) << ',' << fixed(r.metrics.recall, 6)
       << ',' << fixed(r.metrics.f_measure, 6) << ',' << r.stories_counted
       << ',' << r.stories_undefined << '\n';
  }
  return os.str();
}

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["created_at"] = report.created_at;
  auto backlogs = nlohmann::ordered_json::array();
  for (const auto& b : report.backlogs) {
    backlogs.push_back({{"backlog", b.backlog},
                        {"stories_total", b.stories_total},
                        {"stories_evaluated", b.stories_evaluated},
                        {"stories_skipped", b.stories_skipped},
                        {"stories_invalid", b.stories_invalid},
                        {"notes", b.notes}});
  }
  j["backlogs"] = std::move(backlogs);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"backlog", r.backlog},
                    {"kind", r.kind},
                    {"mode", r.mode},
                    {"precision", r.metrics.precision},
                    {"recall", r.metrics.recall},
                    {"f_measure", r.metrics.f_measure},
                    {"stories_counted", r.stories_counted},
                    {"stories_undefined", r.stories_undefined}});
  }
  j["rows"] = std::move(rows);
  j["warnings"] = report.warnings;
  return j;
}

std::string format_f_table(const EvaluationReport& report,
                           std::string_view mode) {
  std::vector<std::string> backlogs;
  for (const auto& b : report.backlogs) backlogs.push_back(b.backlog);
  std::ostringstream os;
  os << std::left << std::setw(10) << "Backlog";
  for (NodeKind k : kEvaluatedKinds) os << std::setw(10) << to_string(k);
  os << '\n';
  for (const auto& name : backlogs) {
    os << std::setw(10) << name;
    for (NodeKind k : kEvaluatedKinds) {
      std::string cell = "-";
      for (const auto& r : report.rows) {
        if (r.backlog == name && r.kind == to_string(k) && r.mode == mode) {
          cell = fixed(r.metrics.f_measure, 2);
        }
      }
      os << std::setw(10) << cell;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace storygraph
