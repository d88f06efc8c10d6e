#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crmagent/ingest.hpp"
#include "crmagent/metrics.hpp"
#include "crmagent/prompts.hpp"
#include "crmagent/provider.hpp"
#include "crmagent/retrieval.hpp"
#include "crmagent/types.hpp"

namespace crmagent::orchestrator {

enum class PathKind { InGroup, CrossMerchant, RuleBased };

std::string_view path_kind_name(PathKind p);  // "in_group", "cross_merchant", "rule_based"

struct RoutingDecision {
  PathKind path = PathKind::RuleBased;
  std::vector<std::string> exemplar_keys;  // empty for RuleBased
  std::optional<std::string> skip_reason;  // set only on rule-based fallbacks
};

struct RewriteOutcome {
  RecordKey target_key;
  MessageTemplate original;
  MessageTemplate generated;
  RoutingDecision routing;
  std::optional<prompts::DiagnosisReport> diagnosis;  // absent iff rule-based
  std::vector<std::pair<std::string, std::string>> provider_trace;  // (request, response) digests
};

struct EvalResult {
  RecordKey target_key;
  prompts::ScorePair scores;
  prompts::PreferenceDecision preference;
  double chrf = 0.0;
  double bertscore_f1 = 0.0;
};

struct FailureEntry {
  RecordKey target_key;
  std::string stage;  // "rewrite" or "evaluate"
  std::string reason;
  bool transport = false;
};

/// Lookup structures over a tiered corpus; the corpus outlives the view.
struct CorpusView {
  std::span<const AggregatedPlanRecord> records;
  std::map<std::string, const AggregatedPlanRecord*> by_key_string;
  // Strong records per (merchant, segment), ordered (avg_engagement desc, key asc).
  std::map<std::pair<std::string, AudienceSegment>, std::vector<const AggregatedPlanRecord*>>
      strong_by_group;
  std::vector<const AggregatedPlanRecord*> strong_records;  // key order

  static CorpusView build(std::span<const AggregatedPlanRecord> records);
};

/// Docs for the strong-tier index.
std::vector<retrieval::MetadataDoc> strong_docs(const CorpusView& view);

/// Figure-1 routing for one weak record. The predicate chain runs in order:
/// in-group Strong exemplars, then the missing-metadata skip, then
/// cross-merchant retrieval, then the rule-based fallback. `index` may be null
/// when no strong records exist.
RoutingDecision route_plan(const AggregatedPlanRecord& target, const CorpusView& view,
                           const retrieval::VectorIndex* index,
                           const retrieval::TextEmbedder& embedder, int k, double min_similarity);

struct StageSettings {
  providers::CallSettings content;    // diagnosis calls
  providers::CallSettings template_;  // rewrite calls
  providers::CallSettings evaluate;   // scoring/comparison/classification calls
  const prompts::SkeletonSet* skeletons = &prompts::SkeletonSet::embedded();
};

/// Executes the decided path: diagnosis + rewrite on exemplar paths (two
/// provider calls), a single rule-based call otherwise. Throws RewriteFailed.
RewriteOutcome run_rewrite(const RoutingDecision& decision, const AggregatedPlanRecord& target,
                           const CorpusView& view, providers::ModelProvider& provider,
                           const StageSettings& settings);

/// Scores both versions blind, asks for a preference, and computes the
/// similarity metrics. Throws EvalFailed with the parse diagnostics retained.
EvalResult run_evaluation(const RewriteOutcome& outcome, AudienceSegment segment,
                          providers::ModelProvider& provider, const StageSettings& settings,
                          const metrics::ChrfParams& chrf_params,
                          const metrics::TokenEmbedder& token_embedder);

struct BatchOptions {
  int top_k = 3;
  double min_similarity = 0.30;
  int embed_dimension = 256;
  metrics::ChrfParams chrf;
  StageSettings stages;
};

struct BatchResult {
  std::vector<RewriteOutcome> outcomes;  // sorted by target key
  std::vector<EvalResult> evals;         // sorted by target key
  std::vector<FailureEntry> failures;    // sorted by target key
};

/// Processes every Weak record through routing, rewrite and evaluation.
/// Failures are isolated per record; outputs are key-sorted regardless of
/// completion order.
BatchResult run_batch(std::span<const AggregatedPlanRecord> corpus, const BatchOptions& options,
                      providers::ModelProvider& provider);

// --- results.jsonl ----------------------------------------------------------

struct ResultRow {
  RecordKey key;
  std::string path;
  std::vector<std::string> exemplar_keys;
  std::optional<std::string> skip_reason;
  MessageTemplate original;
  std::optional<MessageTemplate> generated;
  std::optional<int> audience_score_a;
  std::optional<int> market_score_a;
  std::optional<int> audience_score_b;
  std::optional<int> market_score_b;
  std::optional<char> preferred;  // 'A' or 'B'
  std::optional<double> chrf;
  std::optional<double> bertscore_f1;
  std::optional<std::string> error_type;
  std::optional<std::string> error_feedback;
  std::optional<std::string> failure_stage;
  std::optional<std::string> failure_reason;
};

std::string serialize_results(std::span<const ResultRow> rows, const ingest::FileHeader& header);
std::vector<ResultRow> read_results_file(const std::filesystem::path& path);

ResultRow row_from_outcome(const RewriteOutcome& outcome);
ResultRow row_from_failure(const AggregatedPlanRecord& target, const FailureEntry& failure,
                           const RoutingDecision* decision);

}  // namespace crmagent::orchestrator
