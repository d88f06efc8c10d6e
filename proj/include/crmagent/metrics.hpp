#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crmagent/provider.hpp"
#include "crmagent/types.hpp"

namespace crmagent::metrics {

struct ChrfParams {
  int char_order = 6;
  int word_order = 0;  // 2 selects the word-n-gram-augmented variant
  double beta = 2.0;
};

/// Character (and optional word) n-gram F-beta in [0,100]. Text is
/// whitespace-normalized first; per-order clipped precision/recall are
/// averaged across orders where both sides have n-grams. Both inputs empty
/// scores 100, exactly one empty scores 0.
double chrf_score(std::string_view reference, std::string_view hypothesis,
                  const ChrfParams& params = {});

using TokenEmbedder = std::function<std::vector<float>(std::string_view)>;

/// Greedy max-cosine token alignment F1: recall averages each reference
/// token's best match against the hypothesis, precision the converse. No idf
/// weighting. Throws MetricUndefined on an empty token list.
double bertscore_f1(std::span<const std::string> reference_tokens,
                    std::span<const std::string> hypothesis_tokens,
                    const TokenEmbedder& embedder);

/// 100 * (gen - ori) / ori. Throws MetricUndefined when ori_mean is 0.
/// Rounding happens at the reporting boundary, not here.
double delta_pct(double ori_mean, double gen_mean);

/// One evaluated rewrite, reduced to what segment aggregation needs.
struct EvalRow {
  AudienceSegment segment = AudienceSegment::PotentialNewCustomers;
  int audience_score_a = 0;
  int market_score_a = 0;
  int audience_score_b = 0;
  int market_score_b = 0;
  bool preferred_b = false;
  double chrf = 0.0;
  double bertscore_f1 = 0.0;
};

struct SegmentReport {
  AudienceSegment segment = AudienceSegment::PotentialNewCustomers;
  int64_t count = 0;
  double audience_ori = 0.0;
  double audience_gen = 0.0;
  double market_ori = 0.0;
  double market_gen = 0.0;
  double audience_delta_pct = 0.0;
  double market_delta_pct = 0.0;
  bool preferred_gen = true;          // reported side; Gen corresponds to slot B
  double preference_rate_pct = 0.0;   // rate of the reported side
  double bertscore_f1_mean = 0.0;
  double chrf_mean = 0.0;
};

/// Per-segment means and preference shares, ordered by (count desc, name asc).
/// The reported preference side is whichever exceeds 50%; ties report Gen at
/// 50.00.
std::vector<SegmentReport> aggregate_segment_table(std::span<const EvalRow> rows);

/// Count-weighted overall row over per-segment reports.
SegmentReport overall_row(std::span<const SegmentReport> reports);

// --- error taxonomy ---------------------------------------------------------

enum class ErrorType {
  AudienceAssumptionError,
  WeakCallToAction,
  VagueIncentive,
  MisalignedTone,
  IrrelevantOffer,
};

inline constexpr std::size_t kErrorTypeCount = 5;

std::string_view error_type_name(ErrorType t);  // "Audience Assumption Error", ...

struct ErrorClassificationResult {
  ErrorType type = ErrorType::WeakCallToAction;
  std::string feedback;
};

/// Reads the first recognized error-type label in the response (multi-label
/// answers reduce to the first, their primary) plus optional feedback text.
/// Throws ParseError when no label matches.
ErrorClassificationResult parse_error_classification(std::string_view raw);

/// Renders the template-review prompt and classifies via the provider.
ErrorClassificationResult classify_error_type(const MessageTemplate& message,
                                              AudienceSegment segment,
                                              std::string_view voucher_text,
                                              std::string_view product_text,
                                              providers::ModelProvider& provider,
                                              const providers::CallSettings& settings,
                                              std::string_view tag = {});

/// Exact multiset counts; every error type appears, zeros included.
std::map<ErrorType, std::size_t> error_distribution(std::span<const ErrorType> classifications);

// --- report rendering ---------------------------------------------------

struct ModelConfigEcho {
  std::string content_model;
  std::string template_model;
  std::string evaluate_model;
};

std::string render_report_text(std::span<const SegmentReport> reports,
                               const SegmentReport& overall,
                               const std::map<ErrorType, std::size_t>& errors,
                               const ModelConfigEcho& models, std::string_view header_line);

std::string render_segment_csv(std::span<const SegmentReport> reports,
                               const SegmentReport& overall, std::string_view header_line);
std::string render_similarity_csv(std::span<const SegmentReport> reports,
                                  const SegmentReport& overall, std::string_view header_line);
std::string render_error_csv(const std::map<ErrorType, std::size_t>& errors,
                             std::string_view header_line);

}  // namespace crmagent::metrics
