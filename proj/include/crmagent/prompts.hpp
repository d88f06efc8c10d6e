#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crmagent/types.hpp"

namespace crmagent::prompts {

enum class PromptKind {
  ContentDiagnosis,
  ExemplarRewrite,
  RuleRewrite,
  Scoring,
  Comparison,
  ErrorClassification,
};

std::string_view prompt_kind_name(PromptKind k);

struct PromptBundle {
  PromptKind kind = PromptKind::ContentDiagnosis;
  std::string rendered_text;
  std::map<std::string, std::string> placeholders_filled;
};

/// The five agent skeletons plus the template-review sheet. The compiled-in
/// set mirrors resources/prompts/; an alternate directory (e.g. a
/// chain-of-thought variant) can be loaded with the same placeholder names.
struct SkeletonSet {
  std::string content_diagnosis;
  std::string exemplar_rewrite;
  std::string rule_rewrite;
  std::string scoring;
  std::string comparison;
  std::string error_classification;

  static const SkeletonSet& embedded();
  static SkeletonSet load_dir(const std::filesystem::path& dir);
  std::string_view for_kind(PromptKind k) const;
};

/// One exemplar row for the diagnosis prompt: template plus the metadata shown
/// in its `Template | Category | Voucher` line.
struct PromptExemplar {
  MessageTemplate template_;
  std::vector<std::string> category_path;
  std::string voucher_fingerprint = "none";
};

/// Message text as it appears inside prompts: title, blank line, body.
std::string render_message(const MessageTemplate& t);

std::string render_exemplar_line(const PromptExemplar& e);

PromptBundle build_content_prompt(AudienceSegment segment,
                                  std::span<const PromptExemplar> strong,
                                  std::span<const PromptExemplar> weak,
                                  const SkeletonSet& skeletons = SkeletonSet::embedded());

PromptBundle build_rewrite_prompt(const MessageTemplate& original, std::string_view weakness,
                                  std::span<const MessageTemplate> exemplars,
                                  std::string_view success_summary,
                                  const SkeletonSet& skeletons = SkeletonSet::embedded());

PromptBundle build_rule_prompt(const MessageTemplate& original,
                               const SkeletonSet& skeletons = SkeletonSet::embedded());

PromptBundle build_scoring_prompt(AudienceSegment segment, const MessageTemplate& message_a,
                                  const MessageTemplate& message_b,
                                  const SkeletonSet& skeletons = SkeletonSet::embedded());

PromptBundle build_comparison_prompt(AudienceSegment segment, const MessageTemplate& message_a,
                                     const MessageTemplate& message_b,
                                     const SkeletonSet& skeletons = SkeletonSet::embedded());

PromptBundle build_error_classification_prompt(const MessageTemplate& message,
                                               AudienceSegment segment,
                                               std::string_view voucher_text,
                                               std::string_view product_text,
                                               const SkeletonSet& skeletons = SkeletonSet::embedded());

// --- response parsing -----------------------------------------------------

struct DiagnosisReport {
  AudienceSegment segment = AudienceSegment::PotentialNewCustomers;
  std::string success_patterns;
  std::string failure_reasons;
};

struct ScorePair {
  int audience_score_a = 0;
  int market_score_a = 0;
  int audience_score_b = 0;
  int market_score_b = 0;
  std::string audience_reason_a;
  std::string market_reason_a;
  std::string audience_reason_b;
  std::string market_reason_b;

  bool operator==(const ScorePair&) const = default;
};

enum class Preferred { A, B };

struct PreferenceDecision {
  Preferred preferred = Preferred::A;
  std::string reason;
};

/// Extracts the eight labeled score/reason fields. Labels are matched at line
/// starts, case-insensitively, with surrounding prose tolerated. Throws
/// ParseError on a missing field and ScaleError on a score outside {1,3,5}.
ScorePair parse_score_response(std::string_view raw);

/// Extracts "Preferred Message: A|B" plus the trailing reason text.
PreferenceDecision parse_preference_response(std::string_view raw);

/// Splits on Title:/Body:-style markers when present, otherwise treats the
/// first line as the title. A single-line response reuses the title as the
/// body. Throws EmptyRewriteError on blank responses.
MessageTemplate parse_rewrite_response(std::string_view raw);

/// Splits a diagnosis into success patterns and failure reasons via their
/// labels; an unlabeled response is used whole for both slots.
DiagnosisReport parse_diagnosis_response(std::string_view raw, AudienceSegment segment);

}  // namespace crmagent::prompts
