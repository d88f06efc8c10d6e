#include "crmagent/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "crmagent/errors.hpp"
#include "crmagent/prompts_embedded.hpp"
#include "crmagent/util.hpp"

namespace crmagent::prompts {

std::string_view prompt_kind_name(PromptKind k) {
  switch (k) {
    case PromptKind::ContentDiagnosis: return "content_diagnosis";
    case PromptKind::ExemplarRewrite: return "exemplar_rewrite";
    case PromptKind::RuleRewrite: return "rule_rewrite";
    case PromptKind::Scoring: return "scoring";
    case PromptKind::Comparison: return "comparison";
    case PromptKind::ErrorClassification: return "error_classification";
  }
  return "unknown";
}

const SkeletonSet& SkeletonSet::embedded() {
  static const SkeletonSet set{
      std::string(embedded_skeletons::content_diagnosis),
      std::string(embedded_skeletons::exemplar_rewrite),
      std::string(embedded_skeletons::rule_rewrite),
      std::string(embedded_skeletons::scoring),
      std::string(embedded_skeletons::comparison),
      std::string(embedded_skeletons::error_classification),
  };
  return set;
}

namespace {

std::string load_skeleton_file(const std::filesystem::path& path) {
  std::string text = crmagent::util::read_text_file(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

SkeletonSet SkeletonSet::load_dir(const std::filesystem::path& dir) {
  SkeletonSet set;
  set.content_diagnosis = load_skeleton_file(dir / "content_diagnosis.txt");
  set.exemplar_rewrite = load_skeleton_file(dir / "exemplar_rewrite.txt");
  set.rule_rewrite = load_skeleton_file(dir / "rule_rewrite.txt");
  set.scoring = load_skeleton_file(dir / "scoring.txt");
  set.comparison = load_skeleton_file(dir / "comparison.txt");
  set.error_classification = load_skeleton_file(dir / "error_classification.txt");
  return set;
}

std::string_view SkeletonSet::for_kind(PromptKind k) const {
  switch (k) {
    case PromptKind::ContentDiagnosis: return content_diagnosis;
    case PromptKind::ExemplarRewrite: return exemplar_rewrite;
    case PromptKind::RuleRewrite: return rule_rewrite;
    case PromptKind::Scoring: return scoring;
    case PromptKind::Comparison: return comparison;
    case PromptKind::ErrorClassification: return error_classification;
  }
  return {};
}

namespace {

std::string replace_all(std::string text, std::string_view needle, std::string_view value,
                        std::size_t& hits) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
    ++hits;
  }
  return text;
}

PromptBundle render(PromptKind kind, std::string_view skeleton,
                    std::map<std::string, std::string> slots) {
  std::string text(skeleton);
  for (const auto& [name, value] : slots) {
    std::string placeholder = "{" + name + "}";
    std::size_t hits = 0;
    text = replace_all(std::move(text), placeholder, value, hits);
    if (hits == 0)
      throw PreconditionError("skeleton for " + std::string(prompt_kind_name(kind)) +
                              " has no slot " + placeholder);
  }
  for (const auto& [name, value] : slots) {
    if (text.find("{" + name + "}") != std::string::npos)
      throw PreconditionError("residual placeholder {" + name + "} after rendering");
  }
  PromptBundle bundle;
  bundle.kind = kind;
  bundle.rendered_text = std::move(text);
  bundle.placeholders_filled = std::move(slots);
  return bundle;
}

std::string join_exemplar_lines(std::span<const PromptExemplar> exemplars) {
  std::string out;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (i) out += '\n';
    out += render_exemplar_line(exemplars[i]);
  }
  return out;
}

}  // namespace

std::string render_message(const MessageTemplate& t) {
  std::string title = util::trim(t.title);
  std::string body = util::trim(t.body);
  if (body.empty()) return title;
  if (title.empty()) return body;
  return title + "\n\n" + body;
}

std::string render_exemplar_line(const PromptExemplar& e) {
  std::string tmpl = util::flatten_inline(e.template_.title);
  std::string body = util::flatten_inline(e.template_.body);
  if (!body.empty()) {
    if (!tmpl.empty()) tmpl += ' ';
    tmpl += body;
  }
  std::string category;
  if (e.category_path.empty()) {
    category = "none";
  } else {
    for (std::size_t i = 0; i < e.category_path.size(); ++i) {
      if (i) category += " > ";
      category += util::flatten_inline(e.category_path[i]);
    }
  }
  std::string voucher = e.voucher_fingerprint.empty() ? "none" : e.voucher_fingerprint;
  if (voucher != "none") {
    // fingerprint fields read better comma-separated inside a pipe-delimited row
    std::size_t pos = 0;
    while ((pos = voucher.find(" | ", pos)) != std::string::npos) voucher.replace(pos, 3, ", ");
  }
  return tmpl + " | " + category + " | " + voucher;
}

PromptBundle build_content_prompt(AudienceSegment segment, std::span<const PromptExemplar> strong,
                                  std::span<const PromptExemplar> weak,
                                  const SkeletonSet& skeletons) {
  if (strong.empty() || weak.empty())
    throw PreconditionError("content prompt needs at least one strong and one weak template");
  return render(PromptKind::ContentDiagnosis, skeletons.content_diagnosis,
                {{"audience", std::string(segment_name(segment))},
                 {"high_performing", join_exemplar_lines(strong)},
                 {"low_performing", join_exemplar_lines(weak)}});
}

PromptBundle build_rewrite_prompt(const MessageTemplate& original, std::string_view weakness,
                                  std::span<const MessageTemplate> exemplars,
                                  std::string_view success_summary,
                                  const SkeletonSet& skeletons) {
  if (exemplars.empty()) throw PreconditionError("rewrite prompt needs at least one exemplar");
  if (util::trim(render_message(original)).empty())
    throw PreconditionError("rewrite prompt needs a nonempty original");
  if (util::trim(weakness).empty() || util::trim(success_summary).empty())
    throw PreconditionError("rewrite prompt needs nonempty analysis texts");
  std::string blocks;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (i) blocks += "\n\n";
    blocks += render_message(exemplars[i]);
  }
  return render(PromptKind::ExemplarRewrite, skeletons.exemplar_rewrite,
                {{"original", render_message(original)},
                 {"problem_analysis", std::string(weakness)},
                 {"exemplars", blocks},
                 {"success_summary", std::string(success_summary)}});
}

PromptBundle build_rule_prompt(const MessageTemplate& original, const SkeletonSet& skeletons) {
  if (util::trim(render_message(original)).empty())
    throw PreconditionError("rule prompt needs a nonempty original");
  return render(PromptKind::RuleRewrite, skeletons.rule_rewrite,
                {{"original", render_message(original)}});
}

PromptBundle build_scoring_prompt(AudienceSegment segment, const MessageTemplate& message_a,
                                  const MessageTemplate& message_b, const SkeletonSet& skeletons) {
  if (util::trim(render_message(message_a)).empty() ||
      util::trim(render_message(message_b)).empty())
    throw PreconditionError("scoring prompt needs two nonempty messages");
  return render(PromptKind::Scoring, skeletons.scoring,
                {{"audience_group", std::string(segment_name(segment))},
                 {"message_a", render_message(message_a)},
                 {"message_b", render_message(message_b)}});
}

PromptBundle build_comparison_prompt(AudienceSegment segment, const MessageTemplate& message_a,
                                     const MessageTemplate& message_b,
                                     const SkeletonSet& skeletons) {
  if (util::trim(render_message(message_a)).empty() ||
      util::trim(render_message(message_b)).empty())
    throw PreconditionError("comparison prompt needs two nonempty messages");
  return render(PromptKind::Comparison, skeletons.comparison,
                {{"audience_group", std::string(segment_name(segment))},
                 {"message_a", render_message(message_a)},
                 {"message_b", render_message(message_b)}});
}

PromptBundle build_error_classification_prompt(const MessageTemplate& message,
                                               AudienceSegment segment,
                                               std::string_view voucher_text,
                                               std::string_view product_text,
                                               const SkeletonSet& skeletons) {
  if (util::trim(render_message(message)).empty())
    throw PreconditionError("classification prompt needs a nonempty message");
  return render(PromptKind::ErrorClassification, skeletons.error_classification,
                {{"audience_segment", std::string(segment_name(segment))},
                 {"voucher", voucher_text.empty() ? "none" : std::string(voucher_text)},
                 {"product", product_text.empty() ? "none" : std::string(product_text)},
                 {"message", render_message(message)}});
}

// --- parsing ----------------------------------------------------------------

namespace {

// Position of a "Label:" occurrence that starts a line (leading blanks allowed).
struct LabelHit {
  std::size_t label_start = std::string::npos;
  std::size_t value_start = std::string::npos;
};

bool is_line_start(std::string_view text, std::size_t pos) {
  while (pos > 0) {
    char c = text[pos - 1];
    if (c == '\n') return true;
    if (c != ' ' && c != '\t') return false;
    --pos;
  }
  return true;  // beginning of text
}

LabelHit find_label(std::string_view lower_text, std::string_view lower_label) {
  std::size_t pos = 0;
  while ((pos = lower_text.find(lower_label, pos)) != std::string::npos) {
    std::size_t after = pos + lower_label.size();
    while (after < lower_text.size() &&
           (lower_text[after] == ' ' || lower_text[after] == '\t'))
      ++after;
    if (after < lower_text.size() && lower_text[after] == ':' && is_line_start(lower_text, pos)) {
      return {pos, after + 1};
    }
    pos += lower_label.size();
  }
  return {};
}

std::string value_until_next_label(std::string_view text, std::size_t value_start,
                                   std::span<const LabelHit> all_hits) {
  std::size_t end = text.size();
  for (const auto& hit : all_hits) {
    if (hit.label_start != std::string::npos && hit.label_start > value_start)
      end = std::min(end, hit.label_start);
  }
  return crmagent::util::trim(text.substr(value_start, end - value_start));
}

int parse_scale_value(std::string_view value_text, const std::string& field) {
  std::size_t i = 0;
  while (i < value_text.size() && std::isspace(static_cast<unsigned char>(value_text[i]))) ++i;
  std::size_t start = i;
  if (i < value_text.size() && (value_text[i] == '-' || value_text[i] == '+')) ++i;
  std::size_t digits = i;
  while (i < value_text.size() && std::isdigit(static_cast<unsigned char>(value_text[i]))) ++i;
  if (i == digits) throw ParseError(field);
  long long v = std::stoll(std::string(value_text.substr(start, i - start)));
  if (v != 1 && v != 3 && v != 5) throw ScaleError(v);
  return static_cast<int>(v);
}

}  // namespace

ScorePair parse_score_response(std::string_view raw) {
  static const char* kLabels[] = {
      "audience match score a", "audience match reason a",
      "marketing score a",      "marketing reason a",
      "audience match score b", "audience match reason b",
      "marketing score b",      "marketing reason b",
  };
  static const char* kFieldNames[] = {
      "Audience Match Score A", "Audience Match Reason A",
      "Marketing Score A",      "Marketing Reason A",
      "Audience Match Score B", "Audience Match Reason B",
      "Marketing Score B",      "Marketing Reason B",
  };

  std::string lower = util::to_lower(raw);
  LabelHit hits[8];
  for (int i = 0; i < 8; ++i) hits[i] = find_label(lower, kLabels[i]);
  for (int i = 0; i < 8; ++i)
    if (hits[i].label_start == std::string::npos) throw ParseError(kFieldNames[i]);

  auto value_of = [&](int i) {
    return value_until_next_label(raw, hits[i].value_start, hits);
  };

  ScorePair pair;
  pair.audience_score_a = parse_scale_value(value_of(0), kFieldNames[0]);
  pair.audience_reason_a = value_of(1);
  pair.market_score_a = parse_scale_value(value_of(2), kFieldNames[2]);
  pair.market_reason_a = value_of(3);
  pair.audience_score_b = parse_scale_value(value_of(4), kFieldNames[4]);
  pair.audience_reason_b = value_of(5);
  pair.market_score_b = parse_scale_value(value_of(6), kFieldNames[6]);
  pair.market_reason_b = value_of(7);

  for (const std::string* reason : {&pair.audience_reason_a, &pair.market_reason_a,
                                    &pair.audience_reason_b, &pair.market_reason_b}) {
    if (reason->empty()) throw ParseError("empty reason field");
  }
  return pair;
}

PreferenceDecision parse_preference_response(std::string_view raw) {
  std::string lower = util::to_lower(raw);
  LabelHit pref = find_label(lower, "preferred message");
  if (pref.label_start == std::string::npos) throw ParseError("Preferred Message");

  std::size_t i = pref.value_start;
  while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) ++i;
  if (i >= raw.size()) throw ParseError("Preferred Message");
  char token = static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
  std::size_t after = i + 1;
  bool clean_boundary =
      after >= raw.size() || std::isspace(static_cast<unsigned char>(raw[after])) ||
      raw[after] == '.' || raw[after] == ',' || raw[after] == ')' || raw[after] == ';';
  if ((token != 'a' && token != 'b') || !clean_boundary) throw ParseError("Preferred Message");

  PreferenceDecision decision;
  decision.preferred = token == 'a' ? Preferred::A : Preferred::B;

  LabelHit reason = find_label(lower, "reason");
  if (reason.label_start != std::string::npos && reason.value_start > pref.value_start) {
    decision.reason = util::trim(raw.substr(reason.value_start));
  } else {
    std::size_t line_end = raw.find('\n', i);
    decision.reason = line_end == std::string::npos ? "" : util::trim(raw.substr(line_end + 1));
  }
  return decision;
}

MessageTemplate parse_rewrite_response(std::string_view raw) {
  std::string trimmed = util::trim(raw);
  if (trimmed.empty()) throw EmptyRewriteError();
  std::string lower = util::to_lower(trimmed);

  LabelHit title_hit = find_label(lower, "generated title");
  LabelHit body_hit = find_label(lower, "generated body");
  if (title_hit.label_start == std::string::npos) {
    title_hit = find_label(lower, "title");
    body_hit = find_label(lower, "body");
  }

  MessageTemplate result;
  if (title_hit.label_start != std::string::npos) {
    std::size_t title_end =
        body_hit.label_start != std::string::npos && body_hit.label_start > title_hit.value_start
            ? body_hit.label_start
            : trimmed.size();
    result.title = util::trim(
        std::string_view(trimmed).substr(title_hit.value_start, title_end - title_hit.value_start));
    if (body_hit.label_start != std::string::npos)
      result.body = util::trim(std::string_view(trimmed).substr(body_hit.value_start));
  } else {
    std::size_t nl = trimmed.find('\n');
    if (nl == std::string::npos) {
      result.title = trimmed;
    } else {
      result.title = util::trim(std::string_view(trimmed).substr(0, nl));
      result.body = util::trim(std::string_view(trimmed).substr(nl + 1));
    }
  }

  if (result.title.empty() && result.body.empty()) throw EmptyRewriteError();
  if (result.title.empty()) result.title = result.body;
  if (result.body.empty()) result.body = result.title;  // single-line fallback
  return result;
}

DiagnosisReport parse_diagnosis_response(std::string_view raw, AudienceSegment segment) {
  std::string lower = util::to_lower(raw);
  LabelHit success = find_label(lower, "success patterns");
  LabelHit failure = find_label(lower, "failure reasons");
  LabelHit hits[2] = {success, failure};

  DiagnosisReport report;
  report.segment = segment;
  std::string whole = util::trim(raw);
  if (whole.empty()) throw ParseError("diagnosis");

  report.success_patterns = success.label_start != std::string::npos
                                ? value_until_next_label(raw, success.value_start, hits)
                                : whole;
  report.failure_reasons = failure.label_start != std::string::npos
                               ? value_until_next_label(raw, failure.value_start, hits)
                               : whole;
  if (report.success_patterns.empty()) report.success_patterns = whole;
  if (report.failure_reasons.empty()) report.failure_reasons = whole;
  return report;
}

}  // namespace crmagent::prompts
