#include "crmagent/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "crmagent/errors.hpp"
#include "crmagent/util.hpp"

namespace crmagent::metrics {

namespace {

struct OrderStats {
  long long match = 0;
  long long ref_total = 0;
  long long hyp_total = 0;
};

template <typename Gram>
OrderStats clipped_counts(const std::map<Gram, long long>& ref, const std::map<Gram, long long>& hyp) {
  OrderStats stats;
  for (const auto& [gram, count] : ref) stats.ref_total += count;
  for (const auto& [gram, count] : hyp) {
    stats.hyp_total += count;
    auto it = ref.find(gram);
    if (it != ref.end()) stats.match += std::min(count, it->second);
  }
  return stats;
}

std::map<std::u32string, long long> char_ngrams(const std::vector<uint32_t>& cps, int n) {
  std::map<std::u32string, long long> grams;
  if (static_cast<int>(cps.size()) >= n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= cps.size(); ++i) {
      std::u32string g;
      g.reserve(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) g.push_back(cps[i + static_cast<std::size_t>(j)]);
      ++grams[g];
    }
  }
  return grams;
}

std::map<std::string, long long> word_ngrams(const std::vector<std::string>& words, int n) {
  std::map<std::string, long long> grams;
  if (static_cast<int>(words.size()) >= n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
      std::string g;
      for (int j = 0; j < n; ++j) {
        if (j) g.push_back('\x1f');
        g += words[i + static_cast<std::size_t>(j)];
      }
      ++grams[g];
    }
  }
  return grams;
}

}  // namespace

double chrf_score(std::string_view reference, std::string_view hypothesis,
                  const ChrfParams& params) {
  if (params.char_order < 1 || params.word_order < 0 || !(params.beta > 0))
    throw PreconditionError("invalid chrf parameters");

  std::string ref = util::normalize_whitespace(reference);
  std::string hyp = util::normalize_whitespace(hypothesis);
  if (ref.empty() && hyp.empty()) return 100.0;
  if (ref.empty() || hyp.empty()) return 0.0;

  std::vector<OrderStats> orders;
  auto ref_cps = util::utf8_codepoints(ref);
  auto hyp_cps = util::utf8_codepoints(hyp);
  for (int n = 1; n <= params.char_order; ++n)
    orders.push_back(clipped_counts(char_ngrams(ref_cps, n), char_ngrams(hyp_cps, n)));

  if (params.word_order > 0) {
    auto ref_words = util::split_whitespace(ref);
    auto hyp_words = util::split_whitespace(hyp);
    for (int n = 1; n <= params.word_order; ++n)
      orders.push_back(clipped_counts(word_ngrams(ref_words, n), word_ngrams(hyp_words, n)));
  }

  double precision_sum = 0.0, recall_sum = 0.0;
  int effective = 0;
  for (const auto& o : orders) {
    if (o.ref_total == 0 || o.hyp_total == 0) continue;
    precision_sum += static_cast<double>(o.match) / static_cast<double>(o.hyp_total);
    recall_sum += static_cast<double>(o.match) / static_cast<double>(o.ref_total);
    ++effective;
  }
  if (effective == 0) return 0.0;
  double precision = precision_sum / effective;
  double recall = recall_sum / effective;
  if (precision + recall == 0.0) return 0.0;
  double beta_sq = params.beta * params.beta;
  double f = (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall);
  return f * 100.0;
}

double bertscore_f1(std::span<const std::string> reference_tokens,
                    std::span<const std::string> hypothesis_tokens,
                    const TokenEmbedder& embedder) {
  if (reference_tokens.empty() || hypothesis_tokens.empty())
    throw MetricUndefined("bertscore needs nonempty token lists");

  std::vector<std::vector<float>> ref_vecs, hyp_vecs;
  ref_vecs.reserve(reference_tokens.size());
  hyp_vecs.reserve(hypothesis_tokens.size());
  for (const auto& t : reference_tokens) ref_vecs.push_back(embedder(t));
  for (const auto& t : hypothesis_tokens) hyp_vecs.push_back(embedder(t));

  auto cosine = [](const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += static_cast<double>(a[i]) * b[i];
      na += static_cast<double>(a[i]) * a[i];
      nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  double recall_sum = 0.0;
  for (const auto& r : ref_vecs) {
    double best = -1.0;
    for (const auto& h : hyp_vecs) best = std::max(best, cosine(r, h));
    recall_sum += best;
  }
  double precision_sum = 0.0;
  for (const auto& h : hyp_vecs) {
    double best = -1.0;
    for (const auto& r : ref_vecs) best = std::max(best, cosine(h, r));
    precision_sum += best;
  }
  double recall = recall_sum / static_cast<double>(ref_vecs.size());
  double precision = precision_sum / static_cast<double>(hyp_vecs.size());
  if (precision + recall <= 0.0) return 0.0;
  double f1 = 2.0 * precision * recall / (precision + recall);
  return std::clamp(f1, -1.0, 1.0);
}

double delta_pct(double ori_mean, double gen_mean) {
  if (ori_mean == 0.0) throw MetricUndefined("delta_pct undefined for ori_mean 0");
  return 100.0 * (gen_mean - ori_mean) / ori_mean;
}

std::vector<SegmentReport> aggregate_segment_table(std::span<const EvalRow> rows) {
  struct Accum {
    int64_t count = 0;
    long long audience_a = 0, market_a = 0, audience_b = 0, market_b = 0;
    int64_t preferred_b = 0;
    double chrf = 0, bert = 0;
  };
  std::map<AudienceSegment, Accum> by_segment;
  for (const auto& row : rows) {
    Accum& a = by_segment[row.segment];
    ++a.count;
    a.audience_a += row.audience_score_a;
    a.market_a += row.market_score_a;
    a.audience_b += row.audience_score_b;
    a.market_b += row.market_score_b;
    if (row.preferred_b) ++a.preferred_b;
    a.chrf += row.chrf;
    a.bert += row.bertscore_f1;
  }

  std::vector<SegmentReport> reports;
  reports.reserve(by_segment.size());
  for (const auto& [segment, a] : by_segment) {
    SegmentReport r;
    r.segment = segment;
    r.count = a.count;
    double n = static_cast<double>(a.count);
    r.audience_ori = static_cast<double>(a.audience_a) / n;
    r.audience_gen = static_cast<double>(a.audience_b) / n;
    r.market_ori = static_cast<double>(a.market_a) / n;
    r.market_gen = static_cast<double>(a.market_b) / n;
    r.audience_delta_pct = delta_pct(r.audience_ori, r.audience_gen);
    r.market_delta_pct = delta_pct(r.market_ori, r.market_gen);
    double b_share = 100.0 * static_cast<double>(a.preferred_b) / n;
    if (b_share >= 50.0) {
      r.preferred_gen = true;
      r.preference_rate_pct = b_share;
    } else {
      r.preferred_gen = false;
      r.preference_rate_pct = 100.0 - b_share;
    }
    r.bertscore_f1_mean = a.bert / n;
    r.chrf_mean = a.chrf / n;
    reports.push_back(r);
  }
  std::sort(reports.begin(), reports.end(), [](const SegmentReport& a, const SegmentReport& b) {
    if (a.count != b.count) return a.count > b.count;
    return segment_name(a.segment) < segment_name(b.segment);
  });
  return reports;
}

SegmentReport overall_row(std::span<const SegmentReport> reports) {
  SegmentReport overall;
  if (reports.empty()) return overall;
  double total = 0;
  double audience_ori = 0, audience_gen = 0, market_ori = 0, market_gen = 0;
  double b_share_weighted = 0, bert = 0, chrf = 0;
  for (const auto& r : reports) {
    double w = static_cast<double>(r.count);
    total += w;
    audience_ori += w * r.audience_ori;
    audience_gen += w * r.audience_gen;
    market_ori += w * r.market_ori;
    market_gen += w * r.market_gen;
    double b_share = r.preferred_gen ? r.preference_rate_pct : 100.0 - r.preference_rate_pct;
    b_share_weighted += w * b_share;
    bert += w * r.bertscore_f1_mean;
    chrf += w * r.chrf_mean;
  }
  if (total == 0) return overall;
  overall.count = static_cast<int64_t>(total);
  overall.audience_ori = audience_ori / total;
  overall.audience_gen = audience_gen / total;
  overall.market_ori = market_ori / total;
  overall.market_gen = market_gen / total;
  overall.audience_delta_pct = delta_pct(overall.audience_ori, overall.audience_gen);
  overall.market_delta_pct = delta_pct(overall.market_ori, overall.market_gen);
  double b_share = b_share_weighted / total;
  if (b_share >= 50.0) {
    overall.preferred_gen = true;
    overall.preference_rate_pct = b_share;
  } else {
    overall.preferred_gen = false;
    overall.preference_rate_pct = 100.0 - b_share;
  }
  overall.bertscore_f1_mean = bert / total;
  overall.chrf_mean = chrf / total;
  return overall;
}

// --- error taxonomy ---------------------------------------------------------

namespace {

constexpr std::string_view kErrorNames[kErrorTypeCount] = {
    "Audience Assumption Error", "Weak Call-to-Action", "Vague Incentive", "Misaligned Tone",
    "Irrelevant Offer",
};

}  // namespace

std::string_view error_type_name(ErrorType t) {
  return kErrorNames[static_cast<std::size_t>(t)];
}

ErrorClassificationResult parse_error_classification(std::string_view raw) {
  std::string lower = util::to_lower(raw);
  std::size_t best_pos = std::string::npos;
  ErrorType best_type = ErrorType::WeakCallToAction;
  for (std::size_t i = 0; i < kErrorTypeCount; ++i) {
    std::string needle = util::to_lower(kErrorNames[i]);
    std::size_t pos = lower.find(needle);
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best_type = static_cast<ErrorType>(i);
    }
  }
  if (best_pos == std::string::npos) throw ParseError("error type label");

  ErrorClassificationResult result;
  result.type = best_type;
  std::size_t feedback_pos = lower.find("feedback");
  if (feedback_pos != std::string::npos) {
    std::size_t colon = raw.find(':', feedback_pos);
    if (colon != std::string::npos) result.feedback = util::trim(raw.substr(colon + 1));
  }
  return result;
}

ErrorClassificationResult classify_error_type(const MessageTemplate& message,
                                              AudienceSegment segment,
                                              std::string_view voucher_text,
                                              std::string_view product_text,
                                              providers::ModelProvider& provider,
                                              const providers::CallSettings& settings,
                                              std::string_view tag) {
  auto prompt = prompts::build_error_classification_prompt(message, segment, voucher_text,
                                                           product_text);
  std::string raw =
      provider.complete(providers::make_request(std::move(prompt), settings, std::string(tag)));
  return parse_error_classification(raw);
}

std::map<ErrorType, std::size_t> error_distribution(std::span<const ErrorType> classifications) {
  std::map<ErrorType, std::size_t> counts;
  for (std::size_t i = 0; i < kErrorTypeCount; ++i) counts[static_cast<ErrorType>(i)] = 0;
  for (ErrorType t : classifications) ++counts[t];
  return counts;
}

// --- report rendering ---------------------------------------------------

namespace {

using util::display_width;
using util::format_fixed;

struct Column {
  std::string leaf;
  std::string group;  // empty when the column stands alone
  bool right_align = false;
};

std::string pad(const std::string& s, std::size_t width, bool right) {
  std::size_t len = display_width(s);
  if (len >= width) return s;
  std::string fill(width - len, ' ');
  return right ? fill + s : s + fill;
}

std::string render_table(const std::vector<Column>& columns,
                         const std::vector<std::vector<std::string>>& rows,
                         std::size_t overall_sep_before_row = std::string::npos) {
  std::vector<std::size_t> widths(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    widths[c] = display_width(columns[c].leaf);
    for (const auto& row : rows) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  // widen group spans when the group title is longer than its columns
  for (std::size_t c = 0; c < columns.size();) {
    if (columns[c].group.empty()) {
      ++c;
      continue;
    }
    std::size_t end = c;
    while (end < columns.size() && columns[end].group == columns[c].group) ++end;
    std::size_t span = 0;
    for (std::size_t i = c; i < end; ++i) span += widths[i];
    span += 2 * (end - c - 1);
    std::size_t need = display_width(columns[c].group);
    if (need > span) widths[end - 1] += need - span;
    c = end;
  }

  std::string out;
  // group header line
  bool any_group = false;
  for (const auto& col : columns) any_group |= !col.group.empty();
  if (any_group) {
    std::string line;
    for (std::size_t c = 0; c < columns.size();) {
      if (c) line += "  ";
      if (columns[c].group.empty()) {
        line += pad("", widths[c], false);
        ++c;
      } else {
        std::size_t end = c;
        std::size_t span = 0;
        while (end < columns.size() && columns[end].group == columns[c].group) {
          span += widths[end];
          ++end;
        }
        span += 2 * (end - c - 1);
        line += pad(columns[c].group, span, false);
        c = end;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  // leaf header line
  {
    std::string line;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) line += "  ";
      line += pad(columns[c].leaf, widths[c], columns[c].right_align);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  std::size_t total_width = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) total_width += widths[c] + (c ? 2 : 0);
  out += std::string(total_width, '-');
  out += '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == overall_sep_before_row) {
      out += std::string(total_width, '-');
      out += '\n';
    }
    std::string line;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) line += "  ";
      line += pad(rows[r][c], widths[c], columns[c].right_align);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  return out;
}

std::vector<std::string> segment_row_cells(const SegmentReport& r, const std::string& name) {
  return {name,
          std::to_string(r.count),
          format_fixed(r.audience_ori, 2),
          format_fixed(r.audience_gen, 2),
          format_fixed(r.audience_delta_pct, 2),
          format_fixed(r.market_ori, 2),
          format_fixed(r.market_gen, 2),
          format_fixed(r.market_delta_pct, 2),
          r.preferred_gen ? "Gen" : "Ori",
          format_fixed(r.preference_rate_pct, 2)};
}

const std::vector<Column>& segment_columns() {
  static const std::vector<Column> columns = {
      {"Audience Segment", "", false},
      {"Count", "", true},
      {"Ori", "Audience Score", true},
      {"Gen", "Audience Score", true},
      {"Δ (%)", "Audience Score", true},
      {"Ori", "Market Score", true},
      {"Gen", "Market Score", true},
      {"Δ (%)", "Market Score", true},
      {"Preferred", "Preference", false},
      {"Rate (%)", "Preference", true},
  };
  return columns;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(cells[i]);
  }
  return out;
}

}  // namespace

std::string render_report_text(std::span<const SegmentReport> reports,
                               const SegmentReport& overall,
                               const std::map<ErrorType, std::size_t>& errors,
                               const ModelConfigEcho& models, std::string_view header_line) {
  std::string out(header_line);
  out += "\n\n";

  out += "Segment evaluation summary\n\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports)
      rows.push_back(segment_row_cells(r, std::string(segment_name(r.segment))));
    std::size_t sep = std::string::npos;
    if (overall.count > 0) {
      sep = rows.size();
      rows.push_back(segment_row_cells(overall, "Overall"));
    }
    out += render_table(segment_columns(), rows, sep);
  }

  out += "\nSimilarity between original and generated messages\n\n";
  {
    std::vector<Column> columns = {
        {"Audience Segment", "", false}, {"BERTScore-F1", "", true}, {"chrF", "", true}};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports)
      rows.push_back({std::string(segment_name(r.segment)), format_fixed(r.bertscore_f1_mean, 2),
                      format_fixed(r.chrf_mean, 2)});
    std::size_t sep = std::string::npos;
    if (overall.count > 0) {
      sep = rows.size();
      rows.push_back({"Overall", format_fixed(overall.bertscore_f1_mean, 2),
                      format_fixed(overall.chrf_mean, 2)});
    }
    out += render_table(columns, rows, sep);
  }

  out += "\nModel configuration\n\n";
  {
    std::vector<Column> columns = {
        {"Content", "", false},
        {"Template", "", false},
        {"Evaluate", "", false},
        {"Ori", "Audience Score", true},
        {"Gen", "Audience Score", true},
        {"Δ (%)", "Audience Score", true},
        {"Ori", "Market Score", true},
        {"Gen", "Market Score", true},
        {"Δ (%)", "Market Score", true},
        {"Preferred", "Preference", false},
        {"Rate (%)", "Preference", true},
    };
    std::vector<std::vector<std::string>> rows = {{
        models.content_model,
        models.template_model,
        models.evaluate_model,
        format_fixed(overall.audience_ori, 2),
        format_fixed(overall.audience_gen, 2),
        format_fixed(overall.audience_delta_pct, 2),
        format_fixed(overall.market_ori, 2),
        format_fixed(overall.market_gen, 2),
        format_fixed(overall.market_delta_pct, 2),
        overall.preferred_gen ? "Gen" : "Ori",
        format_fixed(overall.preference_rate_pct, 2),
    }};
    out += render_table(columns, rows);
  }

  out += "\nError distribution of original templates\n\n";
  {
    std::size_t total = 0;
    for (const auto& [type, count] : errors) total += count;
    std::vector<std::pair<ErrorType, std::size_t>> ordered(errors.begin(), errors.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return error_type_name(a.first) < error_type_name(b.first);
    });
    std::vector<Column> columns = {
        {"Error Type", "", false}, {"Count", "", true}, {"Share (%)", "", true}};
    std::vector<std::vector<std::string>> rows;
    for (const auto& [type, count] : ordered) {
      double share = total ? 100.0 * static_cast<double>(count) / static_cast<double>(total) : 0.0;
      rows.push_back({std::string(error_type_name(type)), std::to_string(count),
                      format_fixed(share, 2)});
    }
    out += render_table(columns, rows);
  }
  return out;
}

std::string render_segment_csv(std::span<const SegmentReport> reports,
                               const SegmentReport& overall, std::string_view header_line) {
  std::string out(header_line);
  out += '\n';
  out += csv_line({"Audience Segment", "Count", "Audience Score", "", "", "Market Score", "", "",
                   "Preference", ""});
  out += '\n';
  out += csv_line({"", "", "Ori", "Gen", "Δ (%)", "Ori", "Gen", "Δ (%)", "Preferred", "Rate (%)"});
  out += '\n';
  for (const auto& r : reports) {
    out += csv_line(segment_row_cells(r, std::string(segment_name(r.segment))));
    out += '\n';
  }
  if (overall.count > 0) {
    out += csv_line(segment_row_cells(overall, "Overall"));
    out += '\n';
  }
  return out;
}

std::string render_similarity_csv(std::span<const SegmentReport> reports,
                                  const SegmentReport& overall, std::string_view header_line) {
  std::string out(header_line);
  out += '\n';
  out += csv_line({"Audience Segment", "BERTScore-F1", "chrF"});
  out += '\n';
  for (const auto& r : reports) {
    out += csv_line({std::string(segment_name(r.segment)), format_fixed(r.bertscore_f1_mean, 2),
                     format_fixed(r.chrf_mean, 2)});
    out += '\n';
  }
  if (overall.count > 0) {
    out += csv_line({"Overall", format_fixed(overall.bertscore_f1_mean, 2),
                     format_fixed(overall.chrf_mean, 2)});
    out += '\n';
  }
  return out;
}

std::string render_error_csv(const std::map<ErrorType, std::size_t>& errors,
                             std::string_view header_line) {
  std::string out(header_line);
  out += '\n';
  out += csv_line({"Error Type", "Count", "Share (%)"});
  out += '\n';
  std::size_t total = 0;
  for (const auto& [type, count] : errors) total += count;
  std::vector<std::pair<ErrorType, std::size_t>> ordered(errors.begin(), errors.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return error_type_name(a.first) < error_type_name(b.first);
  });
  for (const auto& [type, count] : ordered) {
    double share = total ? 100.0 * static_cast<double>(count) / static_cast<double>(total) : 0.0;
    out += csv_line(
        {std::string(error_type_name(type)), std::to_string(count), format_fixed(share, 2)});
    out += '\n';
  }
  return out;
}

}  // namespace crmagent::metrics
