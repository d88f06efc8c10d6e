#include "crmagent/orchestrator.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "crmagent/errors.hpp"
#include "crmagent/util.hpp"

namespace crmagent::orchestrator {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view path_kind_name(PathKind p) {
  switch (p) {
    case PathKind::InGroup: return "in_group";
    case PathKind::CrossMerchant: return "cross_merchant";
    case PathKind::RuleBased: return "rule_based";
  }
  return "unknown";
}

CorpusView CorpusView::build(std::span<const AggregatedPlanRecord> records) {
  CorpusView view;
  view.records = records;
  for (const auto& r : records) {
    view.by_key_string.emplace(r.key.key_string(), &r);
    if (r.tier == Tier::Strong) {
      view.strong_by_group[{r.key.merchant_id, r.key.audience_segment}].push_back(&r);
      view.strong_records.push_back(&r);
    }
  }
  for (auto& [group, strong] : view.strong_by_group) {
    std::sort(strong.begin(), strong.end(),
              [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
                if (a->avg_engagement != b->avg_engagement)
                  return a->avg_engagement > b->avg_engagement;
                return a->key < b->key;
              });
  }
  std::sort(view.strong_records.begin(), view.strong_records.end(),
            [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
              return a->key < b->key;
            });
  return view;
}

std::vector<retrieval::MetadataDoc> strong_docs(const CorpusView& view) {
  std::vector<retrieval::MetadataDoc> docs;
  docs.reserve(view.strong_records.size());
  for (const auto* r : view.strong_records) {
    retrieval::MetadataDoc doc;
    doc.record_key = r->key.key_string();
    doc.canonical_text =
        retrieval::canonical_metadata_text(r->key.category_path, r->key.voucher_fingerprint);
    doc.audience_segment = r->key.audience_segment;
    doc.merchant_id = r->key.merchant_id;
    docs.push_back(std::move(doc));
  }
  return docs;
}

RoutingDecision route_plan(const AggregatedPlanRecord& target, const CorpusView& view,
                           const retrieval::VectorIndex* index,
                           const retrieval::TextEmbedder& embedder, int k, double min_similarity) {
  if (target.tier != Tier::Weak)
    throw PreconditionError("route_plan target must be Weak tier");
  if (k < 1) throw PreconditionError("k must be >= 1");

  RoutingDecision decision;

  // path 1: strong exemplars within the same merchant and segment
  auto group = view.strong_by_group.find({target.key.merchant_id, target.key.audience_segment});
  if (group != view.strong_by_group.end() && !group->second.empty()) {
    decision.path = PathKind::InGroup;
    for (const auto* r : group->second) {
      decision.exemplar_keys.push_back(r->key.key_string());
      if (decision.exemplar_keys.size() == static_cast<std::size_t>(k)) break;
    }
    return decision;
  }

  // skip rule: nothing to embed when both product and voucher metadata are missing
  if (target.key.category_path.empty() && target.key.voucher_fingerprint == "none") {
    decision.path = PathKind::RuleBased;
    decision.skip_reason = "missing metadata";
    return decision;
  }

  // path 2: cross-merchant retrieval over the strong index
  if (index != nullptr) {
    auto query = embedder.embed(retrieval::canonical_metadata_text(
        target.key.category_path, target.key.voucher_fingerprint));
    auto candidates =
        retrieval::query_topk(*index, query, k,
                              {target.key.audience_segment, target.key.merchant_id});
    for (auto& c : candidates) {
      auto it = view.by_key_string.find(c.record_key);
      if (it != view.by_key_string.end()) c.template_ = it->second->template_;
    }
    candidates = retrieval::filter_valid(std::move(candidates), min_similarity);
    if (!candidates.empty()) {
      decision.path = PathKind::CrossMerchant;
      for (const auto& c : candidates) decision.exemplar_keys.push_back(c.record_key);
      return decision;
    }
  }

  decision.path = PathKind::RuleBased;
  decision.skip_reason = "no valid candidates";
  return decision;
}

namespace {

prompts::PromptExemplar exemplar_from_record(const AggregatedPlanRecord& r) {
  prompts::PromptExemplar e;
  e.template_ = r.template_;
  e.category_path = r.key.category_path;
  e.voucher_fingerprint = r.key.voucher_fingerprint;
  return e;
}

std::string call(providers::ModelProvider& provider, prompts::PromptBundle prompt,
                 const providers::CallSettings& settings, const std::string& tag,
                 std::vector<std::pair<std::string, std::string>>& trace) {
  std::string request_digest = util::digest16(prompt.rendered_text);
  std::string response =
      provider.complete(providers::make_request(std::move(prompt), settings, tag));
  trace.emplace_back(std::move(request_digest), util::digest16(response));
  return response;
}

}  // namespace

RewriteOutcome run_rewrite(const RoutingDecision& decision, const AggregatedPlanRecord& target,
                           const CorpusView& view, providers::ModelProvider& provider,
                           const StageSettings& settings) {
  const std::string tag = target.key.key_string();
  RewriteOutcome outcome;
  outcome.target_key = target.key;
  outcome.original = target.template_;
  outcome.routing = decision;

  try {
    if (decision.path == PathKind::RuleBased) {
      std::string response =
          call(provider, prompts::build_rule_prompt(target.template_, *settings.skeletons),
               settings.template_, tag, outcome.provider_trace);
      outcome.generated = prompts::parse_rewrite_response(response);
      return outcome;
    }

    std::vector<prompts::PromptExemplar> exemplars;
    std::vector<MessageTemplate> exemplar_templates;
    for (const auto& key : decision.exemplar_keys) {
      auto it = view.by_key_string.find(key);
      if (it == view.by_key_string.end())
        throw PreconditionError("exemplar key not present in corpus: " + key);
      exemplars.push_back(exemplar_from_record(*it->second));
      exemplar_templates.push_back(it->second->template_);
    }
    std::vector<prompts::PromptExemplar> weak = {exemplar_from_record(target)};

    std::string diagnosis_raw =
        call(provider,
             prompts::build_content_prompt(target.key.audience_segment, exemplars, weak,
                                           *settings.skeletons),
             settings.content, tag, outcome.provider_trace);
    auto diagnosis =
        prompts::parse_diagnosis_response(diagnosis_raw, target.key.audience_segment);

    std::string rewrite_raw =
        call(provider,
             prompts::build_rewrite_prompt(target.template_, diagnosis.failure_reasons,
                                           exemplar_templates, diagnosis.success_patterns,
                                           *settings.skeletons),
             settings.template_, tag, outcome.provider_trace);
    outcome.generated = prompts::parse_rewrite_response(rewrite_raw);
    outcome.diagnosis = std::move(diagnosis);
    return outcome;
  } catch (const ProviderError& e) {
    throw RewriteFailed(tag, e.what(), /*transport=*/true);
  } catch (const RewriteFailed&) {
    throw;
  } catch (const std::exception& e) {
    throw RewriteFailed(tag, e.what());
  }
}

EvalResult run_evaluation(const RewriteOutcome& outcome, AudienceSegment segment,
                          providers::ModelProvider& provider, const StageSettings& settings,
                          const metrics::ChrfParams& chrf_params,
                          const metrics::TokenEmbedder& token_embedder) {
  const std::string tag = outcome.target_key.key_string();
  if (util::trim(prompts::render_message(outcome.generated)).empty())
    throw EvalFailed(tag, "outcome has an empty generated message");

  try {
    std::vector<std::pair<std::string, std::string>> trace;
    // slot A holds the original, slot B the rewrite; the judge sees neither label
    std::string scoring_raw =
        call(provider,
             prompts::build_scoring_prompt(segment, outcome.original, outcome.generated,
                                           *settings.skeletons),
             settings.evaluate, tag, trace);
    auto scores = prompts::parse_score_response(scoring_raw);

    std::string comparison_raw =
        call(provider,
             prompts::build_comparison_prompt(segment, outcome.original, outcome.generated,
                                              *settings.skeletons),
             settings.evaluate, tag, trace);
    auto preference = prompts::parse_preference_response(comparison_raw);

    std::string original_text = prompts::render_message(outcome.original);
    std::string generated_text = prompts::render_message(outcome.generated);

    EvalResult result;
    result.target_key = outcome.target_key;
    result.scores = std::move(scores);
    result.preference = std::move(preference);
    result.chrf = metrics::chrf_score(original_text, generated_text, chrf_params);
    auto ref_tokens = util::split_whitespace(original_text);
    auto hyp_tokens = util::split_whitespace(generated_text);
    result.bertscore_f1 = metrics::bertscore_f1(ref_tokens, hyp_tokens, token_embedder);
    return result;
  } catch (const ProviderError& e) {
    throw EvalFailed(tag, e.what(), /*transport=*/true);
  } catch (const EvalFailed&) {
    throw;
  } catch (const std::exception& e) {
    throw EvalFailed(tag, e.what());
  }
}

BatchResult run_batch(std::span<const AggregatedPlanRecord> corpus, const BatchOptions& options,
                      providers::ModelProvider& provider) {
  CorpusView view = CorpusView::build(corpus);
  retrieval::HashEmbedder embedder(options.embed_dimension);

  std::optional<retrieval::VectorIndex> index;
  auto docs = strong_docs(view);
  if (!docs.empty()) index = retrieval::VectorIndex::build(docs, embedder);

  std::vector<const AggregatedPlanRecord*> weak;
  for (const auto& r : corpus)
    if (r.tier == Tier::Weak) weak.push_back(&r);
  std::sort(weak.begin(), weak.end(),
            [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
              return a->key < b->key;
            });

  metrics::TokenEmbedder token_embedder = [&embedder](std::string_view token) {
    return embedder.embed(token);
  };

  BatchResult result;
  for (const auto* target : weak) {
    RoutingDecision decision;
    try {
      decision = route_plan(*target, view, index ? &*index : nullptr, embedder, options.top_k,
                            options.min_similarity);
      RewriteOutcome outcome =
          run_rewrite(decision, *target, view, provider, options.stages);
      try {
        EvalResult eval =
            run_evaluation(outcome, target->key.audience_segment, provider, options.stages,
                           options.chrf, token_embedder);
        result.evals.push_back(std::move(eval));
      } catch (const EvalFailed& e) {
        result.failures.push_back({target->key, "evaluate", e.cause(), e.transport()});
      }
      result.outcomes.push_back(std::move(outcome));
    } catch (const RewriteFailed& e) {
      result.failures.push_back({target->key, "rewrite", e.cause(), e.transport()});
    } catch (const std::exception& e) {
      result.failures.push_back({target->key, "rewrite", e.what(), false});
    }
  }
  // inputs were processed in key order; keep the contract explicit
  auto by_key = [](const auto& a, const auto& b) { return a.target_key < b.target_key; };
  std::sort(result.outcomes.begin(), result.outcomes.end(), by_key);
  std::sort(result.evals.begin(), result.evals.end(), by_key);
  std::sort(result.failures.begin(), result.failures.end(), by_key);
  return result;
}

// --- results.jsonl ----------------------------------------------------------

namespace {

ordered_json row_to_json(const ResultRow& row) {
  ordered_json j;
  j["merchant_id"] = row.key.merchant_id;
  j["template_id"] = row.key.template_id;
  j["category_path"] = row.key.category_path;
  j["audience_segment"] = segment_name(row.key.audience_segment);
  j["voucher_fingerprint"] = row.key.voucher_fingerprint;
  j["path"] = row.path;
  j["exemplar_keys"] = row.exemplar_keys;
  if (row.skip_reason) j["skip_reason"] = *row.skip_reason;
  j["original_title"] = row.original.title;
  j["original_body"] = row.original.body;
  if (row.generated) {
    j["generated_title"] = row.generated->title;
    j["generated_body"] = row.generated->body;
  }
  if (row.audience_score_a) j["audience_score_a"] = *row.audience_score_a;
  if (row.market_score_a) j["market_score_a"] = *row.market_score_a;
  if (row.audience_score_b) j["audience_score_b"] = *row.audience_score_b;
  if (row.market_score_b) j["market_score_b"] = *row.market_score_b;
  if (row.preferred) j["preferred"] = std::string(1, *row.preferred);
  if (row.chrf) j["chrf"] = *row.chrf;
  if (row.bertscore_f1) j["bertscore_f1"] = *row.bertscore_f1;
  if (row.error_type) j["error_type"] = *row.error_type;
  if (row.error_feedback) j["error_feedback"] = *row.error_feedback;
  if (row.failure_stage) j["failure_stage"] = *row.failure_stage;
  if (row.failure_reason) j["failure_reason"] = *row.failure_reason;
  return j;
}

}  // namespace

std::string serialize_results(std::span<const ResultRow> rows, const ingest::FileHeader& header) {
  std::string out = header.line();
  out += '\n';
  for (const auto& row : rows) {
    out += row_to_json(row).dump();
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> read_results_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = util::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": invalid json");
    ResultRow row;
    row.key.merchant_id = j.at("merchant_id").get<std::string>();
    row.key.template_id = j.at("template_id").get<std::string>();
    for (const auto& item : j.at("category_path")) row.key.category_path.push_back(item);
    auto segment = segment_from(j.at("audience_segment").get<std::string>());
    if (!segment)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": unknown segment");
    row.key.audience_segment = *segment;
    row.key.voucher_fingerprint = j.at("voucher_fingerprint").get<std::string>();
    row.path = j.at("path").get<std::string>();
    for (const auto& item : j.at("exemplar_keys")) row.exemplar_keys.push_back(item);
    if (j.contains("skip_reason")) row.skip_reason = j["skip_reason"].get<std::string>();
    row.original.title = j.at("original_title").get<std::string>();
    row.original.body = j.at("original_body").get<std::string>();
    if (j.contains("generated_title")) {
      MessageTemplate generated;
      generated.title = j["generated_title"].get<std::string>();
      generated.body = j.value("generated_body", std::string());
      row.generated = std::move(generated);
    }
    if (j.contains("audience_score_a")) row.audience_score_a = j["audience_score_a"].get<int>();
    if (j.contains("market_score_a")) row.market_score_a = j["market_score_a"].get<int>();
    if (j.contains("audience_score_b")) row.audience_score_b = j["audience_score_b"].get<int>();
    if (j.contains("market_score_b")) row.market_score_b = j["market_score_b"].get<int>();
    if (j.contains("preferred")) {
      std::string p = j["preferred"].get<std::string>();
      if (p != "A" && p != "B")
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad preferred value");
      row.preferred = p[0];
    }
    if (j.contains("chrf")) row.chrf = j["chrf"].get<double>();
    if (j.contains("bertscore_f1")) row.bertscore_f1 = j["bertscore_f1"].get<double>();
    if (j.contains("error_type")) row.error_type = j["error_type"].get<std::string>();
    if (j.contains("error_feedback")) row.error_feedback = j["error_feedback"].get<std::string>();
    if (j.contains("failure_stage")) row.failure_stage = j["failure_stage"].get<std::string>();
    if (j.contains("failure_reason")) row.failure_reason = j["failure_reason"].get<std::string>();
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw IoError("read failure: " + path.string());
  return rows;
}

ResultRow row_from_outcome(const RewriteOutcome& outcome) {
  ResultRow row;
  row.key = outcome.target_key;
  row.path = std::string(path_kind_name(outcome.routing.path));
  row.exemplar_keys = outcome.routing.exemplar_keys;
  row.skip_reason = outcome.routing.skip_reason;
  row.original = outcome.original;
  row.generated = outcome.generated;
  return row;
}

ResultRow row_from_failure(const AggregatedPlanRecord& target, const FailureEntry& failure,
                           const RoutingDecision* decision) {
  ResultRow row;
  row.key = target.key;
  row.original = target.template_;
  if (decision) {
    row.path = std::string(path_kind_name(decision->path));
    row.exemplar_keys = decision->exemplar_keys;
    row.skip_reason = decision->skip_reason;
  }
  row.failure_stage = failure.stage;
  row.failure_reason = failure.reason;
  return row;
}

}  // namespace crmagent::orchestrator
