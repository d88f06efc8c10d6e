#include "crmagent/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "crmagent/cli.hpp"
#include "crmagent/engagement.hpp"
#include "crmagent/errors.hpp"
#include "crmagent/ingest.hpp"
#include "crmagent/orchestrator.hpp"
#include "crmagent/util.hpp"
#include "crmagent/version.hpp"

namespace crmagent::cli {

namespace fs = std::filesystem;
using config::PipelineConfig;

namespace {

ingest::FileHeader make_header(const PipelineConfig& cfg) {
  return ingest::FileHeader{kToolVersion, config::config_digest(cfg), cfg.seed};
}

/// Advisory lock: concurrent runs on one artifact directory are unsupported.
class ArtifactLock {
 public:
  explicit ArtifactLock(const fs::path& dir) : path_(dir / ".crmagent.lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f)
      throw IoError("artifact directory is locked: " + path_.string() +
                    " exists (remove it if no other run is active)");
    std::fprintf(f, "crmagent %s\n", kToolVersion);
    std::fclose(f);
    held_ = true;
  }
  ~ArtifactLock() {
    if (held_) {
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  ArtifactLock(const ArtifactLock&) = delete;
  ArtifactLock& operator=(const ArtifactLock&) = delete;

 private:
  fs::path path_;
  bool held_ = false;
};

struct SkeletonHolder {
  prompts::SkeletonSet owned;
  const prompts::SkeletonSet* ptr = &prompts::SkeletonSet::embedded();
};

SkeletonHolder load_skeletons(const PipelineConfig& cfg) {
  SkeletonHolder holder;
  if (!cfg.prompts_dir.empty()) {
    holder.owned = prompts::SkeletonSet::load_dir(cfg.prompts_dir);
    holder.ptr = &holder.owned;
  }
  return holder;
}

orchestrator::StageSettings stage_settings(const PipelineConfig& cfg,
                                           const prompts::SkeletonSet* skeletons) {
  orchestrator::StageSettings s;
  s.content = {config::content_model(cfg), cfg.provider.temperature, cfg.provider.max_retries};
  s.template_ = {config::template_model(cfg), cfg.provider.temperature,
                 cfg.provider.max_retries};
  s.evaluate = {config::evaluate_model(cfg), cfg.provider.temperature,
                cfg.provider.max_retries};
  s.skeletons = skeletons;
  return s;
}

int missing_input(const fs::path& path, const char* hint) {
  std::cerr << "error: " << path.string() << " not found (" << hint << ")\n";
  return kExitUsage;
}

std::string human_voucher_text(const std::string& fingerprint) {
  if (fingerprint == "none") return "none";
  std::string out = fingerprint;
  std::size_t pos = 0;
  while ((pos = out.find(" | ", pos)) != std::string::npos) out.replace(pos, 3, ", ");
  return out;
}

std::string human_product_text(const std::vector<std::string>& category_path) {
  if (category_path.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < category_path.size(); ++i) {
    if (i) out += " > ";
    out += category_path[i];
  }
  return out;
}

}  // namespace

int cmd_synth(const PipelineConfig& cfg) {
  ArtifactLock lock(cfg.paths.artifact_dir);
  ingest::SynthParams params;
  params.seed = cfg.seed;
  params.n_merchants = cfg.synth.n_merchants;
  params.n_plans = cfg.synth.n_plans;
  params.segment_mix = cfg.synth.segment_mix;
  params.missing_metadata_fraction = cfg.synth.missing_metadata_fraction;
  auto corpus = ingest::gen_synthetic_corpus(params);

  const auto header = make_header(cfg);
  util::write_text_file(config::events_path(cfg), ingest::serialize_events(corpus.events, header));
  util::write_text_file(config::plans_path(cfg), ingest::serialize_plans(corpus.plans, header));
  std::cout << "synth: " << corpus.plans.size() << " plans, " << corpus.events.size()
            << " events -> " << config::events_path(cfg).string() << ", "
            << config::plans_path(cfg).string() << "\n";
  return kExitOk;
}

int cmd_ingest(const PipelineConfig& cfg) {
  const fs::path events_file = config::events_path(cfg);
  const fs::path plans_file = config::plans_path(cfg);
  if (!fs::exists(events_file)) return missing_input(events_file, "no such input");
  if (!fs::exists(plans_file)) return missing_input(plans_file, "no such input");

  ArtifactLock lock(cfg.paths.artifact_dir);
  auto parsed = ingest::parse_log_files(events_file, plans_file);
  auto aggregation = ingest::aggregate_plans(parsed.events, parsed.plans, cfg.window_days);

  const auto header = make_header(cfg);
  util::write_text_file(config::aggregated_path(cfg),
                        ingest::serialize_aggregated(aggregation.records, header));
  util::write_text_file(config::rejects_path(cfg),
                        ingest::serialize_rejects(parsed.rejects, header));

  std::cout << "ingest: " << parsed.events.size() << " events, " << parsed.plans.size()
            << " plans; " << parsed.rejects.size() << " lines rejected; "
            << aggregation.dangling_events << " dangling events; " << aggregation.records.size()
            << " aggregated records -> " << config::aggregated_path(cfg).string() << "\n";
  return kExitOk;
}

int cmd_tier(const PipelineConfig& cfg) {
  const fs::path aggregated_file = config::aggregated_path(cfg);
  if (!fs::exists(aggregated_file)) return missing_input(aggregated_file, "run ingest first");

  ArtifactLock lock(cfg.paths.artifact_dir);
  auto records = ingest::read_aggregated_file(aggregated_file);
  auto assignments = engagement::assign_tiers(records, cfg.quartile_fraction);
  engagement::apply_tiers(records, assignments);
  util::write_text_file(aggregated_file, ingest::serialize_aggregated(records, make_header(cfg)));

  std::size_t tiered_segments = 0;
  for (const auto& ta : assignments) {
    std::size_t n = 0;
    for (const auto& r : records)
      if (r.key.audience_segment == ta.segment) ++n;
    std::cout << "tier: " << segment_name(ta.segment) << ": " << ta.strong_ids.size()
              << " strong / " << ta.weak_ids.size() << " weak (" << n << " records)\n";
    if (!ta.strong_ids.empty()) ++tiered_segments;
  }
  if (records.empty()) {
    std::cout << "tier: 0 records, nothing to do\n";
  } else if (tiered_segments == 0) {
    std::cout << "tier: warning: every segment has fewer than 4 records, no tiers assigned\n";
  }
  return kExitOk;
}

int cmd_rewrite(const PipelineConfig& cfg) {
  const fs::path aggregated_file = config::aggregated_path(cfg);
  if (!fs::exists(aggregated_file)) return missing_input(aggregated_file, "run ingest first");

  ArtifactLock lock(cfg.paths.artifact_dir);
  auto records = ingest::read_aggregated_file(aggregated_file);
  if (!records.empty()) {
    bool any_tiered = false;
    for (const auto& r : records) any_tiered |= r.tier != Tier::Unassigned;
    if (!any_tiered) {
      std::cerr << "error: aggregated records are untiered (run tier first)\n";
      return kExitUsage;
    }
  }

  auto view = orchestrator::CorpusView::build(records);
  retrieval::HashEmbedder embedder(cfg.embed_dimension);
  std::optional<retrieval::VectorIndex> index;
  auto docs = orchestrator::strong_docs(view);
  if (!docs.empty()) {
    auto cache = retrieval::EmbedCache::load(config::embed_cache_path(cfg), cfg.embed_dimension);
    retrieval::EmbedCache fresh;
    fresh.dimension = cfg.embed_dimension;
    retrieval::EmbedCache& active = cache ? *cache : fresh;
    index = retrieval::VectorIndex::build(docs, embedder, &active);
    active.save(config::embed_cache_path(cfg));
    index->save(config::index_path(cfg));
  }

  auto provider = config::make_provider(cfg);
  auto skeletons = load_skeletons(cfg);
  auto stages = stage_settings(cfg, skeletons.ptr);

  std::vector<const AggregatedPlanRecord*> weak;
  for (const auto& r : records)
    if (r.tier == Tier::Weak) weak.push_back(&r);
  std::sort(weak.begin(), weak.end(),
            [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
              return a->key < b->key;
            });

  std::vector<orchestrator::ResultRow> rows;
  std::map<std::string, std::size_t> path_counts;
  std::size_t failures = 0, transport_failures = 0, outcomes = 0;
  for (const auto* target : weak) {
    orchestrator::RoutingDecision decision;
    bool routed = false;
    try {
      decision = orchestrator::route_plan(*target, view, index ? &*index : nullptr, embedder,
                                          cfg.top_k, cfg.min_similarity);
      routed = true;
      auto outcome = orchestrator::run_rewrite(decision, *target, view, *provider, stages);
      ++path_counts[std::string(orchestrator::path_kind_name(decision.path))];
      ++outcomes;
      rows.push_back(orchestrator::row_from_outcome(outcome));
    } catch (const RewriteFailed& e) {
      ++failures;
      if (e.transport()) ++transport_failures;
      rows.push_back(orchestrator::row_from_failure(
          *target, {target->key, "rewrite", e.cause(), e.transport()},
          routed ? &decision : nullptr));
    } catch (const std::exception& e) {
      ++failures;
      rows.push_back(orchestrator::row_from_failure(*target, {target->key, "rewrite", e.what()},
                                                    routed ? &decision : nullptr));
    }
  }

  util::write_text_file(config::results_path(cfg),
                        orchestrator::serialize_results(rows, make_header(cfg)));
  std::cout << "rewrite: " << outcomes << " rewritten (";
  bool first = true;
  for (const auto& [path, count] : path_counts) {
    if (!first) std::cout << ", ";
    std::cout << path << "=" << count;
    first = false;
  }
  std::cout << "), " << failures << " failed -> " << config::results_path(cfg).string() << "\n";

  if (!weak.empty() && outcomes == 0 && failures > 0 && transport_failures == failures) {
    std::cerr << "error: provider failed for every record after exhausting retries\n";
    return kExitProvider;
  }
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& cfg) {
  const fs::path results_file = config::results_path(cfg);
  if (!fs::exists(results_file)) return missing_input(results_file, "run rewrite first");

  ArtifactLock lock(cfg.paths.artifact_dir);
  auto rows = orchestrator::read_results_file(results_file);
  auto provider = config::make_provider(cfg);
  auto skeletons = load_skeletons(cfg);
  auto stages = stage_settings(cfg, skeletons.ptr);
  retrieval::HashEmbedder embedder(cfg.embed_dimension);
  metrics::TokenEmbedder token_embedder = [&embedder](std::string_view token) {
    return embedder.embed(token);
  };

  std::size_t evaluated = 0, failures = 0, transport_failures = 0, skipped = 0;
  for (auto& row : rows) {
    if (row.failure_stage || !row.generated) {
      ++skipped;
      continue;
    }
    const std::string tag = row.key.key_string();
    try {
      orchestrator::RewriteOutcome outcome;
      outcome.target_key = row.key;
      outcome.original = row.original;
      outcome.generated = *row.generated;
      auto eval = orchestrator::run_evaluation(outcome, row.key.audience_segment, *provider,
                                               stages, cfg.chrf, token_embedder);
      row.audience_score_a = eval.scores.audience_score_a;
      row.market_score_a = eval.scores.market_score_a;
      row.audience_score_b = eval.scores.audience_score_b;
      row.market_score_b = eval.scores.market_score_b;
      row.preferred = eval.preference.preferred == prompts::Preferred::A ? 'A' : 'B';
      row.chrf = eval.chrf;
      row.bertscore_f1 = eval.bertscore_f1;

      auto classification = metrics::classify_error_type(
          row.original, row.key.audience_segment,
          human_voucher_text(row.key.voucher_fingerprint),
          human_product_text(row.key.category_path), *provider, stages.evaluate, tag);
      row.error_type = std::string(metrics::error_type_name(classification.type));
      row.error_feedback = classification.feedback;
      ++evaluated;
    } catch (const EvalFailed& e) {
      ++failures;
      if (e.transport()) ++transport_failures;
      row.failure_stage = "evaluate";
      row.failure_reason = e.cause();
    } catch (const ProviderError& e) {
      ++failures;
      ++transport_failures;
      row.failure_stage = "evaluate";
      row.failure_reason = e.what();
    } catch (const std::exception& e) {
      ++failures;
      row.failure_stage = "evaluate";
      row.failure_reason = e.what();
    }
  }

  util::write_text_file(results_file, orchestrator::serialize_results(rows, make_header(cfg)));
  std::cout << "evaluate: " << evaluated << " evaluated, " << failures << " failed, " << skipped
            << " skipped -> " << results_file.string() << "\n";

  if (evaluated == 0 && failures > 0 && transport_failures == failures) {
    std::cerr << "error: provider failed for every record after exhausting retries\n";
    return kExitProvider;
  }
  return kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
  const fs::path results_file = config::results_path(cfg);
  if (!fs::exists(results_file)) return missing_input(results_file, "run rewrite and evaluate first");

  ArtifactLock lock(cfg.paths.artifact_dir);
  auto rows = orchestrator::read_results_file(results_file);

  std::vector<metrics::EvalRow> eval_rows;
  std::vector<metrics::ErrorType> error_types;
  for (const auto& row : rows) {
    if (row.failure_stage) continue;
    if (row.audience_score_a && row.market_score_a && row.audience_score_b &&
        row.market_score_b && row.preferred && row.chrf && row.bertscore_f1) {
      metrics::EvalRow er;
      er.segment = row.key.audience_segment;
      er.audience_score_a = *row.audience_score_a;
      er.market_score_a = *row.market_score_a;
      er.audience_score_b = *row.audience_score_b;
      er.market_score_b = *row.market_score_b;
      er.preferred_b = *row.preferred == 'B';
      er.chrf = *row.chrf;
      er.bertscore_f1 = *row.bertscore_f1;
      eval_rows.push_back(er);
    }
    if (row.error_type) {
      for (std::size_t i = 0; i < metrics::kErrorTypeCount; ++i) {
        auto t = static_cast<metrics::ErrorType>(i);
        if (*row.error_type == metrics::error_type_name(t)) {
          error_types.push_back(t);
          break;
        }
      }
    }
  }

  auto reports = metrics::aggregate_segment_table(eval_rows);
  auto overall = metrics::overall_row(reports);
  auto errors = metrics::error_distribution(error_types);
  metrics::ModelConfigEcho models{config::content_model(cfg), config::template_model(cfg),
                                  config::evaluate_model(cfg)};
  const std::string header_line = make_header(cfg).line();

  util::write_text_file(config::report_txt_path(cfg),
                        metrics::render_report_text(reports, overall, errors, models, header_line));
  util::write_text_file(config::report_csv_path(cfg),
                        metrics::render_segment_csv(reports, overall, header_line));
  util::write_text_file(config::similarity_csv_path(cfg),
                        metrics::render_similarity_csv(reports, overall, header_line));
  util::write_text_file(config::errors_csv_path(cfg),
                        metrics::render_error_csv(errors, header_line));

  std::cout << "report: " << eval_rows.size() << " evaluated rows";
  if (overall.count > 0) {
    std::cout << "; overall audience " << util::format_fixed(overall.audience_ori, 2) << " -> "
              << util::format_fixed(overall.audience_gen, 2) << ", market "
              << util::format_fixed(overall.market_ori, 2) << " -> "
              << util::format_fixed(overall.market_gen, 2) << ", preferred "
              << (overall.preferred_gen ? "Gen" : "Ori") << " at "
              << util::format_fixed(overall.preference_rate_pct, 2) << "%";
  }
  std::cout << " -> " << config::report_txt_path(cfg).string() << "\n";
  return kExitOk;
}

}  // namespace crmagent::cli
