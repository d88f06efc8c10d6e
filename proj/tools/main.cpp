#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "crmagent/cli.hpp"
#include "crmagent/errors.hpp"
#include "crmagent/version.hpp"

namespace {

using crmagent::config::PipelineConfig;

struct Overrides {
  std::string config_path;
  std::string artifact_dir;
  uint64_t seed = 0;
  int window_days = 0;
  double quartile_fraction = 0;
  int embed_dimension = 0;
  int top_k = 0;
  double min_similarity = 0;
  int n_plans = 0;
  int n_merchants = 0;
  double missing_metadata_fraction = 0;
  int chrf_char_order = 0;
  int chrf_word_order = 0;
  double chrf_beta = 0;
  std::string provider_kind;
  std::string model_id;
  std::string endpoint;
  std::string api_key_env;
  std::string fixtures;
  std::string prompts_dir;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags win over it");
  cmd->add_option("--artifact-dir", o.artifact_dir, "directory holding pipeline artifacts");
  cmd->add_option("--seed", o.seed, "random seed recorded in output headers");
}

void add_provider_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--provider-kind", o.provider_kind, "scripted or http");
  cmd->add_option("--model-id", o.model_id, "model identifier sent to the provider");
  cmd->add_option("--endpoint", o.endpoint, "http provider endpoint URL");
  cmd->add_option("--api-key-env", o.api_key_env,
                  "environment variable holding the provider API key");
  cmd->add_option("--fixtures", o.fixtures, "scripted provider fixture file");
  cmd->add_option("--prompts-dir", o.prompts_dir, "alternate prompt skeleton directory");
}

PipelineConfig assemble(const CLI::App* cmd, const Overrides& o) {
  PipelineConfig cfg;
  if (!o.config_path.empty()) cfg = crmagent::config::load_config_file(o.config_path);

  auto given = [&](const std::string& name) {
    auto* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--artifact-dir")) cfg.paths.artifact_dir = o.artifact_dir;
  if (given("--seed")) cfg.seed = o.seed;
  if (given("--window-days")) cfg.window_days = o.window_days;
  if (given("--quartile-fraction")) cfg.quartile_fraction = o.quartile_fraction;
  if (given("--embed-dim")) cfg.embed_dimension = o.embed_dimension;
  if (given("--top-k")) cfg.top_k = o.top_k;
  if (given("--min-similarity")) cfg.min_similarity = o.min_similarity;
  if (given("--n-plans")) cfg.synth.n_plans = o.n_plans;
  if (given("--n-merchants")) cfg.synth.n_merchants = o.n_merchants;
  if (given("--missing-metadata-fraction"))
    cfg.synth.missing_metadata_fraction = o.missing_metadata_fraction;
  if (given("--chrf-char-order")) cfg.chrf.char_order = o.chrf_char_order;
  if (given("--chrf-word-order")) cfg.chrf.word_order = o.chrf_word_order;
  if (given("--chrf-beta")) cfg.chrf.beta = o.chrf_beta;
  if (given("--provider-kind")) cfg.provider.kind = o.provider_kind;
  if (given("--model-id")) cfg.provider.model_id = o.model_id;
  if (given("--endpoint")) cfg.provider.endpoint = o.endpoint;
  if (given("--api-key-env")) cfg.provider.api_key_env = o.api_key_env;
  if (given("--fixtures")) cfg.provider.fixtures_path = o.fixtures;
  if (given("--prompts-dir")) cfg.prompts_dir = o.prompts_dir;
  crmagent::config::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crmagent: rewrite underperforming CRM message templates from engagement logs"};
  app.set_version_flag("--version", crmagent::kToolVersion);
  app.require_subcommand(1);

  Overrides o;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic events/plans corpus");
  add_common_options(synth, o);
  synth->add_option("--n-plans", o.n_plans, "number of plans to generate");
  synth->add_option("--n-merchants", o.n_merchants, "number of merchants to draw from");
  synth->add_option("--missing-metadata-fraction", o.missing_metadata_fraction,
                    "fraction of plans with no category and no voucher");

  CLI::App* ingest = app.add_subcommand("ingest", "parse logs and aggregate plan records");
  add_common_options(ingest, o);
  ingest->add_option("--window-days", o.window_days, "engagement window after send");

  CLI::App* tier = app.add_subcommand("tier", "assign per-segment strong/weak quartiles");
  add_common_options(tier, o);
  tier->add_option("--quartile-fraction", o.quartile_fraction, "quartile size in (0, 0.5]");

  CLI::App* rewrite = app.add_subcommand("rewrite", "route weak records and generate rewrites");
  add_common_options(rewrite, o);
  add_provider_options(rewrite, o);
  rewrite->add_option("--top-k", o.top_k, "exemplar count for retrieval and prompts");
  rewrite->add_option("--min-similarity", o.min_similarity, "retrieval validity threshold");
  rewrite->add_option("--embed-dim", o.embed_dimension, "embedding dimension");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score rewrites and compute metrics");
  add_common_options(evaluate, o);
  add_provider_options(evaluate, o);
  evaluate->add_option("--embed-dim", o.embed_dimension, "embedding dimension");
  evaluate->add_option("--chrf-char-order", o.chrf_char_order, "chrF character n-gram order");
  evaluate->add_option("--chrf-word-order", o.chrf_word_order, "chrF word n-gram order");
  evaluate->add_option("--chrf-beta", o.chrf_beta, "chrF beta");

  CLI::App* report = app.add_subcommand("report", "emit segment tables and error distribution");
  add_common_options(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : crmagent::cli::kExitUsage;
  }

  try {
    if (synth->parsed()) return crmagent::cli::cmd_synth(assemble(synth, o));
    if (ingest->parsed()) return crmagent::cli::cmd_ingest(assemble(ingest, o));
    if (tier->parsed()) return crmagent::cli::cmd_tier(assemble(tier, o));
    if (rewrite->parsed()) return crmagent::cli::cmd_rewrite(assemble(rewrite, o));
    if (evaluate->parsed()) return crmagent::cli::cmd_evaluate(assemble(evaluate, o));
    if (report->parsed()) return crmagent::cli::cmd_report(assemble(report, o));
  } catch (const crmagent::ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return crmagent::cli::kExitProvider;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return crmagent::cli::kExitUsage;
  }
  return crmagent::cli::kExitUsage;
}
