#include "crmagent/config.hpp"

#include "json.hpp"

#include "crmagent/errors.hpp"
#include "crmagent/util.hpp"

namespace crmagent::config {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw PreconditionError("unknown config key: " + scope + key);
  }
}

void apply_provider(const json& j, ProviderConfig& p) {
  reject_unknown(j,
                 {"kind", "endpoint", "model_id", "content_model_id", "template_model_id",
                  "evaluate_model_id", "api_key_env", "temperature", "max_retries", "backoff_ms",
                  "fixtures_path"},
                 "provider.");
  if (j.contains("kind")) p.kind = j["kind"].get<std::string>();
  if (j.contains("endpoint")) p.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model_id")) p.model_id = j["model_id"].get<std::string>();
  if (j.contains("content_model_id")) p.content_model_id = j["content_model_id"].get<std::string>();
  if (j.contains("template_model_id"))
    p.template_model_id = j["template_model_id"].get<std::string>();
  if (j.contains("evaluate_model_id"))
    p.evaluate_model_id = j["evaluate_model_id"].get<std::string>();
  if (j.contains("api_key_env")) p.api_key_env = j["api_key_env"].get<std::string>();
  if (j.contains("temperature")) p.temperature = j["temperature"].get<double>();
  if (j.contains("max_retries")) p.max_retries = j["max_retries"].get<int>();
  if (j.contains("backoff_ms")) p.backoff_ms = j["backoff_ms"].get<int>();
  if (j.contains("fixtures_path")) p.fixtures_path = j["fixtures_path"].get<std::string>();
}

void apply_synth(const json& j, SynthConfig& s) {
  reject_unknown(j, {"n_merchants", "n_plans", "missing_metadata_fraction", "segment_mix"},
                 "synth.");
  if (j.contains("n_merchants")) s.n_merchants = j["n_merchants"].get<int>();
  if (j.contains("n_plans")) s.n_plans = j["n_plans"].get<int>();
  if (j.contains("missing_metadata_fraction"))
    s.missing_metadata_fraction = j["missing_metadata_fraction"].get<double>();
  if (j.contains("segment_mix")) {
    s.segment_mix.clear();
    for (const auto& [name, weight] : j["segment_mix"].items()) {
      auto segment = segment_from(name);
      if (!segment) throw PreconditionError("segment_mix names unknown segment: " + name);
      s.segment_mix[*segment] = weight.get<double>();
    }
  }
}

void apply_paths(const json& j, PathsConfig& p) {
  reject_unknown(j,
                 {"artifact_dir", "events", "plans", "aggregated", "rejects", "index",
                  "embed_cache", "results", "report_txt", "report_csv", "similarity_csv",
                  "errors_csv"},
                 "paths.");
  auto set = [&](const char* key, std::string& field) {
    if (j.contains(key)) field = j[key].get<std::string>();
  };
  set("artifact_dir", p.artifact_dir);
  set("events", p.events);
  set("plans", p.plans);
  set("aggregated", p.aggregated);
  set("rejects", p.rejects);
  set("index", p.index);
  set("embed_cache", p.embed_cache);
  set("results", p.results);
  set("report_txt", p.report_txt);
  set("report_csv", p.report_csv);
  set("similarity_csv", p.similarity_csv);
  set("errors_csv", p.errors_csv);
}

}  // namespace

PipelineConfig load_config_file(const std::filesystem::path& path) {
  PipelineConfig cfg;
  json j = json::parse(util::read_text_file(path));
  reject_unknown(j,
                 {"window_days", "quartile_fraction", "embed_dimension", "top_k",
                  "min_similarity", "seed", "chrf", "provider", "synth", "paths", "prompts_dir"},
                 "");
  if (j.contains("window_days")) cfg.window_days = j["window_days"].get<int>();
  if (j.contains("quartile_fraction")) cfg.quartile_fraction = j["quartile_fraction"].get<double>();
  if (j.contains("embed_dimension")) cfg.embed_dimension = j["embed_dimension"].get<int>();
  if (j.contains("top_k")) cfg.top_k = j["top_k"].get<int>();
  if (j.contains("min_similarity")) cfg.min_similarity = j["min_similarity"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("chrf")) {
    reject_unknown(j["chrf"], {"char_order", "word_order", "beta"}, "chrf.");
    if (j["chrf"].contains("char_order")) cfg.chrf.char_order = j["chrf"]["char_order"].get<int>();
    if (j["chrf"].contains("word_order")) cfg.chrf.word_order = j["chrf"]["word_order"].get<int>();
    if (j["chrf"].contains("beta")) cfg.chrf.beta = j["chrf"]["beta"].get<double>();
  }
  if (j.contains("provider")) apply_provider(j["provider"], cfg.provider);
  if (j.contains("synth")) apply_synth(j["synth"], cfg.synth);
  if (j.contains("paths")) apply_paths(j["paths"], cfg.paths);
  if (j.contains("prompts_dir")) cfg.prompts_dir = j["prompts_dir"].get<std::string>();
  validate(cfg);
  return cfg;
}

void validate(const PipelineConfig& cfg) {
  if (cfg.window_days < 1) throw PreconditionError("window_days must be >= 1");
  if (!(cfg.quartile_fraction > 0.0) || cfg.quartile_fraction > 0.5)
    throw PreconditionError("quartile_fraction must be in (0, 0.5]");
  if (cfg.embed_dimension < 8) throw PreconditionError("embed_dimension must be >= 8");
  if (cfg.top_k < 1) throw PreconditionError("top_k must be >= 1");
  if (cfg.min_similarity < -1.0 || cfg.min_similarity > 1.0)
    throw PreconditionError("min_similarity must be in [-1, 1]");
  if (cfg.chrf.char_order < 1) throw PreconditionError("chrf.char_order must be >= 1");
  if (cfg.chrf.word_order < 0) throw PreconditionError("chrf.word_order must be >= 0");
  if (!(cfg.chrf.beta > 0)) throw PreconditionError("chrf.beta must be > 0");
  if (cfg.provider.kind != "scripted" && cfg.provider.kind != "http")
    throw PreconditionError("provider.kind must be \"scripted\" or \"http\"");
  if (cfg.provider.kind == "http" && cfg.provider.endpoint.empty())
    throw PreconditionError("provider.kind http requires provider.endpoint");
  if (cfg.provider.max_retries < 0) throw PreconditionError("max_retries must be >= 0");
  if (cfg.provider.temperature < 0) throw PreconditionError("temperature must be >= 0");
  if (cfg.synth.n_plans < 1) throw PreconditionError("synth.n_plans must be >= 1");
  if (cfg.synth.n_merchants < 1) throw PreconditionError("synth.n_merchants must be >= 1");
  if (cfg.synth.missing_metadata_fraction < 0 || cfg.synth.missing_metadata_fraction > 1)
    throw PreconditionError("synth.missing_metadata_fraction must be in [0, 1]");
  if (!cfg.synth.segment_mix.empty()) {
    double total = 0;
    for (const auto& [segment, weight] : cfg.synth.segment_mix) {
      if (weight < 0) throw PreconditionError("segment_mix weights must be non-negative");
      total += weight;
    }
    if (total <= 0) throw PreconditionError("segment_mix needs a positive weight");
  }
}

std::string config_digest(const PipelineConfig& cfg) {
  json j;  // alphabetical key order makes the dump canonical
  j["window_days"] = cfg.window_days;
  j["quartile_fraction"] = cfg.quartile_fraction;
  j["embed_dimension"] = cfg.embed_dimension;
  j["top_k"] = cfg.top_k;
  j["min_similarity"] = cfg.min_similarity;
  j["seed"] = cfg.seed;
  j["chrf"] = {{"char_order", cfg.chrf.char_order},
               {"word_order", cfg.chrf.word_order},
               {"beta", cfg.chrf.beta}};
  j["provider"] = {{"kind", cfg.provider.kind},
                   {"endpoint", cfg.provider.endpoint},
                   {"model_id", cfg.provider.model_id},
                   {"content_model_id", cfg.provider.content_model_id},
                   {"template_model_id", cfg.provider.template_model_id},
                   {"evaluate_model_id", cfg.provider.evaluate_model_id},
                   {"api_key_env", cfg.provider.api_key_env},
                   {"temperature", cfg.provider.temperature},
                   {"max_retries", cfg.provider.max_retries},
                   {"backoff_ms", cfg.provider.backoff_ms},
                   {"fixtures_path", cfg.provider.fixtures_path}};
  json mix;
  for (const auto& [segment, weight] : cfg.synth.segment_mix)
    mix[std::string(segment_name(segment))] = weight;
  j["synth"] = {{"n_merchants", cfg.synth.n_merchants},
                {"n_plans", cfg.synth.n_plans},
                {"missing_metadata_fraction", cfg.synth.missing_metadata_fraction},
                {"segment_mix", mix}};
  j["paths"] = {{"artifact_dir", cfg.paths.artifact_dir}};
  j["prompts_dir"] = cfg.prompts_dir;
  return util::digest16(j.dump());
}

namespace {

std::filesystem::path resolve(const PipelineConfig& cfg, const std::string& override_path,
                              const char* default_name) {
  if (!override_path.empty()) return override_path;
  return std::filesystem::path(cfg.paths.artifact_dir) / default_name;
}

}  // namespace

std::filesystem::path events_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.events, "events.jsonl");
}
std::filesystem::path plans_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.plans, "plans.jsonl");
}
std::filesystem::path aggregated_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.aggregated, "aggregated.jsonl");
}
std::filesystem::path rejects_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.rejects, "rejects.jsonl");
}
std::filesystem::path index_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.index, "index.bin");
}
std::filesystem::path embed_cache_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.embed_cache, "embed_cache.bin");
}
std::filesystem::path results_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.results, "results.jsonl");
}
std::filesystem::path report_txt_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.report_txt, "report.txt");
}
std::filesystem::path report_csv_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.report_csv, "report.csv");
}
std::filesystem::path similarity_csv_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.similarity_csv, "similarity.csv");
}
std::filesystem::path errors_csv_path(const PipelineConfig& cfg) {
  return resolve(cfg, cfg.paths.errors_csv, "errors.csv");
}

std::unique_ptr<providers::ModelProvider> make_provider(const PipelineConfig& cfg) {
  if (cfg.provider.kind == "http") {
    return std::make_unique<providers::HttpProvider>(cfg.provider.endpoint,
                                                     cfg.provider.api_key_env,
                                                     cfg.provider.backoff_ms);
  }
  if (!cfg.provider.fixtures_path.empty()) {
    return std::make_unique<providers::ScriptedProvider>(
        providers::ScriptedProvider::from_fixture_file(cfg.provider.fixtures_path));
  }
  return std::make_unique<providers::ScriptedProvider>();
}

std::string content_model(const PipelineConfig& cfg) {
  return cfg.provider.content_model_id.empty() ? cfg.provider.model_id
                                               : cfg.provider.content_model_id;
}
std::string template_model(const PipelineConfig& cfg) {
  return cfg.provider.template_model_id.empty() ? cfg.provider.model_id
                                                : cfg.provider.template_model_id;
}
std::string evaluate_model(const PipelineConfig& cfg) {
  return cfg.provider.evaluate_model_id.empty() ? cfg.provider.model_id
                                                : cfg.provider.evaluate_model_id;
}

}  // namespace crmagent::config
