#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "crmagent/metrics.hpp"
#include "crmagent/provider.hpp"
#include "crmagent/types.hpp"

namespace crmagent::config {

struct ProviderConfig {
  std::string kind = "scripted";  // "scripted" | "http"
  std::string endpoint;
  std::string model_id = "scripted-v1";
  std::string content_model_id;   // empty -> model_id
  std::string template_model_id;  // empty -> model_id
  std::string evaluate_model_id;  // empty -> model_id
  std::string api_key_env;        // key is read from this env var, never from flags
  double temperature = 0.0;
  int max_retries = 3;
  int backoff_ms = 250;
  std::string fixtures_path;  // optional scripted-provider fixture file
};

struct SynthConfig {
  int n_merchants = 25;
  int n_plans = 400;
  double missing_metadata_fraction = 0.15;
  std::map<AudienceSegment, double> segment_mix;  // empty -> default mix
};

struct PathsConfig {
  std::string artifact_dir = "artifacts";
  // per-file overrides; empty entries resolve under artifact_dir
  std::string events;
  std::string plans;
  std::string aggregated;
  std::string rejects;
  std::string index;
  std::string embed_cache;
  std::string results;
  std::string report_txt;
  std::string report_csv;
  std::string similarity_csv;
  std::string errors_csv;
};

struct PipelineConfig {
  int window_days = 7;
  double quartile_fraction = 0.25;
  int embed_dimension = 256;
  int top_k = 3;
  double min_similarity = 0.30;
  uint64_t seed = 42;
  metrics::ChrfParams chrf;
  ProviderConfig provider;
  SynthConfig synth;
  PathsConfig paths;
  std::string prompts_dir;  // optional alternate skeleton set
};

/// Reads a JSON config file over the defaults. Unknown keys are rejected.
PipelineConfig load_config_file(const std::filesystem::path& path);

/// Range checks mirroring the consuming modules' preconditions.
void validate(const PipelineConfig& cfg);

/// Digest of the canonical serialized config; recorded in output headers.
std::string config_digest(const PipelineConfig& cfg);

std::filesystem::path events_path(const PipelineConfig& cfg);
std::filesystem::path plans_path(const PipelineConfig& cfg);
std::filesystem::path aggregated_path(const PipelineConfig& cfg);
std::filesystem::path rejects_path(const PipelineConfig& cfg);
std::filesystem::path index_path(const PipelineConfig& cfg);
std::filesystem::path embed_cache_path(const PipelineConfig& cfg);
std::filesystem::path results_path(const PipelineConfig& cfg);
std::filesystem::path report_txt_path(const PipelineConfig& cfg);
std::filesystem::path report_csv_path(const PipelineConfig& cfg);
std::filesystem::path similarity_csv_path(const PipelineConfig& cfg);
std::filesystem::path errors_csv_path(const PipelineConfig& cfg);

std::unique_ptr<providers::ModelProvider> make_provider(const PipelineConfig& cfg);

std::string content_model(const PipelineConfig& cfg);
std::string template_model(const PipelineConfig& cfg);
std::string evaluate_model(const PipelineConfig& cfg);

}  // namespace crmagent::config
