#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "crmagent/prompts.hpp"

namespace crmagent::providers {

struct ProviderRequest {
  prompts::PromptBundle prompt;
  std::string model_id;
  double temperature = 0.0;  // 0 for reproducibility
  int max_retries = 3;
  std::string tag;  // target key string; lets scripted fixtures address a record
};

/// Per-call knobs shared by every request a stage issues.
struct CallSettings {
  std::string model_id;
  double temperature = 0.0;
  int max_retries = 3;
};

inline ProviderRequest make_request(prompts::PromptBundle prompt, const CallSettings& settings,
                                    std::string tag) {
  return ProviderRequest{std::move(prompt), settings.model_id, settings.temperature,
                         settings.max_retries, std::move(tag)};
}

class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual std::string complete(const ProviderRequest& request) = 0;
  virtual std::string_view name() const = 0;
};

/// Deterministic provider for tests and desk runs. Resolution order:
///   1. fixture keyed by (prompt_kind, tag)
///   2. fixture keyed by the prompt digest
///   3. synthesized well-formed response seeded by the prompt digest
/// Synthesized judgments follow the blind-comparison shape: B (the generated
/// side) is always preferred and never scored below A.
class ScriptedProvider final : public ModelProvider {
 public:
  ScriptedProvider() = default;

  void add_fixture(prompts::PromptKind kind, std::string_view tag, std::string response);
  void add_digest_fixture(std::string_view digest, std::string response);

  /// JSON file: {"by_target": {"<kind>/<tag>": "..."}, "by_digest": {"<digest>": "..."}}
  static ScriptedProvider from_fixture_file(const std::filesystem::path& path);

  std::string complete(const ProviderRequest& request) override;
  std::string_view name() const override { return "scripted"; }

 private:
  std::map<std::string, std::string> by_target_;
  std::map<std::string, std::string> by_digest_;
};

/// Minimal JSON-over-HTTP adapter with bounded retries and exponential
/// backoff. POSTs {"model","prompt","temperature"}; accepts {"text"},
/// {"completion"} or an OpenAI-style choices array in the reply.
class HttpProvider final : public ModelProvider {
 public:
  HttpProvider(std::string endpoint, std::string api_key_env, int backoff_ms = 250);

  std::string complete(const ProviderRequest& request) override;
  std::string_view name() const override { return "http"; }

 private:
  std::string base_;
  std::string path_;
  std::string api_key_env_;
  int backoff_ms_;
};

}  // namespace crmagent::providers
