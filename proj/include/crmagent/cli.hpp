#pragma once

#include "crmagent/config.hpp"

namespace crmagent::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // usage errors and missing inputs
inline constexpr int kExitProvider = 3;    // provider failure exhausting retries

int cmd_synth(const config::PipelineConfig& cfg);
int cmd_ingest(const config::PipelineConfig& cfg);
int cmd_tier(const config::PipelineConfig& cfg);
int cmd_rewrite(const config::PipelineConfig& cfg);
int cmd_evaluate(const config::PipelineConfig& cfg);
int cmd_report(const config::PipelineConfig& cfg);

}  // namespace crmagent::cli
