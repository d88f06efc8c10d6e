#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crmagent/engagement.hpp"
#include "crmagent/types.hpp"

namespace crmagent::ingest {

struct LineReject {
  std::string file;  // "events" or "plans"
  std::size_t line = 0;
  std::string reason;
};

struct ParsedLogs {
  std::vector<EngagementEvent> events;
  std::vector<PlanMeta> plans;
  std::vector<LineReject> rejects;
};

/// Line-delimited JSON in, typed records out. Well-formed lines map 1:1 in
/// input order; malformed lines land in the rejection report. Lines starting
/// with '#' are provenance headers and are skipped. Throws IoError only when a
/// stream itself fails.
ParsedLogs parse_logs(std::istream& events_stream, std::istream& plans_stream);

struct AggregationResult {
  std::vector<AggregatedPlanRecord> records;  // sorted by key
  std::size_t dangling_events = 0;            // events referencing unknown plan_ids
};

/// Groups per-plan engagement into one record per distinct key. The sample
/// universe for a key is every user observed in its events; a user's score
/// sums weights over events within window_days of the owning plan's sent_at.
AggregationResult aggregate_plans(std::span<const EngagementEvent> events,
                                  std::span<const PlanMeta> plans, int window_days = 7,
                                  const engagement::EngagementWeights& weights = {});

struct SynthParams {
  uint64_t seed = 42;
  int n_merchants = 25;
  int n_plans = 400;
  std::map<AudienceSegment, double> segment_mix;  // empty -> default mix
  double missing_metadata_fraction = 0.15;        // plans with neither category nor voucher
};

struct SynthCorpus {
  std::vector<EngagementEvent> events;
  std::vector<PlanMeta> plans;
};

/// Skewed default weights (acquisition segments largest).
const std::map<AudienceSegment, double>& default_segment_mix();

/// Deterministic synthetic corpus; engagement is right-skewed (most plans low,
/// a thin tail high) and a configurable fraction of plans has no metadata.
SynthCorpus gen_synthetic_corpus(const SynthParams& params);

// --- jsonl ------------------------------------------------------------------

struct FileHeader {
  std::string tool_version;
  std::string config_digest;
  uint64_t seed = 0;

  std::string line() const;  // "# crmagent <version> config=<digest> seed=<seed>"
};

std::string serialize_events(std::span<const EngagementEvent> events, const FileHeader& header);
std::string serialize_plans(std::span<const PlanMeta> plans, const FileHeader& header);
std::string serialize_aggregated(std::span<const AggregatedPlanRecord> records,
                                 const FileHeader& header);
std::string serialize_rejects(std::span<const LineReject> rejects, const FileHeader& header);

std::vector<AggregatedPlanRecord> read_aggregated_file(const std::filesystem::path& path);
ParsedLogs parse_log_files(const std::filesystem::path& events_path,
                           const std::filesystem::path& plans_path);

}  // namespace crmagent::ingest
