#pragma once

#include <span>
#include <vector>

#include "crmagent/types.hpp"

namespace crmagent::engagement {

struct EngagementWeights {
  int read = 1;
  int store_click = 3;
  int voucher_click = 3;
  int product_card_click = 4;
  int crm_button = 2;
  int unsubscribe = -5;

  int weight_for(EventKind kind) const;
};

/// Weighted sum over one user-plan pair's events (caller applies the window).
/// Additive and order-independent.
int score_events(std::span<const EngagementEvent> events, const EngagementWeights& weights = {});

struct TierAssignment {
  AudienceSegment segment = AudienceSegment::PotentialNewCustomers;
  std::vector<RecordKey> strong_ids;  // key-ascending
  std::vector<RecordKey> weak_ids;    // key-ascending
  double quartile_fraction = 0.25;
};

/// Per-segment count-based quartiles. Within a segment, records are ordered
/// (avg_engagement desc, key asc); the top ceil(q*n) are Strong and the bottom
/// ceil(q*n) are Weak, with Weak selected from the ascending order under a
/// reversed tie rule so the two slices never overlap. Segments with n < 4 get
/// no Strong/Weak records. If 2*ceil(q*n) would exceed n the slice size is
/// clamped to n/2.
std::vector<TierAssignment> assign_tiers(std::span<const AggregatedPlanRecord> records,
                                         double quartile_fraction = 0.25);

/// Writes Strong/Weak/Middle into the records from the assignments.
void apply_tiers(std::vector<AggregatedPlanRecord>& records,
                 std::span<const TierAssignment> assignments);

}  // namespace crmagent::engagement
