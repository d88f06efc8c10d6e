#include "crmagent/engagement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "crmagent/errors.hpp"

namespace crmagent::engagement {

int EngagementWeights::weight_for(EventKind kind) const {
  switch (kind) {
    case EventKind::Read: return read;
    case EventKind::StoreClick: return store_click;
    case EventKind::VoucherClick: return voucher_click;
    case EventKind::ProductCardClick: return product_card_click;
    case EventKind::CrmButton: return crm_button;
    case EventKind::Unsubscribe: return unsubscribe;
  }
  return 0;
}

int score_events(std::span<const EngagementEvent> events, const EngagementWeights& weights) {
  int total = 0;
  for (const auto& e : events) total += weights.weight_for(e.event_kind);
  return total;
}

std::vector<TierAssignment> assign_tiers(std::span<const AggregatedPlanRecord> records,
                                         double quartile_fraction) {
  if (!(quartile_fraction > 0.0) || quartile_fraction > 0.5)
    throw PreconditionError("quartile_fraction must be in (0, 0.5]");

  std::map<AudienceSegment, std::vector<const AggregatedPlanRecord*>> by_segment;
  for (const auto& r : records) by_segment[r.key.audience_segment].push_back(&r);

  std::vector<TierAssignment> out;
  out.reserve(by_segment.size());
  for (auto& [segment, group] : by_segment) {
    TierAssignment ta;
    ta.segment = segment;
    ta.quartile_fraction = quartile_fraction;
    const std::size_t n = group.size();
    if (n >= 4) {
      std::size_t m = static_cast<std::size_t>(
          std::ceil(quartile_fraction * static_cast<double>(n)));
      if (2 * m > n) m = n / 2;

      auto strong_order = group;
      std::sort(strong_order.begin(), strong_order.end(),
                [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
                  if (a->avg_engagement != b->avg_engagement)
                    return a->avg_engagement > b->avg_engagement;
                  return a->key < b->key;
                });
      auto weak_order = group;
      std::sort(weak_order.begin(), weak_order.end(),
                [](const AggregatedPlanRecord* a, const AggregatedPlanRecord* b) {
                  if (a->avg_engagement != b->avg_engagement)
                    return a->avg_engagement < b->avg_engagement;
                  return b->key < a->key;  // reversed tie rule keeps the slices disjoint
                });
      for (std::size_t i = 0; i < m; ++i) ta.strong_ids.push_back(strong_order[i]->key);
      for (std::size_t i = 0; i < m; ++i) ta.weak_ids.push_back(weak_order[i]->key);
      std::sort(ta.strong_ids.begin(), ta.strong_ids.end());
      std::sort(ta.weak_ids.begin(), ta.weak_ids.end());
    }
    out.push_back(std::move(ta));
  }
  return out;
}

void apply_tiers(std::vector<AggregatedPlanRecord>& records,
                 std::span<const TierAssignment> assignments) {
  std::set<RecordKey> strong, weak;
  for (const auto& ta : assignments) {
    strong.insert(ta.strong_ids.begin(), ta.strong_ids.end());
    weak.insert(ta.weak_ids.begin(), ta.weak_ids.end());
  }
  for (auto& r : records) {
    if (strong.count(r.key)) {
      r.tier = Tier::Strong;
    } else if (weak.count(r.key)) {
      r.tier = Tier::Weak;
    } else {
      r.tier = Tier::Middle;
    }
  }
}

}  // namespace crmagent::engagement
