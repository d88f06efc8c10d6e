#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crmagent {

// --- enums --------------------------------------------------------------

enum class EventKind { Read, StoreClick, VoucherClick, ProductCardClick, CrmButton, Unsubscribe };

enum class AudienceSegment {
  PotentialNewCustomers,
  NewBuyers,
  LapsingBuyers,
  AbandonedCartBuyers,
  UnpaidOrderBuyers,
  PostPurchaseGroup,
  PriceDropGroup,
  ActiveOldFollowers,
  FrequentBuyers,
  NewFollowers,
  RepeatBuyers,
};

inline constexpr std::size_t kSegmentCount = 11;

enum class VoucherKind { Percentage, FixedAmount, FreeShipping, None };

enum class Tier { Strong, Middle, Weak, Unassigned };

std::string_view event_kind_name(EventKind k);                     // "read", "store_click", ...
std::optional<EventKind> event_kind_from(std::string_view name);

std::string_view segment_name(AudienceSegment s);                  // "Potential New Customers", ...
std::optional<AudienceSegment> segment_from(std::string_view name);
const std::array<AudienceSegment, kSegmentCount>& all_segments();

std::string_view voucher_kind_name(VoucherKind k);                 // "percentage", ...
std::optional<VoucherKind> voucher_kind_from(std::string_view name);

std::string_view tier_name(Tier t);                                // "strong", ...
std::optional<Tier> tier_from(std::string_view name);

// --- records --------------------------------------------------------------

struct EngagementEvent {
  std::string user_id;
  std::string plan_id;
  EventKind event_kind = EventKind::Read;
  int64_t occurred_at = 0;  // epoch seconds, UTC

  bool operator==(const EngagementEvent&) const = default;
};

struct MessageTemplate {
  std::string title;
  std::string body;

  bool operator==(const MessageTemplate&) const = default;
};

struct VoucherInfo {
  std::string voucher_title;
  VoucherKind voucher_kind = VoucherKind::None;
  double value = 0.0;                   // percent points or currency units per kind
  std::optional<double> min_spend;
  std::optional<std::string> currency;  // ISO-4217

  bool operator==(const VoucherInfo&) const = default;
};

struct PlanMeta {
  std::string plan_id;
  std::string merchant_id;
  AudienceSegment audience_segment = AudienceSegment::PotentialNewCustomers;
  MessageTemplate template_;
  std::vector<std::string> category_path;
  std::optional<VoucherInfo> voucher;
  int64_t sent_at = 0;

  bool operator==(const PlanMeta&) const = default;
};

/// Aggregation key; member order is the comparison order.
struct RecordKey {
  std::string merchant_id;
  std::string template_id;
  std::vector<std::string> category_path;
  AudienceSegment audience_segment = AudienceSegment::PotentialNewCustomers;
  std::string voucher_fingerprint;

  auto operator<=>(const RecordKey&) const = default;

  /// Canonical escaped join; stable across runs, unique per key.
  std::string key_string() const;
};

struct AggregatedPlanRecord {
  RecordKey key;
  MessageTemplate template_;
  double avg_engagement = 0.0;
  int64_t sample_count = 0;
  Tier tier = Tier::Unassigned;

  bool operator==(const AggregatedPlanRecord&) const = default;
};

/// Stable id for a template's text; keys aggregation alongside the merchant.
std::string template_id_for(const MessageTemplate& t);

}  // namespace crmagent
