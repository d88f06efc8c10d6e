#include "crmagent/types.hpp"

#include "crmagent/util.hpp"

namespace crmagent {

namespace {

struct EventKindRow {
  EventKind kind;
  std::string_view name;
};

constexpr EventKindRow kEventKinds[] = {
    {EventKind::Read, "read"},
    {EventKind::StoreClick, "store_click"},
    {EventKind::VoucherClick, "voucher_click"},
    {EventKind::ProductCardClick, "product_card_click"},
    {EventKind::CrmButton, "crm_button"},
    {EventKind::Unsubscribe, "unsubscribe"},
};

constexpr std::string_view kSegmentNames[kSegmentCount] = {
    "Potential New Customers",
    "New Buyers",
    "Lapsing Buyers",
    "Abandoned Cart Buyers",
    "Unpaid Order Buyers",
    "Post-Purchase Group",
    "Price-Drop Group",
    "Active Old Followers",
    "Frequent Buyers",
    "New Followers",
    "Repeat Buyers",
};

struct VoucherKindRow {
  VoucherKind kind;
  std::string_view name;
};

constexpr VoucherKindRow kVoucherKinds[] = {
    {VoucherKind::Percentage, "percentage"},
    {VoucherKind::FixedAmount, "fixed_amount"},
    {VoucherKind::FreeShipping, "free_shipping"},
    {VoucherKind::None, "none"},
};

constexpr std::string_view kTierNames[] = {"strong", "middle", "weak", "unassigned"};

}  // namespace

std::string_view event_kind_name(EventKind k) {
  return kEventKinds[static_cast<std::size_t>(k)].name;
}

std::optional<EventKind> event_kind_from(std::string_view name) {
  for (const auto& row : kEventKinds)
    if (row.name == name) return row.kind;
  return std::nullopt;
}

std::string_view segment_name(AudienceSegment s) {
  return kSegmentNames[static_cast<std::size_t>(s)];
}

std::optional<AudienceSegment> segment_from(std::string_view name) {
  for (std::size_t i = 0; i < kSegmentCount; ++i)
    if (kSegmentNames[i] == name) return static_cast<AudienceSegment>(i);
  return std::nullopt;
}

const std::array<AudienceSegment, kSegmentCount>& all_segments() {
  static const std::array<AudienceSegment, kSegmentCount> segments = [] {
    std::array<AudienceSegment, kSegmentCount> a{};
    for (std::size_t i = 0; i < kSegmentCount; ++i) a[i] = static_cast<AudienceSegment>(i);
    return a;
  }();
  return segments;
}

std::string_view voucher_kind_name(VoucherKind k) {
  return kVoucherKinds[static_cast<std::size_t>(k)].name;
}

std::optional<VoucherKind> voucher_kind_from(std::string_view name) {
  for (const auto& row : kVoucherKinds)
    if (row.name == name) return row.kind;
  return std::nullopt;
}

std::string_view tier_name(Tier t) { return kTierNames[static_cast<std::size_t>(t)]; }

std::optional<Tier> tier_from(std::string_view name) {
  for (std::size_t i = 0; i < 4; ++i)
    if (kTierNames[i] == name) return static_cast<Tier>(i);
  return std::nullopt;
}

std::string RecordKey::key_string() const {
  std::string out = util::escape_field(merchant_id);
  out += '|';
  out += util::escape_field(template_id);
  out += '|';
  for (std::size_t i = 0; i < category_path.size(); ++i) {
    if (i) out += '>';
    out += util::escape_field(category_path[i]);
  }
  out += '|';
  out += segment_name(audience_segment);
  out += '|';
  out += util::escape_field(voucher_fingerprint);
  return out;
}

std::string template_id_for(const MessageTemplate& t) {
  std::string blob = t.title;
  blob.push_back('\x1e');
  blob += t.body;
  return util::digest16(blob);
}

}  // namespace crmagent
