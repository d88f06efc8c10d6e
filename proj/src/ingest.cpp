#include "crmagent/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "crmagent/errors.hpp"
#include "crmagent/retrieval.hpp"
#include "crmagent/util.hpp"
#include "crmagent/version.hpp"

namespace crmagent::ingest {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_header_line(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return i < line.size() && line[i] == '#';
}

std::string require_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    throw ParseError(field);
  return j[field].get<std::string>();
}

EngagementEvent parse_event_json(const json& j) {
  EngagementEvent e;
  e.user_id = require_string(j, "user_id");
  e.plan_id = require_string(j, "plan_id");
  if (e.user_id.empty()) throw ParseError("user_id");
  if (e.plan_id.empty()) throw ParseError("plan_id");
  auto kind = event_kind_from(require_string(j, "event_type"));
  if (!kind) throw ParseError("unknown event_kind");
  e.event_kind = *kind;
  auto ts = util::parse_instant(require_string(j, "ts"));
  if (!ts) throw ParseError("ts");
  e.occurred_at = *ts;
  return e;
}

std::optional<VoucherInfo> parse_voucher_json(const json& j) {
  if (!j.contains("voucher") || j["voucher"].is_null()) return std::nullopt;
  const json& v = j["voucher"];
  if (!v.is_object()) throw ParseError("voucher");
  VoucherInfo info;
  info.voucher_title = require_string(v, "voucher_title");
  auto kind = voucher_kind_from(require_string(v, "voucher_kind"));
  if (!kind) throw ParseError("unknown voucher_kind");
  info.voucher_kind = *kind;
  if (!v.contains("value") || !v["value"].is_number()) throw ParseError("voucher value");
  info.value = v["value"].get<double>();
  if (info.value < 0) throw ParseError("voucher value negative");
  if (info.voucher_kind == VoucherKind::Percentage && (info.value <= 0 || info.value > 100))
    throw ParseError("percentage voucher value out of (0,100]");
  if (info.voucher_kind == VoucherKind::None && info.value != 0)
    throw ParseError("voucher kind none requires value 0");
  if (v.contains("min_spend") && !v["min_spend"].is_null()) {
    if (!v["min_spend"].is_number()) throw ParseError("min_spend");
    info.min_spend = v["min_spend"].get<double>();
    if (*info.min_spend < 0) throw ParseError("min_spend negative");
  }
  if (v.contains("currency") && !v["currency"].is_null()) {
    if (!v["currency"].is_string()) throw ParseError("currency");
    info.currency = v["currency"].get<std::string>();
  }
  return info;
}

PlanMeta parse_plan_json(const json& j) {
  PlanMeta p;
  p.plan_id = require_string(j, "plan_id");
  p.merchant_id = require_string(j, "merchant_id");
  if (p.plan_id.empty()) throw ParseError("plan_id");
  if (p.merchant_id.empty()) throw ParseError("merchant_id");
  auto segment = segment_from(require_string(j, "audience_segment"));
  if (!segment) throw ParseError("unknown audience_segment");
  p.audience_segment = *segment;
  p.template_.title = require_string(j, "template_title");
  p.template_.body = require_string(j, "template_body");
  if (!j.contains("category_path") || !j["category_path"].is_array())
    throw ParseError("category_path");
  for (const auto& item : j["category_path"]) {
    if (!item.is_string() || item.get<std::string>().empty())
      throw ParseError("category_path element");
    p.category_path.push_back(item.get<std::string>());
  }
  p.voucher = parse_voucher_json(j);
  auto ts = util::parse_instant(require_string(j, "sent_at"));
  if (!ts) throw ParseError("sent_at");
  p.sent_at = *ts;
  return p;
}

template <typename Fn>
void parse_jsonl_stream(std::istream& in, const std::string& file_label, Fn&& on_record,
                        std::vector<LineReject>& rejects) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty() || is_header_line(line)) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      rejects.push_back({file_label, line_no, "invalid json"});
      continue;
    }
    try {
      on_record(j);
    } catch (const ParseError& e) {
      rejects.push_back({file_label, line_no, e.field()});
    }
  }
  if (in.bad()) throw IoError("stream failure while reading " + file_label);
}

}  // namespace

ParsedLogs parse_logs(std::istream& events_stream, std::istream& plans_stream) {
  ParsedLogs out;
  parse_jsonl_stream(
      events_stream, "events", [&](const json& j) { out.events.push_back(parse_event_json(j)); },
      out.rejects);
  parse_jsonl_stream(
      plans_stream, "plans", [&](const json& j) { out.plans.push_back(parse_plan_json(j)); },
      out.rejects);
  return out;
}

AggregationResult aggregate_plans(std::span<const EngagementEvent> events,
                                  std::span<const PlanMeta> plans, int window_days,
                                  const engagement::EngagementWeights& weights) {
  if (window_days < 1) throw PreconditionError("window_days must be >= 1");

  struct PlanSlot {
    const PlanMeta* plan;
    RecordKey key;
  };
  std::map<std::string, PlanSlot> by_plan_id;
  for (const auto& p : plans) {
    RecordKey key{p.merchant_id, template_id_for(p.template_), p.category_path,
                  p.audience_segment, retrieval::voucher_fingerprint(p.voucher)};
    by_plan_id.insert_or_assign(p.plan_id, PlanSlot{&p, std::move(key)});
  }
  std::map<RecordKey, const MessageTemplate*> template_by_key;
  for (const auto& [plan_id, slot] : by_plan_id)
    template_by_key.emplace(slot.key, &slot.plan->template_);

  const int64_t window_seconds = static_cast<int64_t>(window_days) * 86400;

  // Per (key, user): the windowed events feeding score_events. A user enters
  // the sample universe on any observed event for the plan, windowed or not.
  std::map<RecordKey, std::map<std::string, std::vector<EngagementEvent>>> groups;
  AggregationResult result;
  for (const auto& e : events) {
    auto it = by_plan_id.find(e.plan_id);
    if (it == by_plan_id.end()) {
      ++result.dangling_events;
      continue;
    }
    const PlanSlot& slot = it->second;
    auto& user_events = groups[slot.key][e.user_id];
    int64_t delta = e.occurred_at - slot.plan->sent_at;
    if (delta >= 0 && delta <= window_seconds) user_events.push_back(e);
  }

  for (auto& [key, users] : groups) {
    AggregatedPlanRecord record;
    record.key = key;
    record.tier = Tier::Unassigned;
    long long total = 0;
    for (auto& [user, user_events] : users)
      total += engagement::score_events(user_events, weights);
    record.sample_count = static_cast<int64_t>(users.size());
    record.avg_engagement =
        static_cast<double>(total) / static_cast<double>(record.sample_count);
    record.template_ = *template_by_key.at(key);  // same text for every plan of a key
    result.records.push_back(std::move(record));
  }
  // std::map iteration already yields key order
  return result;
}

// --- synthetic corpus ---------------------------------------------------

const std::map<AudienceSegment, double>& default_segment_mix() {
  static const std::map<AudienceSegment, double> mix = {
      {AudienceSegment::PotentialNewCustomers, 701},
      {AudienceSegment::NewBuyers, 681},
      {AudienceSegment::LapsingBuyers, 515},
      {AudienceSegment::AbandonedCartBuyers, 493},
      {AudienceSegment::UnpaidOrderBuyers, 439},
      {AudienceSegment::PostPurchaseGroup, 352},
      {AudienceSegment::PriceDropGroup, 267},
      {AudienceSegment::ActiveOldFollowers, 186},
      {AudienceSegment::FrequentBuyers, 140},
      {AudienceSegment::NewFollowers, 125},
      {AudienceSegment::RepeatBuyers, 58},
  };
  return mix;
}

namespace {

double next_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int pick_int(std::mt19937_64& rng, int lo, int hi) {
  int span = hi - lo + 1;
  int v = lo + static_cast<int>(next_double(rng) * span);
  return std::min(v, hi);
}

struct TemplateSeed {
  const char* title;
  const char* body;
};

constexpr TemplateSeed kTemplateBank[] = {
    {"Everyone's loving these!",
     "Shoppers love these best-sellers. Find your next favorite in our latest collection."},
    {"Did you forget something?",
     "Looks like you left something in your cart. Ready to pick up where you left off?"},
    {"Check out our bestsellers!",
     "It's been a while since we last saw you, we really missed you and we want you to know about "
     "our ongoing special deals!"},
    {"You followed - now treat yourself!",
     "As a thank you for following, here's a special offer for your first order. Don't miss "
     "out - shop now!"},
    {"Price drop alert!",
     "An item on your wishlist just got cheaper. Grab it before the price goes back up."},
    {"Weekend flash sale",
     "Two days only: storewide savings on our most popular picks. Start browsing now."},
    {"Your order is waiting",
     "Complete your payment to lock in today's price. Your items are reserved for a limited time."},
    {"New arrivals just landed",
     "Fresh styles are in. Be the first to browse the newest drops before they sell out."},
    {"A little thank-you from us",
     "We appreciate your support! Enjoy a voucher on your next order while it lasts."},
    {"Restock alert",
     "Back by popular demand: the items you loved are available again. Quantities are limited."},
    {"Member-only savings inside",
     "Your loyalty pays off. Unlock extra savings on this week's featured collections."},
    {"Jangan lepaskan tawaran ini!",
     "Diskaun istimewa menanti anda. Beli sekarang sebelum kehabisan stok!"},
    {"Koleksi terbaru sudah tiba",
     "Lihat koleksi terkini kami dan nikmati penghantaran pantas untuk semua pesanan."},
    {"Almost gone - act fast",
     "Stock is running low on these customer favorites. Secure yours before they're gone."},
    {"We picked these for you",
     "Hand-picked deals on top-rated products. See what's trending in your favorite categories."},
    {"Free shipping this week",
     "No minimum spend. Every order ships free for a few more days - stock up now."},
    {"Your cart misses you",
     "Items in your cart are selling fast. Check out now to avoid disappointment."},
    {"Double points weekend",
     "Earn double loyalty points on every purchase this weekend. Points add up to vouchers."},
    {"Back for more?",
     "Reorder your essentials in one tap and enjoy a returning-customer discount."},
    {"Style refresh time",
     "Update your look with this season's picks. Easy returns on every order."},
};

const std::vector<std::vector<std::string>>& category_bank() {
  static const std::vector<std::vector<std::string>> bank = {
      {"Beauty & Personal Care", "Skincare"},
      {"Beauty & Personal Care", "Makeup"},
      {"Fashion Accessories"},
      {"Fashion Accessories", "Bags"},
      {"Home & Living", "Kitchen"},
      {"Home & Living", "Decor"},
      {"Electronics", "Audio"},
      {"Electronics", "Mobile Accessories"},
      {"Groceries", "Snacks"},
      {"Health", "Supplements"},
      {"Sports & Outdoor"},
      {"Baby & Kids", "Toys"},
  };
  return bank;
}

std::optional<VoucherInfo> sample_voucher(std::mt19937_64& rng) {
  double roll = next_double(rng);
  VoucherInfo v;
  if (roll < 0.45) {
    static const double values[] = {5, 10, 15, 20, 25, 30};
    v.voucher_kind = VoucherKind::Percentage;
    v.value = values[pick_int(rng, 0, 5)];
    v.voucher_title = util::format_decimal(v.value) + "% off storewide";
    if (next_double(rng) < 0.6) v.min_spend = 15.0 * (1 + pick_int(rng, 0, 3));
  } else if (roll < 0.8) {
    static const double values[] = {3, 5, 8, 12};
    v.voucher_kind = VoucherKind::FixedAmount;
    v.value = values[pick_int(rng, 0, 3)];
    v.voucher_title = "RM" + util::format_decimal(v.value) + " off";
    v.min_spend = 15.0 * (1 + pick_int(rng, 0, 2));
    v.currency = "MYR";
  } else {
    v.voucher_kind = VoucherKind::FreeShipping;
    v.value = 0;
    v.voucher_title = "Free shipping";
    if (next_double(rng) < 0.4) v.min_spend = 20.0;
  }
  return v;
}

}  // namespace

SynthCorpus gen_synthetic_corpus(const SynthParams& params) {
  if (params.n_plans < 1) throw PreconditionError("n_plans must be >= 1");
  if (params.n_merchants < 1) throw PreconditionError("n_merchants must be >= 1");
  if (params.missing_metadata_fraction < 0 || params.missing_metadata_fraction > 1)
    throw PreconditionError("missing_metadata_fraction must be in [0,1]");

  const auto& mix = params.segment_mix.empty() ? default_segment_mix() : params.segment_mix;
  std::vector<std::pair<AudienceSegment, double>> cumulative;
  double total_weight = 0;
  for (const auto& [segment, weight] : mix) {
    if (weight < 0) throw PreconditionError("segment_mix weights must be non-negative");
    if (weight == 0) continue;
    total_weight += weight;
    cumulative.emplace_back(segment, total_weight);
  }
  if (cumulative.empty()) throw PreconditionError("segment_mix must have a positive weight");

  std::mt19937_64 rng(params.seed);
  SynthCorpus corpus;
  corpus.plans.reserve(static_cast<std::size_t>(params.n_plans));

  const int64_t base_time = *util::parse_instant("2025-04-01T00:00:00Z");
  int64_t user_counter = 0;
  constexpr int kBankSize = static_cast<int>(std::size(kTemplateBank));

  for (int i = 0; i < params.n_plans; ++i) {
    PlanMeta plan;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "P%06d", i + 1);
    plan.plan_id = buf;
    std::snprintf(buf, sizeof(buf), "M%04d", pick_int(rng, 1, params.n_merchants));
    plan.merchant_id = buf;

    double seg_roll = next_double(rng) * total_weight;
    plan.audience_segment = cumulative.back().first;
    for (const auto& [segment, cum] : cumulative) {
      if (seg_roll < cum) {
        plan.audience_segment = segment;
        break;
      }
    }

    const TemplateSeed& seed_tmpl = kTemplateBank[pick_int(rng, 0, kBankSize - 1)];
    plan.template_.title = seed_tmpl.title;
    plan.template_.body = seed_tmpl.body;

    bool missing_metadata = next_double(rng) < params.missing_metadata_fraction;
    if (!missing_metadata) {
      bool with_category = next_double(rng) < 0.85;
      bool with_voucher = next_double(rng) < 0.70;
      if (!with_category && !with_voucher) with_category = true;
      if (with_category)
        plan.category_path = category_bank()[static_cast<std::size_t>(
            pick_int(rng, 0, static_cast<int>(category_bank().size()) - 1))];
      if (with_voucher) plan.voucher = sample_voucher(rng);
    }

    plan.sent_at = base_time + 86400 * pick_int(rng, 0, 27) + 3600 * pick_int(rng, 8, 20);

    // Right-skewed latent quality drives engagement volume.
    double quality = std::min(4.0, -std::log(1.0 - next_double(rng)));
    int n_users = pick_int(rng, 3, 39);
    double p_read = std::min(0.85, 0.18 + 0.22 * quality);
    double p_store = std::min(0.60, 0.02 + 0.10 * quality);
    double p_voucher = plan.voucher ? std::min(0.50, 0.015 + 0.08 * quality) : 0.0;
    double p_card = !plan.category_path.empty() ? std::min(0.50, 0.015 + 0.09 * quality) : 0.0;
    double p_crm = std::min(0.40, 0.03 + 0.05 * quality);
    double p_unsub = std::clamp(0.035 - 0.012 * quality, 0.002, 0.05);

    for (int u = 0; u < n_users; ++u) {
      ++user_counter;
      char user_buf[24];
      std::snprintf(user_buf, sizeof(user_buf), "U%07lld", static_cast<long long>(user_counter));
      auto emit = [&](EventKind kind, double p) {
        if (next_double(rng) >= p) return;
        EngagementEvent e;
        e.user_id = user_buf;
        e.plan_id = plan.plan_id;
        e.event_kind = kind;
        double delay_roll = std::pow(next_double(rng), 1.5);
        e.occurred_at = plan.sent_at + 3600 * (1 + static_cast<int64_t>(delay_roll * 239));
        corpus.events.push_back(std::move(e));
      };
      emit(EventKind::Read, p_read);
      emit(EventKind::StoreClick, p_store);
      emit(EventKind::VoucherClick, p_voucher);
      emit(EventKind::ProductCardClick, p_card);
      emit(EventKind::CrmButton, p_crm);
      emit(EventKind::Unsubscribe, p_unsub);
    }
    corpus.plans.push_back(std::move(plan));
  }
  return corpus;
}

// --- jsonl ------------------------------------------------------------------

std::string FileHeader::line() const {
  std::string out = "# crmagent ";
  out += tool_version.empty() ? kToolVersion : tool_version;
  out += " config=" + (config_digest.empty() ? std::string("none") : config_digest);
  out += " seed=" + std::to_string(seed);
  return out;
}

namespace {

ordered_json event_to_json(const EngagementEvent& e) {
  ordered_json j;
  j["user_id"] = e.user_id;
  j["plan_id"] = e.plan_id;
  j["event_type"] = event_kind_name(e.event_kind);
  j["ts"] = util::format_instant(e.occurred_at);
  return j;
}

ordered_json plan_to_json(const PlanMeta& p) {
  ordered_json j;
  j["plan_id"] = p.plan_id;
  j["merchant_id"] = p.merchant_id;
  j["audience_segment"] = segment_name(p.audience_segment);
  j["template_title"] = p.template_.title;
  j["template_body"] = p.template_.body;
  j["category_path"] = p.category_path;
  if (p.voucher) {
    ordered_json v;
    v["voucher_title"] = p.voucher->voucher_title;
    v["voucher_kind"] = voucher_kind_name(p.voucher->voucher_kind);
    v["value"] = p.voucher->value;
    if (p.voucher->min_spend)
      v["min_spend"] = *p.voucher->min_spend;
    else
      v["min_spend"] = nullptr;
    if (p.voucher->currency)
      v["currency"] = *p.voucher->currency;
    else
      v["currency"] = nullptr;
    j["voucher"] = v;
  } else {
    j["voucher"] = nullptr;
  }
  j["sent_at"] = util::format_instant(p.sent_at);
  return j;
}

ordered_json aggregated_to_json(const AggregatedPlanRecord& r) {
  ordered_json j;
  j["merchant_id"] = r.key.merchant_id;
  j["template_id"] = r.key.template_id;
  j["category_path"] = r.key.category_path;
  j["audience_segment"] = segment_name(r.key.audience_segment);
  j["voucher_fingerprint"] = r.key.voucher_fingerprint;
  j["template_title"] = r.template_.title;
  j["template_body"] = r.template_.body;
  j["avg_engagement"] = r.avg_engagement;
  j["sample_count"] = r.sample_count;
  j["tier"] = tier_name(r.tier);
  return j;
}

template <typename Range, typename Fn>
std::string serialize_jsonl(const Range& items, const FileHeader& header, Fn&& to_json) {
  std::string out = header.line();
  out += '\n';
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string serialize_events(std::span<const EngagementEvent> events, const FileHeader& header) {
  return serialize_jsonl(events, header, event_to_json);
}

std::string serialize_plans(std::span<const PlanMeta> plans, const FileHeader& header) {
  return serialize_jsonl(plans, header, plan_to_json);
}

std::string serialize_aggregated(std::span<const AggregatedPlanRecord> records,
                                 const FileHeader& header) {
  return serialize_jsonl(records, header, aggregated_to_json);
}

std::string serialize_rejects(std::span<const LineReject> rejects, const FileHeader& header) {
  return serialize_jsonl(rejects, header, [](const LineReject& r) {
    ordered_json j;
    j["file"] = r.file;
    j["line"] = r.line;
    j["reason"] = r.reason;
    return j;
  });
}

std::vector<AggregatedPlanRecord> read_aggregated_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<AggregatedPlanRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty() || is_header_line(line)) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": invalid json");
    AggregatedPlanRecord r;
    r.key.merchant_id = require_string(j, "merchant_id");
    r.key.template_id = require_string(j, "template_id");
    for (const auto& item : j.at("category_path")) r.key.category_path.push_back(item);
    auto segment = segment_from(require_string(j, "audience_segment"));
    if (!segment)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": unknown segment");
    r.key.audience_segment = *segment;
    r.key.voucher_fingerprint = require_string(j, "voucher_fingerprint");
    r.template_.title = require_string(j, "template_title");
    r.template_.body = require_string(j, "template_body");
    r.avg_engagement = j.at("avg_engagement").get<double>();
    r.sample_count = j.at("sample_count").get<int64_t>();
    auto tier = tier_from(require_string(j, "tier"));
    if (!tier) throw IoError(path.string() + ":" + std::to_string(line_no) + ": unknown tier");
    r.tier = *tier;
    records.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("read failure: " + path.string());
  return records;
}

ParsedLogs parse_log_files(const std::filesystem::path& events_path,
                           const std::filesystem::path& plans_path) {
  std::ifstream events(events_path, std::ios::binary);
  if (!events) throw IoError("cannot open " + events_path.string());
  std::ifstream plans(plans_path, std::ios::binary);
  if (!plans) throw IoError("cannot open " + plans_path.string());
  return parse_logs(events, plans);
}

}  // namespace crmagent::ingest
