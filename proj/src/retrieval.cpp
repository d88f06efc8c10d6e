#include "crmagent/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "crmagent/errors.hpp"
#include "crmagent/util.hpp"

namespace crmagent::retrieval {

std::string voucher_fingerprint(const std::optional<VoucherInfo>& voucher) {
  if (!voucher) return "none";
  std::string out = "voucher_kind: ";
  out += voucher_kind_name(voucher->voucher_kind);
  out += " | voucher_value: ";
  out += util::format_decimal(voucher->value);
  out += " | min_spend: ";
  out += util::format_decimal(voucher->min_spend.value_or(0.0));
  return out;
}

std::string canonical_metadata_text(std::span<const std::string> category_path,
                                    std::string_view voucher_fp) {
  std::string out = "category: ";
  if (category_path.empty()) {
    out += "none";
  } else {
    for (std::size_t i = 0; i < category_path.size(); ++i) {
      if (i) out += " > ";
      out += util::escape_field(category_path[i]);
    }
  }
  out += " | ";
  if (voucher_fp == "none") {
    out += "voucher_kind: none | voucher_value: 0 | min_spend: 0";
  } else {
    out += voucher_fp;
  }
  return out;
}

std::string serialize_metadata(std::span<const std::string> category_path,
                               const std::optional<VoucherInfo>& voucher) {
  return canonical_metadata_text(category_path, voucher_fingerprint(voucher));
}

std::vector<float> hash_embed(std::string_view canonical_text, int dimension) {
  if (dimension < 8) throw PreconditionError("embedding dimension must be >= 8");
  if (canonical_text.empty()) throw PreconditionError("cannot embed empty text");

  std::vector<double> acc(static_cast<std::size_t>(dimension), 0.0);
  auto add_gram = [&](std::string_view gram) {
    uint64_t h = util::fnv1a64(gram);
    std::size_t bucket = static_cast<std::size_t>(h % static_cast<uint64_t>(dimension));
    double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    acc[bucket] += sign;
  };

  if (canonical_text.size() < 3) {
    add_gram(canonical_text);
  } else {
    for (std::size_t i = 0; i + 3 <= canonical_text.size(); ++i)
      add_gram(canonical_text.substr(i, 3));
  }

  double norm_sq = 0.0;
  for (double v : acc) norm_sq += v * v;
  double norm = std::sqrt(norm_sq);

  std::vector<float> out(static_cast<std::size_t>(dimension), 0.0f);
  if (norm > 0.0) {
    for (std::size_t i = 0; i < acc.size(); ++i)
      out[i] = static_cast<float>(acc[i] / norm);
  } else {
    // signed counts cancelled exactly; fall back to a deterministic unit axis
    out[util::fnv1a64(canonical_text) % static_cast<uint64_t>(dimension)] = 1.0f;
  }
  return out;
}

std::optional<EmbedCache> EmbedCache::load(const std::filesystem::path& path,
                                           int expected_dimension) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  std::string blob = util::read_text_file(path);
  std::size_t pos = 0;
  if (blob.size() < 8 || blob.compare(0, 8, "CRMECACH") != 0) return std::nullopt;
  pos = 8;
  EmbedCache cache;
  cache.dimension = static_cast<int>(util::get_u32(blob, pos));
  if (cache.dimension != expected_dimension) return std::nullopt;
  uint64_t n = util::get_u64(blob, pos);
  cache.entries.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t key = util::get_u64(blob, pos);
    std::vector<float> vec(static_cast<std::size_t>(cache.dimension));
    for (auto& v : vec) v = util::get_f32(blob, pos);
    cache.entries.emplace(key, std::move(vec));
  }
  return cache;
}

void EmbedCache::save(const std::filesystem::path& path) const {
  std::string blob = "CRMECACH";
  util::put_u32(blob, static_cast<uint32_t>(dimension));
  util::put_u64(blob, entries.size());
  std::vector<uint64_t> keys;
  keys.reserve(entries.size());
  for (const auto& [k, _] : entries) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (uint64_t k : keys) {
    util::put_u64(blob, k);
    for (float v : entries.at(k)) util::put_f32(blob, v);
  }
  util::write_text_file(path, blob);
}

VectorIndex VectorIndex::build(std::span<const MetadataDoc> docs, const TextEmbedder& embedder,
                               EmbedCache* cache) {
  if (docs.empty()) throw PreconditionError("cannot build an index from zero docs");
  VectorIndex index;
  index.dimension_ = embedder.dimension();
  if (cache && cache->dimension != index.dimension_)
    throw PreconditionError("embed cache dimension does not match embedder");
  index.entries_.reserve(docs.size());
  for (const auto& doc : docs) {
    Entry e;
    e.record_key = doc.record_key;
    e.merchant_id = doc.merchant_id;
    e.audience_segment = doc.audience_segment;
    if (cache) {
      uint64_t key = util::fnv1a64(doc.canonical_text);
      auto it = cache->entries.find(key);
      if (it != cache->entries.end()) {
        e.values = it->second;
      } else {
        e.values = embedder.embed(doc.canonical_text);
        cache->entries.emplace(key, e.values);
      }
    } else {
      e.values = embedder.embed(doc.canonical_text);
    }
    if (static_cast<int>(e.values.size()) != index.dimension_)
      throw PreconditionError("embedder returned a vector of the wrong dimension");
    index.entries_.push_back(std::move(e));
  }
  return index;
}

namespace {

constexpr std::string_view kIndexMagic = "CRMVIDX1";

void put_string(std::string& out, std::string_view s) {
  util::put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

std::string get_string(std::string_view in, std::size_t& pos) {
  uint32_t len = util::get_u32(in, pos);
  if (pos + len > in.size()) throw IoError("truncated index file");
  std::string s(in.substr(pos, len));
  pos += len;
  return s;
}

}  // namespace

void VectorIndex::save(const std::filesystem::path& path) const {
  std::string blob(kIndexMagic);
  util::put_u32(blob, static_cast<uint32_t>(dimension_));
  util::put_u64(blob, entries_.size());
  for (const auto& e : entries_) {
    put_string(blob, e.record_key);
    put_string(blob, e.merchant_id);
    put_string(blob, segment_name(e.audience_segment));
    for (float v : e.values) util::put_f32(blob, v);
  }
  util::write_text_file(path, blob);
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::string blob = util::read_text_file(path);
  if (blob.size() < kIndexMagic.size() || blob.compare(0, kIndexMagic.size(), kIndexMagic) != 0)
    throw IoError("not an index file: " + path.string());
  std::size_t pos = kIndexMagic.size();
  VectorIndex index;
  index.dimension_ = static_cast<int>(util::get_u32(blob, pos));
  uint64_t n = util::get_u64(blob, pos);
  index.entries_.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    Entry e;
    e.record_key = get_string(blob, pos);
    e.merchant_id = get_string(blob, pos);
    auto segment = segment_from(get_string(blob, pos));
    if (!segment) throw IoError("index file names an unknown audience segment");
    e.audience_segment = *segment;
    e.values.resize(static_cast<std::size_t>(index.dimension_));
    for (auto& v : e.values) v = util::get_f32(blob, pos);
    index.entries_.push_back(std::move(e));
  }
  return index;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RetrievalCandidate> query_topk(const VectorIndex& index, std::span<const float> query,
                                           int k, const QueryFilter& filter) {
  if (k < 1) throw PreconditionError("k must be >= 1");
  if (static_cast<int>(query.size()) != index.dimension())
    throw PreconditionError("query dimension does not match index");

  std::vector<RetrievalCandidate> hits;
  for (const auto& e : index.entries()) {
    if (e.audience_segment != filter.audience_segment) continue;
    if (e.merchant_id == filter.exclude_merchant_id) continue;
    RetrievalCandidate c;
    c.record_key = e.record_key;
    c.merchant_id = e.merchant_id;
    c.similarity = cosine(query, e.values);
    hits.push_back(std::move(c));
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.record_key < b.record_key;
  });
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
  return hits;
}

std::vector<RetrievalCandidate> filter_valid(std::vector<RetrievalCandidate> candidates,
                                             double min_similarity) {
  std::vector<RetrievalCandidate> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) {
    if (util::trim(c.template_.title).empty()) continue;
    if (util::trim(c.template_.body).empty()) continue;
    if (c.similarity < min_similarity) continue;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace crmagent::retrieval
