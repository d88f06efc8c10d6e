#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crmagent/types.hpp"

namespace crmagent::retrieval {

/// Canonical voucher text used both as the aggregation-key fingerprint and as
/// the voucher portion of the embedded metadata. Absent voucher -> "none".
std::string voucher_fingerprint(const std::optional<VoucherInfo>& voucher);

/// "category: A > B | voucher_kind: K | voucher_value: V | min_spend: M".
/// Byte-stable; empty path serializes as "category: none". Separators inside
/// category names are escaped, keeping the form injective.
std::string serialize_metadata(std::span<const std::string> category_path,
                               const std::optional<VoucherInfo>& voucher);

/// Same canonical text built from an already-computed fingerprint.
std::string canonical_metadata_text(std::span<const std::string> category_path,
                                    std::string_view voucher_fp);

/// Character-trigram signed feature hashing into `dimension` buckets, then L2
/// normalization. Deterministic; throws PreconditionError on empty text or
/// dimension < 8.
std::vector<float> hash_embed(std::string_view canonical_text, int dimension);

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dimension() const = 0;
  virtual std::vector<float> embed(std::string_view text) const = 0;
};

class HashEmbedder final : public TextEmbedder {
 public:
  explicit HashEmbedder(int dimension = 256) : dimension_(dimension) {}
  int dimension() const override { return dimension_; }
  std::vector<float> embed(std::string_view text) const override {
    return hash_embed(text, dimension_);
  }

 private:
  int dimension_;
};

struct MetadataDoc {
  std::string record_key;
  std::string canonical_text;
  AudienceSegment audience_segment = AudienceSegment::PotentialNewCustomers;
  std::string merchant_id;
};

struct RetrievalCandidate {
  std::string record_key;
  double similarity = 0.0;
  MessageTemplate template_;  // hydrated from the corpus, not stored in the index
  std::string merchant_id;
};

/// Embeddings keyed by fnv1a64(canonical_text); persisted beside the index so
/// rebuilds skip re-embedding.
struct EmbedCache {
  int dimension = 0;
  std::unordered_map<uint64_t, std::vector<float>> entries;

  static std::optional<EmbedCache> load(const std::filesystem::path& path, int expected_dimension);
  void save(const std::filesystem::path& path) const;
};

/// Exact (flat) cosine index. Immutable once built.
class VectorIndex {
 public:
  struct Entry {
    std::string record_key;
    std::string merchant_id;
    AudienceSegment audience_segment = AudienceSegment::PotentialNewCustomers;
    std::vector<float> values;
  };

  static VectorIndex build(std::span<const MetadataDoc> docs, const TextEmbedder& embedder,
                           EmbedCache* cache = nullptr);

  int dimension() const { return dimension_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  int dimension_ = 0;
  std::vector<Entry> entries_;
};

struct QueryFilter {
  AudienceSegment audience_segment = AudienceSegment::PotentialNewCustomers;  // required equal
  std::string exclude_merchant_id;                                            // required not equal
};

/// Exact cosine scan over entries passing the filter; at most k results,
/// sorted (similarity desc, record_key asc). Candidates carry empty templates.
std::vector<RetrievalCandidate> query_topk(const VectorIndex& index, std::span<const float> query,
                                           int k, const QueryFilter& filter);

/// Keeps candidates with nonempty title+body and similarity >= min_similarity;
/// preserves order.
std::vector<RetrievalCandidate> filter_valid(std::vector<RetrievalCandidate> candidates,
                                             double min_similarity = 0.30);

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace crmagent::retrieval
