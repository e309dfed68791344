#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/keyurl.hpp"
#include "xlink/profiles.hpp"

namespace xlink {

enum class Pillar { General, KeyUrls, Footprints };
std::string_view pillar_name(Pillar p);
Pillar parse_pillar(std::string_view s);

inline constexpr std::size_t kGeneralDim = 24;
inline constexpr std::size_t kKeyUrlDim = kKeyUrlGroups;
inline constexpr std::size_t kTemporalBlock = 24 + 7 + 12;
inline constexpr std::size_t kFootprintDim = kKeyUrlBuckets + kTopUrlHits + 2 * kTemporalBlock;
inline constexpr std::size_t kFeatureDim = kGeneralDim + kKeyUrlDim + kFootprintDim;
static_assert(kFeatureDim == 657);

struct FeatureInfo {
  std::size_t index;
  std::string name;
  Pillar pillar;
  friend bool operator==(const FeatureInfo&, const FeatureInfo&) = default;
};

class FeatureSchema {
 public:
  /// The fixed pair layout: general similarity, key-URL groups, footprints.
  static FeatureSchema standard();
  static FeatureSchema from_json(std::string_view text);

  std::size_t dimension() const { return features_.size(); }
  const std::vector<FeatureInfo>& features() const { return features_; }
  const FeatureInfo& at(std::size_t i) const { return features_.at(i); }
  std::vector<std::string> names() const;
  /// Column indices belonging to any of `pillars`, ascending.
  std::vector<std::size_t> columns(std::initializer_list<Pillar> pillars) const;
  std::string to_json() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureInfo> features_;
};

/// Pearson correlation of two histograms; 0 when either has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
/// -sum_i p_i ln q_i, with p and q the +1-smoothed, normalized histograms of `from` and `to`.
double cross_entropy(std::span<const double> from, std::span<const double> to);

/// General-similarity block for (u, v) in the given order; directional CE slots are u->v then v->u.
std::array<double, kGeneralDim> general_sim(const UserProfile& u, const UserProfile& v);
std::array<double, kKeyUrlDim> key_url_counts(const UserProfile& u, const UserProfile& v, const KeyUrlIndex& index);
/// Key-URL buckets, top-URL hits, and both users' raw temporal histograms (u's block first).
std::vector<double> footprints(const UserProfile& u, const UserProfile& v, const KeyUrlIndex& index);

struct PairFeatures {
  std::string uid_a;
  std::string uid_b;
  std::vector<double> values;
  std::optional<int> label;
};

/// Row-major feature matrix with one canonical pair per row.
struct FeatureMatrix {
  std::size_t dim = kFeatureDim;
  std::vector<UidPair> pairs;
  std::vector<int> labels;  // -1 when unlabeled
  std::vector<double> values;

  std::size_t rows() const { return pairs.size(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * dim, dim}; }
  /// Copy restricted to `cols`, in the given order.
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
};

class FeatureExtractor {
 public:
  FeatureExtractor(const ProfileStore& store, KeyUrlIndex index);

  const ProfileStore& store() const { return *store_; }
  const FeatureSchema& schema() const { return schema_; }

  /// Writes the canonical-order vector of the pair (i, j) of store indices into `out`.
  void extract(std::uint32_t i, std::uint32_t j, std::span<double> out) const;
  PairFeatures extract_pair(std::string_view uid_a, std::string_view uid_b) const;
  /// One row per input pair, in input order; identical for any thread count.
  FeatureMatrix extract_batch(std::span<const UidPair> pairs, std::span<const int> labels = {},
                              int threads = 1) const;

 private:
  const ProfileStore* store_;
  KeyUrlIndex index_;
  FeatureSchema schema_;
};

std::string format_features_csv(const FeatureMatrix& m);
FeatureMatrix parse_features_csv(std::string_view text);

}  // namespace xlink
