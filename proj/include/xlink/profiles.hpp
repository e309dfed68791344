#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlink/corpus.hpp"

namespace xlink {

inline constexpr int kUrlLevels = 4;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Calendar facts of a UTC timestamp.
struct TimeParts {
  std::int32_t day;  // days since 1970-01-01
  int hour;          // 0..23
  int weekday;       // 0 = Monday .. 6 = Sunday
  int month;         // 0 = January .. 11 = December
};
TimeParts time_parts(std::int64_t ts);

/// Sparse vector keyed by interned term id. ids strictly ascending; weights parallel to ids.
struct SparseVector {
  std::vector<std::uint32_t> ids;
  std::vector<double> weights;
  double norm = 0.0;

  static SparseVector from(std::vector<std::uint32_t> ids, std::vector<double> weights);
  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

struct Overlap {
  double cosine = 0.0;
  std::size_t common = 0;  // |support(a) ∩ support(b)|
};

/// dot(a,b) / (|a| |b|), 0 when either norm is 0.
double cosine(const SparseVector& a, const SparseVector& b);
/// Cosine and support-intersection size from one merge pass.
Overlap overlap(const SparseVector& a, const SparseVector& b);
std::size_t common_count(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

struct UserProfile {
  std::string uid;
  SparseVector doc;                           // title-token TF-IDF
  SparseVector fid;                           // fid TF-IDF; ids double as the fid set
  std::array<SparseVector, kUrlLevels> url;   // URL-prefix TF-IDF per level 1..4
  std::array<std::int32_t, 24> hour_hist{};
  std::array<std::int32_t, 7> dow_hist{};     // Monday first
  std::array<std::int32_t, 12> month_hist{};
  std::int32_t first_day = 0;
  std::int32_t last_day = 0;
  std::vector<std::int32_t> active_days;      // ascending, distinct
  std::int64_t event_count = 0;

  std::span<const std::uint32_t> fid_set() const { return fid.ids; }
  std::span<const std::uint32_t> url_set(int level) const { return url.at(level - 1).ids; }
  std::int32_t lifespan_days() const { return last_day - first_day + 1; }
};

/// String interning table; ids are dense and assigned in first-seen order.
class Dictionary {
 public:
  std::uint32_t intern(std::string_view term);
  std::optional<std::uint32_t> find(std::string_view term) const;
  const std::string& term(std::uint32_t id) const { return terms_.at(id); }
  std::size_t size() const { return terms_.size(); }

  template <class Archive>
  void serialize(Archive& ar);

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

enum class Channel : int { Doc = 0, Fid = 1, Url1 = 2, Url2 = 3, Url3 = 4, Url4 = 5 };
inline constexpr int kChannels = 6;

class ProfileStore {
 public:
  std::size_t size() const { return profiles_.size(); }
  const UserProfile& profile(std::size_t index) const { return profiles_.at(index); }
  const std::vector<UserProfile>& profiles() const { return profiles_; }

  std::optional<std::uint32_t> find(std::string_view uid) const;
  /// Index of `uid`; throws naming the uid when absent.
  std::uint32_t index_of(std::string_view uid) const;
  const UserProfile& at(std::string_view uid) const { return profiles_[index_of(uid)]; }

  const Dictionary& dictionary(Channel c) const { return dicts_[static_cast<int>(c)]; }
  const Dictionary& url_dictionary(int level) const { return dicts_[static_cast<int>(Channel::Url1) + level - 1]; }
  const std::vector<double>& idf(Channel c) const { return idf_[static_cast<int>(c)]; }

  std::uint64_t corpus_checksum() const { return checksum_; }
  void set_corpus_checksum(std::uint64_t c) { checksum_ = c; }

  template <class Archive>
  void serialize(Archive& ar);

 private:
  friend ProfileStore build_profiles(const Corpus&, int);

  std::vector<UserProfile> profiles_;  // sorted by uid
  std::unordered_map<std::string, std::uint32_t> index_;
  std::array<Dictionary, kChannels> dicts_;
  std::array<std::vector<double>, kChannels> idf_;
  std::uint64_t checksum_ = 0;
};

/// TF = count / user total, IDF = ln(N_users / df), weight = TF * IDF, per channel.
/// Every event occurrence counts toward TF.
ProfileStore build_profiles(const Corpus& corpus, int threads = 1);

inline constexpr std::uint32_t kProfileCacheVersion = 1;

void save_profile_cache(const ProfileStore& store, const std::filesystem::path& path);
/// Returns nullopt when the file is missing, has another schema version, or a different checksum.
std::optional<ProfileStore> load_profile_cache(const std::filesystem::path& path,
                                               std::uint64_t expected_checksum);

}  // namespace xlink
