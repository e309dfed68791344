#include "xlink/profiles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/array.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/unordered_map.hpp>
#include <cereal/types/vector.hpp>

namespace xlink {

TimeParts time_parts(std::int64_t ts) {
  using namespace std::chrono;
  auto day = static_cast<std::int32_t>(ts / kSecondsPerDay);
  auto secs = ts % kSecondsPerDay;
  sys_days d{days{day}};
  year_month_day ymd{d};
  weekday wd{d};
  return TimeParts{day, static_cast<int>(secs / 3600), static_cast<int>(wd.iso_encoding()) - 1,
                   static_cast<int>(static_cast<unsigned>(ymd.month())) - 1};
}

SparseVector SparseVector::from(std::vector<std::uint32_t> ids, std::vector<double> weights) {
  SparseVector v;
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  v.ids = std::move(ids);
  v.weights = std::move(weights);
  v.norm = std::sqrt(sq);
  return v;
}

Overlap overlap(const SparseVector& a, const SparseVector& b) {
  Overlap out;
  double dot = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.ids.size() && j < b.ids.size()) {
    if (a.ids[i] < b.ids[j]) {
      ++i;
    } else if (b.ids[j] < a.ids[i]) {
      ++j;
    } else {
      dot += a.weights[i] * b.weights[j];
      ++out.common;
      ++i;
      ++j;
    }
  }
  if (a.norm > 0.0 && b.norm > 0.0) out.cosine = dot / (a.norm * b.norm);
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) { return overlap(a, b).cosine; }

std::size_t common_count(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::uint32_t Dictionary::intern(std::string_view term) {
  auto it = ids_.find(std::string(term));
  if (it != ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(terms_.size());
  terms_.emplace_back(term);
  ids_.emplace(terms_.back(), id);
  return id;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

template <class Archive>
void Dictionary::serialize(Archive& ar) {
  ar(terms_);
  if constexpr (Archive::is_loading::value) {
    ids_.clear();
    for (std::uint32_t i = 0; i < terms_.size(); ++i) ids_.emplace(terms_[i], i);
  }
}

std::optional<std::uint32_t> ProfileStore::find(std::string_view uid) const {
  auto it = index_.find(std::string(uid));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ProfileStore::index_of(std::string_view uid) const {
  auto idx = find(uid);
  if (!idx) throw Error("unknown uid '" + std::string(uid) + "'");
  return *idx;
}

template <class Archive>
void serialize(Archive& ar, SparseVector& v) {
  ar(v.ids, v.weights, v.norm);
}

template <class Archive>
void serialize(Archive& ar, UserProfile& p) {
  ar(p.uid, p.doc, p.fid, p.url, p.hour_hist, p.dow_hist, p.month_hist, p.first_day, p.last_day, p.active_days,
     p.event_count);
}

template <class Archive>
void ProfileStore::serialize(Archive& ar) {
  ar(profiles_, dicts_, idf_, checksum_);
  if constexpr (Archive::is_loading::value) {
    index_.clear();
    for (std::uint32_t i = 0; i < profiles_.size(); ++i) index_.emplace(profiles_[i].uid, i);
  }
}

namespace {

struct FidTerms {
  std::uint32_t fid;
  std::array<std::uint32_t, kUrlLevels> url;
  std::vector<std::uint32_t> tokens;
};

// Sorted ids with repeats -> (distinct ids, counts).
void run_length(std::vector<std::uint32_t>& ids, std::vector<std::uint32_t>& out_ids,
                std::vector<double>& out_counts) {
  std::sort(ids.begin(), ids.end());
  out_ids.clear();
  out_counts.clear();
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    out_ids.push_back(ids[i]);
    out_counts.push_back(static_cast<double>(j - i));
    i = j;
  }
}

}  // namespace

ProfileStore build_profiles(const Corpus& corpus, int threads) {
  ProfileStore store;
  const std::size_t n_users = corpus.logs.size();
  store.profiles_.resize(n_users);

  // Sequential pass: intern terms and collect raw per-user term occurrences.
  std::unordered_map<std::string, FidTerms> fid_terms;
  std::vector<std::array<std::vector<std::uint32_t>, kChannels>> raw(n_users);
  std::size_t u = 0;
  for (const auto& [uid, log] : corpus.logs) {
    auto& prof = store.profiles_[u];
    prof.uid = uid;
    store.index_.emplace(uid, static_cast<std::uint32_t>(u));
    auto& occ = raw[u];
    for (const auto& ev : log.events) {
      auto it = fid_terms.find(ev.fid);
      if (it == fid_terms.end()) {
        FidTerms t;
        t.fid = store.dicts_[static_cast<int>(Channel::Fid)].intern(ev.fid);
        auto url_it = corpus.maps.fid_to_url.find(ev.fid);
        if (url_it == corpus.maps.fid_to_url.end()) throw Error("fid '" + ev.fid + "' has no URL");
        for (int level = 1; level <= kUrlLevels; ++level)
          t.url[level - 1] =
              store.dicts_[static_cast<int>(Channel::Url1) + level - 1].intern(url_prefix(url_it->second, level));
        for (const auto& tok : corpus.maps.tokens(ev.fid))
          t.tokens.push_back(store.dicts_[static_cast<int>(Channel::Doc)].intern(tok));
        it = fid_terms.emplace(ev.fid, std::move(t)).first;
      }
      const auto& t = it->second;
      occ[static_cast<int>(Channel::Fid)].push_back(t.fid);
      for (int l = 0; l < kUrlLevels; ++l) occ[static_cast<int>(Channel::Url1) + l].push_back(t.url[l]);
      occ[static_cast<int>(Channel::Doc)].insert(occ[static_cast<int>(Channel::Doc)].end(), t.tokens.begin(),
                                                 t.tokens.end());

      auto tp = time_parts(ev.ts);
      prof.hour_hist[tp.hour]++;
      prof.dow_hist[tp.weekday]++;
      prof.month_hist[tp.month]++;
      if (prof.active_days.empty() || prof.active_days.back() != tp.day) prof.active_days.push_back(tp.day);
    }
    // Events are sorted by ts, so days arrive non-decreasing.
    prof.first_day = prof.active_days.front();
    prof.last_day = prof.active_days.back();
    prof.event_count = static_cast<std::int64_t>(log.events.size());
    ++u;
  }

  // Per-user term counts, then document frequencies.
  std::vector<std::array<std::vector<std::uint32_t>, kChannels>> ids(n_users);
  std::vector<std::array<std::vector<double>, kChannels>> counts(n_users);
  parallel_for(n_users, threads, [&](std::size_t i) {
    for (int c = 0; c < kChannels; ++c) {
      run_length(raw[i][c], ids[i][c], counts[i][c]);
      raw[i][c] = {};
    }
  });
  for (int c = 0; c < kChannels; ++c) {
    std::vector<std::uint32_t> df(store.dicts_[c].size(), 0);
    for (std::size_t i = 0; i < n_users; ++i)
      for (auto id : ids[i][c]) df[id]++;
    auto& idf = store.idf_[c];
    idf.resize(df.size());
    for (std::size_t t = 0; t < df.size(); ++t)
      idf[t] = std::log(static_cast<double>(n_users) / static_cast<double>(df[t]));
  }

  parallel_for(n_users, threads, [&](std::size_t i) {
    auto& prof = store.profiles_[i];
    for (int c = 0; c < kChannels; ++c) {
      auto& cnt = counts[i][c];
      double total = 0.0;
      for (double x : cnt) total += x;
      const auto& idf = store.idf_[c];
      for (std::size_t k = 0; k < cnt.size(); ++k) cnt[k] = (cnt[k] / total) * idf[ids[i][c][k]];
      auto vec = SparseVector::from(std::move(ids[i][c]), std::move(cnt));
      switch (static_cast<Channel>(c)) {
        case Channel::Doc: prof.doc = std::move(vec); break;
        case Channel::Fid: prof.fid = std::move(vec); break;
        default: prof.url[c - static_cast<int>(Channel::Url1)] = std::move(vec); break;
      }
    }
  });
  return store;
}

void save_profile_cache(const ProfileStore& store, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    cereal::PortableBinaryOutputArchive ar(out);
    std::uint32_t version = kProfileCacheVersion;
    ar(version, store);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<ProfileStore> load_profile_cache(const std::filesystem::path& path,
                                               std::uint64_t expected_checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    cereal::PortableBinaryInputArchive ar(in);
    std::uint32_t version = 0;
    ar(version);
    if (version != kProfileCacheVersion) return std::nullopt;
    ProfileStore store;
    ar(store);
    if (store.corpus_checksum() != expected_checksum) return std::nullopt;
    return store;
  } catch (const cereal::Exception&) {
    return std::nullopt;
  }
}

}  // namespace xlink
