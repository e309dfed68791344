#include "xlink/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace xlink {

namespace {

std::string numbered(std::string_view prefix, std::size_t i, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, i);
  return std::string(prefix) + buf;
}

template <typename T>
std::size_t common_sorted(const std::vector<T>& a, const std::vector<T>& b) {
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

template <std::size_t N>
std::array<double, N> as_double(const std::array<std::int32_t, N>& h) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = h[i];
  return out;
}

// Visits every URL id at the index's level shared by u and v.
template <typename F>
void for_common_urls(const UserProfile& u, const UserProfile& v, int level, F&& fn) {
  auto a = u.url_set(level);
  auto b = v.url_set(level);
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      fn(a[i]);
      ++i;
      ++j;
    }
  }
}

void write_key_urls(const UserProfile& u, const UserProfile& v, const KeyUrlIndex& index, double* groups,
                    double* buckets, double* hits) {
  for_common_urls(u, v, index.level(), [&](std::uint32_t id) {
    auto rank = index.rank(id);
    if (rank == 0) {
      if (groups) groups[kKeyUrlGroups - 1] += 1.0;
      return;
    }
    if (groups) groups[group_of(rank)] += 1.0;
    if (buckets)
      if (auto b = bucket_of(rank)) buckets[*b] += 1.0;
    if (hits && rank <= kTopUrlHits) hits[rank - 1] = 1.0;
  });
}

void write_temporal(const UserProfile& p, double* out) {
  for (std::size_t i = 0; i < 24; ++i) out[i] = p.hour_hist[i];
  for (std::size_t i = 0; i < 7; ++i) out[24 + i] = p.dow_hist[i];
  for (std::size_t i = 0; i < 12; ++i) out[31 + i] = p.month_hist[i];
}

}  // namespace

std::string_view pillar_name(Pillar p) {
  switch (p) {
    case Pillar::General: return "general";
    case Pillar::KeyUrls: return "key_urls";
    case Pillar::Footprints: return "footprints";
  }
  return "?";
}

Pillar parse_pillar(std::string_view s) {
  if (s == "general") return Pillar::General;
  if (s == "key_urls") return Pillar::KeyUrls;
  if (s == "footprints") return Pillar::Footprints;
  throw Error("unknown feature pillar '" + std::string(s) + "'");
}

FeatureSchema FeatureSchema::standard() {
  FeatureSchema s;
  auto add = [&](std::string name, Pillar p) { s.features_.push_back({s.features_.size(), std::move(name), p}); };
  const auto G = Pillar::General;
  add("DocSim", G);
  add("FidSim", G);
  for (int l = 1; l <= 4; ++l) add("URLSim_L" + std::to_string(l), G);
  add("FidComCnt", G);
  for (int l = 1; l <= 4; ++l) add("URLComCnt_L" + std::to_string(l), G);
  for (std::string unit : {"Hour", "Day", "Month"}) {
    add(unit + "Cor", G);
    add(unit + "CE_ab", G);
    add(unit + "CE_ba", G);
  }
  add("FirstDateGap", G);
  add("LastDateGap", G);
  add("OverlapDay", G);
  add("Skewness", G);
  for (int g = 0; g < kKeyUrlGroups; ++g) add("KeyURLGroup" + std::to_string(g), Pillar::KeyUrls);
  for (int b = 0; b < kKeyUrlBuckets; ++b) add(numbered("KeyURLDist", b, 2), Pillar::Footprints);
  for (int h = 0; h < kTopUrlHits; ++h) add(numbered("TopURLHit", h, 3), Pillar::Footprints);
  for (std::string side : {"a", "b"}) {
    for (int i = 0; i < 24; ++i) add(numbered("TemporalDist_" + side + "_hour", i, 2), Pillar::Footprints);
    for (int i = 0; i < 7; ++i) add(numbered("TemporalDist_" + side + "_dow", i, 1), Pillar::Footprints);
    for (int i = 0; i < 12; ++i) add(numbered("TemporalDist_" + side + "_month", i, 2), Pillar::Footprints);
  }
  return s;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::vector<std::size_t> FeatureSchema::columns(std::initializer_list<Pillar> pillars) const {
  std::vector<std::size_t> out;
  for (const auto& f : features_)
    if (std::find(pillars.begin(), pillars.end(), f.pillar) != pillars.end()) out.push_back(f.index);
  return out;
}

std::string FeatureSchema::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["dimension"] = features_.size();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : features_) {
    nlohmann::ordered_json e;
    e["index"] = f.index;
    e["name"] = f.name;
    e["pillar"] = std::string(pillar_name(f.pillar));
    arr.push_back(std::move(e));
  }
  j["features"] = std::move(arr);
  return j.dump(1) + "\n";
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  FeatureSchema s;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw Error("unsupported feature schema version");
    for (const auto& e : j.at("features")) {
      FeatureInfo f{e.at("index").get<std::size_t>(), e.at("name").get<std::string>(),
                    parse_pillar(e.at("pillar").get<std::string>())};
      if (f.index != s.features_.size()) throw Error("feature schema indices must be contiguous from 0");
      s.features_.push_back(std::move(f));
    }
    if (j.at("dimension").get<std::size_t>() != s.features_.size())
      throw Error("feature schema dimension does not match its feature list");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed feature schema: ") + e.what());
  }
  return s;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

double cross_entropy(std::span<const double> from, std::span<const double> to) {
  const std::size_t n = from.size();
  double sf = 0.0, st = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sf += from[i] + 1.0;
    st += to[i] + 1.0;
  }
  double ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) ce -= ((from[i] + 1.0) / sf) * std::log((to[i] + 1.0) / st);
  return ce;
}

std::array<double, kGeneralDim> general_sim(const UserProfile& u, const UserProfile& v) {
  std::array<double, kGeneralDim> f{};
  std::size_t k = 0;
  f[k++] = cosine(u.doc, v.doc);
  auto fid = overlap(u.fid, v.fid);
  f[k++] = fid.cosine;
  std::array<std::size_t, kUrlLevels> url_common{};
  for (int l = 0; l < kUrlLevels; ++l) {
    auto o = overlap(u.url[l], v.url[l]);
    f[k++] = o.cosine;
    url_common[l] = o.common;
  }
  f[k++] = static_cast<double>(fid.common);
  for (int l = 0; l < kUrlLevels; ++l) f[k++] = static_cast<double>(url_common[l]);

  auto temporal = [&](auto hu, auto hv) {
    f[k++] = pearson(hu, hv);
    f[k++] = cross_entropy(hu, hv);
    f[k++] = cross_entropy(hv, hu);
  };
  temporal(as_double(u.hour_hist), as_double(v.hour_hist));
  temporal(as_double(u.dow_hist), as_double(v.dow_hist));
  temporal(as_double(u.month_hist), as_double(v.month_hist));

  f[k++] = std::abs(u.first_day - v.first_day);
  f[k++] = std::abs(u.last_day - v.last_day);
  f[k++] = static_cast<double>(common_sorted(u.active_days, v.active_days));
  double lu = u.lifespan_days(), lv = v.lifespan_days();
  f[k++] = std::min(lu, lv) / std::max(lu, lv);
  return f;
}

std::array<double, kKeyUrlDim> key_url_counts(const UserProfile& u, const UserProfile& v, const KeyUrlIndex& index) {
  std::array<double, kKeyUrlDim> out{};
  write_key_urls(u, v, index, out.data(), nullptr, nullptr);
  return out;
}

std::vector<double> footprints(const UserProfile& u, const UserProfile& v, const KeyUrlIndex& index) {
  std::vector<double> out(kFootprintDim, 0.0);
  write_key_urls(u, v, index, nullptr, out.data(), out.data() + kKeyUrlBuckets);
  write_temporal(u, out.data() + kKeyUrlBuckets + kTopUrlHits);
  write_temporal(v, out.data() + kKeyUrlBuckets + kTopUrlHits + kTemporalBlock);
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  FeatureMatrix out;
  out.dim = cols.size();
  out.pairs = pairs;
  out.labels = labels;
  out.values.resize(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out.values[r * cols.size() + c] = values[r * dim + cols[c]];
  return out;
}

FeatureExtractor::FeatureExtractor(const ProfileStore& store, KeyUrlIndex index)
    : store_(&store), index_(std::move(index)), schema_(FeatureSchema::standard()) {}

void FeatureExtractor::extract(std::uint32_t i, std::uint32_t j, std::span<double> out) const {
  if (out.size() != kFeatureDim) throw Error("feature buffer has wrong dimension");
  // Profiles are stored in uid order, so the smaller index is the canonical first uid.
  if (j < i) std::swap(i, j);
  const auto& u = store_->profile(i);
  const auto& v = store_->profile(j);
  std::fill(out.begin(), out.end(), 0.0);
  auto gen = general_sim(u, v);
  std::copy(gen.begin(), gen.end(), out.begin());
  double* key = out.data() + kGeneralDim;
  double* buckets = key + kKeyUrlDim;
  double* hits = buckets + kKeyUrlBuckets;
  write_key_urls(u, v, index_, key, buckets, hits);
  double* temporal = hits + kTopUrlHits;
  write_temporal(u, temporal);
  write_temporal(v, temporal + kTemporalBlock);
}

PairFeatures FeatureExtractor::extract_pair(std::string_view uid_a, std::string_view uid_b) const {
  auto i = store_->index_of(uid_a);
  auto j = store_->index_of(uid_b);
  if (i == j) throw Error("cannot extract features of self-pair '" + std::string(uid_a) + "'");
  PairFeatures pf;
  pf.values.resize(kFeatureDim);
  extract(i, j, pf.values);
  pf.uid_a = store_->profile(std::min(i, j)).uid;
  pf.uid_b = store_->profile(std::max(i, j)).uid;
  return pf;
}

FeatureMatrix FeatureExtractor::extract_batch(std::span<const UidPair> pairs, std::span<const int> labels,
                                              int threads) const {
  if (!labels.empty() && labels.size() != pairs.size()) throw Error("labels and pairs differ in length");
  FeatureMatrix m;
  m.dim = kFeatureDim;
  m.pairs.assign(pairs.begin(), pairs.end());
  m.labels.assign(pairs.size(), -1);
  if (!labels.empty()) std::copy(labels.begin(), labels.end(), m.labels.begin());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> idx(pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    idx[r] = {store_->index_of(pairs[r].a), store_->index_of(pairs[r].b)};
    if (idx[r].first == idx[r].second) throw Error("self-pair '" + pairs[r].a + "' in feature batch");
  }
  m.values.resize(pairs.size() * kFeatureDim);
  parallel_for(pairs.size(), threads, [&](std::size_t r) { extract(idx[r].first, idx[r].second, m.row(r)); });
  return m;
}

std::string format_features_csv(const FeatureMatrix& m) {
  std::string out = "uid_a,uid_b,label";
  for (std::size_t c = 0; c < m.dim; ++c) out += numbered(",f", c, 3);
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.pairs[r].a;
    out += ',';
    out += m.pairs[r].b;
    out += ',';
    if (m.labels[r] >= 0) out += std::to_string(m.labels[r]);
    for (double v : m.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix parse_features_csv(std::string_view text) {
  FeatureMatrix m;
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0].empty()) throw Error("features.csv: missing header");
  auto header = split(lines[0], ',');
  if (header.size() < 3 || header[0] != "uid_a" || header[1] != "uid_b" || header[2] != "label")
    throw Error("features.csv: header must start with uid_a,uid_b,label");
  m.dim = header.size() - 3;
  for (std::size_t c = 0; c < m.dim; ++c)
    if (header[3 + c] != numbered("f", c, 3)) throw Error("features.csv: unexpected column " + std::string(header[3 + c]));
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    auto cols = split(lines[l], ',');
    if (cols.size() != header.size())
      throw Error("features.csv line " + std::to_string(l + 1) + ": expected " + std::to_string(header.size()) +
                  " columns");
    m.pairs.emplace_back(std::string(cols[0]), std::string(cols[1]));
    m.labels.push_back(cols[2].empty() ? -1 : static_cast<int>(parse_int(cols[2], "features.csv label")));
    for (std::size_t c = 0; c < m.dim; ++c) m.values.push_back(parse_double(cols[3 + c], "features.csv"));
  }
  return m;
}

}  // namespace xlink
