#include "xlink/synthgen.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <memory>
#include <numeric>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <unordered_set>

#include "json.hpp"

namespace xlink {

std::int32_t parse_iso_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || std::sscanf(std::string(s).c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3)
    throw Error("expected a YYYY-MM-DD date, got '" + std::string(s) + "'");
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw Error("invalid date '" + std::string(s) + "'");
  return static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

void validate(const SynthConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid synth config: ") + what);
  };
  require(c.n_persons > 0, "n_persons must be positive");
  require(!c.device_count_probs.empty(), "device_count_probs is empty");
  double total = 0.0;
  for (auto [count, p] : c.device_count_probs) {
    require(count >= 2 && count <= 3, "device counts must be 2 or 3");
    require(p >= 0.0, "device count probabilities must be nonnegative");
    total += p;
  }
  require(total > 0.0, "device count probabilities sum to zero");
  require(c.events_sigma >= 0.0, "events_sigma must be nonnegative");
  require(c.activity_share >= 0.0 && c.activity_share <= 1.0, "activity_share must be in [0, 1]");
  require(c.events_min >= 2 && c.events_max >= c.events_min && c.events_max <= 2000,
          "events must be clipped within [2, 2000]");
  require(c.n_background_urls > 0 && c.max_pages_per_domain > 0, "background catalog must be non-empty");
  require(c.n_niche_urls > 0 && c.personal_urls_per_person > 0, "niche catalog must be non-empty");
  require(c.personal_urls_per_person <= c.n_niche_urls, "more personal URLs per person than niche URLs");
  require(c.vocab_size > 0 && c.topics > 0 && c.tokens_per_title > 0, "vocabulary and topics must be positive");
  require(c.topics_per_person > 0 && c.topics_per_person <= c.topics, "topics_per_person must be in 1..topics");
  for (double p : {c.personal_keep_prob, c.personal_event_prob, c.leak_prob, c.topic_affinity, c.hour_noise,
                   c.device_type_weight})
    require(p >= 0.0 && p <= 1.0, "probabilities must lie in [0, 1]");
  require(c.session_continue_prob >= 0.0 && c.session_continue_prob < 1.0, "session_continue_prob must be in [0, 1)");
  require(c.private_urls_per_person >= 0, "private_urls_per_person must be nonnegative");
  require(c.private_keep_prob >= 0.0 && c.private_keep_prob <= 1.0 && c.private_event_prob >= 0.0,
          "private probabilities must lie in [0, 1]");
  require(c.personal_event_prob + c.private_event_prob + c.leak_prob <= 1.0,
          "personal_event_prob + private_event_prob + leak_prob exceeds 1");
  require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "train_fraction must be in (0, 1)");
  require(parse_iso_date(c.end_date) - parse_iso_date(c.start_date) >= 6, "date range must span at least a week");
}

SynthConfig synth_config_from_json(std::string_view text) {
  SynthConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed synth config: ") + e.what());
  }
  if (!j.is_object()) throw Error("synth config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_persons") c.n_persons = v.get<int>();
      else if (key == "device_count_probs") {
        c.device_count_probs.clear();
        for (const auto& [k, p] : v.items()) c.device_count_probs[std::stoi(k)] = p.get<double>();
      }
      else if (key == "events_mu") c.events_mu = v.get<double>();
      else if (key == "events_sigma") c.events_sigma = v.get<double>();
      else if (key == "activity_share") c.activity_share = v.get<double>();
      else if (key == "events_min") c.events_min = v.get<int>();
      else if (key == "events_max") c.events_max = v.get<int>();
      else if (key == "n_background_urls") c.n_background_urls = v.get<int>();
      else if (key == "background_zipf") c.background_zipf = v.get<double>();
      else if (key == "max_pages_per_domain") c.max_pages_per_domain = v.get<int>();
      else if (key == "n_niche_urls") c.n_niche_urls = v.get<int>();
      else if (key == "niche_zipf") c.niche_zipf = v.get<double>();
      else if (key == "personal_urls_per_person") c.personal_urls_per_person = v.get<int>();
      else if (key == "personal_keep_prob") c.personal_keep_prob = v.get<double>();
      else if (key == "personal_event_prob") c.personal_event_prob = v.get<double>();
      else if (key == "private_urls_per_person") c.private_urls_per_person = v.get<int>();
      else if (key == "private_keep_prob") c.private_keep_prob = v.get<double>();
      else if (key == "private_event_prob") c.private_event_prob = v.get<double>();
      else if (key == "leak_prob") c.leak_prob = v.get<double>();
      else if (key == "vocab_size") c.vocab_size = v.get<int>();
      else if (key == "topics") c.topics = v.get<int>();
      else if (key == "topics_per_person") c.topics_per_person = v.get<int>();
      else if (key == "tokens_per_title") c.tokens_per_title = v.get<int>();
      else if (key == "topic_affinity") c.topic_affinity = v.get<double>();
      else if (key == "hour_noise") c.hour_noise = v.get<double>();
      else if (key == "session_continue_prob") c.session_continue_prob = v.get<double>();
      else if (key == "device_type_weight") c.device_type_weight = v.get<double>();
      else if (key == "start_date") c.start_date = v.get<std::string>();
      else if (key == "end_date") c.end_date = v.get<std::string>();
      else if (key == "train_fraction") c.train_fraction = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw Error("unknown synth config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synth config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error("synth config: device_count_probs keys must be integers");
  }
  validate(c);
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["n_persons"] = c.n_persons;
  nlohmann::ordered_json probs;
  for (auto [k, p] : c.device_count_probs) probs[std::to_string(k)] = p;
  j["device_count_probs"] = probs;
  j["events_mu"] = c.events_mu;
  j["events_sigma"] = c.events_sigma;
  j["activity_share"] = c.activity_share;
  j["events_min"] = c.events_min;
  j["events_max"] = c.events_max;
  j["n_background_urls"] = c.n_background_urls;
  j["background_zipf"] = c.background_zipf;
  j["max_pages_per_domain"] = c.max_pages_per_domain;
  j["n_niche_urls"] = c.n_niche_urls;
  j["niche_zipf"] = c.niche_zipf;
  j["personal_urls_per_person"] = c.personal_urls_per_person;
  j["personal_keep_prob"] = c.personal_keep_prob;
  j["personal_event_prob"] = c.personal_event_prob;
  j["private_urls_per_person"] = c.private_urls_per_person;
  j["private_keep_prob"] = c.private_keep_prob;
  j["private_event_prob"] = c.private_event_prob;
  j["leak_prob"] = c.leak_prob;
  j["vocab_size"] = c.vocab_size;
  j["topics"] = c.topics;
  j["topics_per_person"] = c.topics_per_person;
  j["tokens_per_title"] = c.tokens_per_title;
  j["topic_affinity"] = c.topic_affinity;
  j["hour_noise"] = c.hour_noise;
  j["session_continue_prob"] = c.session_continue_prob;
  j["device_type_weight"] = c.device_type_weight;
  j["start_date"] = c.start_date;
  j["end_date"] = c.end_date;
  j["train_fraction"] = c.train_fraction;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

namespace {

struct Page {
  std::string fid;
};

struct Site {
  std::vector<std::string> fids;
  std::unique_ptr<std::discrete_distribution<int>> page_pick;  // Zipf over pages; null for single-page sites
  int topic = 0;
};

enum class DeviceType { Desktop, Phone };

struct Person {
  std::vector<int> topics;
  std::vector<int> personal;  // niche site ids
  std::vector<Site> own;      // sites nobody else visits on purpose
  double c1, c2, s1, s2, w1;  // hour habit: two wrapped bumps
  std::array<double, 7> dow{};
  std::int32_t start = 0, end = 0;
  std::vector<std::string> devices;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : cfg_(c), rng_(c.seed) {}

  SynthCorpus run() {
    validate(cfg_);
    day0_ = parse_iso_date(cfg_.start_date);
    n_days_ = parse_iso_date(cfg_.end_date) - day0_ + 1;
    make_topics();
    make_background();
    make_niche();
    make_persons();
    split();
    return std::move(out_);
  }

 private:
  std::string hex_id() {
    while (true) {
      char buf[17];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng_()));
      if (used_.insert(buf).second) return buf;
    }
  }

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double gauss(double mean, double sd) {
    return sd > 0.0 ? std::normal_distribution<double>(mean, sd)(rng_) : mean;
  }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  static std::vector<double> zipf_weights(int n, double s) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 1.0 / std::pow(i + 1.0, s);
    return w;
  }

  void make_topics() {
    // Each topic ranks a random 200-token slice of the vocabulary with Zipf weights.
    const int span = std::min(cfg_.vocab_size, 200);
    topic_tokens_.resize(static_cast<std::size_t>(cfg_.topics));
    std::vector<int> vocab(static_cast<std::size_t>(cfg_.vocab_size));
    std::iota(vocab.begin(), vocab.end(), 0);
    auto weights = zipf_weights(span, 1.0);
    for (int t = 0; t < cfg_.topics; ++t) {
      std::shuffle(vocab.begin(), vocab.end(), rng_);
      topic_tokens_[static_cast<std::size_t>(t)].assign(vocab.begin(), vocab.begin() + span);
    }
    token_pick_ = std::discrete_distribution<int>(weights.begin(), weights.end());
  }

  std::vector<std::string> title(int topic) {
    std::vector<std::string> toks;
    const auto& pool = topic_tokens_[static_cast<std::size_t>(topic)];
    for (int i = 0; i < cfg_.tokens_per_title; ++i)
      toks.push_back(std::to_string(pool[static_cast<std::size_t>(token_pick_(rng_))]));
    return toks;
  }

  Site make_site(int n_pages, int topic) {
    Site s;
    s.topic = topic;
    std::string domain = hex_id();
    int n_sections = std::max(1, n_pages / 6);
    std::vector<std::string> sections;
    for (int i = 0; i < n_sections; ++i) sections.push_back(hex_id());
    for (int p = 0; p < n_pages; ++p) {
      std::string url = domain + "/" + sections[static_cast<std::size_t>(uniform_int(0, n_sections - 1))];
      int depth = uniform_int(2, 4);
      for (int d = 2; d < depth; ++d) url += "/" + hex_id();
      std::string fid = hex_id();
      out_.maps.fid_to_url[fid] = url;
      out_.maps.fid_to_tokens[fid] = title(topic);
      s.fids.push_back(fid);
    }
    if (n_pages > 1) {
      auto w = zipf_weights(n_pages, 1.0);
      s.page_pick = std::make_unique<std::discrete_distribution<int>>(w.begin(), w.end());
    }
    return s;
  }

  const std::string& visit(Site& s) {
    if (!s.page_pick) return s.fids.front();
    return s.fids[static_cast<std::size_t>((*s.page_pick)(rng_))];
  }

  void make_background() {
    const int n = cfg_.n_background_urls;
    auto weights = zipf_weights(n, cfg_.background_zipf);
    background_.reserve(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> by_topic(static_cast<std::size_t>(cfg_.topics));
    std::vector<std::vector<double>> topic_w(static_cast<std::size_t>(cfg_.topics));
    for (int d = 0; d < n; ++d) {
      int pages = std::clamp(static_cast<int>(std::lround(cfg_.max_pages_per_domain / std::sqrt(d + 1.0))), 1,
                             cfg_.max_pages_per_domain);
      int topic = uniform_int(0, cfg_.topics - 1);
      background_.push_back(make_site(pages, topic));
      by_topic[static_cast<std::size_t>(topic)].push_back(d);
      topic_w[static_cast<std::size_t>(topic)].push_back(weights[static_cast<std::size_t>(d)]);
    }
    background_pick_ = std::discrete_distribution<int>(weights.begin(), weights.end());
    topic_sites_ = std::move(by_topic);
    for (auto& w : topic_w) {
      if (w.empty()) w.push_back(1.0);
      topic_pick_.emplace_back(w.begin(), w.end());
    }
  }

  void make_niche() {
    for (int i = 0; i < cfg_.n_niche_urls; ++i) {
      niche_.push_back(make_site(uniform_int(1, 2), uniform_int(0, cfg_.topics - 1)));
      out_.niche_domains.insert(url_prefix(out_.maps.fid_to_url.at(niche_.back().fids.front()), 1));
    }
    auto w = zipf_weights(cfg_.n_niche_urls, cfg_.niche_zipf);
    // Popularity must not follow catalog order, which is also id-creation order.
    std::shuffle(w.begin(), w.end(), rng_);
    niche_owner_pick_ = std::discrete_distribution<int>(w.begin(), w.end());
  }

  // Desktops keep office hours on weekdays; phones peak in the evening and at weekends.
  int type_hour(DeviceType t) {
    double h;
    if (t == DeviceType::Desktop) {
      h = std::normal_distribution<double>(13.0, 2.5)(rng_);
    } else {
      bool evening = uniform() < 0.7;
      h = std::normal_distribution<double>(evening ? 21.0 : 8.0, evening ? 1.5 : 1.0)(rng_);
    }
    return wrap_hour(h);
  }

  static int wrap_hour(double h) {
    int hour = static_cast<int>(std::floor(h));
    return ((hour % 24) + 24) % 24;
  }

  int hour_of(const Person& p, DeviceType t) {
    if (uniform() < cfg_.device_type_weight) return type_hour(t);
    if (uniform() < cfg_.hour_noise) return uniform_int(0, 23);
    bool first = uniform() < p.w1;
    return wrap_hour(std::normal_distribution<double>(first ? p.c1 : p.c2, first ? p.s1 : p.s2)(rng_));
  }

  std::int32_t day_of(const Person& p, DeviceType t, std::int32_t lo, std::int32_t hi) {
    // Uniform day in [lo, hi] thinned by a blend of the person's and the device type's weekday weights.
    static constexpr std::array<double, 7> kDesktopDow{1, 1, 1, 1, 1, 0.3, 0.3};
    static constexpr std::array<double, 7> kPhoneDow{0.75, 0.75, 0.75, 0.75, 0.85, 1.3, 1.3};
    const auto& type_dow = t == DeviceType::Desktop ? kDesktopDow : kPhoneDow;
    const double w = cfg_.device_type_weight;
    const double top = *std::max_element(p.dow.begin(), p.dow.end());
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto d = uniform_int(lo, hi);
      auto wd = static_cast<std::size_t>((static_cast<std::int64_t>(d) + 3) % 7);  // 1970-01-01 was a Thursday
      double weight = (1.0 - w) * p.dow[wd] / top + w * type_dow[wd] / 1.3;
      if (uniform() <= weight) return d;
    }
    return uniform_int(lo, hi);
  }

  void make_persons() {
    std::vector<int> counts;
    std::vector<double> probs;
    for (auto [k, p] : cfg_.device_count_probs) {
      counts.push_back(k);
      probs.push_back(p);
    }
    std::discrete_distribution<int> device_pick(probs.begin(), probs.end());
    const double sigma_person = cfg_.events_sigma * std::sqrt(cfg_.activity_share);
    const double sigma_device = cfg_.events_sigma * std::sqrt(1.0 - cfg_.activity_share);

    persons_.resize(static_cast<std::size_t>(cfg_.n_persons));
    for (int pid = 0; pid < cfg_.n_persons; ++pid) {
      auto& p = persons_[static_cast<std::size_t>(pid)];
      std::vector<int> all_topics(static_cast<std::size_t>(cfg_.topics));
      std::iota(all_topics.begin(), all_topics.end(), 0);
      std::shuffle(all_topics.begin(), all_topics.end(), rng_);
      p.topics.assign(all_topics.begin(), all_topics.begin() + cfg_.topics_per_person);
      while (static_cast<int>(p.personal.size()) < cfg_.personal_urls_per_person) {
        int site = niche_owner_pick_(rng_);
        if (std::find(p.personal.begin(), p.personal.end(), site) == p.personal.end()) p.personal.push_back(site);
      }
      for (int i = 0; i < cfg_.private_urls_per_person; ++i)
        p.own.push_back(make_site(uniform_int(1, 3), p.topics.front()));
      p.c1 = uniform(0.0, 24.0);
      p.c2 = uniform(0.0, 24.0);
      p.s1 = uniform(1.0, 3.0);
      p.s2 = uniform(1.0, 3.0);
      p.w1 = uniform(0.3, 0.7);
      for (auto& w : p.dow) w = uniform(0.5, 1.5);
      std::int32_t len = uniform_int(std::min(30, n_days_), n_days_);
      p.start = day0_ + uniform_int(0, n_days_ - len);
      p.end = p.start + len - 1;

      const double log_level = gauss(cfg_.events_mu, sigma_person);
      int n_devices = counts[static_cast<std::size_t>(device_pick(rng_))];
      for (int d = 0; d < n_devices; ++d) {
        // one desktop and one phone per person; a third device is either
        DeviceType type = d == 0 ? DeviceType::Desktop
                          : d == 1 ? DeviceType::Phone
                                   : (uniform() < 0.5 ? DeviceType::Desktop : DeviceType::Phone);
        UserLog log;
        log.uid = hex_id();
        std::int32_t span = p.end - p.start;
        std::int32_t lo = p.start + static_cast<std::int32_t>(uniform(0.0, 0.3) * span);
        std::int32_t hi = p.end - static_cast<std::int32_t>(uniform(0.0, 0.3) * span);
        std::vector<int> mine;
        for (int site : p.personal)
          if (uniform() < cfg_.personal_keep_prob) mine.push_back(site);
        std::vector<int> unseen = mine;  // every kept personal site is visited at least once
        std::vector<Site*> own;
        for (auto& site : p.own)
          if (uniform() < cfg_.private_keep_prob) own.push_back(&site);
        int n_events = std::clamp(static_cast<int>(std::lround(std::exp(gauss(log_level, sigma_device)))),
                                  cfg_.events_min, cfg_.events_max);
        auto pick = [&](const std::vector<int>& ids) -> int {
          return ids[static_cast<std::size_t>(uniform_int(0, static_cast<int>(ids.size()) - 1))];
        };
        Site* session = nullptr;  // background site of the running browsing session
        std::int64_t ts = 0;
        for (int e = 0; e < n_events; ++e) {
          if (session && uniform() < cfg_.session_continue_prob) {
            ts += uniform_int(30, 600);
            log.events.push_back(Event{visit(*session), ts});
            continue;
          }
          session = nullptr;
          ts = static_cast<std::int64_t>(day_of(p, type, lo, hi)) * kSecondsPerDayLocal + hour_of(p, type) * 3600 +
               uniform_int(0, 3599);
          const double r = uniform();
          const double private_end = cfg_.leak_prob + cfg_.private_event_prob;
          auto any = [&](const std::vector<Site*>& sites) {
            return sites[static_cast<std::size_t>(uniform_int(0, static_cast<int>(sites.size()) - 1))];
          };
          Site* site;
          if (!unseen.empty()) {
            site = &niche_[static_cast<std::size_t>(unseen.back())];
            unseen.pop_back();
          } else if (r < cfg_.leak_prob) {
            site = &niche_[static_cast<std::size_t>(uniform_int(0, cfg_.n_niche_urls - 1))];
          } else if (r < private_end && !own.empty()) {
            site = any(own);
          } else if (r >= private_end && r < private_end + cfg_.personal_event_prob && !mine.empty()) {
            site = &niche_[static_cast<std::size_t>(pick(mine))];
          } else {
            auto topic = static_cast<std::size_t>(pick(p.topics));
            bool on_topic = uniform() < cfg_.topic_affinity && !topic_sites_[topic].empty();
            int id = on_topic ? topic_sites_[topic][static_cast<std::size_t>(topic_pick_[topic](rng_))]
                              : background_pick_(rng_);
            site = session = &background_[static_cast<std::size_t>(id)];
          }
          const std::string* fid = &visit(*site);
          log.events.push_back(Event{*fid, ts});
        }
        std::sort(log.events.begin(), log.events.end());
        p.devices.push_back(log.uid);
        char pname[16];
        std::snprintf(pname, sizeof(pname), "p%06d", pid);
        out_.person_of[log.uid] = pname;
        auto uid = log.uid;
        out_.logs.emplace(uid, std::move(log));
      }
    }
  }

  void split() {
    std::vector<int> order(persons_.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    auto n_train = static_cast<std::size_t>(std::lround(cfg_.train_fraction * static_cast<double>(order.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, order.size() - (order.size() > 1 ? 1 : 0));
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& p = persons_[static_cast<std::size_t>(order[i])];
      bool train = i < n_train;
      for (std::size_t a = 0; a < p.devices.size(); ++a) {
        if (!train) out_.test_uids.insert(p.devices[a]);
        for (std::size_t b = a + 1; b < p.devices.size(); ++b)
          add_match(train ? out_.train_pairs : out_.test_truth, p.devices[a], p.devices[b]);
      }
    }
  }

  static constexpr std::int64_t kSecondsPerDayLocal = 86400;

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  std::unordered_set<std::string> used_;
  std::int32_t day0_ = 0;
  std::int32_t n_days_ = 0;
  std::vector<std::vector<int>> topic_tokens_;
  std::discrete_distribution<int> token_pick_;
  std::vector<Site> background_;
  std::discrete_distribution<int> background_pick_;
  std::vector<std::vector<int>> topic_sites_;
  std::vector<std::discrete_distribution<int>> topic_pick_;
  std::vector<Site> niche_;
  std::discrete_distribution<int> niche_owner_pick_;
  std::vector<Person> persons_;
  SynthCorpus out_;
};

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& config) { return Generator(config).run(); }

void write_synth_corpus(const SynthCorpus& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / files::kFacts, format_facts(c.logs));
  write_file(dir / files::kFidUrl, format_fid_urls(c.maps));
  write_file(dir / files::kFidTitle, format_fid_titles(c.maps));
  write_file(dir / files::kPairs, format_pairs(c.train_pairs));
  write_file(dir / files::kTestTruth, format_pairs(c.test_truth));
  write_file(dir / files::kTestUids, format_uid_list(c.test_uids));
  std::string pm;
  for (const auto& [uid, person] : c.person_of) pm.append(uid).append("\t").append(person).append("\n");
  write_file(dir / files::kPersonMap, pm);
}

SynthCorpus generate(const SynthConfig& config, const std::filesystem::path& dir) {
  auto c = generate_corpus(config);
  write_synth_corpus(c, dir);
  return c;
}

}  // namespace xlink
