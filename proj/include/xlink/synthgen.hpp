#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "xlink/corpus.hpp"

namespace xlink {

/// Knobs of the synthetic cross-device corpus. Each person owns 2-3 devices; the devices share the
/// person's niche ("personal") URLs, topic mixture for title tokens, hour-of-day habit and active window.
struct SynthConfig {
  int n_persons = 2000;
  std::map<int, double> device_count_probs{{2, 0.95}, {3, 0.05}};

  // Events per device ~ lognormal(mu, sigma), clipped to [events_min, events_max]. Heavy users are
  // heavy on every device, so most of the log variance sits at the person level.
  double events_mu = 4.85;
  double events_sigma = 1.1;
  double activity_share = 0.95;  // share of log-volume variance common to a person's devices
  int events_min = 2;
  int events_max = 2000;

  // Background sites: Zipf popularity over domains, Zipf over pages inside a domain.
  int n_background_urls = 20000;
  double background_zipf = 0.7;
  int max_pages_per_domain = 40;

  // Niche sites shared by the devices of their owners. Owners pick sites with Zipf popularity
  // (exponent 0: uniform, every site has a few dozen owners).
  int n_niche_urls = 400;
  double niche_zipf = 0.0;
  int personal_urls_per_person = 5;
  double personal_keep_prob = 0.7;    // chance a device visits a given personal URL at all
  double personal_event_prob = 0.05;  // share of a device's events on its personal URLs
  double leak_prob = 0.001;          // per event: visit a random niche URL the person does not own

  // Private sites: created for one person only (a home page, a family blog).
  int private_urls_per_person = 0;
  double private_keep_prob = 0.5;
  double private_event_prob = 0.01;

  int vocab_size = 5000;
  int topics = 20;
  int topics_per_person = 3;
  int tokens_per_title = 6;
  double topic_affinity = 0.25;  // share of background visits restricted to the person's topics
  double session_continue_prob = 0.5;  // chance the next event stays on the current background site

  double hour_noise = 0.15;  // share of events at a uniformly random hour

  // Each person has a desktop and a phone (a third device is either). This share of a device's events
  // follows its type's hour and weekday profile instead of the person's habit.
  double device_type_weight = 0.4;

  std::string start_date = "2016-01-01";
  std::string end_date = "2016-06-30";

  double train_fraction = 0.7;
  std::uint64_t seed = 1;
};

SynthConfig synth_config_from_json(std::string_view text);
std::string synth_config_to_json(const SynthConfig& config);
void validate(const SynthConfig& config);

/// Generated corpus plus the ground truth behind it.
struct SynthCorpus {
  UserLogs logs;
  FidMaps maps;
  MatchPairs train_pairs;
  MatchPairs test_truth;
  std::set<std::string> test_uids;
  std::map<std::string, std::string> person_of;  // uid -> person id
  std::set<std::string> niche_domains;           // level-1 URLs of the shared niche sites
};

SynthCorpus generate_corpus(const SynthConfig& config);

/// Writes facts.jsonl, fid_url.tsv, fid_title.tsv, pairs.tsv, test_truth.tsv, test_uids.txt and person_map.tsv.
void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// generate_corpus + write_synth_corpus.
SynthCorpus generate(const SynthConfig& config, const std::filesystem::path& dir);

/// Days since the epoch of an ISO "YYYY-MM-DD" date.
std::int32_t parse_iso_date(std::string_view s);

}  // namespace xlink
