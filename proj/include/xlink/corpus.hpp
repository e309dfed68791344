#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlink/common.hpp"

namespace xlink {

struct Event {
  std::string fid;
  std::int64_t ts = 0;  // Unix seconds, UTC

  friend bool operator==(const Event&, const Event&) = default;
  friend auto operator<=>(const Event& l, const Event& r) {
    if (auto c = l.ts <=> r.ts; c != 0) return c;
    return l.fid <=> r.fid;
  }
};

struct UserLog {
  std::string uid;
  std::vector<Event> events;  // ascending by (ts, fid)
};

using UserLogs = std::map<std::string, UserLog>;

struct FidMaps {
  std::unordered_map<std::string, std::string> fid_to_url;
  std::unordered_map<std::string, std::vector<std::string>> fid_to_tokens;

  const std::vector<std::string>& tokens(const std::string& fid) const;
};

/// Canonical unordered uid pairs. Insert through add_match() to keep the invariants.
using MatchPairs = std::set<UidPair>;

void add_match(MatchPairs& pairs, std::string x, std::string y);

struct Corpus {
  UserLogs logs;
  FidMaps maps;
  MatchPairs train_pairs;
  std::set<std::string> test_uids;
};

struct LoadOptions {
  std::size_t max_events_per_user = 2000;
};

/// Standard file names inside a corpus directory.
namespace files {
inline constexpr std::string_view kFacts = "facts.jsonl";
inline constexpr std::string_view kFidUrl = "fid_url.tsv";
inline constexpr std::string_view kFidTitle = "fid_title.tsv";
inline constexpr std::string_view kPairs = "pairs.tsv";
inline constexpr std::string_view kTestUids = "test_uids.txt";
inline constexpr std::string_view kTestTruth = "test_truth.tsv";
inline constexpr std::string_view kPersonMap = "person_map.tsv";
}  // namespace files

/// First `level` '/'-separated segments. URLs shallower than `level` come back unchanged.
std::string url_prefix(std::string_view url, int level);

UserLogs parse_facts(const std::filesystem::path& path, const LoadOptions& opts = {});
UserLogs parse_facts_text(std::string_view text, const LoadOptions& opts = {});
FidMaps parse_fid_maps(const std::filesystem::path& url_path, const std::filesystem::path& title_path);
MatchPairs parse_pairs(const std::filesystem::path& path);
MatchPairs parse_pairs_text(std::string_view text);
std::set<std::string> parse_uid_list(const std::filesystem::path& path);

// Canonical writers: rows sorted, '\n' line endings, no trailing whitespace.
std::string format_facts(const UserLogs& logs);
std::string format_fid_urls(const FidMaps& maps);
std::string format_fid_titles(const FidMaps& maps);
std::string format_pairs(const MatchPairs& pairs);
std::string format_uid_list(const std::set<std::string>& uids);

Corpus load_corpus(const std::filesystem::path& dir, const LoadOptions& opts = {});

/// Checksum over all corpus input files, used to invalidate derived caches.
std::uint64_t corpus_checksum(const std::filesystem::path& dir);

}  // namespace xlink
