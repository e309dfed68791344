#include "xlink/corpus.hpp"

#include <algorithm>

#include "json.hpp"

namespace xlink {

namespace {

const std::vector<std::string> kNoTokens;

// Iterates '\n'-terminated lines; the last line may lack the terminator.
template <typename F>
void for_each_line(std::string_view text, F&& fn) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    fn(text.substr(start, end - start), lineno);
    start = end + 1;
  }
}

std::string where(const std::filesystem::path& path, std::size_t lineno) {
  return path.string() + ":" + std::to_string(lineno);
}

}  // namespace

const std::vector<std::string>& FidMaps::tokens(const std::string& fid) const {
  auto it = fid_to_tokens.find(fid);
  return it == fid_to_tokens.end() ? kNoTokens : it->second;
}

void add_match(MatchPairs& pairs, std::string x, std::string y) {
  if (x == y) throw Error("self-pair '" + x + "' is not a valid match");
  pairs.emplace(std::move(x), std::move(y));
}

std::string url_prefix(std::string_view url, int level) {
  if (level < 1 || level > 4) throw Error("url level must be in 1..4, got " + std::to_string(level));
  std::size_t pos = 0;
  for (int seg = 0; seg < level; ++seg) {
    pos = url.find('/', pos);
    if (pos == std::string_view::npos) return std::string(url);
    if (seg + 1 == level) return std::string(url.substr(0, pos));
    ++pos;
  }
  return std::string(url);
}

UserLogs parse_facts_text(std::string_view text, const LoadOptions& opts) {
  UserLogs logs;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    auto fail = [&](const std::string& why) -> Error {
      return Error("facts line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("uid") || !j.contains("events") || !j["uid"].is_string() ||
        !j["events"].is_array())
      throw fail("expected {\"uid\": string, \"events\": [...]}");
    UserLog log;
    log.uid = j["uid"].get<std::string>();
    if (log.uid.empty()) throw fail("empty uid");
    log.events.reserve(j["events"].size());
    for (const auto& ev : j["events"]) {
      if (!ev.is_object() || !ev.contains("fid") || !ev.contains("ts") || !ev["fid"].is_string() ||
          !ev["ts"].is_number_integer())
        throw fail("event must be {\"fid\": string, \"ts\": integer}");
      Event e{ev["fid"].get<std::string>(), ev["ts"].get<std::int64_t>()};
      if (e.fid.empty()) throw fail("empty fid");
      if (e.ts < 0) throw fail("negative timestamp");
      log.events.push_back(std::move(e));
    }
    if (log.events.size() < 2)
      throw fail("user '" + log.uid + "' has " + std::to_string(log.events.size()) + " events (minimum 2)");
    if (log.events.size() > opts.max_events_per_user)
      throw fail("user '" + log.uid + "' has " + std::to_string(log.events.size()) + " events (cap " +
                 std::to_string(opts.max_events_per_user) + ")");
    std::sort(log.events.begin(), log.events.end());
    auto uid = log.uid;
    if (!logs.emplace(uid, std::move(log)).second) throw fail("duplicate uid '" + uid + "'");
  });
  return logs;
}

UserLogs parse_facts(const std::filesystem::path& path, const LoadOptions& opts) {
  try {
    return parse_facts_text(read_file(path), opts);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

FidMaps parse_fid_maps(const std::filesystem::path& url_path, const std::filesystem::path& title_path) {
  FidMaps maps;
  for_each_line(read_file(url_path), [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size())
      throw Error(where(url_path, lineno) + ": expected 'fid<TAB>url'");
    std::string fid(line.substr(0, tab));
    std::string url(line.substr(tab + 1));
    auto [it, inserted] = maps.fid_to_url.emplace(fid, url);
    if (!inserted && it->second != url)
      throw Error(where(url_path, lineno) + ": fid '" + fid + "' maps to both '" + it->second + "' and '" +
                  url + "'");
  });
  for_each_line(read_file(title_path), [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw Error(where(title_path, lineno) + ": expected 'fid<TAB>tokens'");
    std::string fid(line.substr(0, tab));
    std::vector<std::string> tokens;
    for (auto tok : split(line.substr(tab + 1), ' '))
      if (!tok.empty()) tokens.emplace_back(tok);
    auto [it, inserted] = maps.fid_to_tokens.emplace(fid, tokens);
    if (!inserted && it->second != tokens)
      throw Error(where(title_path, lineno) + ": conflicting titles for fid '" + fid + "'");
  });
  return maps;
}

MatchPairs parse_pairs_text(std::string_view text) {
  MatchPairs pairs;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    auto cols = split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw Error("pairs line " + std::to_string(lineno) + ": expected 'uid1<TAB>uid2'");
    if (cols[0] == cols[1])
      throw Error("pairs line " + std::to_string(lineno) + ": self-pair '" + std::string(cols[0]) + "'");
    add_match(pairs, std::string(cols[0]), std::string(cols[1]));
  });
  return pairs;
}

MatchPairs parse_pairs(const std::filesystem::path& path) {
  try {
    return parse_pairs_text(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::set<std::string> parse_uid_list(const std::filesystem::path& path) {
  std::set<std::string> uids;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t) {
    if (!line.empty()) uids.emplace(line);
  });
  return uids;
}

std::string format_facts(const UserLogs& logs) {
  std::string out;
  for (const auto& [uid, log] : logs) {
    nlohmann::ordered_json j;
    j["uid"] = uid;
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : log.events) {
      nlohmann::ordered_json ev;
      ev["fid"] = e.fid;
      ev["ts"] = e.ts;
      events.push_back(std::move(ev));
    }
    j["events"] = std::move(events);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_fid_urls(const FidMaps& maps) {
  std::vector<std::pair<std::string_view, std::string_view>> rows(maps.fid_to_url.begin(), maps.fid_to_url.end());
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [fid, url] : rows) {
    out.append(fid).append("\t").append(url).append("\n");
  }
  return out;
}

std::string format_fid_titles(const FidMaps& maps) {
  std::vector<std::string_view> fids;
  fids.reserve(maps.fid_to_tokens.size());
  for (const auto& kv : maps.fid_to_tokens) fids.push_back(kv.first);
  std::sort(fids.begin(), fids.end());
  std::string out;
  for (auto fid : fids) {
    out.append(fid).append("\t");
    const auto& toks = maps.fid_to_tokens.at(std::string(fid));
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) out += ' ';
      out += toks[i];
    }
    out += '\n';
  }
  return out;
}

std::string format_pairs(const MatchPairs& pairs) {
  std::string out;
  for (const auto& p : pairs) out.append(p.a).append("\t").append(p.b).append("\n");
  return out;
}

std::string format_uid_list(const std::set<std::string>& uids) {
  std::string out;
  for (const auto& u : uids) out.append(u).append("\n");
  return out;
}

Corpus load_corpus(const std::filesystem::path& dir, const LoadOptions& opts) {
  Corpus c;
  c.logs = parse_facts(dir / files::kFacts, opts);
  c.maps = parse_fid_maps(dir / files::kFidUrl, dir / files::kFidTitle);
  c.train_pairs = parse_pairs(dir / files::kPairs);
  if (std::filesystem::exists(dir / files::kTestUids)) c.test_uids = parse_uid_list(dir / files::kTestUids);

  for (const auto& [uid, log] : c.logs)
    for (const auto& e : log.events)
      if (!c.maps.fid_to_url.count(e.fid))
        throw Error("user '" + uid + "' references fid '" + e.fid + "' with no URL in " +
                    std::string(files::kFidUrl));
  for (const auto& p : c.train_pairs)
    for (const auto* u : {&p.a, &p.b})
      if (!c.logs.count(*u)) throw Error("training pair references unknown uid '" + *u + "'");
  for (const auto& u : c.test_uids)
    if (!c.logs.count(u)) throw Error("test uid '" + u + "' has no browse log");
  return c;
}

std::uint64_t corpus_checksum(const std::filesystem::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto name : {files::kFacts, files::kFidUrl, files::kFidTitle, files::kPairs, files::kTestUids}) {
    auto p = dir / name;
    h = fnv1a(name, h);
    if (std::filesystem::exists(p)) h = file_checksum(p, h);
  }
  return h;
}

}  // namespace xlink
