#include "polarscope/tweet.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

using nlohmann::json;

const std::vector<size_t> TweetStore::empty_;

TweetStore::TweetStore(std::vector<Tweet> tweets) : tweets_(std::move(tweets)) {
  std::sort(tweets_.begin(), tweets_.end(), [](const Tweet& a, const Tweet& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.id < b.id;
  });
  for (size_t i = 0; i < tweets_.size(); ++i) {
    const Tweet& t = tweets_[i];
    if (t.id.empty()) throw DataError("tweet with empty id");
    if (!id_index_.emplace(t.id, i).second)
      throw DataError("duplicate tweet id in store: " + t.id);
    user_index_[t.user_id].push_back(i);
    for (const auto& h : t.hashtags) hashtag_index_[h].push_back(i);
  }
}

const Tweet* TweetStore::by_id(const std::string& id) const {
  auto it = id_index_.find(id);
  return it == id_index_.end() ? nullptr : &tweets_[it->second];
}

const std::vector<size_t>& TweetStore::by_user(const std::string& user_id) const {
  auto it = user_index_.find(user_id);
  return it == user_index_.end() ? empty_ : it->second;
}

const std::vector<size_t>& TweetStore::by_hashtag(const std::string& tag) const {
  auto it = hashtag_index_.find(tag);
  return it == hashtag_index_.end() ? empty_ : it->second;
}

std::vector<std::string> TweetStore::user_ids() const {
  std::vector<std::string> ids;
  ids.reserve(user_index_.size());
  for (const auto& [id, _] : user_index_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

std::optional<std::string> opt_str(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) return std::nullopt;
  std::string s = it->get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

std::pair<TweetStore, IngestStats> ingest_tweets(const std::string& path,
                                                 const TweetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read tweet file: " + path);

  IngestStats stats;
  std::vector<Tweet> tweets;
  std::set<std::string> seen_ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.lines;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++stats.malformed;
      continue;
    }
    if (stats.lines == 1 && j.contains("_provenance")) continue;  // header record

    Tweet t;
    auto id = opt_str(j, schema.id);
    auto uid = opt_str(j, schema.user_id);
    if (!id || !uid || !j.contains(schema.text) || !j[schema.text].is_string()) {
      ++stats.missing_fields;
      continue;
    }
    t.id = *id;
    t.user_id = *uid;
    t.text = j[schema.text].get<std::string>();
    if (j.contains(schema.timestamp) && j[schema.timestamp].is_number())
      t.timestamp = j[schema.timestamp].get<int64_t>();

    if (j.contains(schema.hashtags) && j[schema.hashtags].is_array()) {
      for (const auto& h : j[schema.hashtags])
        if (h.is_string()) t.hashtags.push_back(text::lower(text::normalize(h.get<std::string>())));
    } else {
      t.hashtags = text::extract_hashtags(t.text);
    }
    std::sort(t.hashtags.begin(), t.hashtags.end());
    t.hashtags.erase(std::unique(t.hashtags.begin(), t.hashtags.end()), t.hashtags.end());

    if (j.contains(schema.urls) && j[schema.urls].is_array())
      for (const auto& u : j[schema.urls])
        if (u.is_string()) t.urls.push_back(u.get<std::string>());

    t.retweeted_tweet_id = opt_str(j, schema.retweeted_tweet_id);
    t.retweeted_user_id = opt_str(j, schema.retweeted_user_id);
    t.in_reply_to_user_id = opt_str(j, schema.in_reply_to_user_id);
    t.quoted_user_id = opt_str(j, schema.quoted_user_id);

    if (!seen_ids.insert(t.id).second) {
      ++stats.duplicates;
      continue;
    }
    tweets.push_back(std::move(t));
    ++stats.accepted;
  }
  return {TweetStore(std::move(tweets)), stats};
}

void write_tweets_jsonl(const std::string& path, const std::vector<Tweet>& tweets,
                        const std::string& provenance_json) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write tweet file: " + path);
  if (!provenance_json.empty())
    out << "{\"_provenance\":" << provenance_json << "}\n";
  for (const Tweet& t : tweets) {
    json j;
    j["id"] = t.id;
    j["user_id"] = t.user_id;
    j["timestamp"] = t.timestamp;
    j["text"] = t.text;
    j["hashtags"] = t.hashtags;
    j["urls"] = t.urls;
    if (t.retweeted_tweet_id) j["retweeted_tweet_id"] = *t.retweeted_tweet_id;
    if (t.retweeted_user_id) j["retweeted_user_id"] = *t.retweeted_user_id;
    if (t.in_reply_to_user_id) j["in_reply_to_user_id"] = *t.in_reply_to_user_id;
    if (t.quoted_user_id) j["quoted_user_id"] = *t.quoted_user_id;
    out << j.dump() << "\n";
  }
}

}  // namespace polarscope
