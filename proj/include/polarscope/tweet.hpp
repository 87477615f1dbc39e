#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace polarscope {

struct Tweet {
  std::string id;
  std::string user_id;
  int64_t timestamp = 0;  // UTC epoch seconds
  std::string text;
  std::vector<std::string> hashtags;  // lowercase, no '#'
  std::vector<std::string> urls;
  std::optional<std::string> retweeted_tweet_id;
  std::optional<std::string> retweeted_user_id;
  std::optional<std::string> in_reply_to_user_id;
  std::optional<std::string> quoted_user_id;

  bool is_retweet() const { return retweeted_tweet_id.has_value(); }
};

// JSONL field names; override to ingest foreign exports.
struct TweetSchema {
  std::string id = "id";
  std::string user_id = "user_id";
  std::string timestamp = "timestamp";
  std::string text = "text";
  std::string hashtags = "hashtags";
  std::string urls = "urls";
  std::string retweeted_tweet_id = "retweeted_tweet_id";
  std::string retweeted_user_id = "retweeted_user_id";
  std::string in_reply_to_user_id = "in_reply_to_user_id";
  std::string quoted_user_id = "quoted_user_id";
};

struct IngestStats {
  size_t lines = 0;
  size_t accepted = 0;
  size_t malformed = 0;       // unparseable lines
  size_t missing_fields = 0;  // no id/user_id/text
  size_t duplicates = 0;      // id seen before, record rejected
};

class TweetStore {
 public:
  TweetStore() = default;
  explicit TweetStore(std::vector<Tweet> tweets);

  const std::vector<Tweet>& tweets() const { return tweets_; }  // (timestamp, id) order
  size_t size() const { return tweets_.size(); }
  bool empty() const { return tweets_.empty(); }

  const Tweet* by_id(const std::string& id) const;
  // indices into tweets(), in iteration order
  const std::vector<size_t>& by_user(const std::string& user_id) const;
  const std::vector<size_t>& by_hashtag(const std::string& tag) const;
  std::vector<std::string> user_ids() const;  // sorted

 private:
  std::vector<Tweet> tweets_;
  std::unordered_map<std::string, size_t> id_index_;
  std::unordered_map<std::string, std::vector<size_t>> user_index_;
  std::unordered_map<std::string, std::vector<size_t>> hashtag_index_;
  static const std::vector<size_t> empty_;
};

// JSONL ingest. Unreadable file throws DataError; bad lines are counted, not fatal.
std::pair<TweetStore, IngestStats> ingest_tweets(const std::string& path,
                                                 const TweetSchema& schema = {});

void write_tweets_jsonl(const std::string& path, const std::vector<Tweet>& tweets,
                        const std::string& provenance_json = "");

}  // namespace polarscope
