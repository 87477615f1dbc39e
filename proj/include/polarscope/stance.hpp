#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "polarscope/tweet.hpp"

namespace polarscope {

enum class Stance { none, pro, anti, inconsistent };
enum class CombinedStance {
  consistent_anti_government,
  consistent_pro_government,
  inconsistent,
  other
};

const char* to_string(Stance s);
const char* to_string(CombinedStance s);
Stance stance_from_string(const std::string& s);

enum class Dimension { government, protest, venezuela };
const char* to_string(Dimension d);

// (dimension, hashtag) -> pro/anti
class HashtagLexicon {
 public:
  void add(Dimension dim, const std::string& hashtag, Stance stance);
  Stance lookup(Dimension dim, const std::string& hashtag) const;  // none if absent
  size_t size() const { return entries_.size(); }

  static HashtagLexicon load_csv(const std::string& path);  // dimension,hashtag,stance

 private:
  std::map<std::pair<int, std::string>, Stance> entries_;
};

// politician user_id -> pro/anti toward the government
class PoliticianRegistry {
 public:
  void add(const std::string& user_id, Stance stance);
  Stance lookup(const std::string& user_id) const;  // none if absent
  size_t size() const { return entries_.size(); }

  static PoliticianRegistry load_csv(const std::string& path);  // user_id,stance

 private:
  std::map<std::string, Stance> entries_;
};

struct UserStanceRecord {
  std::string user_id;
  Stance hashtag_stance = Stance::none;  // government dimension
  double p_hashtag = 0.0;
  Stance protest_stance = Stance::none;
  Stance retweet_stance = Stance::none;
  double p_retweet = 0.0;
  CombinedStance combined = CombinedStance::other;
};

struct StanceParams {
  double hashtag_threshold = 0.95;   // inclusive
  double retweet_threshold = 0.90;   // inclusive
  size_t min_tweets = 10;            // counts retweets too
  bool stance_bearing_denominator = true;  // false: all tweets in the denominator
};

Stance label_tweet_by_hashtags(const Tweet& tweet, const HashtagLexicon& lexicon,
                               Dimension dim);

// Majority share over stance-bearing tweets (description counts as one
// pseudo-tweet if it carries tags). Stance assigned iff share >= threshold.
std::pair<Stance, double> label_user_hashtag(const std::vector<const Tweet*>& tweets,
                                             const std::string& description,
                                             const HashtagLexicon& lexicon,
                                             Dimension dim,
                                             const StanceParams& params = {});

// Over retweets of registered politicians only.
std::pair<Stance, double> label_user_retweet(const std::vector<const Tweet*>& tweets,
                                             const PoliticianRegistry& registry,
                                             const StanceParams& params = {});

CombinedStance combine_dimensions(Stance gov, Stance protest);
Stance merge_methods(Stance hashtag, Stance retweet);

std::vector<UserStanceRecord> label_users(const TweetStore& store,
                                          const std::map<std::string, std::string>& descriptions,
                                          const HashtagLexicon& lexicon,
                                          const PoliticianRegistry& registry,
                                          const StanceParams& params = {});

// Percentages over the four combined categories, in enum order.
std::array<double, 4> stance_distribution(const std::vector<UserStanceRecord>& records);

void write_stance_csv(const std::string& path, const std::vector<UserStanceRecord>& records,
                      const std::string& provenance = "");
std::vector<UserStanceRecord> read_stance_csv(const std::string& path);

}  // namespace polarscope
