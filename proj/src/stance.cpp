#include "polarscope/stance.hpp"

#include <algorithm>
#include <fstream>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

const char* to_string(Stance s) {
  switch (s) {
    case Stance::none: return "none";
    case Stance::pro: return "pro";
    case Stance::anti: return "anti";
    case Stance::inconsistent: return "inconsistent";
  }
  return "none";
}

const char* to_string(CombinedStance s) {
  switch (s) {
    case CombinedStance::consistent_anti_government: return "consistent_anti_government";
    case CombinedStance::consistent_pro_government: return "consistent_pro_government";
    case CombinedStance::inconsistent: return "inconsistent";
    case CombinedStance::other: return "other";
  }
  return "other";
}

Stance stance_from_string(const std::string& s) {
  if (s == "pro") return Stance::pro;
  if (s == "anti") return Stance::anti;
  if (s == "inconsistent") return Stance::inconsistent;
  if (s == "none" || s.empty()) return Stance::none;
  throw DataError("unknown stance label: " + s);
}

const char* to_string(Dimension d) {
  switch (d) {
    case Dimension::government: return "government";
    case Dimension::protest: return "protest";
    case Dimension::venezuela: return "venezuela";
  }
  return "government";
}

namespace {

Dimension dimension_from_string(const std::string& s) {
  if (s == "government") return Dimension::government;
  if (s == "protest") return Dimension::protest;
  if (s == "venezuela") return Dimension::venezuela;
  throw DataError("unknown dimension: " + s);
}

}  // namespace

void HashtagLexicon::add(Dimension dim, const std::string& hashtag, Stance stance) {
  if (stance != Stance::pro && stance != Stance::anti)
    throw DataError("lexicon stance must be pro or anti");
  std::string tag = text::lower(text::normalize(hashtag));
  auto key = std::make_pair(static_cast<int>(dim), tag);
  auto it = entries_.find(key);
  if (it != entries_.end() && it->second != stance)
    throw DataError("conflicting lexicon stance for #" + tag);
  entries_[key] = stance;
}

Stance HashtagLexicon::lookup(Dimension dim, const std::string& hashtag) const {
  auto it = entries_.find(std::make_pair(static_cast<int>(dim), hashtag));
  return it == entries_.end() ? Stance::none : it->second;
}

HashtagLexicon HashtagLexicon::load_csv(const std::string& path) {
  HashtagLexicon lex;
  bool first = true;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = util::csv_parse_row(line);
    if (first && fields.size() >= 3 && fields[0] == "dimension") {
      first = false;
      continue;  // header
    }
    first = false;
    if (fields.size() != 3) throw DataError("bad lexicon row: " + line);
    lex.add(dimension_from_string(fields[0]), fields[1], stance_from_string(fields[2]));
  }
  return lex;
}

void PoliticianRegistry::add(const std::string& user_id, Stance stance) {
  if (stance != Stance::pro && stance != Stance::anti)
    throw DataError("politician stance must be pro or anti");
  auto it = entries_.find(user_id);
  if (it != entries_.end() && it->second != stance)
    throw DataError("conflicting politician stance for " + user_id);
  entries_[user_id] = stance;
}

Stance PoliticianRegistry::lookup(const std::string& user_id) const {
  auto it = entries_.find(user_id);
  return it == entries_.end() ? Stance::none : it->second;
}

PoliticianRegistry PoliticianRegistry::load_csv(const std::string& path) {
  PoliticianRegistry reg;
  bool first = true;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = util::csv_parse_row(line);
    if (first && fields.size() >= 2 && fields[0] == "user_id") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 2) throw DataError("bad politician row: " + line);
    reg.add(fields[0], stance_from_string(fields[1]));
  }
  return reg;
}

Stance label_tweet_by_hashtags(const Tweet& tweet, const HashtagLexicon& lexicon,
                               Dimension dim) {
  bool pro = false, anti = false;
  for (const auto& tag : tweet.hashtags) {
    Stance s = lexicon.lookup(dim, tag);
    if (s == Stance::pro) pro = true;
    else if (s == Stance::anti) anti = true;
  }
  if (pro && anti) return Stance::inconsistent;
  if (pro) return Stance::pro;
  if (anti) return Stance::anti;
  return Stance::none;
}

namespace {

Stance label_description(const std::string& description, const HashtagLexicon& lexicon,
                         Dimension dim) {
  if (description.empty()) return Stance::none;
  Tweet pseudo;
  pseudo.hashtags = text::extract_hashtags(description);
  return label_tweet_by_hashtags(pseudo, lexicon, dim);
}

std::pair<Stance, double> threshold_vote(size_t n_pro, size_t n_anti, size_t denom,
                                         double threshold) {
  if (denom == 0) return {Stance::none, 0.0};
  size_t majority = std::max(n_pro, n_anti);
  double p = static_cast<double>(majority) / static_cast<double>(denom);
  if (p < threshold) return {Stance::none, p};
  return {n_pro >= n_anti ? Stance::pro : Stance::anti, p};
}

}  // namespace

std::pair<Stance, double> label_user_hashtag(const std::vector<const Tweet*>& tweets,
                                             const std::string& description,
                                             const HashtagLexicon& lexicon,
                                             Dimension dim,
                                             const StanceParams& params) {
  if (tweets.size() < params.min_tweets) return {Stance::none, 0.0};

  size_t n_pro = 0, n_anti = 0, n_inconsistent = 0;
  for (const Tweet* t : tweets) {
    switch (label_tweet_by_hashtags(*t, lexicon, dim)) {
      case Stance::pro: ++n_pro; break;
      case Stance::anti: ++n_anti; break;
      case Stance::inconsistent: ++n_inconsistent; break;
      case Stance::none: break;
    }
  }
  switch (label_description(description, lexicon, dim)) {
    case Stance::pro: ++n_pro; break;
    case Stance::anti: ++n_anti; break;
    case Stance::inconsistent: ++n_inconsistent; break;
    case Stance::none: break;
  }

  size_t denom = params.stance_bearing_denominator
                     ? n_pro + n_anti + n_inconsistent
                     : tweets.size() + (description.empty() ? 0 : 1);
  return threshold_vote(n_pro, n_anti, denom, params.hashtag_threshold);
}

std::pair<Stance, double> label_user_retweet(const std::vector<const Tweet*>& tweets,
                                             const PoliticianRegistry& registry,
                                             const StanceParams& params) {
  size_t n_pro = 0, n_anti = 0;
  for (const Tweet* t : tweets) {
    if (!t->retweeted_user_id) continue;
    switch (registry.lookup(*t->retweeted_user_id)) {
      case Stance::pro: ++n_pro; break;
      case Stance::anti: ++n_anti; break;
      default: break;
    }
  }
  return threshold_vote(n_pro, n_anti, n_pro + n_anti, params.retweet_threshold);
}

CombinedStance combine_dimensions(Stance gov, Stance protest) {
  // self-contradiction on either dimension dominates
  if (gov == Stance::inconsistent || protest == Stance::inconsistent)
    return CombinedStance::inconsistent;
  if (gov == Stance::pro && protest == Stance::anti)
    return CombinedStance::consistent_pro_government;
  if (gov == Stance::anti && protest == Stance::pro)
    return CombinedStance::consistent_anti_government;
  if (gov != Stance::none && gov == protest) return CombinedStance::inconsistent;
  if (protest == Stance::none && gov == Stance::pro)
    return CombinedStance::consistent_pro_government;
  if (protest == Stance::none && gov == Stance::anti)
    return CombinedStance::consistent_anti_government;
  return CombinedStance::other;
}

Stance merge_methods(Stance hashtag, Stance retweet) {
  if (hashtag == Stance::none) return retweet;
  if (retweet == Stance::none) return hashtag;
  if (hashtag == retweet) return hashtag;
  return Stance::inconsistent;
}

std::vector<UserStanceRecord> label_users(const TweetStore& store,
                                          const std::map<std::string, std::string>& descriptions,
                                          const HashtagLexicon& lexicon,
                                          const PoliticianRegistry& registry,
                                          const StanceParams& params) {
  std::vector<UserStanceRecord> records;
  for (const std::string& uid : store.user_ids()) {
    std::vector<const Tweet*> tweets;
    for (size_t i : store.by_user(uid)) tweets.push_back(&store.tweets()[i]);
    if (tweets.size() < params.min_tweets) continue;  // user not considered at all

    std::string desc;
    if (auto it = descriptions.find(uid); it != descriptions.end()) desc = it->second;

    UserStanceRecord rec;
    rec.user_id = uid;
    std::tie(rec.hashtag_stance, rec.p_hashtag) =
        label_user_hashtag(tweets, desc, lexicon, Dimension::government, params);
    rec.protest_stance =
        label_user_hashtag(tweets, desc, lexicon, Dimension::protest, params).first;
    std::tie(rec.retweet_stance, rec.p_retweet) =
        label_user_retweet(tweets, registry, params);

    Stance gov = merge_methods(rec.hashtag_stance, rec.retweet_stance);
    rec.combined = combine_dimensions(gov, rec.protest_stance);
    records.push_back(std::move(rec));
  }
  return records;
}

std::array<double, 4> stance_distribution(const std::vector<UserStanceRecord>& records) {
  if (records.empty()) throw DataError("stance distribution over zero users");
  std::array<double, 4> pct{0, 0, 0, 0};
  for (const auto& r : records) pct[static_cast<size_t>(r.combined)] += 1.0;
  for (auto& p : pct) p = 100.0 * p / static_cast<double>(records.size());
  return pct;
}

void write_stance_csv(const std::string& path, const std::vector<UserStanceRecord>& records,
                      const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write stance file: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "user_id,hashtag_stance,p_hashtag,retweet_stance,p_retweet,combined\n";
  for (const auto& r : records) {
    out << util::csv_row({r.user_id, to_string(r.hashtag_stance),
                          util::format_double(r.p_hashtag, 6), to_string(r.retweet_stance),
                          util::format_double(r.p_retweet, 6), to_string(r.combined)})
        << "\n";
  }
}

std::vector<UserStanceRecord> read_stance_csv(const std::string& path) {
  std::vector<UserStanceRecord> records;
  bool header_seen = false;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fields = util::csv_parse_row(line);
    if (fields.size() != 6) throw DataError("bad stance row: " + line);
    UserStanceRecord r;
    r.user_id = fields[0];
    r.hashtag_stance = stance_from_string(fields[1]);
    r.p_hashtag = std::stod(fields[2]);
    r.retweet_stance = stance_from_string(fields[3]);
    r.p_retweet = std::stod(fields[4]);
    if (fields[5] == "consistent_anti_government")
      r.combined = CombinedStance::consistent_anti_government;
    else if (fields[5] == "consistent_pro_government")
      r.combined = CombinedStance::consistent_pro_government;
    else if (fields[5] == "inconsistent")
      r.combined = CombinedStance::inconsistent;
    else
      r.combined = CombinedStance::other;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace polarscope
