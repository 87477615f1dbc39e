#include "polarscope/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "polarscope/classify.hpp"
#include "polarscope/stance.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

namespace {

double udraw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// draw an index from cumulative weights
size_t cum_draw(const std::vector<double>& cum, std::mt19937_64& rng) {
  double u = udraw(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  size_t i = size_t(it - cum.begin());
  return std::min(i, cum.size() - 1);
}

size_t sample_row(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = udraw(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

std::string synth_word(size_t index) {
  // Consonant-vowel-consonant syllables, 1280 distinct. Plain positional
  // digits would leave whole index blocks sharing a syllable, and words that
  // overlap like that share character n-grams with hundreds of neighbours, so
  // their subword embeddings collapse onto each other. A short Feistel
  // permutation over two base-1280 digits makes every syllable depend on the
  // whole index while staying bijective, so distinct indices always yield
  // distinct words.
  static const char kC[] = "bcdfgjlmnpqrstvz";
  static const char kV[] = "aeiou";
  auto syl = [&](size_t d) {
    return std::string{kC[d % 16], kV[(d / 16) % 5], kC[(d / 80) % 16]};
  };
  auto scramble = [](size_t v) {
    size_t a = v % 1280, b = v / 1280;
    for (int r = 0; r < 3; ++r) {
      size_t t = (a + util::mix_seed(0x511a + uint64_t(r), b)) % 1280;
      a = b;
      b = t;
    }
    return a * 1280 + b;
  };
  std::string w;
  size_t rest = index;
  do {
    size_t block = scramble(rest % (1280 * 1280));
    w += syl(block % 1280);
    w += syl(block / 1280);
    rest /= 1280 * 1280;
  } while (rest > 0);
  return w;
}

PlantedSwap gen_planted_swap(const SwapSpec& spec, uint64_t seed) {
  if (spec.base_vocab < 10) throw ConfigError("swap base vocabulary too small");
  if (spec.sentence_min < 2 || spec.sentence_max < spec.sentence_min)
    throw ConfigError("bad sentence length range");
  if (spec.pair_sentence_share < 0.0 || spec.pair_sentence_share > 1.0)
    throw ConfigError("pair sentence share outside [0,1]");
  if (spec.n_pairs > 0 && spec.context_words_per_pair < 1)
    throw ConfigError("swap pairs need at least one context word");

  PlantedSwap out;
  out.base_words.reserve(spec.base_vocab);
  std::set<std::string> seen;
  for (size_t i = 0; i < spec.base_vocab; ++i) {
    std::string w = synth_word(i);
    if (!seen.insert(w).second) throw ConfigError("synthetic word collision: " + w);
    out.base_words.push_back(std::move(w));
  }

  std::unordered_map<std::string, std::string> a_to_b;
  std::vector<std::vector<std::string>> ctx(spec.n_pairs);
  size_t next = spec.base_vocab;
  for (size_t k = 0; k < spec.n_pairs; ++k) {
    SwapPair p{synth_word(next), synth_word(next + 1)};
    next += 2;
    a_to_b[p.a_word] = p.b_word;
    out.pairs.push_back(std::move(p));
  }
  for (size_t k = 0; k < spec.n_pairs; ++k)
    for (size_t j = 0; j < spec.context_words_per_pair; ++j)
      ctx[k].push_back(synth_word(next++));

  std::vector<double> cum(spec.base_vocab);
  double acc = 0.0;
  for (size_t r = 0; r < spec.base_vocab; ++r) {
    acc += 1.0 / std::pow(double(r + 1), spec.zipf_exponent);
    cum[r] = acc;
  }

  out.a.stance = "pro";
  out.b.stance = "anti";
  std::mt19937_64 rng(util::mix_seed(seed, 31));
  while (out.a.token_count < spec.tokens_per_corpus) {
    size_t len =
        spec.sentence_min + rng() % (spec.sentence_max - spec.sentence_min + 1);
    std::vector<std::string> sent(len);
    bool pair_sent = !out.pairs.empty() && udraw(rng) < spec.pair_sentence_share;
    if (pair_sent) {
      // One swap-word occurrence per sentence. If the swap word filled a
      // quarter of the sentence it would share its context distribution with
      // its own context words and the whole group would embed as one tight
      // cluster, leaving the translated vector to tie-break among twins.
      size_t k = rng() % spec.n_pairs;
      for (size_t t = 0; t < len; ++t) {
        sent[t] = udraw(rng) < 0.5 ? ctx[k][rng() % ctx[k].size()]
                                   : out.base_words[cum_draw(cum, rng)];
      }
      sent[rng() % len] = out.pairs[k].a_word;
    } else {
      // Context words also live ordinary lives outside their pair sentences;
      // the generic usage separates them from the swap word they flank, and
      // since both corpora share these sentences verbatim it gives each word
      // a fingerprint that survives translation.
      for (size_t t = 0; t < len; ++t) {
        if (!ctx.empty() && udraw(rng) < 0.2) {
          sent[t] = ctx[rng() % spec.n_pairs][rng() % spec.context_words_per_pair];
        } else {
          sent[t] = out.base_words[cum_draw(cum, rng)];
        }
      }
    }

    std::vector<std::string> mirrored = sent;
    if (pair_sent)
      for (auto& tok : mirrored) {
        auto it = a_to_b.find(tok);
        if (it != a_to_b.end()) tok = it->second;
      }
    out.a.token_count += len;
    out.b.token_count += len;
    out.a.token_sequences.push_back(std::move(sent));
    out.b.token_sequences.push_back(std::move(mirrored));
  }
  return out;
}

PlantedMedia gen_planted_media(const PlantedMediaSpec& spec, uint64_t seed) {
  if (spec.communities < 1 || spec.media_per_community < 1 ||
      spec.users_per_community < 1)
    throw ConfigError("planted media spec needs at least one of everything");
  if (spec.intra < 0.0 || spec.intra > 1.0 || spec.inter < 0.0 || spec.inter > 1.0)
    throw ConfigError("attachment probabilities must lie in [0,1]");

  PlantedMedia out;
  auto media_id = [](size_t c, size_t i) {
    return "m" + std::to_string(c) + "_" + std::to_string(i);
  };
  for (size_t c = 0; c < spec.communities; ++c)
    for (size_t i = 0; i < spec.media_per_community; ++i)
      out.media_community[media_id(c, i)] = uint32_t(c);

  std::mt19937_64 rng(util::mix_seed(seed, 32));
  size_t tweet_no = 0;
  for (size_t c = 0; c < spec.communities; ++c) {
    CombinedStance stance = c % 2 == 0 ? CombinedStance::consistent_pro_government
                                       : CombinedStance::consistent_anti_government;
    for (size_t u = 0; u < spec.users_per_community; ++u) {
      std::string user = "u" + std::to_string(c) + "_" + std::to_string(u);
      int64_t ts = 0;
      for (size_t mc = 0; mc < spec.communities; ++mc)
        for (size_t mi = 0; mi < spec.media_per_community; ++mi) {
          double p = mc == c ? spec.intra : spec.inter;
          if (udraw(rng) < p)
            out.events.push_back({user, media_id(mc, mi),
                                  "t" + std::to_string(tweet_no++), ts++, stance});
        }
    }
  }
  return out;
}

std::vector<RetweetEvent> gen_markov_users(const MarkovUserSpec& spec, uint64_t seed) {
  if (spec.users < 1 || spec.chain_length < 1)
    throw ConfigError("markov spec needs users and chain length");
  TransitionModel::from_matrix(spec.p_star);  // validates shape and row sums
  size_t n = spec.p_star.size();
  std::vector<double> init = spec.initial;
  if (init.empty()) init.assign(n, 1.0 / double(n));
  if (init.size() != n) throw ConfigError("initial distribution size mismatch");
  double isum = 0.0;
  for (double v : init) {
    if (v < 0.0) throw ConfigError("negative initial probability");
    isum += v;
  }
  if (std::fabs(isum - 1.0) > 1e-9)
    throw ConfigError("initial distribution does not sum to 1");

  std::vector<RetweetEvent> events;
  events.reserve(spec.users * spec.chain_length);
  std::mt19937_64 rng(util::mix_seed(seed, 33));
  for (size_t u = 0; u < spec.users; ++u) {
    std::string user = "mu" + std::to_string(u);
    size_t s = sample_row(init, rng);
    for (size_t t = 0; t < spec.chain_length; ++t) {
      events.push_back({user, "m" + std::to_string(s),
                        "mt" + std::to_string(u) + "_" + std::to_string(t),
                        int64_t(t), CombinedStance::other});
      s = sample_row(spec.p_star[s], rng);
    }
  }
  return events;
}

namespace {

std::vector<std::string> topical_sentence(const std::vector<std::string>& markers,
                                          const std::vector<std::string>& filler,
                                          std::mt19937_64& rng) {
  size_t len = 8 + rng() % 5;
  std::vector<std::string> sent(len);
  for (size_t t = 0; t < len; ++t)
    sent[t] = udraw(rng) < 0.5 ? markers[rng() % markers.size()]
                               : filler[rng() % filler.size()];
  return sent;
}

}  // namespace

void gen_dataset(const DatasetSpec& spec, const std::string& dir, uint64_t seed,
                 const std::string& provenance) {
  if (spec.users_per_side < 2 || spec.tweets_per_user < 10)
    throw ConfigError("dataset needs >=2 users per side and >=10 tweets per user");
  if (spec.media_per_side < 2) throw ConfigError("dataset needs >=2 media per side");

  PlantedSwap sw = gen_planted_swap(spec.swap, util::mix_seed(seed, 35));
  std::mt19937_64 rng(util::mix_seed(seed, 34));

  const std::vector<std::string> rel_markers = {"noticia", "gobierno", "crisis"};
  const std::vector<std::string> irr_markers = {"futbol", "partido", "torneo"};
  std::vector<std::string> filler(sw.base_words.begin(),
                                  sw.base_words.begin() +
                                      std::min<size_t>(200, sw.base_words.size()));

  const std::vector<std::string> pro_tags = {"fuerzagobierno", "vivagobierno",
                                             "conelgobierno"};
  const std::vector<std::string> anti_tags = {"fueragobierno", "abajogobierno",
                                              "renunciaya"};
  const std::vector<std::string> pro_pols = {"pol_pro_0", "pol_pro_1"};
  const std::vector<std::string> anti_pols = {"pol_anti_0", "pol_anti_1"};

  MediaRegistry registry;
  std::vector<std::string> local_media, regional_media;
  for (size_t i = 0; i < spec.media_per_side; ++i) {
    std::string id = "media_loc_" + std::to_string(i);
    registry.add({id, "Diario " + std::to_string(i), "@diario" + std::to_string(i),
                  "diario" + std::to_string(i) + ".test", "testland", "local"});
    local_media.push_back(id);
  }
  for (size_t i = 0; i < spec.media_per_side; ++i) {
    std::string id = "media_reg_" + std::to_string(i);
    registry.add({id, "Cadena " + std::to_string(i), "@cadena" + std::to_string(i),
                  "cadena" + std::to_string(i) + ".test", "region", "regional"});
    regional_media.push_back(id);
  }

  std::vector<Tweet> tweets;
  std::vector<std::pair<std::string, std::string>> url_labels;  // url -> label
  size_t tweet_no = 0;
  int64_t ts = 1'000'000;
  size_t a_cursor = 0, b_cursor = 0;
  auto next_sentence = [&](bool pro) -> std::vector<std::string> {
    const auto& seqs = pro ? sw.a.token_sequences : sw.b.token_sequences;
    size_t& cur = pro ? a_cursor : b_cursor;
    return seqs[cur++ % seqs.size()];
  };

  std::vector<std::string> user_ids;
  for (int side = 0; side < 2; ++side) {
    bool pro = side == 0;
    const auto& tags = pro ? pro_tags : anti_tags;
    const auto& pols = pro ? pro_pols : anti_pols;
    const auto& own_media = pro ? local_media : regional_media;
    const auto& other_media = pro ? regional_media : local_media;

    for (size_t u = 0; u < spec.users_per_side; ++u) {
      std::string user = (pro ? "user_pro_" : "user_anti_") + std::to_string(u);
      user_ids.push_back(user);

      // original tweets carrying the stance hashtags and the community text
      for (size_t t = 0; t < spec.tweets_per_user; ++t) {
        Tweet tw;
        tw.id = "tw" + std::to_string(tweet_no++);
        tw.user_id = user;
        tw.timestamp = ts++;
        std::vector<std::string> sent =
            t % 4 == 3 ? topical_sentence(rel_markers, filler, rng)
                       : next_sentence(pro);
        tw.text = util::join(sent, " ");
        tw.hashtags = {tags[rng() % tags.size()]};
        tweets.push_back(std::move(tw));
      }

      // a couple of retweets of own-side politicians
      for (size_t t = 0; t < 2; ++t) {
        std::string pol = pols[rng() % pols.size()];
        Tweet tw;
        tw.id = "tw" + std::to_string(tweet_no++);
        tw.user_id = user;
        tw.timestamp = ts++;
        tw.text = util::join(next_sentence(pro), " ");
        tw.retweeted_user_id = pol;
        tw.retweeted_tweet_id = "orig_" + pol + "_" + std::to_string(rng() % 3);
        tweets.push_back(std::move(tw));
      }

      // planted media diet
      std::vector<std::string> chosen;
      for (const auto& m : own_media)
        if (udraw(rng) < spec.intra) chosen.push_back(m);
      for (const auto& m : other_media)
        if (udraw(rng) < spec.inter) chosen.push_back(m);
      if (chosen.size() < 2) {  // keep every user transition-eligible
        chosen.push_back(own_media[rng() % own_media.size()]);
        chosen.push_back(own_media[rng() % own_media.size()]);
      }
      std::vector<std::string> diet;
      for (const auto& m : chosen) {
        size_t copies = 1 + rng() % 3;
        for (size_t c = 0; c < copies; ++c) diet.push_back(m);
      }
      util::shuffle_vec(diet, rng);
      for (const auto& m : diet) {
        const MediaInfo* info = registry.lookup(m);
        size_t article = rng() % 40;
        Tweet tw;
        tw.id = "tw" + std::to_string(tweet_no++);
        tw.user_id = user;
        tw.timestamp = ts++;
        tw.retweeted_user_id = m;
        tw.retweeted_tweet_id = "orig_" + m + "_" + std::to_string(article);
        double u = udraw(rng);
        if (u < 0.15) {  // sports item, filtered out by the section keyword
          tw.text = util::join(topical_sentence(irr_markers, filler, rng), " ");
          tw.urls = {"http://" + info->domain + "/deportes/nota-" +
                     std::to_string(article)};
        } else {
          tw.text = util::join(topical_sentence(rel_markers, filler, rng), " ");
          std::string url =
              "http://" + info->domain + "/politica/nota-" + std::to_string(article);
          if (u < 0.75) url_labels.emplace_back(url, "relevant");  // else CNN decides
          tw.urls = {url};
        }
        tweets.push_back(std::move(tw));
      }

      // light reply/quote texture for the response network
      if (u % 3 == 0 && !user_ids.empty()) {
        Tweet tw;
        tw.id = "tw" + std::to_string(tweet_no++);
        tw.user_id = user;
        tw.timestamp = ts++;
        tw.text = util::join(next_sentence(pro), " ");
        tw.in_reply_to_user_id = user_ids[rng() % user_ids.size()];
        tweets.push_back(std::move(tw));
      }
      if (u % 5 == 0 && !user_ids.empty()) {
        Tweet tw;
        tw.id = "tw" + std::to_string(tweet_no++);
        tw.user_id = user;
        tw.timestamp = ts++;
        tw.text = util::join(next_sentence(pro), " ");
        tw.quoted_user_id = user_ids[rng() % user_ids.size()];
        tweets.push_back(std::move(tw));
      }
    }
  }

  write_tweets_jsonl(dir + "/tweets.jsonl", tweets,
                     provenance.empty() ? "" : nlohmann::json(provenance).dump());

  {
    std::ofstream out(dir + "/lexicon.csv");
    if (!out) throw DataError("cannot write lexicon: " + dir);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "dimension,hashtag,stance\n";
    for (const auto& t : pro_tags) out << "government," << t << ",pro\n";
    for (const auto& t : anti_tags) out << "government," << t << ",anti\n";
  }
  {
    std::ofstream out(dir + "/politicians.csv");
    if (!out) throw DataError("cannot write politicians: " + dir);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "user_id,stance\n";
    for (const auto& p : pro_pols) out << p << ",pro\n";
    for (const auto& p : anti_pols) out << p << ",anti\n";
  }
  registry.write_csv(dir + "/media.csv", provenance);
  {
    std::sort(url_labels.begin(), url_labels.end());
    url_labels.erase(std::unique(url_labels.begin(), url_labels.end()),
                     url_labels.end());
    std::ofstream out(dir + "/url_labels.csv");
    if (!out) throw DataError("cannot write url labels: " + dir);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "url,label\n";
    for (const auto& [url, label] : url_labels)
      out << util::csv_row({url, label}) << "\n";
  }
  {
    std::vector<LabeledText> examples;
    for (size_t i = 0; i < spec.cnn_examples_per_class; ++i) {
      examples.push_back(
          {util::join(topical_sentence(rel_markers, filler, rng), " "), true});
      examples.push_back(
          {util::join(topical_sentence(irr_markers, filler, rng), " "), false});
    }
    write_examples_tsv(dir + "/cnn_examples.tsv", examples, provenance);
  }
  {
    std::ofstream out(dir + "/stopwords.txt");
    if (!out) throw DataError("cannot write stopwords: " + dir);
    size_t n = std::min<size_t>(100, sw.base_words.size());
    for (size_t i = 0; i < n; ++i) out << sw.base_words[i] << "\n";
  }
  {
    std::ofstream out(dir + "/swaps.csv");
    if (!out) throw DataError("cannot write swap pairs: " + dir);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "a_word,b_word\n";
    for (const auto& p : sw.pairs) out << p.a_word << "," << p.b_word << "\n";
  }
}

}  // namespace polarscope
