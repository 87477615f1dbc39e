#include "polarscope/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

StanceCorpus build_stance_corpus(const TweetStore& store,
                                 const std::map<std::string, std::string>& labels,
                                 const std::string& stance) {
  if (labels.empty()) throw DataError("empty label map");

  StanceCorpus corpus;
  corpus.stance = stance;
  std::set<std::string> users_seen;
  std::set<std::string> retweet_ids_seen;
  std::set<std::string> retweet_texts_seen;  // fallback when the id is missing

  for (const Tweet& t : store.tweets()) {
    auto it = labels.find(t.user_id);
    if (it == labels.end() || it->second != stance) continue;
    users_seen.insert(t.user_id);

    if (t.is_retweet()) {
      if (!retweet_ids_seen.insert(*t.retweeted_tweet_id).second) continue;
    } else if (t.retweeted_user_id) {
      // retweet without a source id: dedup on the normalized text
      std::string key = util::join(text::tokenize(t.text), " ");
      if (!retweet_texts_seen.insert(key).second) continue;
    }

    std::vector<std::string> tokens = text::tokenize(t.text);
    if (tokens.empty()) continue;
    corpus.token_count += tokens.size();
    corpus.token_sequences.push_back(std::move(tokens));
  }
  corpus.source_user_count = users_seen.size();
  return corpus;
}

StanceCorpus subsample_corpus(const StanceCorpus& corpus, size_t target_tokens,
                              uint64_t seed) {
  if (target_tokens > corpus.token_count)
    throw DataError("subsample target exceeds corpus size");

  std::vector<size_t> order(corpus.token_sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  util::shuffle_vec(order, rng);

  StanceCorpus out;
  out.stance = corpus.stance;
  out.source_user_count = corpus.source_user_count;
  for (size_t idx : order) {
    if (out.token_count >= target_tokens) break;
    out.token_sequences.push_back(corpus.token_sequences[idx]);
    out.token_count += corpus.token_sequences[idx].size();
  }
  return out;
}

std::map<std::string, size_t> word_frequencies(const StanceCorpus& corpus) {
  std::map<std::string, size_t> freq;
  for (const auto& seq : corpus.token_sequences)
    for (const auto& w : seq) ++freq[w];
  return freq;
}

std::vector<std::string> top_k_vocab(const std::vector<const StanceCorpus*>& corpora,
                                     size_t k) {
  std::map<std::string, size_t> freq;
  for (const StanceCorpus* c : corpora)
    for (const auto& seq : c->token_sequences)
      for (const auto& w : seq) ++freq[w];

  std::vector<std::pair<std::string, size_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > k) items.resize(k);

  std::vector<std::string> words;
  words.reserve(items.size());
  for (auto& [w, _] : items) words.push_back(std::move(w));
  return words;
}

void write_corpus(const std::string& path, const StanceCorpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& seq : corpus.token_sequences) out << util::join(seq, " ") << "\n";
}

StanceCorpus read_corpus(const std::string& path, const std::string& stance) {
  StanceCorpus corpus;
  corpus.stance = stance;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    for (auto& tok : util::split(line, ' '))
      if (!tok.empty()) tokens.push_back(std::move(tok));
    if (tokens.empty()) continue;
    corpus.token_count += tokens.size();
    corpus.token_sequences.push_back(std::move(tokens));
  }
  return corpus;
}

}  // namespace polarscope
