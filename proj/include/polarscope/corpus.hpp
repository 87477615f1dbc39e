#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polarscope/tweet.hpp"

namespace polarscope {

struct StanceCorpus {
  std::string stance;
  std::vector<std::vector<std::string>> token_sequences;  // one per included tweet
  size_t token_count = 0;
  size_t source_user_count = 0;
};

// Tweets (and retweeted texts) of users labeled with `stance`. Each distinct
// retweeted tweet contributes its text once corpus-wide; dedup key is
// retweeted_tweet_id, falling back to the normalized text when the id is absent.
StanceCorpus build_stance_corpus(const TweetStore& store,
                                 const std::map<std::string, std::string>& labels,
                                 const std::string& stance);

// Uniform sample of whole sequences, without replacement, until the running
// token count first reaches target_tokens.
StanceCorpus subsample_corpus(const StanceCorpus& corpus, size_t target_tokens,
                              uint64_t seed);

// Words by descending total frequency over all corpora, ties lexicographic.
std::vector<std::string> top_k_vocab(const std::vector<const StanceCorpus*>& corpora,
                                     size_t k);

std::map<std::string, size_t> word_frequencies(const StanceCorpus& corpus);

// One whitespace-joined token sequence per line, UTF-8.
void write_corpus(const std::string& path, const StanceCorpus& corpus);
StanceCorpus read_corpus(const std::string& path, const std::string& stance);

}  // namespace polarscope
