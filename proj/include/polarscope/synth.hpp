#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polarscope/corpus.hpp"
#include "polarscope/flow.hpp"

namespace polarscope {

// --- planted-swap corpora -------------------------------------------------

struct SwapPair {
  std::string a_word;  // appears only in community A
  std::string b_word;  // emitted in its place in community B
};

struct SwapSpec {
  size_t base_vocab = 1800;
  double zipf_exponent = 1.0;
  size_t n_pairs = 20;
  size_t context_words_per_pair = 8;
  double pair_sentence_share = 0.3;
  size_t tokens_per_corpus = 200000;
  size_t sentence_min = 8;
  size_t sentence_max = 16;
};

struct PlantedSwap {
  StanceCorpus a;  // stance "pro"
  StanceCorpus b;  // stance "anti"
  std::vector<SwapPair> pairs;
  std::vector<std::string> base_words;  // frequency-ranked; anchors come from here
};

// Both corpora are generated from one shared sentence stream; community B
// replaces each pair's A-word with its B-word, everything else is identical.
PlantedSwap gen_planted_swap(const SwapSpec& spec, uint64_t seed);

// deterministic pronounceable token for synthetic vocabularies
std::string synth_word(size_t index);

// --- planted media partition ----------------------------------------------

struct PlantedMediaSpec {
  size_t communities = 2;
  size_t media_per_community = 20;
  size_t users_per_community = 200;
  double intra = 0.5;
  double inter = 0.05;
};

struct PlantedMedia {
  std::vector<RetweetEvent> events;
  std::map<std::string, uint32_t> media_community;  // ground truth
};

PlantedMedia gen_planted_media(const PlantedMediaSpec& spec, uint64_t seed);

// --- markov chain users ----------------------------------------------------

struct MarkovUserSpec {
  std::vector<std::vector<double>> p_star;  // row-stochastic ground truth
  size_t users = 1000;
  size_t chain_length = 20;
  std::vector<double> initial;  // empty -> uniform
};

// Media ids are "m<state>"; timestamps strictly increase within each user.
std::vector<RetweetEvent> gen_markov_users(const MarkovUserSpec& spec, uint64_t seed);

// --- full pipeline fixture --------------------------------------------------

struct DatasetSpec {
  size_t users_per_side = 60;
  size_t tweets_per_user = 12;
  size_t media_per_side = 6;
  double intra = 0.6;
  double inter = 0.08;
  size_t cnn_examples_per_class = 40;
  SwapSpec swap{.base_vocab = 600,
                .n_pairs = 2,
                .tokens_per_corpus = 30000};
};

// Writes tweets.jsonl, lexicon.csv, politicians.csv, media.csv,
// url_labels.csv, cnn_examples.tsv, stopwords.txt, swaps.csv into dir.
void gen_dataset(const DatasetSpec& spec, const std::string& dir, uint64_t seed,
                 const std::string& provenance = "");

}  // namespace polarscope
