#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polarscope/embed.hpp"

namespace polarscope {

struct AnchorSet {
  std::vector<std::string> words;  // ordered, no duplicates, present in both vocabs
};

// Stop-word forms intersected with both vocabularies, list order preserved.
AnchorSet build_anchor_set(const std::vector<std::string>& stopwords,
                           const EmbeddingModel& src, const EmbeddingModel& tgt);

struct TranslationMatrix {
  size_t dim = 0;
  std::vector<double> t;  // dim x dim, row-major; apply as row_vector * T
  uint64_t src_fingerprint = 0;
  uint64_t tgt_fingerprint = 0;

  double max_orthogonality_error() const;  // max |(T'T - I)_ij|
  std::vector<double> apply(const std::vector<double>& v) const;
};

// Orthogonal Procrustes over unit-normalized anchor vectors.
TranslationMatrix learn_translation(const EmbeddingModel& src, const EmbeddingModel& tgt,
                                    const AnchorSet& anchors);

struct TranslationResult {
  std::string source_word;
  std::string translated_word;
  bool is_self = false;
  double cosine = 0.0;
  size_t source_rank = 0;  // frequency rank in the source vocab; OOV ranks last
};

TranslationResult translate_word(const std::string& w, const TranslationMatrix& T,
                                 const EmbeddingModel& src, const EmbeddingModel& tgt);

// Fraction of eval words whose translation is the word itself.
double similarity(const EmbeddingModel& src, const EmbeddingModel& tgt,
                  const TranslationMatrix& T, const std::vector<std::string>& eval_vocab);

// Non-self translations, most frequent source words first.
std::vector<TranslationResult> disagreed_pairs(const EmbeddingModel& src,
                                               const EmbeddingModel& tgt,
                                               const TranslationMatrix& T,
                                               const std::vector<std::string>& eval_vocab,
                                               size_t k);

struct ExperimentConfig {
  EmbedConfig embed;
  size_t eval_k = 5000;
  size_t n_runs = 6;
  size_t disagreed_k = 200;
  uint64_t seed = 1;
};

struct SimilarityReport {
  std::vector<double> run_values;  // per run, mean of both directions
  std::vector<double> run_src_to_tgt;
  std::vector<double> run_tgt_to_src;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over run_values
  size_t run_count = 0;
  size_t eval_vocab_size = 0;
  size_t eval_missing_in_target = 0;  // counted as non-self (run 0, src->tgt)
  size_t eval_uncomposable = 0;       // dropped from the eval vocab (run 0)
  std::vector<TranslationResult> disagreed;  // from run 0, src->tgt
};

// Per run: size-match corpora by subsampling the larger, train both embeddings,
// anchor on stop-words, evaluate both directions over the shared top-k vocab.
SimilarityReport run_polarization_experiment(const StanceCorpus& corpus_a,
                                             const StanceCorpus& corpus_b,
                                             const std::vector<std::string>& stopwords,
                                             const ExperimentConfig& cfg);

void write_similarity_report(const std::string& path, const SimilarityReport& report,
                             const ExperimentConfig& cfg, const std::string& provenance = "");
void write_disagreed_csv(const std::string& path,
                         const std::vector<TranslationResult>& pairs,
                         const std::string& provenance = "");

}  // namespace polarscope
