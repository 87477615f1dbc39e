#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "polarscope/corpus.hpp"

namespace polarscope {

struct EmbedConfig {
  size_t dim = 100;
  size_t window = 5;
  size_t negatives = 5;
  size_t epochs = 5;
  size_t min_count = 5;
  size_t subword_min = 3;
  size_t subword_max = 6;
  size_t bucket_count = 1u << 21;  // scale down for desk-sized runs
  double learning_rate = 0.05;    // decays linearly to ~0 over training
  double subsample_t = 1e-4;      // frequent-word subsampling threshold
  size_t workers = 1;             // >1 relaxes determinism (lock-free updates)
  uint64_t seed = 1;
};

struct VocabEntry {
  std::string word;
  size_t count = 0;
};

// Hashed character n-gram bucket ids of '<word>'; the n-gram spanning the whole
// padded form is excluded (the word itself is represented by its vocab vector).
std::vector<uint32_t> subword_ids(const std::string& word, size_t subword_min,
                                  size_t subword_max, size_t bucket_count);

class EmbeddingModel {
 public:
  const EmbedConfig& config() const { return config_; }
  size_t dim() const { return config_.dim; }
  size_t vocab_size() const { return vocab_.size(); }
  const std::vector<VocabEntry>& vocab() const { return vocab_; }
  std::optional<size_t> word_index(const std::string& w) const;  // == frequency rank
  size_t total_tokens() const { return total_tokens_; }

  // (vocab + buckets) x dim; row b of the subword block is vocab_size + b
  std::vector<float>& input_vectors() { return input_; }
  const std::vector<float>& input_vectors() const { return input_; }
  std::vector<float>& output_vectors() { return output_; }
  const std::vector<float>& output_vectors() const { return output_; }

  // Mean of the word vector and its n-gram vectors; OOV words compose from
  // n-grams alone. A word with no n-grams and no vocab entry is un-composable.
  std::vector<double> vector(const std::string& w) const;
  bool composable(const std::string& w) const;

  const std::vector<float>& composed_unit() const { return composed_unit_; }  // vocab x dim
  uint64_t fingerprint() const { return fingerprint_; }

  void save(const std::string& path) const;
  static EmbeddingModel load(const std::string& path);
  void export_text(const std::string& path) const;

  // used by the trainer / loader
  static EmbeddingModel assemble(EmbedConfig cfg, std::vector<VocabEntry> vocab,
                                 std::vector<float> input, std::vector<float> output,
                                 size_t total_tokens);

 private:
  EmbedConfig config_;
  std::vector<VocabEntry> vocab_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<float> input_;   // (vocab + buckets) x dim
  std::vector<float> output_;  // vocab x dim
  std::vector<float> composed_unit_;
  std::vector<std::vector<uint32_t>> vocab_subwords_;
  size_t total_tokens_ = 0;
  uint64_t fingerprint_ = 0;

  void finalize();
};

struct TrainStats {
  std::vector<double> epoch_probe_loss;  // fixed probe batch, one value per epoch
  double initial_probe_loss = 0.0;
};

EmbeddingModel train_embeddings(const StanceCorpus& corpus, const EmbedConfig& config,
                                TrainStats* stats = nullptr);

// Exact cosine scan over the vocabulary; ties broken by vocab index.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingModel& model, const std::vector<double>& query, size_t k,
    const std::string& exclude = "");

// ----- SGNS core, shared between the trainer and its numeric checks -----

struct SgnsExample {
  std::vector<uint32_t> input_rows;   // center word row + its subword rows
  uint32_t positive = 0;              // output row of the context word
  std::vector<uint32_t> negatives;    // output rows
};

namespace detail {
inline double softplus(double x) {  // log(1 + e^x), stable
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
}  // namespace detail

// loss = softplus(-h.out_pos) + sum_neg softplus(h.out_neg), h = mean of input rows
template <typename T>
double sgns_loss(const std::vector<T>& input, const std::vector<T>& output, size_t dim,
                 const SgnsExample& ex) {
  std::vector<double> h(dim, 0.0);
  for (uint32_t r : ex.input_rows)
    for (size_t d = 0; d < dim; ++d) h[d] += input[size_t(r) * dim + d];
  for (size_t d = 0; d < dim; ++d) h[d] /= double(ex.input_rows.size());

  auto dot_out = [&](uint32_t r) {
    double s = 0.0;
    for (size_t d = 0; d < dim; ++d) s += h[d] * output[size_t(r) * dim + d];
    return s;
  };
  double loss = detail::softplus(-dot_out(ex.positive));
  for (uint32_t r : ex.negatives) loss += detail::softplus(dot_out(r));
  return loss;
}

struct SgnsGrads {
  // dLoss/dparam for every row the example touches
  std::unordered_map<uint32_t, std::vector<double>> d_input;
  std::unordered_map<uint32_t, std::vector<double>> d_output;
};

double sgns_loss_grad(const std::vector<double>& input, const std::vector<double>& output,
                      size_t dim, const SgnsExample& ex, SgnsGrads* grads);

// One SGD step (all gradients taken at the pre-step state); returns the loss there.
template <typename T>
double sgns_train_step(std::vector<T>& input, std::vector<T>& output, size_t dim,
                       const SgnsExample& ex, double lr, std::vector<double>& h,
                       std::vector<double>& gh) {
  const size_t m = ex.input_rows.size();
  h.assign(dim, 0.0);
  for (uint32_t r : ex.input_rows)
    for (size_t d = 0; d < dim; ++d) h[d] += input[size_t(r) * dim + d];
  for (size_t d = 0; d < dim; ++d) h[d] /= double(m);

  gh.assign(dim, 0.0);
  double loss = 0.0;
  const size_t n_targets = 1 + ex.negatives.size();
  for (size_t t = 0; t < n_targets; ++t) {
    uint32_t row = t == 0 ? ex.positive : ex.negatives[t - 1];
    double label = t == 0 ? 1.0 : 0.0;
    T* out = &output[size_t(row) * dim];
    double s = 0.0;
    for (size_t d = 0; d < dim; ++d) s += h[d] * out[d];
    loss += t == 0 ? detail::softplus(-s) : detail::softplus(s);
    double g = label - 1.0 / (1.0 + std::exp(-s));  // -dLoss/ds
    for (size_t d = 0; d < dim; ++d) gh[d] += g * out[d];
    for (size_t d = 0; d < dim; ++d) out[d] += T(lr * g * h[d]);
  }
  // gh used pre-update output rows only when targets are distinct; repeated
  // negative rows see the positive-side update first, an accepted SGD shortcut
  const double scale = lr / double(m);
  for (uint32_t r : ex.input_rows) {
    T* in = &input[size_t(r) * dim];
    for (size_t d = 0; d < dim; ++d) in[d] += T(scale * gh[d]);
  }
  return loss;
}

}  // namespace polarscope
