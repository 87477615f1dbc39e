#include "polarscope/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

namespace {

constexpr uint32_t kMagic = 0x4D455350;  // "PSEM"
constexpr uint32_t kVersion = 1;

// rng streams
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kProbeStream = 2;
constexpr uint64_t kTrainStream = 3;
constexpr uint64_t kWorkerBase = 16;

double unit_draw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<uint32_t> subword_ids(const std::string& word, size_t subword_min,
                                  size_t subword_max, size_t bucket_count) {
  std::vector<uint32_t> cps = text::decode_utf8(word);
  std::vector<uint32_t> padded;
  padded.reserve(cps.size() + 2);
  padded.push_back('<');
  padded.insert(padded.end(), cps.begin(), cps.end());
  padded.push_back('>');

  std::vector<uint32_t> ids;
  for (size_t n = subword_min; n <= subword_max && n <= padded.size(); ++n) {
    if (n == padded.size()) break;  // the whole padded form is the word itself
    for (size_t start = 0; start + n <= padded.size(); ++start) {
      std::string gram;
      for (size_t i = 0; i < n; ++i) text::append_utf8(gram, padded[start + i]);
      ids.push_back(util::fnv1a32(gram.data(), gram.size()) % uint32_t(bucket_count));
    }
  }
  return ids;
}

std::optional<size_t> EmbeddingModel::word_index(const std::string& w) const {
  auto it = index_.find(w);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingModel::composable(const std::string& w) const {
  if (index_.count(w)) return true;
  return !subword_ids(w, config_.subword_min, config_.subword_max, config_.bucket_count)
              .empty();
}

std::vector<double> EmbeddingModel::vector(const std::string& w) const {
  const size_t dim = config_.dim;
  std::vector<double> v(dim, 0.0);
  auto idx = word_index(w);
  if (idx) {
    const std::vector<uint32_t>& subs = vocab_subwords_[*idx];
    const float* row = &input_[*idx * dim];
    for (size_t d = 0; d < dim; ++d) v[d] = row[d];
    for (uint32_t b : subs) {
      const float* s = &input_[(vocab_.size() + b) * dim];
      for (size_t d = 0; d < dim; ++d) v[d] += s[d];
    }
    for (size_t d = 0; d < dim; ++d) v[d] /= double(1 + subs.size());
    return v;
  }
  std::vector<uint32_t> subs =
      subword_ids(w, config_.subword_min, config_.subword_max, config_.bucket_count);
  if (subs.empty())
    throw DataError("word not composable (out of vocabulary, no character n-grams): " + w);
  for (uint32_t b : subs) {
    const float* s = &input_[(vocab_.size() + b) * dim];
    for (size_t d = 0; d < dim; ++d) v[d] += s[d];
  }
  for (size_t d = 0; d < dim; ++d) v[d] /= double(subs.size());
  return v;
}

void EmbeddingModel::finalize() {
  const size_t dim = config_.dim;
  index_.clear();
  vocab_subwords_.clear();
  vocab_subwords_.reserve(vocab_.size());
  for (size_t i = 0; i < vocab_.size(); ++i) {
    index_[vocab_[i].word] = i;
    vocab_subwords_.push_back(subword_ids(vocab_[i].word, config_.subword_min,
                                          config_.subword_max, config_.bucket_count));
  }

  composed_unit_.assign(vocab_.size() * dim, 0.0f);
  for (size_t i = 0; i < vocab_.size(); ++i) {
    std::vector<double> v(dim, 0.0);
    const float* row = &input_[i * dim];
    for (size_t d = 0; d < dim; ++d) v[d] = row[d];
    for (uint32_t b : vocab_subwords_[i]) {
      const float* s = &input_[(vocab_.size() + b) * dim];
      for (size_t d = 0; d < dim; ++d) v[d] += s[d];
    }
    double norm = 0.0;
    for (size_t d = 0; d < dim; ++d) norm += v[d] * v[d];
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (size_t d = 0; d < dim; ++d) composed_unit_[i * dim + d] = float(v[d] / norm);
  }

  uint64_t h = util::kFnv64Init;
  uint32_t dim32 = uint32_t(dim);
  h = util::fnv1a64_step(h, &dim32, sizeof(dim32));
  for (const auto& e : vocab_) {
    h = util::fnv1a64_step(h, e.word.data(), e.word.size());
    h = util::fnv1a64_step(h, &e.count, sizeof(e.count));
  }
  h = util::fnv1a64_step(h, input_.data(), input_.size() * sizeof(float));
  h = util::fnv1a64_step(h, output_.data(), output_.size() * sizeof(float));
  fingerprint_ = h;
}

EmbeddingModel EmbeddingModel::assemble(EmbedConfig cfg, std::vector<VocabEntry> vocab,
                                        std::vector<float> input, std::vector<float> output,
                                        size_t total_tokens) {
  EmbeddingModel m;
  m.config_ = std::move(cfg);
  m.vocab_ = std::move(vocab);
  m.input_ = std::move(input);
  m.output_ = std::move(output);
  m.total_tokens_ = total_tokens;
  if (m.input_.size() != (m.vocab_.size() + m.config_.bucket_count) * m.config_.dim ||
      m.output_.size() != m.vocab_.size() * m.config_.dim)
    throw DataError("embedding matrix shape mismatch");
  m.finalize();
  return m;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated model file");
  return v;
}

}  // namespace

void EmbeddingModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_pod(out, uint32_t(config_.dim));
  write_pod(out, uint64_t(vocab_.size()));
  write_pod(out, uint64_t(config_.bucket_count));
  write_pod(out, uint32_t(config_.window));
  write_pod(out, uint32_t(config_.negatives));
  write_pod(out, uint32_t(config_.epochs));
  write_pod(out, uint32_t(config_.min_count));
  write_pod(out, uint32_t(config_.subword_min));
  write_pod(out, uint32_t(config_.subword_max));
  write_pod(out, uint32_t(config_.workers));
  write_pod(out, config_.learning_rate);
  write_pod(out, config_.subsample_t);
  write_pod(out, config_.seed);
  write_pod(out, uint64_t(total_tokens_));
  for (const auto& e : vocab_) {
    write_pod(out, uint64_t(e.count));
    write_pod(out, uint32_t(e.word.size()));
    out.write(e.word.data(), std::streamsize(e.word.size()));
  }
  out.write(reinterpret_cast<const char*>(input_.data()),
            std::streamsize(input_.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(output_.data()),
            std::streamsize(output_.size() * sizeof(float)));
  if (!out) throw DataError("write failed: " + path);
}

EmbeddingModel EmbeddingModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file: " + path);
  if (read_pod<uint32_t>(in) != kMagic) throw DataError("not a model file: " + path);
  if (read_pod<uint32_t>(in) != kVersion) throw DataError("unsupported model version");
  EmbedConfig cfg;
  cfg.dim = read_pod<uint32_t>(in);
  uint64_t vocab_size = read_pod<uint64_t>(in);
  cfg.bucket_count = read_pod<uint64_t>(in);
  cfg.window = read_pod<uint32_t>(in);
  cfg.negatives = read_pod<uint32_t>(in);
  cfg.epochs = read_pod<uint32_t>(in);
  cfg.min_count = read_pod<uint32_t>(in);
  cfg.subword_min = read_pod<uint32_t>(in);
  cfg.subword_max = read_pod<uint32_t>(in);
  cfg.workers = read_pod<uint32_t>(in);
  cfg.learning_rate = read_pod<double>(in);
  cfg.subsample_t = read_pod<double>(in);
  cfg.seed = read_pod<uint64_t>(in);
  uint64_t total_tokens = read_pod<uint64_t>(in);

  std::vector<VocabEntry> vocab(vocab_size);
  for (auto& e : vocab) {
    e.count = read_pod<uint64_t>(in);
    uint32_t len = read_pod<uint32_t>(in);
    e.word.resize(len);
    in.read(e.word.data(), len);
    if (!in) throw DataError("truncated model file");
  }
  std::vector<float> input((vocab_size + cfg.bucket_count) * cfg.dim);
  std::vector<float> output(vocab_size * cfg.dim);
  in.read(reinterpret_cast<char*>(input.data()),
          std::streamsize(input.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(output.data()),
          std::streamsize(output.size() * sizeof(float)));
  if (!in) throw DataError("truncated model file");
  return assemble(std::move(cfg), std::move(vocab), std::move(input), std::move(output),
                  total_tokens);
}

void EmbeddingModel::export_text(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding text file: " + path);
  for (const auto& e : vocab_) {
    out << e.word;
    std::vector<double> v = vector(e.word);
    for (double x : v) out << ' ' << util::format_double(x, 6);
    out << "\n";
  }
}

double sgns_loss_grad(const std::vector<double>& input, const std::vector<double>& output,
                      size_t dim, const SgnsExample& ex, SgnsGrads* grads) {
  const size_t m = ex.input_rows.size();
  std::vector<double> h(dim, 0.0);
  for (uint32_t r : ex.input_rows)
    for (size_t d = 0; d < dim; ++d) h[d] += input[size_t(r) * dim + d];
  for (size_t d = 0; d < dim; ++d) h[d] /= double(m);

  std::vector<double> dh(dim, 0.0);
  double loss = 0.0;
  const size_t n_targets = 1 + ex.negatives.size();
  for (size_t t = 0; t < n_targets; ++t) {
    uint32_t row = t == 0 ? ex.positive : ex.negatives[t - 1];
    double label = t == 0 ? 1.0 : 0.0;
    const double* out = &output[size_t(row) * dim];
    double s = 0.0;
    for (size_t d = 0; d < dim; ++d) s += h[d] * out[d];
    loss += t == 0 ? detail::softplus(-s) : detail::softplus(s);
    double dls = 1.0 / (1.0 + std::exp(-s)) - label;  // dLoss/ds
    if (grads) {
      auto& dout = grads->d_output[row];
      if (dout.empty()) dout.assign(dim, 0.0);
      for (size_t d = 0; d < dim; ++d) dout[d] += dls * h[d];
    }
    for (size_t d = 0; d < dim; ++d) dh[d] += dls * out[d];
  }
  if (grads) {
    for (uint32_t r : ex.input_rows) {
      auto& din = grads->d_input[r];
      if (din.empty()) din.assign(dim, 0.0);
      for (size_t d = 0; d < dim; ++d) din[d] += dh[d] / double(m);
    }
  }
  return loss;
}

namespace {

struct NegativeTable {
  std::vector<double> cum;  // cumulative count^0.75 per vocab index
  double total = 0.0;

  explicit NegativeTable(const std::vector<VocabEntry>& vocab) {
    cum.reserve(vocab.size());
    for (const auto& e : vocab) {
      total += std::pow(double(e.count), 0.75);
      cum.push_back(total);
    }
  }

  uint32_t draw(std::mt19937_64& rng) const {
    double u = unit_draw(rng) * total;
    return uint32_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  }
};

struct TrainContext {
  const EmbedConfig* cfg;
  std::vector<std::vector<uint32_t>> sequences;  // vocab ids, OOV dropped
  std::vector<VocabEntry> vocab;
  std::vector<std::vector<uint32_t>> vocab_subwords;
  std::vector<double> keep_prob;  // frequent-word subsampling
  size_t total_vocab_tokens = 0;
};

void train_span(TrainContext& ctx, std::vector<float>& input, std::vector<float>& output,
                size_t worker, size_t workers, std::atomic<uint64_t>& processed,
                uint64_t rng_seed, size_t epochs) {
  const EmbedConfig& cfg = *ctx.cfg;
  const size_t dim = cfg.dim;
  std::mt19937_64 rng(rng_seed);
  NegativeTable table(ctx.vocab);
  const double schedule_total =
      double(ctx.total_vocab_tokens) * double(cfg.epochs) + 1.0;

  SgnsExample ex;
  std::vector<double> h, gh;
  std::vector<uint32_t> kept;

  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    for (size_t s = worker; s < ctx.sequences.size(); s += workers) {
      const auto& seq = ctx.sequences[s];
      kept.clear();
      for (uint32_t id : seq) {
        processed.fetch_add(1, std::memory_order_relaxed);
        if (unit_draw(rng) < ctx.keep_prob[id]) kept.push_back(id);
      }
      for (size_t pos = 0; pos < kept.size(); ++pos) {
        double frac = double(processed.load(std::memory_order_relaxed)) / schedule_total;
        double lr = cfg.learning_rate * std::max(1.0 - frac, 1e-4);
        size_t b = 1 + size_t(rng() % cfg.window);
        size_t lo = pos >= b ? pos - b : 0;
        size_t hi = std::min(kept.size() - 1, pos + b);
        for (size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          uint32_t center = kept[pos], context = kept[c];
          ex.input_rows.clear();
          ex.input_rows.push_back(center);
          for (uint32_t sub : ctx.vocab_subwords[center])
            ex.input_rows.push_back(uint32_t(ctx.vocab.size() + sub));
          ex.positive = context;
          ex.negatives.clear();
          for (size_t n = 0; n < cfg.negatives; ++n) {
            uint32_t neg = table.draw(rng);
            if (neg != context) ex.negatives.push_back(neg);
          }
          sgns_train_step(input, output, dim, ex, lr, h, gh);
        }
      }
    }
  }
}

std::vector<SgnsExample> build_probe_batch(const TrainContext& ctx, uint64_t seed,
                                           size_t want) {
  std::mt19937_64 rng(seed);
  NegativeTable table(ctx.vocab);
  const EmbedConfig& cfg = *ctx.cfg;
  std::vector<SgnsExample> probes;
  size_t attempts = want * 8;
  while (probes.size() < want && attempts-- > 0) {
    if (ctx.sequences.empty()) break;
    const auto& seq = ctx.sequences[rng() % ctx.sequences.size()];
    if (seq.size() < 2) continue;
    size_t pos = rng() % seq.size();
    size_t off = 1 + rng() % cfg.window;
    size_t cpos;
    if (rng() & 1) {
      if (pos + off >= seq.size()) continue;
      cpos = pos + off;
    } else {
      if (pos < off) continue;
      cpos = pos - off;
    }
    SgnsExample ex;
    ex.input_rows.push_back(seq[pos]);
    for (uint32_t sub : ctx.vocab_subwords[seq[pos]])
      ex.input_rows.push_back(uint32_t(ctx.vocab.size() + sub));
    ex.positive = seq[cpos];
    for (size_t n = 0; n < cfg.negatives; ++n) ex.negatives.push_back(table.draw(rng));
    probes.push_back(std::move(ex));
  }
  return probes;
}

double probe_loss(const std::vector<SgnsExample>& probes, const std::vector<float>& input,
                  const std::vector<float>& output, size_t dim) {
  if (probes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : probes) total += sgns_loss(input, output, dim, ex);
  return total / double(probes.size());
}

}  // namespace

EmbeddingModel train_embeddings(const StanceCorpus& corpus, const EmbedConfig& config,
                                TrainStats* stats) {
  if (config.dim < 2) throw ConfigError("embedding dim must be >= 2");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.window < 1) throw ConfigError("window must be >= 1");
  if (config.negatives < 1) throw ConfigError("negatives must be >= 1");
  if (config.subword_min > config.subword_max)
    throw ConfigError("subword_min must not exceed subword_max");
  if (config.bucket_count == 0) throw ConfigError("bucket_count must be positive");
  if (corpus.token_count == 0) throw DataError("cannot train embeddings on empty corpus");

  // vocabulary: count desc, ties lexicographic
  std::map<std::string, size_t> counts;
  for (const auto& seq : corpus.token_sequences)
    for (const auto& w : seq) ++counts[w];
  std::vector<VocabEntry> vocab;
  for (auto& [w, c] : counts)
    if (c >= config.min_count) vocab.push_back({w, c});
  if (vocab.empty()) throw DataError("empty vocabulary after frequency filtering");
  std::sort(vocab.begin(), vocab.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.word < b.word;
  });

  TrainContext ctx;
  ctx.cfg = &config;
  ctx.vocab = vocab;
  std::unordered_map<std::string, uint32_t> index;
  for (size_t i = 0; i < vocab.size(); ++i) index[vocab[i].word] = uint32_t(i);
  for (const auto& seq : corpus.token_sequences) {
    std::vector<uint32_t> ids;
    for (const auto& w : seq) {
      auto it = index.find(w);
      if (it != index.end()) ids.push_back(it->second);
    }
    if (!ids.empty()) {
      ctx.total_vocab_tokens += ids.size();
      ctx.sequences.push_back(std::move(ids));
    }
  }

  ctx.vocab_subwords.reserve(vocab.size());
  for (const auto& e : vocab)
    ctx.vocab_subwords.push_back(subword_ids(e.word, config.subword_min,
                                             config.subword_max, config.bucket_count));

  ctx.keep_prob.resize(vocab.size());
  for (size_t i = 0; i < vocab.size(); ++i) {
    double f = double(vocab[i].count) / double(ctx.total_vocab_tokens);
    double p = config.subsample_t > 0 && f > 0
                   ? std::sqrt(config.subsample_t / f) + config.subsample_t / f
                   : 1.0;
    ctx.keep_prob[i] = std::min(p, 1.0);
  }

  const size_t dim = config.dim;
  std::vector<float> input((vocab.size() + config.bucket_count) * dim);
  std::vector<float> output(vocab.size() * dim, 0.0f);
  std::mt19937_64 init_rng(util::mix_seed(config.seed, kInitStream));
  const double bound = 1.0 / double(dim);
  for (auto& x : input) x = float((unit_draw(init_rng) * 2.0 - 1.0) * bound);

  std::vector<SgnsExample> probes =
      build_probe_batch(ctx, util::mix_seed(config.seed, kProbeStream), 256);
  if (stats) {
    stats->epoch_probe_loss.clear();
    stats->initial_probe_loss = probe_loss(probes, input, output, dim);
  }

  std::atomic<uint64_t> processed{0};
  if (config.workers <= 1) {
    // epoch at a time so the probe can be evaluated between epochs
    uint64_t train_seed = util::mix_seed(config.seed, kTrainStream);
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
      train_span(ctx, input, output, 0, 1, processed,
                 util::mix_seed(train_seed, epoch), 1);
      if (stats)
        stats->epoch_probe_loss.push_back(probe_loss(probes, input, output, dim));
    }
  } else {
    std::vector<std::thread> threads;
    for (size_t w = 0; w < config.workers; ++w)
      threads.emplace_back([&, w] {
        train_span(ctx, input, output, w, config.workers, processed,
                   util::mix_seed(config.seed, kWorkerBase + w), config.epochs);
      });
    for (auto& t : threads) t.join();
    if (stats) stats->epoch_probe_loss.push_back(probe_loss(probes, input, output, dim));
  }

  EmbeddingModel model = EmbeddingModel::assemble(config, std::move(vocab),
                                                  std::move(input), std::move(output),
                                                  corpus.token_count);
  return model;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingModel& model, const std::vector<double>& query, size_t k,
    const std::string& exclude) {
  if (k < 1) return {};
  const size_t dim = model.dim();
  if (query.size() != dim) throw DataError("query dimension mismatch");
  double norm = 0.0;
  for (double x : query) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw DataError("cosine undefined for the zero vector");

  std::vector<double> q(dim);
  for (size_t d = 0; d < dim; ++d) q[d] = query[d] / norm;

  const std::vector<float>& unit = model.composed_unit();
  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(model.vocab_size());
  for (size_t i = 0; i < model.vocab_size(); ++i) {
    if (!exclude.empty() && model.vocab()[i].word == exclude) continue;
    double s = 0.0;
    const float* row = &unit[i * dim];
    for (size_t d = 0; d < dim; ++d) s += q[d] * row[d];
    scored.emplace_back(s, i);
  }
  size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(take), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i)
    out.emplace_back(model.vocab()[scored[i].second].word, scored[i].first);
  return out;
}

}  // namespace polarscope
