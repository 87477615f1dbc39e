#include "polarscope/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

const char* to_string(Relevance r) {
  switch (r) {
    case Relevance::relevant: return "relevant";
    case Relevance::irrelevant: return "irrelevant";
    case Relevance::unknown: return "unknown";
  }
  return "unknown";
}

UrlLabelRule UrlLabelRule::load_csv(const std::string& path) {
  UrlLabelRule rules;
  bool first = true;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = util::csv_parse_row(line);
    if (first && fields.size() >= 2 && fields[0] == "url") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 2) throw DataError("bad url label row: " + line);
    if (fields[1] == "relevant") rules.labeled[fields[0]] = true;
    else if (fields[1] == "irrelevant") rules.labeled[fields[0]] = false;
    else throw DataError("url label must be relevant or irrelevant: " + line);
  }
  return rules;
}

Relevance url_label(const std::string& url, const UrlLabelRule& rules) {
  auto it = rules.labeled.find(url);
  if (it != rules.labeled.end()) return it->second ? Relevance::relevant : Relevance::irrelevant;

  std::string low = text::lower(url);
  size_t path_start = 0;
  if (low.rfind("http://", 0) == 0) path_start = 7;
  else if (low.rfind("https://", 0) == 0) path_start = 8;
  path_start = low.find('/', path_start);
  if (path_start == std::string::npos) return Relevance::unknown;

  for (const auto& seg : util::split(low.substr(path_start + 1), '/')) {
    // strip query/fragment from the final segment
    std::string s = seg.substr(0, seg.find_first_of("?#"));
    for (const auto& key : rules.irrelevant_sections)
      if (s == key) return Relevance::irrelevant;
  }
  return Relevance::unknown;
}

std::pair<std::vector<LabeledText>, size_t> dedupe_texts(
    const std::vector<LabeledText>& examples) {
  struct Entry {
    size_t first_index;
    bool label;
    bool conflict = false;
  };
  std::map<std::string, Entry> by_key;
  for (size_t i = 0; i < examples.size(); ++i) {
    std::string key = util::join(text::tokenize(examples[i].text), " ");
    auto [it, inserted] = by_key.emplace(key, Entry{i, examples[i].relevant});
    if (!inserted && it->second.label != examples[i].relevant) it->second.conflict = true;
  }
  std::vector<std::pair<size_t, bool>> keep;
  size_t conflicts = 0;
  for (const auto& [key, e] : by_key) {
    if (e.conflict) ++conflicts;
    else keep.emplace_back(e.first_index, e.label);
  }
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledText> out;
  out.reserve(keep.size());
  for (auto [i, label] : keep) out.push_back(examples[i]);
  return {out, conflicts};
}

std::vector<LabeledText> read_examples_tsv(const std::string& path) {
  std::vector<LabeledText> out;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("bad example line (no tab): " + line);
    std::string label = line.substr(0, tab);
    LabeledText ex;
    ex.text = line.substr(tab + 1);
    if (label == "relevant") ex.relevant = true;
    else if (label == "irrelevant") ex.relevant = false;
    else throw DataError("example label must be relevant or irrelevant: " + label);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_examples_tsv(const std::string& path, const std::vector<LabeledText>& examples,
                        const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write examples file: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  for (const auto& ex : examples)
    out << (ex.relevant ? "relevant" : "irrelevant") << '\t' << ex.text << "\n";
}

size_t CnnModel::total_filters() const {
  return config.filters_per_width * config.filter_widths.size();
}

size_t CnnModel::conv_w_offset(size_t wi) const {
  size_t off = 0;
  for (size_t i = 0; i < wi; ++i)
    off += config.filters_per_width * (config.filter_widths[i] * config.embed_dim + 1);
  return off;
}

size_t CnnModel::conv_b_offset(size_t wi) const {
  return conv_w_offset(wi) +
         config.filters_per_width * config.filter_widths[wi] * config.embed_dim;
}

size_t CnnModel::dense_w_offset() const { return conv_w_offset(config.filter_widths.size()); }

size_t CnnModel::dense_b_offset() const { return dense_w_offset() + 2 * total_filters(); }

size_t CnnModel::param_count() const { return dense_b_offset() + 2; }

CnnModel CnnModel::init(const CnnConfig& cfg) {
  if (cfg.embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (cfg.filters_per_width == 0) throw ConfigError("filters_per_width must be positive");
  if (cfg.filter_widths.empty()) throw ConfigError("at least one filter width required");
  for (size_t w : cfg.filter_widths)
    if (w == 0) throw ConfigError("filter widths must be positive");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (cfg.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");

  CnnModel m;
  m.config = cfg;
  m.params.assign(m.param_count(), 0.0);
  std::mt19937_64 rng(util::mix_seed(cfg.seed, 11));
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53);
  };
  for (size_t wi = 0; wi < cfg.filter_widths.size(); ++wi) {
    size_t fan_in = cfg.filter_widths[wi] * cfg.embed_dim;
    double bound = std::sqrt(6.0 / double(fan_in + 1));
    double* w = &m.params[m.conv_w_offset(wi)];
    for (size_t i = 0; i < cfg.filters_per_width * fan_in; ++i) w[i] = uniform(-bound, bound);
    // conv biases start at zero
  }
  {
    double bound = std::sqrt(6.0 / double(m.total_filters() + 2));
    double* w = &m.params[m.dense_w_offset()];
    for (size_t i = 0; i < 2 * m.total_filters(); ++i) w[i] = uniform(-bound, bound);
  }
  return m;
}

std::vector<CnnParamGroup> cnn_param_groups(const CnnModel& m) {
  std::vector<CnnParamGroup> groups;
  for (size_t wi = 0; wi < m.config.filter_widths.size(); ++wi) {
    std::string w = std::to_string(m.config.filter_widths[wi]);
    groups.push_back({"conv_w" + w, m.conv_w_offset(wi),
                      m.config.filters_per_width * m.config.filter_widths[wi] *
                          m.config.embed_dim});
    groups.push_back({"conv_b" + w, m.conv_b_offset(wi), m.config.filters_per_width});
  }
  groups.push_back({"dense_w", m.dense_w_offset(), 2 * m.total_filters()});
  groups.push_back({"dense_b", m.dense_b_offset(), 2});
  return groups;
}

namespace {

constexpr uint32_t kCnnMagic = 0x4E435350;  // "PSCN"
constexpr uint32_t kCnnVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated classifier file");
  return v;
}

bool is_zero_vec(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

struct FwdCache {
  std::vector<double> z;        // pooled features, post-relu
  std::vector<double> z_used;   // after dropout scaling (== z when mask empty)
  std::vector<size_t> argmax;   // winning window per feature
  std::vector<uint8_t> active;  // pre-activation of the winner was > 0
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

void forward(const CnnModel& m, const CnnExample& ex, const std::vector<double>* drop_mask,
             FwdCache& c) {
  const CnnConfig& cfg = m.config;
  const size_t D = cfg.embed_dim;
  const size_t F = cfg.filters_per_width;
  const size_t L = ex.vectors.size();
  const size_t total = m.total_filters();

  c.z.assign(total, 0.0);
  c.argmax.assign(total, 0);
  c.active.assign(total, 0);

  for (size_t wi = 0; wi < cfg.filter_widths.size(); ++wi) {
    const size_t w = cfg.filter_widths[wi];
    const double* W = &m.params[m.conv_w_offset(wi)];
    const double* B = &m.params[m.conv_b_offset(wi)];
    if (L < w) throw DataError("sequence shorter than filter width after padding");
    for (size_t f = 0; f < F; ++f) {
      const double* filter = W + f * w * D;
      double best = -std::numeric_limits<double>::infinity();
      size_t best_p = 0;
      for (size_t p = 0; p + w <= L; ++p) {
        double s = B[f];
        for (size_t i = 0; i < w; ++i) {
          const double* x = ex.vectors[p + i].data();
          const double* fi = filter + i * D;
          for (size_t d = 0; d < D; ++d) s += fi[d] * x[d];
        }
        if (s > best) {
          best = s;
          best_p = p;
        }
      }
      size_t j = wi * F + f;
      c.argmax[j] = best_p;
      c.active[j] = best > 0.0;
      c.z[j] = best > 0.0 ? best : 0.0;
    }
  }

  c.z_used = c.z;
  if (drop_mask)
    for (size_t j = 0; j < total; ++j) c.z_used[j] *= (*drop_mask)[j];

  const double* DW = &m.params[m.dense_w_offset()];
  const double* DB = &m.params[m.dense_b_offset()];
  for (size_t k = 0; k < 2; ++k) {
    double s = DB[k];
    const double* row = DW + k * total;
    for (size_t j = 0; j < total; ++j) s += row[j] * c.z_used[j];
    c.logits[k] = s;
  }
  double mx = std::max(c.logits[0], c.logits[1]);
  double e0 = std::exp(c.logits[0] - mx), e1 = std::exp(c.logits[1] - mx);
  c.probs[0] = e0 / (e0 + e1);
  c.probs[1] = e1 / (e0 + e1);
}

// dlogits = dLoss/dlogits for this example (already weighted); accumulates into grad
void backward(const CnnModel& m, const CnnExample& ex, const FwdCache& c,
              const std::array<double, 2>& dlogits, const std::vector<double>* drop_mask,
              std::vector<double>& grad) {
  const CnnConfig& cfg = m.config;
  const size_t D = cfg.embed_dim;
  const size_t F = cfg.filters_per_width;
  const size_t total = m.total_filters();

  double* dDW = &grad[m.dense_w_offset()];
  double* dDB = &grad[m.dense_b_offset()];
  const double* DW = &m.params[m.dense_w_offset()];

  std::vector<double> dz(total, 0.0);
  for (size_t k = 0; k < 2; ++k) {
    dDB[k] += dlogits[k];
    double* drow = dDW + k * total;
    const double* row = DW + k * total;
    for (size_t j = 0; j < total; ++j) {
      drow[j] += dlogits[k] * c.z_used[j];
      dz[j] += dlogits[k] * row[j];
    }
  }
  if (drop_mask)
    for (size_t j = 0; j < total; ++j) dz[j] *= (*drop_mask)[j];

  for (size_t wi = 0; wi < cfg.filter_widths.size(); ++wi) {
    const size_t w = cfg.filter_widths[wi];
    double* dW = &grad[m.conv_w_offset(wi)];
    double* dB = &grad[m.conv_b_offset(wi)];
    for (size_t f = 0; f < F; ++f) {
      size_t j = wi * F + f;
      if (!c.active[j] || dz[j] == 0.0) continue;
      double g = dz[j];
      dB[f] += g;
      double* dfilter = dW + f * w * D;
      size_t p = c.argmax[j];
      for (size_t i = 0; i < w; ++i) {
        const double* x = ex.vectors[p + i].data();
        double* dfi = dfilter + i * D;
        for (size_t d = 0; d < D; ++d) dfi[d] += g * x[d];
      }
    }
  }
}

}  // namespace

CnnExample embed_text(const std::string& text_in, const EmbeddingModel& embeddings,
                      const CnnConfig& cfg, bool relevant) {
  CnnExample ex;
  ex.relevant = relevant;
  for (const std::string& tok : text::tokenize(text_in)) {
    if (embeddings.composable(tok)) ex.vectors.push_back(embeddings.vector(tok));
    else ex.vectors.emplace_back(cfg.embed_dim, 0.0);  // acts as padding
  }
  // trim zero-vector padding at both ends so padded variants share features
  size_t lo = 0, hi = ex.vectors.size();
  while (lo < hi && is_zero_vec(ex.vectors[lo])) ++lo;
  while (hi > lo && is_zero_vec(ex.vectors[hi - 1])) --hi;
  ex.vectors.erase(ex.vectors.begin() + std::ptrdiff_t(hi), ex.vectors.end());
  ex.vectors.erase(ex.vectors.begin(), ex.vectors.begin() + std::ptrdiff_t(lo));

  if (ex.vectors.size() > cfg.max_sequence) ex.vectors.resize(cfg.max_sequence);
  size_t max_w = *std::max_element(cfg.filter_widths.begin(), cfg.filter_widths.end());
  while (ex.vectors.size() < max_w) ex.vectors.emplace_back(cfg.embed_dim, 0.0);
  return ex;
}

double cnn_batch_loss(const CnnModel& model, const std::vector<CnnExample>& batch,
                      std::vector<double>* grad) {
  if (batch.empty()) throw DataError("empty batch");
  if (grad) grad->assign(model.param_count(), 0.0);
  FwdCache cache;
  double loss = 0.0;
  const double inv = 1.0 / double(batch.size());
  for (const CnnExample& ex : batch) {
    forward(model, ex, nullptr, cache);
    size_t label = ex.relevant ? 1 : 0;
    loss += -std::log(std::max(cache.probs[label], 1e-300));
    if (grad) {
      std::array<double, 2> dlogits;
      for (size_t k = 0; k < 2; ++k)
        dlogits[k] = (cache.probs[k] - (k == label ? 1.0 : 0.0)) * inv;
      backward(model, ex, cache, dlogits, nullptr, *grad);
    }
  }
  return loss * inv;
}

CnnModel train_cnn(const std::vector<LabeledText>& examples,
                   const EmbeddingModel& embeddings, const CnnConfig& cfg,
                   CnnTrainLog* log) {
  if (embeddings.dim() != cfg.embed_dim)
    throw ConfigError("embedding dimension does not match classifier embed_dim");

  CnnModel model = CnnModel::init(cfg);

  std::vector<CnnExample> data;
  size_t dropped = 0;
  for (const auto& ex : examples) {
    CnnExample e = embed_text(ex.text, embeddings, cfg, ex.relevant);
    bool usable = false;
    for (const auto& v : e.vectors)
      if (!is_zero_vec(v)) usable = true;
    if (usable) data.push_back(std::move(e));
    else ++dropped;
  }
  size_t n_pos = 0;
  for (const auto& e : data) n_pos += e.relevant ? 1 : 0;
  size_t n_neg = data.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("training set is missing a class");
  if (n_pos < 2 || n_neg < 2) throw DataError("need at least 2 examples per class");

  std::mt19937_64 rng(util::mix_seed(cfg.seed, 12));
  const size_t total = model.total_filters();
  std::vector<double> grad(model.param_count());
  std::vector<double> adagrad_acc;
  if (cfg.adagrad) adagrad_acc.assign(model.param_count(), 0.0);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  FwdCache cache;
  std::vector<double> mask(total);
  const double keep = 1.0 - cfg.dropout;

  if (log) {
    log->epoch_loss.clear();
    log->epoch_accuracy.clear();
    log->dropped_empty = dropped;
  }

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    util::shuffle_vec(order, rng);
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      grad.assign(model.param_count(), 0.0);
      const double inv = 1.0 / double(end - start);
      for (size_t i = start; i < end; ++i) {
        const CnnExample& ex = data[order[i]];
        const std::vector<double>* mask_ptr = nullptr;
        if (cfg.dropout > 0.0) {
          for (size_t j = 0; j < total; ++j) {
            double u = double(rng() >> 11) * 0x1.0p-53;
            mask[j] = u < keep ? 1.0 / keep : 0.0;  // inverted dropout
          }
          mask_ptr = &mask;
        }
        forward(model, ex, mask_ptr, cache);
        size_t label = ex.relevant ? 1 : 0;
        epoch_loss += -std::log(std::max(cache.probs[label], 1e-300));
        ++seen;
        std::array<double, 2> dlogits;
        for (size_t k = 0; k < 2; ++k)
          dlogits[k] = (cache.probs[k] - (k == label ? 1.0 : 0.0)) * inv;
        backward(model, ex, cache, dlogits, mask_ptr, grad);
      }
      if (cfg.adagrad) {
        for (size_t i = 0; i < grad.size(); ++i) {
          adagrad_acc[i] += grad[i] * grad[i];
          model.params[i] -= cfg.learning_rate * grad[i] /
                             (std::sqrt(adagrad_acc[i]) + 1e-8);
        }
      } else {
        for (size_t i = 0; i < grad.size(); ++i)
          model.params[i] -= cfg.learning_rate * grad[i];
      }
    }

    size_t correct = 0;
    for (const CnnExample& ex : data) {
      forward(model, ex, nullptr, cache);
      if ((cache.probs[1] >= 0.5) == ex.relevant) ++correct;
    }
    double acc = double(correct) / double(data.size());
    if (log) {
      log->epoch_loss.push_back(epoch_loss / double(seen));
      log->epoch_accuracy.push_back(acc);
      log->epochs_run = epoch + 1;
    }
    if (acc == 1.0) break;  // training set fully separated
  }
  return model;
}

double predict(const CnnModel& model, const std::string& text_in,
               const EmbeddingModel& embeddings) {
  CnnExample ex = embed_text(text_in, embeddings, model.config);
  bool usable = false;
  for (const auto& v : ex.vectors)
    if (!is_zero_vec(v)) usable = true;
  if (!usable) throw DataError("text has no usable tokens");
  FwdCache cache;
  forward(model, ex, nullptr, cache);
  return cache.probs[1];
}

Metrics evaluate(const CnnModel& model, const std::vector<LabeledText>& test_set,
                 const EmbeddingModel& embeddings) {
  if (test_set.empty()) throw DataError("empty test set");
  bool has_pos = false, has_neg = false;
  for (const auto& ex : test_set) (ex.relevant ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("test set is missing a class");

  Metrics m;
  for (const auto& ex : test_set) {
    bool pred = predict(model, ex.text, embeddings) >= 0.5;
    if (pred && ex.relevant) ++m.tp;
    else if (pred && !ex.relevant) ++m.fp;
    else if (!pred && ex.relevant) ++m.fn;
    else ++m.tn;
  }
  size_t n = m.tp + m.fp + m.tn + m.fn;
  m.accuracy = double(m.tp + m.tn) / double(n);
  double precision = m.tp + m.fp > 0 ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  double recall = m.tp + m.fn > 0 ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  m.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return m;
}

void CnnModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write classifier file: " + path);
  write_pod(out, kCnnMagic);
  write_pod(out, kCnnVersion);
  write_pod(out, uint32_t(config.embed_dim));
  write_pod(out, uint32_t(config.filters_per_width));
  write_pod(out, uint32_t(config.filter_widths.size()));
  for (size_t w : config.filter_widths) write_pod(out, uint32_t(w));
  write_pod(out, config.dropout);
  write_pod(out, uint32_t(config.max_sequence));
  write_pod(out, config.learning_rate);
  write_pod(out, uint32_t(config.epochs));
  write_pod(out, uint32_t(config.batch_size));
  write_pod(out, uint8_t(config.adagrad ? 1 : 0));
  write_pod(out, config.seed);
  write_pod(out, uint64_t(params.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            std::streamsize(params.size() * sizeof(double)));
  if (!out) throw DataError("write failed: " + path);
}

CnnModel CnnModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read classifier file: " + path);
  if (read_pod<uint32_t>(in) != kCnnMagic) throw DataError("not a classifier file: " + path);
  if (read_pod<uint32_t>(in) != kCnnVersion)
    throw DataError("unsupported classifier version");
  CnnConfig cfg;
  cfg.embed_dim = read_pod<uint32_t>(in);
  cfg.filters_per_width = read_pod<uint32_t>(in);
  uint32_t n_widths = read_pod<uint32_t>(in);
  cfg.filter_widths.clear();
  for (uint32_t i = 0; i < n_widths; ++i) cfg.filter_widths.push_back(read_pod<uint32_t>(in));
  cfg.dropout = read_pod<double>(in);
  cfg.max_sequence = read_pod<uint32_t>(in);
  cfg.learning_rate = read_pod<double>(in);
  cfg.epochs = read_pod<uint32_t>(in);
  cfg.batch_size = read_pod<uint32_t>(in);
  cfg.adagrad = read_pod<uint8_t>(in) != 0;
  cfg.seed = read_pod<uint64_t>(in);
  uint64_t n_params = read_pod<uint64_t>(in);

  CnnModel m;
  m.config = cfg;
  if (n_params != m.param_count()) throw DataError("classifier parameter count mismatch");
  m.params.resize(n_params);
  in.read(reinterpret_cast<char*>(m.params.data()),
          std::streamsize(n_params * sizeof(double)));
  if (!in) throw DataError("truncated classifier file");
  return m;
}

}  // namespace polarscope
