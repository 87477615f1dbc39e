#include "polarscope/align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "polarscope/text.hpp"
#include "polarscope/util.hpp"

namespace polarscope {

namespace {

std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) throw DataError("zero vector cannot be normalized");
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

AnchorSet build_anchor_set(const std::vector<std::string>& stopwords,
                           const EmbeddingModel& src, const EmbeddingModel& tgt) {
  AnchorSet anchors;
  std::set<std::string> seen;
  for (const std::string& raw : stopwords) {
    std::string w = text::lower(text::normalize(raw));
    if (w.empty() || !seen.insert(w).second) continue;
    if (src.word_index(w) && tgt.word_index(w)) anchors.words.push_back(w);
  }
  return anchors;
}

double TranslationMatrix::max_orthogonality_error() const {
  double worst = 0.0;
  for (size_t i = 0; i < dim; ++i)
    for (size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (size_t k = 0; k < dim; ++k) s += t[k * dim + i] * t[k * dim + j];
      worst = std::max(worst, std::fabs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

std::vector<double> TranslationMatrix::apply(const std::vector<double>& v) const {
  if (v.size() != dim) throw DataError("translation input dimension mismatch");
  std::vector<double> out(dim, 0.0);
  for (size_t i = 0; i < dim; ++i) {
    double vi = v[i];
    if (vi == 0.0) continue;
    const double* row = &t[i * dim];
    for (size_t j = 0; j < dim; ++j) out[j] += vi * row[j];
  }
  return out;
}

TranslationMatrix learn_translation(const EmbeddingModel& src, const EmbeddingModel& tgt,
                                    const AnchorSet& anchors) {
  const size_t dim = src.dim();
  if (tgt.dim() != dim) throw DataError("embedding dimensions differ between models");
  const size_t n = anchors.words.size();
  if (n < dim)
    throw DataError("anchor set under-determines the mapping: " + std::to_string(n) +
                    " anchors for dimension " + std::to_string(dim));
  {
    std::set<std::string> uniq(anchors.words.begin(), anchors.words.end());
    if (uniq.size() != n) throw DataError("anchor set contains duplicates");
  }

  Eigen::MatrixXd X(n, dim), Y(n, dim);
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> xs = unit(src.vector(anchors.words[i]));
    std::vector<double> ys = unit(tgt.vector(anchors.words[i]));
    for (size_t d = 0; d < dim; ++d) {
      X(long(i), long(d)) = xs[d];
      Y(long(i), long(d)) = ys[d];
    }
  }

  Eigen::MatrixXd M = X.transpose() * Y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double sigma_min = svd.singularValues()(long(dim) - 1);
  if (sigma_min < 1e-8)
    throw DataError("anchor matrix is rank-deficient (smallest singular value " +
                    std::to_string(sigma_min) + "); alignment not identifiable");
  Eigen::MatrixXd T = svd.matrixU() * svd.matrixV().transpose();

  TranslationMatrix result;
  result.dim = dim;
  result.t.resize(dim * dim);
  for (size_t i = 0; i < dim; ++i)
    for (size_t j = 0; j < dim; ++j) result.t[i * dim + j] = T(long(i), long(j));
  result.src_fingerprint = src.fingerprint();
  result.tgt_fingerprint = tgt.fingerprint();
  if (result.max_orthogonality_error() > 1e-5)
    throw std::runtime_error("learned translation lost orthogonality");
  return result;
}

TranslationResult translate_word(const std::string& w, const TranslationMatrix& T,
                                 const EmbeddingModel& src, const EmbeddingModel& tgt) {
  std::vector<double> q = T.apply(unit(src.vector(w)));
  auto nn = nearest_neighbors(tgt, q, 1);
  if (nn.empty()) throw DataError("target vocabulary is empty");
  TranslationResult r;
  r.source_word = w;
  r.translated_word = nn[0].first;
  r.is_self = r.translated_word == w;
  r.cosine = nn[0].second;
  auto rank = src.word_index(w);
  r.source_rank = rank ? *rank : std::numeric_limits<size_t>::max();
  return r;
}

double similarity(const EmbeddingModel& src, const EmbeddingModel& tgt,
                  const TranslationMatrix& T, const std::vector<std::string>& eval_vocab) {
  if (eval_vocab.empty()) throw DataError("empty evaluation vocabulary");
  size_t self = 0;
  for (const std::string& w : eval_vocab)
    if (translate_word(w, T, src, tgt).is_self) ++self;
  return double(self) / double(eval_vocab.size());
}

std::vector<TranslationResult> disagreed_pairs(const EmbeddingModel& src,
                                               const EmbeddingModel& tgt,
                                               const TranslationMatrix& T,
                                               const std::vector<std::string>& eval_vocab,
                                               size_t k) {
  std::vector<TranslationResult> out;
  for (const std::string& w : eval_vocab) {
    TranslationResult r = translate_word(w, T, src, tgt);
    if (!r.is_self) out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const TranslationResult& a, const TranslationResult& b) {
    if (a.source_rank != b.source_rank) return a.source_rank < b.source_rank;
    return a.source_word < b.source_word;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

SimilarityReport run_polarization_experiment(const StanceCorpus& corpus_a,
                                             const StanceCorpus& corpus_b,
                                             const std::vector<std::string>& stopwords,
                                             const ExperimentConfig& cfg) {
  if (corpus_a.token_count == 0 || corpus_b.token_count == 0)
    throw DataError("polarization experiment needs two nonempty corpora");
  if (cfg.n_runs < 1) throw ConfigError("n_runs must be >= 1");

  SimilarityReport report;
  for (size_t r = 0; r < cfg.n_runs; ++r) {
    try {
      const StanceCorpus* a = &corpus_a;
      const StanceCorpus* b = &corpus_b;
      StanceCorpus sub;
      if (corpus_a.token_count > corpus_b.token_count) {
        sub = subsample_corpus(corpus_a, corpus_b.token_count,
                               util::mix_seed(cfg.seed, 1000 + r));
        a = &sub;
      } else if (corpus_b.token_count > corpus_a.token_count) {
        sub = subsample_corpus(corpus_b, corpus_a.token_count,
                               util::mix_seed(cfg.seed, 1000 + r));
        b = &sub;
      }

      EmbedConfig ea = cfg.embed, eb = cfg.embed;
      ea.seed = util::mix_seed(cfg.seed, 2000 + 2 * r);
      eb.seed = util::mix_seed(cfg.seed, 2000 + 2 * r + 1);
      EmbeddingModel model_a = train_embeddings(*a, ea);
      EmbeddingModel model_b = train_embeddings(*b, eb);

      AnchorSet anchors = build_anchor_set(stopwords, model_a, model_b);
      TranslationMatrix t_ab = learn_translation(model_a, model_b, anchors);
      TranslationMatrix t_ba = learn_translation(model_b, model_a, anchors);

      std::vector<std::string> top = top_k_vocab({a, b}, cfg.eval_k);
      std::vector<std::string> eval_ab, eval_ba;
      size_t uncomposable = 0;
      for (const std::string& w : top) {
        if (model_a.composable(w)) eval_ab.push_back(w);
        else ++uncomposable;
        if (model_b.composable(w)) eval_ba.push_back(w);
      }
      if (eval_ab.empty() || eval_ba.empty())
        throw DataError("evaluation vocabulary is empty after composability filtering");

      double sim_ab = similarity(model_a, model_b, t_ab, eval_ab);
      double sim_ba = similarity(model_b, model_a, t_ba, eval_ba);
      report.run_src_to_tgt.push_back(sim_ab);
      report.run_tgt_to_src.push_back(sim_ba);
      report.run_values.push_back(0.5 * (sim_ab + sim_ba));

      if (r == 0) {
        report.eval_vocab_size = eval_ab.size();
        report.eval_uncomposable = uncomposable;
        for (const std::string& w : eval_ab)
          if (!model_b.word_index(w)) ++report.eval_missing_in_target;
        report.disagreed = disagreed_pairs(model_a, model_b, t_ab, eval_ab,
                                           cfg.disagreed_k);
      }
    } catch (const ConfigError& e) {
      throw ConfigError("run " + std::to_string(r) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("run " + std::to_string(r) + ": " + e.what());
    }
  }

  report.run_count = report.run_values.size();
  double sum = 0.0;
  for (double v : report.run_values) sum += v;
  report.mean = sum / double(report.run_count);
  if (report.run_count > 1) {
    double ss = 0.0;
    for (double v : report.run_values) ss += (v - report.mean) * (v - report.mean);
    report.stddev = std::sqrt(ss / double(report.run_count - 1));
  }
  return report;
}

void write_similarity_report(const std::string& path, const SimilarityReport& report,
                             const ExperimentConfig& cfg, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "similarity_mean " << util::format_double(report.mean, 6) << "\n";
  out << "similarity_std " << util::format_double(report.stddev, 6) << "\n";
  out << "runs " << report.run_count << "\n";
  out << "eval_vocab_size " << report.eval_vocab_size << "\n";
  out << "eval_missing_in_target " << report.eval_missing_in_target << "\n";
  out << "eval_uncomposable " << report.eval_uncomposable << "\n";
  out << "embed_dim " << cfg.embed.dim << "\n";
  out << "embed_epochs " << cfg.embed.epochs << "\n";
  out << "eval_k " << cfg.eval_k << "\n";
  for (size_t i = 0; i < report.run_values.size(); ++i) {
    out << "run " << i << ' ' << util::format_double(report.run_src_to_tgt[i], 6) << ' '
        << util::format_double(report.run_tgt_to_src[i], 6) << ' '
        << util::format_double(report.run_values[i], 6) << "\n";
  }
}

void write_disagreed_csv(const std::string& path,
                         const std::vector<TranslationResult>& pairs,
                         const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write disagreed pairs: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "rank,source_word,translation,cosine\n";
  for (const auto& p : pairs) {
    out << util::csv_row({std::to_string(p.source_rank), p.source_word, p.translated_word,
                          util::format_double(p.cosine, 6)})
        << "\n";
  }
}

}  // namespace polarscope
