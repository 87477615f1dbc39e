#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polarscope/embed.hpp"

namespace polarscope {

enum class Relevance { relevant, irrelevant, unknown };
const char* to_string(Relevance r);

struct UrlLabelRule {
  std::map<std::string, bool> labeled;  // url -> relevant?
  std::vector<std::string> irrelevant_sections = {"sports",     "deportes",
                                                  "culture",    "cultura",
                                                  "technology", "tecnologia"};

  static UrlLabelRule load_csv(const std::string& path);  // url,label
};

// Explicit label wins; otherwise a path segment naming an irrelevant section
// marks the URL irrelevant; anything else is unknown.
Relevance url_label(const std::string& url, const UrlLabelRule& rules);

struct LabeledText {
  std::string text;
  bool relevant = false;
};

// One exemplar per normalized text; identical texts with conflicting labels are
// dropped entirely (second value counts dropped text groups).
std::pair<std::vector<LabeledText>, size_t> dedupe_texts(
    const std::vector<LabeledText>& examples);

std::vector<LabeledText> read_examples_tsv(const std::string& path);
void write_examples_tsv(const std::string& path, const std::vector<LabeledText>& examples,
                        const std::string& provenance = "");

struct CnnConfig {
  size_t embed_dim = 300;
  size_t filters_per_width = 100;
  std::vector<size_t> filter_widths = {3, 4, 5};
  double dropout = 0.5;
  size_t max_sequence = 64;
  double learning_rate = 0.05;
  size_t epochs = 100;
  size_t batch_size = 16;
  bool adagrad = false;
  uint64_t seed = 1;
};

// All parameters live in one flat double vector:
// per width: filter bank (filters x width*embed_dim), then biases (filters);
// then the dense layer (2 x total_filters) and its bias (2).
class CnnModel {
 public:
  CnnConfig config;
  std::vector<double> params;

  size_t total_filters() const;
  size_t conv_w_offset(size_t width_index) const;
  size_t conv_b_offset(size_t width_index) const;
  size_t dense_w_offset() const;
  size_t dense_b_offset() const;
  size_t param_count() const;

  static CnnModel init(const CnnConfig& cfg);  // seeded uniform fan-in/fan-out init
  void save(const std::string& path) const;
  static CnnModel load(const std::string& path);
};

struct CnnParamGroup {
  std::string name;
  size_t offset = 0;
  size_t size = 0;
};
std::vector<CnnParamGroup> cnn_param_groups(const CnnModel& model);

// Token vectors after trimming zero-vector padding at both ends, truncating to
// max_sequence, and right-padding up to the widest filter.
struct CnnExample {
  std::vector<std::vector<double>> vectors;
  bool relevant = false;
};
CnnExample embed_text(const std::string& text, const EmbeddingModel& embeddings,
                      const CnnConfig& cfg, bool relevant = false);

// Mean cross-entropy over the batch, dropout off. grad (if given) is resized to
// param_count and filled with dLoss/dparam.
double cnn_batch_loss(const CnnModel& model, const std::vector<CnnExample>& batch,
                      std::vector<double>* grad = nullptr);

struct CnnTrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;  // on the training set, dropout off
  size_t epochs_run = 0;
  size_t dropped_empty = 0;  // examples with no usable tokens
};

CnnModel train_cnn(const std::vector<LabeledText>& examples,
                   const EmbeddingModel& embeddings, const CnnConfig& cfg,
                   CnnTrainLog* log = nullptr);

// Softmax probability of the relevant class, dropout off.
double predict(const CnnModel& model, const std::string& text,
               const EmbeddingModel& embeddings);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // for the relevant class
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics evaluate(const CnnModel& model, const std::vector<LabeledText>& test_set,
                 const EmbeddingModel& embeddings);

}  // namespace polarscope
