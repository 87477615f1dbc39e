// polarscope: batch pipeline driver. Stages read their inputs from the config
// and from earlier stages' outputs under the output directory; every artifact
// carries a provenance header (or sidecar) with the config hash and seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>

#include "polarscope/align.hpp"
#include "polarscope/classify.hpp"
#include "polarscope/corpus.hpp"
#include "polarscope/embed.hpp"
#include "polarscope/flow.hpp"
#include "polarscope/mediagraph.hpp"
#include "polarscope/stance.hpp"
#include "polarscope/synth.hpp"
#include "polarscope/tweet.hpp"
#include "polarscope/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polarscope;

namespace {

struct Paths {
  std::string tweets, lexicon, politicians, media, stopwords, url_labels,
      cnn_examples, descriptions;
};

struct AlignCfg {
  size_t eval_k = 5000;
  size_t n_runs = 6;
  size_t disagreed_k = 200;
};

struct ClassifyCfg {
  CnnConfig cnn;
  std::string embedding = "pro";  // which community's embeddings feed the CNN
  size_t holdout_every = 5;       // every n-th example per class held out
};

struct ClusterCfg {
  size_t min_shared = 1;
  double resolution = 1.0;
};

struct FlowCfg {
  size_t bins = 10;
  std::string baseline = "audience";  // or "global": share over all labeled users
};

struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  std::string country;
  Paths paths;
  StanceParams stance;
  EmbedConfig embed;
  AlignCfg align;
  ClassifyCfg classify;
  ClusterCfg cluster;
  FlowCfg flow;
  DatasetSpec synth;
  uint64_t config_hash = 0;
};

// --- config loading ---------------------------------------------------------

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& allowed, std::vector<std::string>& errors) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) errors.push_back("unknown key " + prefix + it.key());
}

void get_uint(const json& obj, const char* key, size_t& out, const std::string& prefix,
              std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<int64_t>() < 0) {
    errors.push_back(prefix + key + " must be a non-negative integer");
    return;
  }
  out = v.get<size_t>();
}

void get_real(const json& obj, const char* key, double& out, const std::string& prefix,
              std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    errors.push_back(prefix + key + " must be a number");
    return;
  }
  out = v.get<double>();
}

void get_str(const json& obj, const char* key, std::string& out, const std::string& prefix,
             std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    errors.push_back(prefix + key + " must be a string");
    return;
  }
  out = v.get<std::string>();
}

void get_bool(const json& obj, const char* key, bool& out, const std::string& prefix,
              std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    errors.push_back(prefix + key + " must be a boolean");
    return;
  }
  out = v.get<bool>();
}

RunConfig load_config(const std::string& path) {
  std::string content = util::read_file(path);
  json root = json::parse(content, nullptr, false);
  if (root.is_discarded()) throw ConfigError("config is not valid JSON: " + path);
  if (!root.is_object()) throw ConfigError("config root must be an object");

  RunConfig cfg;
  std::vector<std::string> errors;
  check_keys(root, "",
             {"schema_version", "seed", "out_dir", "country", "paths", "stance", "embed",
              "align", "classify", "cluster", "flow", "synth"},
             errors);

  if (!root.contains("schema_version")) {
    errors.push_back("schema_version is required");
  } else if (!root["schema_version"].is_number_integer() ||
             root["schema_version"].get<int64_t>() != 1) {
    errors.push_back("schema_version must be 1");
  }

  size_t seed_tmp = 1;
  get_uint(root, "seed", seed_tmp, "", errors);
  cfg.seed = seed_tmp;
  get_str(root, "out_dir", cfg.out_dir, "", errors);
  get_str(root, "country", cfg.country, "", errors);

  if (root.contains("paths")) {
    const json& p = root["paths"];
    if (!p.is_object()) {
      errors.push_back("paths must be an object");
    } else {
      check_keys(p, "paths.",
                 {"tweets", "lexicon", "politicians", "media", "stopwords", "url_labels",
                  "cnn_examples", "descriptions"},
                 errors);
      get_str(p, "tweets", cfg.paths.tweets, "paths.", errors);
      get_str(p, "lexicon", cfg.paths.lexicon, "paths.", errors);
      get_str(p, "politicians", cfg.paths.politicians, "paths.", errors);
      get_str(p, "media", cfg.paths.media, "paths.", errors);
      get_str(p, "stopwords", cfg.paths.stopwords, "paths.", errors);
      get_str(p, "url_labels", cfg.paths.url_labels, "paths.", errors);
      get_str(p, "cnn_examples", cfg.paths.cnn_examples, "paths.", errors);
      get_str(p, "descriptions", cfg.paths.descriptions, "paths.", errors);
    }
  }
  if (root.contains("stance")) {
    const json& s = root["stance"];
    check_keys(s, "stance.",
               {"hashtag_threshold", "retweet_threshold", "min_tweets",
                "stance_bearing_denominator"},
               errors);
    get_real(s, "hashtag_threshold", cfg.stance.hashtag_threshold, "stance.", errors);
    get_real(s, "retweet_threshold", cfg.stance.retweet_threshold, "stance.", errors);
    get_uint(s, "min_tweets", cfg.stance.min_tweets, "stance.", errors);
    get_bool(s, "stance_bearing_denominator", cfg.stance.stance_bearing_denominator,
             "stance.", errors);
  }
  if (root.contains("embed")) {
    const json& e = root["embed"];
    check_keys(e, "embed.",
               {"dim", "window", "negatives", "epochs", "min_count", "subword_min",
                "subword_max", "buckets", "learning_rate", "subsample_t", "workers"},
               errors);
    get_uint(e, "dim", cfg.embed.dim, "embed.", errors);
    get_uint(e, "window", cfg.embed.window, "embed.", errors);
    get_uint(e, "negatives", cfg.embed.negatives, "embed.", errors);
    get_uint(e, "epochs", cfg.embed.epochs, "embed.", errors);
    get_uint(e, "min_count", cfg.embed.min_count, "embed.", errors);
    get_uint(e, "subword_min", cfg.embed.subword_min, "embed.", errors);
    get_uint(e, "subword_max", cfg.embed.subword_max, "embed.", errors);
    get_uint(e, "buckets", cfg.embed.bucket_count, "embed.", errors);
    get_real(e, "learning_rate", cfg.embed.learning_rate, "embed.", errors);
    get_real(e, "subsample_t", cfg.embed.subsample_t, "embed.", errors);
    get_uint(e, "workers", cfg.embed.workers, "embed.", errors);
  }
  if (root.contains("align")) {
    const json& a = root["align"];
    check_keys(a, "align.", {"eval_k", "n_runs", "disagreed_k"}, errors);
    get_uint(a, "eval_k", cfg.align.eval_k, "align.", errors);
    get_uint(a, "n_runs", cfg.align.n_runs, "align.", errors);
    get_uint(a, "disagreed_k", cfg.align.disagreed_k, "align.", errors);
  }
  if (root.contains("classify")) {
    const json& c = root["classify"];
    check_keys(c, "classify.",
               {"filters_per_width", "filter_widths", "dropout", "max_sequence",
                "learning_rate", "epochs", "batch_size", "adagrad", "embedding",
                "holdout_every"},
               errors);
    get_uint(c, "filters_per_width", cfg.classify.cnn.filters_per_width, "classify.",
             errors);
    if (c.contains("filter_widths")) {
      const json& w = c["filter_widths"];
      if (!w.is_array() || w.empty()) {
        errors.push_back("classify.filter_widths must be a non-empty array");
      } else {
        cfg.classify.cnn.filter_widths.clear();
        for (const auto& v : w) {
          if (!v.is_number_integer() || v.get<int64_t>() < 1) {
            errors.push_back("classify.filter_widths entries must be positive integers");
            break;
          }
          cfg.classify.cnn.filter_widths.push_back(v.get<size_t>());
        }
      }
    }
    get_real(c, "dropout", cfg.classify.cnn.dropout, "classify.", errors);
    get_uint(c, "max_sequence", cfg.classify.cnn.max_sequence, "classify.", errors);
    get_real(c, "learning_rate", cfg.classify.cnn.learning_rate, "classify.", errors);
    get_uint(c, "epochs", cfg.classify.cnn.epochs, "classify.", errors);
    get_uint(c, "batch_size", cfg.classify.cnn.batch_size, "classify.", errors);
    get_bool(c, "adagrad", cfg.classify.cnn.adagrad, "classify.", errors);
    get_str(c, "embedding", cfg.classify.embedding, "classify.", errors);
    get_uint(c, "holdout_every", cfg.classify.holdout_every, "classify.", errors);
    if (cfg.classify.embedding != "pro" && cfg.classify.embedding != "anti")
      errors.push_back("classify.embedding must be \"pro\" or \"anti\"");
  }
  if (root.contains("cluster")) {
    const json& c = root["cluster"];
    check_keys(c, "cluster.", {"min_shared", "resolution"}, errors);
    get_uint(c, "min_shared", cfg.cluster.min_shared, "cluster.", errors);
    get_real(c, "resolution", cfg.cluster.resolution, "cluster.", errors);
  }
  if (root.contains("flow")) {
    const json& f = root["flow"];
    check_keys(f, "flow.", {"bins", "baseline"}, errors);
    get_uint(f, "bins", cfg.flow.bins, "flow.", errors);
    get_str(f, "baseline", cfg.flow.baseline, "flow.", errors);
    if (cfg.flow.baseline != "audience" && cfg.flow.baseline != "global")
      errors.push_back("flow.baseline must be \"audience\" or \"global\"");
  }
  if (root.contains("synth")) {
    const json& s = root["synth"];
    check_keys(s, "synth.",
               {"users_per_side", "tweets_per_user", "media_per_side", "intra", "inter",
                "cnn_examples_per_class", "swap"},
               errors);
    get_uint(s, "users_per_side", cfg.synth.users_per_side, "synth.", errors);
    get_uint(s, "tweets_per_user", cfg.synth.tweets_per_user, "synth.", errors);
    get_uint(s, "media_per_side", cfg.synth.media_per_side, "synth.", errors);
    get_real(s, "intra", cfg.synth.intra, "synth.", errors);
    get_real(s, "inter", cfg.synth.inter, "synth.", errors);
    get_uint(s, "cnn_examples_per_class", cfg.synth.cnn_examples_per_class, "synth.",
             errors);
    if (s.contains("swap")) {
      const json& w = s["swap"];
      check_keys(w, "synth.swap.",
                 {"base_vocab", "zipf_exponent", "n_pairs", "context_words_per_pair",
                  "pair_sentence_share", "tokens_per_corpus", "sentence_min",
                  "sentence_max"},
                 errors);
      get_uint(w, "base_vocab", cfg.synth.swap.base_vocab, "synth.swap.", errors);
      get_real(w, "zipf_exponent", cfg.synth.swap.zipf_exponent, "synth.swap.", errors);
      get_uint(w, "n_pairs", cfg.synth.swap.n_pairs, "synth.swap.", errors);
      get_uint(w, "context_words_per_pair", cfg.synth.swap.context_words_per_pair,
               "synth.swap.", errors);
      get_real(w, "pair_sentence_share", cfg.synth.swap.pair_sentence_share,
               "synth.swap.", errors);
      get_uint(w, "tokens_per_corpus", cfg.synth.swap.tokens_per_corpus, "synth.swap.",
               errors);
      get_uint(w, "sentence_min", cfg.synth.swap.sentence_min, "synth.swap.", errors);
      get_uint(w, "sentence_max", cfg.synth.swap.sentence_max, "synth.swap.", errors);
    }
  }

  if (!errors.empty()) throw ConfigError("config: " + util::join(errors, "; "));
  return cfg;
}

// --- provenance -------------------------------------------------------------

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

std::string prov_line(const RunConfig& cfg, const std::string& stage) {
  return "polarscope stage=" + stage + " config=" + hex64(cfg.config_hash) +
         " seed=" + std::to_string(cfg.seed) + " version=1";
}

std::string stage_dir(const RunConfig& cfg, const std::string& stage) {
  fs::create_directories(cfg.out_dir + "/" + stage);
  return cfg.out_dir + "/" + stage;
}

void write_sidecar(const RunConfig& cfg, const std::string& stage, json extra) {
  extra["stage"] = stage;
  extra["config"] = hex64(cfg.config_hash);
  extra["seed"] = cfg.seed;
  extra["version"] = 1;
  util::write_file(cfg.out_dir + "/" + stage + "/provenance.json", extra.dump(2) + "\n");
}

void require_stage_file(const std::string& path, const std::string& stage) {
  if (!fs::exists(path))
    throw DataError("requires " + stage + " output: " + path + " (run the " + stage +
                    " stage first)");
}

std::string require_input_path(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("paths." + what + " is required for this stage");
  if (!fs::exists(path)) throw ConfigError("paths." + what + " does not exist: " + path);
  return path;
}

// --- shared stage plumbing ---------------------------------------------------

TweetStore load_ingested(const RunConfig& cfg) {
  std::string path = cfg.out_dir + "/ingest/tweets.jsonl";
  require_stage_file(path, "ingest");
  return ingest_tweets(path).first;
}

std::vector<UserStanceRecord> load_stances(const RunConfig& cfg) {
  std::string path = cfg.out_dir + "/stance/stances.csv";
  require_stage_file(path, "stance");
  return read_stance_csv(path);
}

MediaRegistry load_registry(const RunConfig& cfg) {
  MediaRegistry reg = MediaRegistry::load_csv(require_input_path(cfg.paths.media, "media"));
  if (!cfg.country.empty()) reg = reg.for_country(cfg.country);
  if (reg.size() == 0)
    throw DataError("no media outlets for country '" + cfg.country + "'");
  return reg;
}

// URL rules first, then the CNN (when trained) on the tweet text.
struct RelevanceKit {
  UrlLabelRule rules;
  std::shared_ptr<EmbeddingModel> embeddings;
  std::shared_ptr<CnnModel> cnn;
  mutable size_t by_url = 0, by_cnn = 0, excluded = 0;

  bool relevant(const Tweet& t) const {
    bool any_rel = false, any_irr = false;
    for (const auto& u : t.urls) {
      Relevance r = url_label(u, rules);
      if (r == Relevance::relevant) any_rel = true;
      else if (r == Relevance::irrelevant) any_irr = true;
    }
    if (any_rel || any_irr) {
      by_url++;
      return any_rel;  // an explicitly relevant link outranks a sports link
    }
    if (cnn) {
      try {
        by_cnn++;
        return predict(*cnn, t.text, *embeddings) >= 0.5;
      } catch (const DataError&) {  // no usable tokens
        by_cnn--;
      }
    }
    excluded++;
    return false;
  }
};

RelevanceKit make_relevance_kit(const RunConfig& cfg) {
  RelevanceKit kit;
  if (!cfg.paths.url_labels.empty())
    kit.rules = UrlLabelRule::load_csv(require_input_path(cfg.paths.url_labels, "url_labels"));
  std::string cnn_path = cfg.out_dir + "/classify/cnn.bin";
  if (fs::exists(cnn_path)) {
    std::string model_path =
        cfg.out_dir + "/embed/model_" + cfg.classify.embedding + ".bin";
    require_stage_file(model_path, "embed");
    kit.embeddings = std::make_shared<EmbeddingModel>(EmbeddingModel::load(model_path));
    kit.cnn = std::make_shared<CnnModel>(CnnModel::load(cnn_path));
  }
  return kit;
}

std::map<std::string, std::string> corpus_labels(const std::vector<UserStanceRecord>& recs) {
  std::map<std::string, std::string> labels;
  for (const auto& r : recs) {
    if (r.combined == CombinedStance::consistent_pro_government) labels[r.user_id] = "pro";
    else if (r.combined == CombinedStance::consistent_anti_government)
      labels[r.user_id] = "anti";
  }
  return labels;
}

// --- stages ------------------------------------------------------------------

void run_synth(const RunConfig& cfg) {
  std::string dir = stage_dir(cfg, "synth");
  gen_dataset(cfg.synth, dir, cfg.seed, prov_line(cfg, "synth"));
  write_sidecar(cfg, "synth", {{"users_per_side", cfg.synth.users_per_side},
                               {"media_per_side", cfg.synth.media_per_side},
                               {"swap_pairs", cfg.synth.swap.n_pairs}});
}

void run_ingest(const RunConfig& cfg) {
  std::string in = require_input_path(cfg.paths.tweets, "tweets");
  auto [store, stats] = ingest_tweets(in);
  std::string dir = stage_dir(cfg, "ingest");
  write_tweets_jsonl(dir + "/tweets.jsonl", store.tweets(),
                     json(prov_line(cfg, "ingest")).dump());
  std::ofstream out(dir + "/stats.txt");
  out << "# " << prov_line(cfg, "ingest") << "\n";
  out << "lines " << stats.lines << "\n";
  out << "accepted " << stats.accepted << "\n";
  out << "malformed " << stats.malformed << "\n";
  out << "missing_fields " << stats.missing_fields << "\n";
  out << "duplicates " << stats.duplicates << "\n";
  write_sidecar(cfg, "ingest", {{"input", in}, {"accepted", stats.accepted}});
}

void run_stance(const RunConfig& cfg) {
  TweetStore store = load_ingested(cfg);
  HashtagLexicon lexicon =
      HashtagLexicon::load_csv(require_input_path(cfg.paths.lexicon, "lexicon"));
  PoliticianRegistry pols =
      PoliticianRegistry::load_csv(require_input_path(cfg.paths.politicians, "politicians"));
  std::map<std::string, std::string> descriptions;
  if (!cfg.paths.descriptions.empty()) {
    for (const std::string& line :
         util::read_lines(require_input_path(cfg.paths.descriptions, "descriptions"))) {
      if (line.empty() || line[0] == '#') continue;
      size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw DataError("bad description line (no tab): " + line);
      descriptions[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }

  auto records = label_users(store, descriptions, lexicon, pols, cfg.stance);
  std::string dir = stage_dir(cfg, "stance");
  write_stance_csv(dir + "/stances.csv", records, prov_line(cfg, "stance"));

  auto dist = stance_distribution(records);
  std::ofstream out(dir + "/distribution.csv");
  out << "# " << prov_line(cfg, "stance") << "\n";
  out << "stance,percent\n";
  const char* names[4] = {"consistent_anti_government", "consistent_pro_government",
                          "inconsistent", "other"};
  for (size_t i = 0; i < 4; ++i)
    out << names[i] << "," << util::format_double(dist[i], 2) << "\n";
  write_sidecar(cfg, "stance", {{"labeled_users", records.size()}});
}

void run_embed(const RunConfig& cfg) {
  TweetStore store = load_ingested(cfg);
  auto labels = corpus_labels(load_stances(cfg));
  StanceCorpus pro = build_stance_corpus(store, labels, "pro");
  StanceCorpus anti = build_stance_corpus(store, labels, "anti");

  std::string dir = stage_dir(cfg, "embed");
  write_corpus(dir + "/corpus_pro.txt", pro);
  write_corpus(dir + "/corpus_anti.txt", anti);

  EmbedConfig ec = cfg.embed;
  ec.seed = util::mix_seed(cfg.seed, 41);
  EmbeddingModel model_pro = train_embeddings(pro, ec);
  ec.seed = util::mix_seed(cfg.seed, 42);
  EmbeddingModel model_anti = train_embeddings(anti, ec);
  model_pro.save(dir + "/model_pro.bin");
  model_anti.save(dir + "/model_anti.bin");

  write_sidecar(cfg, "embed",
                {{"pro_tokens", pro.token_count},
                 {"anti_tokens", anti.token_count},
                 {"pro_users", pro.source_user_count},
                 {"anti_users", anti.source_user_count},
                 {"pro_vocab", model_pro.vocab_size()},
                 {"anti_vocab", model_anti.vocab_size()},
                 {"pro_fingerprint", hex64(model_pro.fingerprint())},
                 {"anti_fingerprint", hex64(model_anti.fingerprint())}});
}

void run_align(const RunConfig& cfg) {
  std::string pro_path = cfg.out_dir + "/embed/corpus_pro.txt";
  std::string anti_path = cfg.out_dir + "/embed/corpus_anti.txt";
  require_stage_file(pro_path, "embed");
  require_stage_file(anti_path, "embed");
  StanceCorpus pro = read_corpus(pro_path, "pro");
  StanceCorpus anti = read_corpus(anti_path, "anti");

  std::vector<std::string> stopwords;
  for (const std::string& line :
       util::read_lines(require_input_path(cfg.paths.stopwords, "stopwords")))
    if (!line.empty() && line[0] != '#') stopwords.push_back(line);

  ExperimentConfig xc;
  xc.embed = cfg.embed;
  xc.eval_k = cfg.align.eval_k;
  xc.n_runs = cfg.align.n_runs;
  xc.disagreed_k = cfg.align.disagreed_k;
  xc.seed = cfg.seed;
  SimilarityReport report = run_polarization_experiment(pro, anti, stopwords, xc);

  std::string dir = stage_dir(cfg, "align");
  write_similarity_report(dir + "/similarity.txt", report, xc, prov_line(cfg, "align"));
  write_disagreed_csv(dir + "/disagreed.csv", report.disagreed, prov_line(cfg, "align"));
  write_sidecar(cfg, "align",
                {{"similarity_mean", report.mean},
                 {"similarity_std", report.stddev},
                 {"runs", report.run_count}});
}

void run_classify(const RunConfig& cfg) {
  std::string model_path = cfg.out_dir + "/embed/model_" + cfg.classify.embedding + ".bin";
  require_stage_file(model_path, "embed");
  EmbeddingModel embeddings = EmbeddingModel::load(model_path);

  auto raw = read_examples_tsv(require_input_path(cfg.paths.cnn_examples, "cnn_examples"));
  auto [examples, conflicts] = dedupe_texts(raw);

  std::vector<LabeledText> train, test;
  size_t seen[2] = {0, 0};
  for (const auto& ex : examples) {
    size_t& n = seen[ex.relevant ? 1 : 0];
    if (cfg.classify.holdout_every > 0 && n % cfg.classify.holdout_every == 0)
      test.push_back(ex);
    else
      train.push_back(ex);
    n++;
  }

  CnnConfig cc = cfg.classify.cnn;
  cc.embed_dim = embeddings.dim();
  cc.seed = util::mix_seed(cfg.seed, 61);
  CnnTrainLog log;
  CnnModel model = train_cnn(train, embeddings, cc, &log);

  std::string dir = stage_dir(cfg, "classify");
  model.save(dir + "/cnn.bin");

  std::ofstream out(dir + "/metrics.txt");
  out << "# " << prov_line(cfg, "classify") << "\n";
  out << "examples " << examples.size() << "\n";
  out << "conflicting_texts_dropped " << conflicts << "\n";
  out << "train " << train.size() << "\n";
  out << "test " << test.size() << "\n";
  out << "epochs_run " << log.epochs_run << "\n";
  out << "dropped_empty " << log.dropped_empty << "\n";
  if (!log.epoch_accuracy.empty())
    out << "train_accuracy " << util::format_double(log.epoch_accuracy.back(), 4) << "\n";
  bool has_both = false, has_rel = false, has_irr = false;
  for (const auto& ex : test) (ex.relevant ? has_rel : has_irr) = true;
  has_both = has_rel && has_irr;
  if (has_both) {
    Metrics m = evaluate(model, test, embeddings);
    out << "test_accuracy " << util::format_double(m.accuracy, 4) << "\n";
    out << "test_f1 " << util::format_double(m.f1, 4) << "\n";
    out << "tp " << m.tp << "\nfp " << m.fp << "\ntn " << m.tn << "\nfn " << m.fn << "\n";
  } else {
    out << "test_accuracy n/a (single-class holdout)\n";
  }
  write_sidecar(cfg, "classify", {{"train", train.size()},
                                  {"test", test.size()},
                                  {"epochs_run", log.epochs_run}});
}

void run_cluster(const RunConfig& cfg) {
  TweetStore store = load_ingested(cfg);
  MediaRegistry registry = load_registry(cfg);
  RelevanceKit kit = make_relevance_kit(cfg);

  BipartiteGraph bip =
      build_bipartite(store, registry, [&](const Tweet& t) { return kit.relevant(t); });
  MediaProjection proj = project_media(bip, cfg.cluster.min_shared);
  CommunityAssignment comm =
      louvain(proj, cfg.cluster.resolution, util::mix_seed(cfg.seed, 51));

  std::string dir = stage_dir(cfg, "cluster");
  export_graph(proj, "csv", dir + "/projection.csv", &comm, prov_line(cfg, "cluster"));
  export_graph(proj, "gexf", dir + "/graph.gexf", &comm, prov_line(cfg, "cluster"));
  {
    std::ofstream out(dir + "/communities.csv");
    out << "# " << prov_line(cfg, "cluster") << "\n";
    out << "media,community\n";
    for (size_t i = 0; i < proj.vertices.size(); ++i)
      out << util::csv_row({proj.vertices[i], std::to_string(comm.community[i])}) << "\n";
  }

  // reply/quote network with stance attributes, for inspection
  std::map<std::string, std::string> stance_of;
  for (const auto& r : load_stances(cfg)) stance_of[r.user_id] = to_string(r.combined);
  ResponseNetwork responses = build_response_network(store, stance_of, false);
  export_graph(responses, "csv", dir + "/responses.csv", prov_line(cfg, "cluster"));
  export_graph(responses, "gexf", dir + "/responses.gexf", prov_line(cfg, "cluster"));

  write_sidecar(cfg, "cluster",
                {{"users", bip.users.size()},
                 {"media", bip.media.size()},
                 {"bipartite_edges", bip.edge_count},
                 {"projection_edges", proj.edges.size()},
                 {"communities", comm.community_count},
                 {"modularity", comm.modularity},
                 {"relevance_by_url", kit.by_url},
                 {"relevance_by_cnn", kit.by_cnn},
                 {"relevance_excluded", kit.excluded}});
}

void run_flow(const RunConfig& cfg) {
  TweetStore store = load_ingested(cfg);
  MediaRegistry registry = load_registry(cfg);

  std::string comm_path = cfg.out_dir + "/cluster/communities.csv";
  require_stage_file(comm_path, "cluster");
  std::map<std::string, uint32_t> community_of;
  std::map<uint32_t, std::vector<std::string>> members;
  {
    bool header = true;
    for (const std::string& line : util::read_lines(comm_path)) {
      if (line.empty() || line[0] == '#') continue;
      if (header) {
        header = false;
        continue;
      }
      auto f = util::csv_parse_row(line);
      if (f.size() != 2) throw DataError("bad community row: " + line);
      uint32_t c = uint32_t(std::stoul(f[1]));
      community_of[f[0]] = c;
      members[c].push_back(f[0]);
    }
  }
  if (community_of.empty()) throw DataError("cluster output lists no communities");

  std::map<std::string, CombinedStance> stance_of;
  for (const auto& r : load_stances(cfg)) stance_of[r.user_id] = r.combined;

  RelevanceKit kit = make_relevance_kit(cfg);
  std::vector<RetweetEvent> events = collect_retweet_events(
      store, registry, stance_of, [&](const Tweet& t) { return kit.relevant(t); });
  std::erase_if(events,
                [&](const RetweetEvent& e) { return !community_of.count(e.media_id); });
  if (events.empty()) throw DataError("no relevant retweets of clustered media");

  ProfileSet profiles = consumption_profiles(events);

  double g_pro = 0.0;
  if (cfg.flow.baseline == "audience") {
    g_pro = baseline_share(events);
  } else {
    size_t pro = 0, anti = 0;
    for (const auto& [user, s] : stance_of) {
      if (s == CombinedStance::consistent_pro_government) pro++;
      else if (s == CombinedStance::consistent_anti_government) anti++;
    }
    if (pro == 0 || anti == 0) throw DataError("degenerate global baseline");
    g_pro = double(pro) / double(pro + anti);
  }
  EntropyReport entropy = entropy_report(profiles, g_pro);

  // map each community to a state by its majority bloc: local first, regional
  // second; communities dominated by neither are left out of the chain
  std::map<uint32_t, int> state_of_community;
  for (const auto& [c, media_list] : members) {
    size_t n_local = 0, n_regional = 0;
    for (const auto& m : media_list) {
      const MediaInfo* info = registry.lookup(m);
      if (!info) continue;
      if (info->bloc == "local") n_local++;
      else if (info->bloc == "regional") n_regional++;
    }
    if (n_local == 0 && n_regional == 0) continue;
    state_of_community[c] = n_regional > n_local ? 1 : 0;
  }
  std::map<std::string, uint32_t> cluster_of;
  bool has_state[2] = {false, false};
  for (const auto& [m, c] : community_of) {
    auto it = state_of_community.find(c);
    if (it == state_of_community.end()) continue;
    has_state[it->second] = true;
  }
  std::vector<std::string> state_labels;
  int state_index[2] = {-1, -1};
  if (has_state[0]) {
    state_index[0] = int(state_labels.size());
    state_labels.push_back("local");
  }
  if (has_state[1]) {
    state_index[1] = int(state_labels.size());
    state_labels.push_back("regional");
  }
  for (const auto& [m, c] : community_of) {
    auto it = state_of_community.find(c);
    if (it == state_of_community.end()) continue;
    cluster_of[m] = uint32_t(state_index[it->second]);
  }
  if (state_labels.empty()) throw DataError("no community maps to a known bloc");

  TransitionModel transitions = build_transitions(events, cluster_of, state_labels);
  MobilityIndices mobility = mobility_indices(transitions);
  std::vector<HistogramBin> hist = ratio_histogram(profiles, cfg.flow.bins);

  std::string dir = stage_dir(cfg, "flow");
  write_entropy_csv(dir + "/entropy.csv", profiles, entropy, prov_line(cfg, "flow"));
  write_transition_csv(dir + "/transitions.csv", transitions, prov_line(cfg, "flow"));
  write_mobility_summary(dir + "/mobility.txt", mobility, transitions.n_states(),
                         prov_line(cfg, "flow"));
  write_histogram_csv(dir + "/histogram.csv", hist, prov_line(cfg, "flow"));
  write_sidecar(cfg, "flow",
                {{"events", events.size()},
                 {"profiles", profiles.profiles.size()},
                 {"excluded_media", profiles.excluded_media},
                 {"g_pro", g_pro},
                 {"baseline", cfg.flow.baseline},
                 {"states", transitions.n_states()}});
}

void append_file_body(std::ofstream& out, const std::string& path) {
  for (const std::string& line : util::read_lines(path)) {
    if (!line.empty() && line[0] == '#') continue;
    out << line << "\n";
  }
}

void run_report(const RunConfig& cfg) {
  struct Piece {
    const char* title;
    std::string path;
    const char* stage;
  };
  std::vector<Piece> pieces = {
      {"stance distribution (%)", cfg.out_dir + "/stance/distribution.csv", "stance"},
      {"linguistic similarity", cfg.out_dir + "/align/similarity.txt", "align"},
      {"media communities", cfg.out_dir + "/cluster/communities.csv", "cluster"},
      {"consumption entropy", cfg.out_dir + "/flow/entropy.csv", "flow"},
      {"cluster transitions", cfg.out_dir + "/flow/transitions.csv", "flow"},
      {"mobility indices", cfg.out_dir + "/flow/mobility.txt", "flow"},
  };
  for (const auto& p : pieces) require_stage_file(p.path, p.stage);

  std::string dir = stage_dir(cfg, "report");
  std::ofstream out(dir + "/summary.txt");
  out << "# " << prov_line(cfg, "report") << "\n";
  for (const auto& p : pieces) {
    out << "\n== " << p.title << " ==\n";
    append_file_body(out, p.path);
  }
  write_sidecar(cfg, "report", {{"sections", pieces.size()}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-community polarization analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_override, country_override;
  int64_t seed_override = -1;
  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_option("--seed", seed_override, "seed (overrides config)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--country", country_override, "country slice (overrides config)");

  const char* stage_names[] = {"ingest",   "stance", "embed", "align", "classify",
                               "cluster",  "flow",   "synth", "report"};
  const char* stage_help[] = {
      "normalize and deduplicate the tweet archive",
      "label users by hashtags, profiles and politician retweets",
      "build per-community corpora and train subword embeddings",
      "align embedding spaces and score translation similarity",
      "train the URL-relevance text classifier",
      "build the media co-audience graph and cluster it",
      "audience ratios, relative entropy, transitions, mobility",
      "generate a synthetic dataset with planted ground truth",
      "assemble the cross-stage summary document",
  };
  for (size_t i = 0; i < 9; ++i) app.add_subcommand(stage_names[i], stage_help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (config_path.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override >= 0) cfg.seed = uint64_t(seed_override);
    if (!country_override.empty()) cfg.country = country_override;
    cfg.config_hash = util::fnv1a64(util::read_file(config_path) + "|out=" + cfg.out_dir +
                                    "|seed=" + std::to_string(cfg.seed) +
                                    "|country=" + cfg.country);
    fs::create_directories(cfg.out_dir);

    std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "ingest") run_ingest(cfg);
    else if (stage == "stance") run_stance(cfg);
    else if (stage == "embed") run_embed(cfg);
    else if (stage == "align") run_align(cfg);
    else if (stage == "classify") run_classify(cfg);
    else if (stage == "cluster") run_cluster(cfg);
    else if (stage == "flow") run_flow(cfg);
    else if (stage == "synth") run_synth(cfg);
    else if (stage == "report") run_report(cfg);
    std::cout << stage << ": ok\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
