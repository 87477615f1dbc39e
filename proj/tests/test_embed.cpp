#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "polarscope/corpus.hpp"
#include "polarscope/embed.hpp"
#include "polarscope/util.hpp"

using namespace polarscope;

namespace {

// corpus with strong pairwise structure: each "topic" word always flanked by
// its two companions, repeated enough to clear min_count comfortably
StanceCorpus toy_corpus(int repeats = 40) {
  StanceCorpus c;
  c.stance = "pro";
  const std::vector<std::vector<std::string>> patterns = {
      {"rio", "agua", "puente", "rio", "agua"},
      {"pan", "horno", "masa", "pan", "horno"},
      {"luz", "sol", "dia", "luz", "sol"},
      {"rio", "puente", "agua", "horno", "pan", "masa"},
  };
  for (int r = 0; r < repeats; ++r)
    for (const auto& p : patterns) {
      c.token_sequences.push_back(p);
      c.token_count += p.size();
    }
  return c;
}

EmbedConfig tiny_config() {
  EmbedConfig cfg;
  cfg.dim = 12;
  cfg.window = 2;
  cfg.negatives = 3;
  cfg.epochs = 3;
  cfg.min_count = 2;
  cfg.bucket_count = 1u << 10;
  cfg.subsample_t = 0;  // keep the toy corpus intact
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("character n-grams cover the padded word except its full span") {
  const size_t buckets = 1u << 16;
  // "<que>" has 5 codepoints: n=3 gives <qu que ue>, n=4 gives <que que>,
  // n=5 would be the whole padded form and is excluded
  auto ids = subword_ids("que", 3, 6, buckets);
  std::vector<std::string> grams = {"<qu", "que", "ue>", "<que", "que>"};
  REQUIRE(ids.size() == grams.size());
  for (size_t i = 0; i < grams.size(); ++i) {
    CHECK(ids[i] == util::fnv1a32(grams[i].data(), grams[i].size()) % uint32_t(buckets));
    CHECK(ids[i] < buckets);
  }
}

TEST_CASE("single-letter words have no n-grams at the default sizes") {
  CHECK(subword_ids("a", 3, 6, 1u << 16).empty());
  auto two = subword_ids("a", 2, 6, 1u << 16);  // "<a" and "a>"
  CHECK(two.size() == 2);
}

TEST_CASE("n-grams split on codepoints, not bytes") {
  const size_t buckets = 1u << 16;
  // "<ñu>" is 4 codepoints: n=3 gives <ñu and ñu>; n=4 is the whole form
  auto ids = subword_ids("\xC3\xB1u", 3, 6, buckets);
  std::vector<std::string> grams = {"<\xC3\xB1u", "\xC3\xB1u>"};
  REQUIRE(ids.size() == 2);
  for (size_t i = 0; i < 2; ++i)
    CHECK(ids[i] == util::fnv1a32(grams[i].data(), grams[i].size()) % uint32_t(buckets));
}

TEST_CASE("vocabulary ranks by count with lexicographic ties and drops rare words") {
  StanceCorpus c;
  c.stance = "x";
  c.token_sequences = {
      {"alto", "bajo", "alto", "cima", "alto", "bajo", "raro"},
      {"cima", "bajo", "cima", "alto"},
  };
  c.token_count = 11;
  EmbedConfig cfg = tiny_config();
  cfg.min_count = 2;
  cfg.epochs = 1;
  EmbeddingModel m = train_embeddings(c, cfg);

  // counts: alto 4, bajo 3, cima 3; "raro" appears once and is filtered
  REQUIRE(m.vocab_size() == 3);
  CHECK(m.vocab()[0].word == "alto");
  CHECK(m.vocab()[1].word == "bajo");  // bajo < cima on the 3-3 tie
  CHECK(m.vocab()[2].word == "cima");
  CHECK(m.vocab()[0].count == 4);
  CHECK(m.word_index("alto") == size_t(0));
  CHECK(m.word_index("cima") == size_t(2));
  CHECK(!m.word_index("raro").has_value());
  CHECK(!m.word_index("nunca").has_value());
}

TEST_CASE("analytic sgns gradients match finite differences") {
  const size_t dim = 7;
  const size_t n_rows = 6;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 0.5);

  std::vector<double> input(n_rows * dim), output(n_rows * dim);
  for (auto& x : input) x = gauss(rng);
  for (auto& x : output) x = gauss(rng);

  SgnsExample ex;
  ex.input_rows = {0, 2, 5};
  ex.positive = 1;
  ex.negatives = {0, 3, 3, 4};  // repeated row exercises gradient accumulation

  SgnsGrads grads;
  double loss = sgns_loss_grad(input, output, dim, ex, &grads);
  CHECK(loss == doctest::Approx(sgns_loss(input, output, dim, ex)).epsilon(1e-12));

  const double h = 1e-6;
  auto fd = [&](std::vector<double>& params, size_t idx) {
    double keep = params[idx];
    params[idx] = keep + h;
    double up = sgns_loss(input, output, dim, ex);
    params[idx] = keep - h;
    double down = sgns_loss(input, output, dim, ex);
    params[idx] = keep;
    return (up - down) / (2 * h);
  };

  for (const auto& [row, g] : grads.d_input) {
    for (size_t d = 0; d < dim; ++d) {
      double want = fd(input, size_t(row) * dim + d);
      CHECK(g[d] == doctest::Approx(want).epsilon(1e-5));
    }
  }
  for (const auto& [row, g] : grads.d_output) {
    for (size_t d = 0; d < dim; ++d) {
      double want = fd(output, size_t(row) * dim + d);
      CHECK(g[d] == doctest::Approx(want).epsilon(1e-5));
    }
  }

  // rows untouched by the example have no gradient entry
  CHECK(grads.d_input.count(1) == 0);
  CHECK(grads.d_output.count(2) == 0);
}

TEST_CASE("one small sgd step lowers the loss it reports") {
  const size_t dim = 8;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.4);
  std::vector<double> input(4 * dim), output(4 * dim);
  for (auto& x : input) x = gauss(rng);
  for (auto& x : output) x = gauss(rng);

  SgnsExample ex;
  ex.input_rows = {0, 1};
  ex.positive = 2;
  ex.negatives = {0, 3};

  double before = sgns_loss(input, output, dim, ex);
  std::vector<double> h, gh;
  double reported = sgns_train_step(input, output, dim, ex, 0.01, h, gh);
  CHECK(reported == doctest::Approx(before).epsilon(1e-12));
  CHECK(sgns_loss(input, output, dim, ex) < before);
}

TEST_CASE("training is deterministic in the seed") {
  StanceCorpus c = toy_corpus();
  EmbedConfig cfg = tiny_config();

  EmbeddingModel a = train_embeddings(c, cfg);
  EmbeddingModel b = train_embeddings(c, cfg);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.input_vectors() == b.input_vectors());

  cfg.seed = 8;
  EmbeddingModel d = train_embeddings(c, cfg);
  CHECK(a.fingerprint() != d.fingerprint());
}

TEST_CASE("probe loss falls over training on a structured corpus") {
  StanceCorpus c = toy_corpus();
  EmbedConfig cfg = tiny_config();
  cfg.epochs = 5;
  TrainStats stats;
  train_embeddings(c, cfg, &stats);
  REQUIRE(stats.epoch_probe_loss.size() == 5);
  CHECK(stats.epoch_probe_loss.back() < stats.initial_probe_loss);
}

TEST_CASE("co-occurring words end up closer than unrelated ones") {
  StanceCorpus c = toy_corpus(60);
  EmbedConfig cfg = tiny_config();
  cfg.epochs = 8;
  EmbeddingModel m = train_embeddings(c, cfg);

  auto cosine = [&](const std::string& a, const std::string& b) {
    std::vector<double> va = m.vector(a), vb = m.vector(b);
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < va.size(); ++i) {
      dot += va[i] * vb[i];
      na += va[i] * va[i];
      nb += vb[i] * vb[i];
    }
    return dot / std::sqrt(na * nb);
  };
  CHECK(cosine("rio", "agua") > cosine("rio", "sol"));
  CHECK(cosine("pan", "horno") > cosine("pan", "dia"));
}

TEST_CASE("models survive a save and load round trip") {
  fixtures::TempDir dir("embed_rt");
  StanceCorpus c = toy_corpus();
  EmbedConfig cfg = tiny_config();
  EmbeddingModel m = train_embeddings(c, cfg);
  m.save(dir.file("m.bin"));

  EmbeddingModel back = EmbeddingModel::load(dir.file("m.bin"));
  CHECK(back.fingerprint() == m.fingerprint());
  CHECK(back.dim() == m.dim());
  CHECK(back.vocab_size() == m.vocab_size());
  CHECK(back.config().bucket_count == cfg.bucket_count);
  CHECK(back.config().seed == cfg.seed);
  CHECK(back.vector("rio") == m.vector("rio"));
  CHECK(back.total_tokens() == m.total_tokens());

  CHECK_THROWS_AS(EmbeddingModel::load(dir.file("missing.bin")), DataError);
  {
    std::ofstream junk(dir.file("junk.bin"), std::ios::binary);
    junk << "notamodel";
  }
  CHECK_THROWS_AS(EmbeddingModel::load(dir.file("junk.bin")), DataError);
}

TEST_CASE("word vectors average the word row with its n-gram rows") {
  // fixture zeroes the subword block, so the composed vector is the word row
  // shrunk by the n-gram count — direction preserved exactly
  fixtures::TempDir dir("embed_compose");
  std::vector<std::string> words = {"casa", "perro"};
  std::vector<std::vector<double>> rows = {{2.0, 0.0, 0.0}, {0.0, -4.0, 0.0}};
  EmbeddingModel m = fixtures::model_from_vectors(words, rows, 3);

  size_t n_grams = subword_ids("casa", m.config().subword_min, m.config().subword_max,
                               m.config().bucket_count)
                       .size();
  std::vector<double> v = m.vector("casa");
  CHECK(v[0] == doctest::Approx(2.0 / double(1 + n_grams)));
  CHECK(v[1] == doctest::Approx(0.0));

  // out-of-vocabulary words compose from n-grams alone (all zero here)
  CHECK(m.composable("gato"));
  std::vector<double> oov = m.vector("gato");
  for (double x : oov) CHECK(x == doctest::Approx(0.0));

  // a single letter has no n-grams and no vocab row: nothing to compose
  CHECK(!m.composable("q"));
  CHECK_THROWS_AS(m.vector("q"), DataError);
}

TEST_CASE("nearest neighbors rank by exact cosine and honor exclusion") {
  std::vector<std::string> words = {"este", "casi", "otro", "lejos"};
  std::vector<std::vector<double>> rows = {
      {1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0}, {-1.0, 0.0}};
  EmbeddingModel m = fixtures::model_from_vectors(words, rows, 2);

  auto nn = nearest_neighbors(m, {1.0, 0.0}, 4);
  REQUIRE(nn.size() == 4);
  CHECK(nn[0].first == "este");
  CHECK(nn[0].second == doctest::Approx(1.0));
  CHECK(nn[1].first == "casi");
  CHECK(nn[1].second == doctest::Approx(0.9 / std::sqrt(0.81 + 0.01)));
  CHECK(nn[2].first == "otro");
  CHECK(nn[3].first == "lejos");
  CHECK(nn[3].second == doctest::Approx(-1.0));

  auto excluded = nearest_neighbors(m, {1.0, 0.0}, 2, "este");
  REQUIRE(excluded.size() == 2);
  CHECK(excluded[0].first == "casi");
  CHECK(excluded[1].first == "otro");
}

TEST_CASE("trainer rejects unusable configurations and corpora") {
  StanceCorpus c = toy_corpus(2);
  EmbedConfig cfg = tiny_config();

  EmbedConfig bad = cfg;
  bad.window = 0;
  CHECK_THROWS_AS(train_embeddings(c, bad), ConfigError);

  bad = cfg;
  bad.negatives = 0;
  CHECK_THROWS_AS(train_embeddings(c, bad), ConfigError);

  bad = cfg;
  bad.subword_min = 5;
  bad.subword_max = 3;
  CHECK_THROWS_AS(train_embeddings(c, bad), ConfigError);

  StanceCorpus empty;
  empty.stance = "x";
  CHECK_THROWS_AS(train_embeddings(empty, cfg), DataError);

  EmbedConfig harsh = cfg;
  harsh.min_count = 1000;  // filters the whole vocabulary
  CHECK_THROWS_AS(train_embeddings(c, harsh), DataError);
}

TEST_CASE("text export lists one row per vocabulary word") {
  fixtures::TempDir dir("embed_export");
  std::vector<std::string> words = {"uno", "dos"};
  std::vector<std::vector<double>> rows = {{1.0, 2.0}, {3.0, 4.0}};
  EmbeddingModel m = fixtures::model_from_vectors(words, rows, 2);
  m.export_text(dir.file("vecs.txt"));

  auto lines = util::read_lines(dir.file("vecs.txt"));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].substr(0, 4) == "uno ");
  CHECK(lines[1].substr(0, 4) == "dos ");
}

TEST_CASE("fingerprints react to any parameter change") {
  std::vector<std::string> words = {"uno", "dos"};
  std::vector<std::vector<double>> rows = {{1.0, 2.0}, {3.0, 4.0}};
  EmbeddingModel a = fixtures::model_from_vectors(words, rows, 2);
  rows[1][1] = 4.0000005;
  EmbeddingModel b = fixtures::model_from_vectors(words, rows, 2);
  CHECK(a.fingerprint() != b.fingerprint());
}
