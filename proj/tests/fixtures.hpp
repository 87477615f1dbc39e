#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "polarscope/embed.hpp"
#include "polarscope/tweet.hpp"

namespace fixtures {

inline polarscope::Tweet tweet(std::string id, std::string user, int64_t ts,
                               std::string text,
                               std::vector<std::string> hashtags = {}) {
  polarscope::Tweet t;
  t.id = std::move(id);
  t.user_id = std::move(user);
  t.timestamp = ts;
  t.text = std::move(text);
  t.hashtags = std::move(hashtags);
  return t;
}

inline polarscope::Tweet retweet(std::string id, std::string user, int64_t ts,
                                 std::string of_user, std::string of_tweet,
                                 std::string text = "") {
  polarscope::Tweet t = tweet(std::move(id), std::move(user), ts, std::move(text));
  t.retweeted_user_id = std::move(of_user);
  t.retweeted_tweet_id = std::move(of_tweet);
  return t;
}

// throwaway directory under the system temp root, removed on destruction
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("polarscope_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// embedding model with prescribed per-word vectors and zeroed subword buckets,
// so composed directions equal the given rows exactly
inline polarscope::EmbeddingModel model_from_vectors(
    const std::vector<std::string>& words, const std::vector<std::vector<double>>& rows,
    size_t dim) {
  polarscope::EmbedConfig cfg;
  cfg.dim = dim;
  cfg.min_count = 1;
  cfg.bucket_count = 16;
  std::vector<polarscope::VocabEntry> vocab;
  for (size_t i = 0; i < words.size(); ++i)
    vocab.push_back({words[i], 1000 + words.size() - i});
  std::vector<float> input((words.size() + cfg.bucket_count) * dim, 0.0f);
  for (size_t i = 0; i < words.size(); ++i)
    for (size_t d = 0; d < dim; ++d) input[i * dim + d] = float(rows[i][d]);
  std::vector<float> output(words.size() * dim, 0.0f);
  return polarscope::EmbeddingModel::assemble(cfg, std::move(vocab), std::move(input),
                                              std::move(output), 100000);
}

}  // namespace fixtures
