#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarscope {

// Exit-code mapping in the CLI: ConfigError -> 1, DataError -> 2, everything else -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace util {

uint32_t fnv1a32(const void* data, size_t n);
uint64_t fnv1a64(const void* data, size_t n);
uint64_t fnv1a64(const std::string& s);
inline constexpr uint64_t kFnv64Init = 14695981039346656037ull;
uint64_t fnv1a64_step(uint64_t h, const void* data, size_t n);  // streaming variant
uint64_t mix_seed(uint64_t seed, uint64_t stream);

std::vector<std::string> split(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

std::string read_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Minimal CSV: a field is quoted iff it contains ',', '"' or a newline.
std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::string> csv_parse_row(const std::string& line);

std::string format_double(double v, int precision = 6);

// Fisher-Yates; stdlib std::shuffle sequences differ across implementations.
template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace util
}  // namespace polarscope
