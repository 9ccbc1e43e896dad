#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deid/corpus.hpp"

namespace deid {

/// Lowercased word -> fixed-width vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::span<const double> vector(std::size_t i) const { return {&vectors_[i * dim_], dim_}; }

  /// Case-insensitive lookup; nullptr when absent.
  const double* find(std::string_view word) const;
  /// Replaces an existing entry (returns false in that case).
  bool set(std::string_view word, std::span<const double> values);

  /// Entries replaced while loading.
  std::size_t duplicates = 0;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::string> words_;
  std::vector<double> vectors_;
};

/// word2vec text format: `<count> <dim>` then `word v1 ... vdim` per line.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view contents, std::string_view origin = "<memory>");
/// Values printed with 17 significant digits so loading round-trips exactly.
std::string serialize_embeddings(const EmbeddingTable& table);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

struct SkipgramConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
};

/// Skip-gram with negative sampling over lowercased tokens. Documents must be
/// pre-processed. Throws DataError on an empty corpus.
EmbeddingTable train_skipgram(const Corpus& corpus, const SkipgramConfig& config);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace deid
