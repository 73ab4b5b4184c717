#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lakeorg {

/// Sample mean of the embedding vectors of a domain's tokens. An uncovered
/// domain has support 0 and an all-zero mean.
struct TopicVector {
  std::vector<double> mean;
  std::size_t support = 0;

  bool covered() const { return support > 0; }
  std::size_t dim() const { return mean.size(); }
};

/// Token to unit-length vector map loaded from a word-vector text file.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t skipped_zero() const { return skipped_zero_; }

  /// Inserts a token, normalizing its vector. Zero vectors are counted and
  /// dropped; a repeated token keeps its first vector. Returns true if stored.
  bool add(std::string token, std::span<const double> vec);

  std::optional<std::span<const double>> find(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_[i]; }
  std::span<const double> vector(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t skipped_zero_ = 0;
  friend EmbeddingStore load_embeddings(const std::filesystem::path&);
};

/// Parses `token c1 ... cd` lines with an optional `count dim` header.
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Writes the store with a `count dim` header, shortest round-trip digits.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

/// Lowercased maximal runs of alphanumeric characters. Bytes >= 0x80 are kept
/// inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view value);

/// Mean over every embedded token of every distinct value.
TopicVector topic_vector(std::span<const std::string> values, const EmbeddingStore& store);

/// Cosine of two topic vectors; throws undefined_similarity on zero support.
double cosine(const TopicVector& u, const TopicVector& v);

/// Plain cosine of two raw vectors; 0 when either has zero norm.
double cosine(std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> v);
std::vector<double> unit(std::span<const double> v);

/// The k vocabulary tokens most cosine-similar to query, best first, ties
/// broken lexicographically. Brute-force scan.
std::vector<std::string> knn(const EmbeddingStore& store, std::span<const double> query,
                             std::size_t k);

}  // namespace lakeorg
