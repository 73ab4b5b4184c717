#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/embedding.hpp"
#include "core/lake.hpp"
#include "core/rng.hpp"

namespace lakeorg {

struct BenchSpec {
  std::size_t n_tags = 365;
  std::size_t n_tables = 369;
  std::size_t min_values = 10;
  std::size_t max_values = 1000;
  std::size_t min_attrs = 1;
  std::size_t max_attrs = 50;
  /// 1.32 lands the default attribute total near 2,651 (1.0 gives ~4,100).
  double zipf_exponent = 1.32;
  double tag_min_separation = 0.5;
  bool extra_tag_per_attribute = false;
  std::uint64_t seed = 7;
};

struct Bench {
  DataLake lake;
  /// Generating tags of each attribute, parallel to lake.attributes().
  std::vector<std::vector<std::string>> truth;
};

/// Draws k in [a, b] with probability proportional to k^-exponent by
/// inverse CDF over the finite support.
std::size_t zipf_sample(std::size_t a, std::size_t b, double exponent, Rng& rng);

/// Greedy rejection sampling of tag words whose pairwise cosine stays below
/// the cap, visiting the vocabulary in a seeded random order.
std::vector<std::size_t> pick_tag_words(const EmbeddingStore& store, std::size_t n, double cap,
                                        std::uint64_t seed);

Bench generate(const EmbeddingStore& store, const BenchSpec& spec);

/// Lake files (tables/, metadata.jsonl) plus ground_truth.csv.
void write_bench(const Bench& bench, const std::filesystem::path& dir);

/// Reads ground_truth.csv into attribute id -> tags.
std::vector<std::pair<std::string, std::string>> read_ground_truth(const std::filesystem::path& path);

/// Parameters of the synthetic vocabulary: domains split into topics, topics
/// into words scattered around the topic direction.
struct SynthSpec {
  std::size_t dim = 32;
  std::size_t domains = 20;
  std::size_t topics_per_domain = 20;
  std::size_t words_per_topic = 150;
  double domain_weight = 0.6;
  double topic_weight = 0.8;
  double word_noise = 0.8;
  std::uint64_t seed = 1;
};

EmbeddingStore synthesize_embeddings(const SynthSpec& spec);

}  // namespace lakeorg
