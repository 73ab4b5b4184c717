#include "core/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace lakeorg {

std::size_t zipf_sample(std::size_t a, std::size_t b, double exponent, Rng& rng) {
  if (a > b || a == 0) fail(ErrorCode::invalid_argument, "zipf range must satisfy 1 <= a <= b");
  if (!(exponent >= 0)) fail(ErrorCode::invalid_argument, "zipf exponent must be non-negative");
  double total = 0.0;
  for (std::size_t k = a; k <= b; ++k) total += std::pow(static_cast<double>(k), -exponent);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t k = a; k <= b; ++k) {
    acc += std::pow(static_cast<double>(k), -exponent);
    if (u < acc) return k;
  }
  return b;
}

std::vector<std::size_t> pick_tag_words(const EmbeddingStore& store, std::size_t n, double cap,
                                        std::uint64_t seed) {
  std::vector<std::size_t> order(store.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> picked;
  for (std::size_t cand : order) {
    if (picked.size() == n) break;
    bool ok = true;
    for (std::size_t p : picked) {
      if (dot(store.vector(cand), store.vector(p)) >= cap) {
        ok = false;
        break;
      }
    }
    if (ok) picked.push_back(cand);
  }
  if (picked.size() < n) {
    fail(ErrorCode::invalid_argument,
         "found only " + std::to_string(picked.size()) + " of " + std::to_string(n) +
             " tag words under the separation cap; use a larger vocabulary or a looser cap");
  }
  return picked;
}

Bench generate(const EmbeddingStore& store, const BenchSpec& spec) {
  if (spec.n_tags == 0 || spec.n_tables == 0) fail(ErrorCode::invalid_argument, "need at least one tag and table");
  if (spec.min_values == 0 || spec.min_values > spec.max_values || spec.min_attrs == 0 ||
      spec.min_attrs > spec.max_attrs) {
    fail(ErrorCode::invalid_argument, "degenerate value or attribute range");
  }
  if (spec.n_tags > store.size()) fail(ErrorCode::invalid_argument, "more tags than vocabulary words");
  if (spec.max_values > store.size()) fail(ErrorCode::invalid_argument, "value range exceeds vocabulary size");

  const auto tag_words = pick_tag_words(store, spec.n_tags, spec.tag_min_separation, mix_seed(spec.seed, 1));
  std::vector<std::string> tag_names;
  for (std::size_t w : tag_words) tag_names.push_back(store.token(w));

  // Nearest words of every tag, long enough for the largest attribute.
  std::vector<std::vector<std::string>> nearest(spec.n_tags);
  parallel_for(spec.n_tags, [&](std::size_t t) {
    nearest[t] = knn(store, store.vector(tag_words[t]), spec.max_values);
  });

  std::vector<TableRecord> records;
  std::vector<std::vector<std::string>> truth;
  const int width = static_cast<int>(std::to_string(spec.n_tables).size());
  for (std::size_t ti = 0; ti < spec.n_tables; ++ti) {
    Rng rng(mix_seed(spec.seed, 1000 + ti));
    TableRecord rec;
    std::string num = std::to_string(ti + 1);
    rec.id = "tc" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    const std::size_t n_attrs = zipf_sample(spec.min_attrs, spec.max_attrs, spec.zipf_exponent, rng);
    for (std::size_t c = 0; c < n_attrs; ++c) {
      const auto tag = static_cast<std::size_t>(rng.below(spec.n_tags));
      const auto count = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.min_values),
                                                               static_cast<std::int64_t>(spec.max_values)));
      TableRecord::Column col;
      col.id = rec.id + "." + std::to_string(c);
      col.name = tag_names[tag] + "_" + std::to_string(c);
      col.values.assign(nearest[tag].begin(), nearest[tag].begin() + static_cast<std::ptrdiff_t>(count));
      col.topic = topic_vector(col.values, store);
      col.tags = {tag_names[tag]};
      if (spec.extra_tag_per_attribute && spec.n_tags > 1) {
        std::size_t best = spec.n_tags;
        double best_k = -2.0;
        for (std::size_t o = 0; o < spec.n_tags; ++o) {
          if (o == tag) continue;
          const double k = cosine(col.topic.mean, store.vector(tag_words[o]));
          if (k > best_k) {
            best_k = k;
            best = o;
          }
        }
        col.tags.push_back(tag_names[best]);
      }
      truth.push_back(col.tags);
      rec.tags.insert(rec.tags.end(), col.tags.begin(), col.tags.end());
      rec.columns.push_back(std::move(col));
    }
    std::sort(rec.tags.begin(), rec.tags.end());
    rec.tags.erase(std::unique(rec.tags.begin(), rec.tags.end()), rec.tags.end());
    rec.name = rec.columns.front().tags.front() + " table " + num;
    records.push_back(std::move(rec));
  }
  Bench bench{DataLake(store.dim(), std::move(records)), {}};
  if (bench.lake.attributes().size() != truth.size()) {
    fail(ErrorCode::validation, "generated attribute lost its embedding coverage");
  }
  bench.truth = std::move(truth);
  return bench;
}

void write_bench(const Bench& bench, const std::filesystem::path& dir) {
  export_tables(bench.lake, dir);
  std::ofstream out(dir / "ground_truth.csv", std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + (dir / "ground_truth.csv").string());
  out << "attribute_id,tag\n";
  for (std::size_t a = 0; a < bench.truth.size(); ++a) {
    for (const auto& tag : bench.truth[a]) {
      out << csv_escape(bench.lake.attribute(static_cast<AttrIndex>(a)).id) << ',' << csv_escape(tag) << '\n';
    }
  }
}

std::vector<std::pair<std::string, std::string>> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto rows = parse_csv(text);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) fail(ErrorCode::parse, path.string() + ": row " + std::to_string(i + 1));
    out.emplace_back(rows[i][0], rows[i][1]);
  }
  return out;
}

namespace {

constexpr const char* kSyllables[] = {
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe", "fi", "fo", "fu", "ga",
    "ge", "gi", "go", "gu", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu", "ma", "me",
    "mi", "mo", "mu", "na", "ne", "ni", "no", "nu", "pa", "pe", "pi", "po", "pu", "ra", "re", "ri",
    "ro", "ru", "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo"};
constexpr std::size_t kSyllableCount = std::size(kSyllables);

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return unit(v);
}

}  // namespace

EmbeddingStore synthesize_embeddings(const SynthSpec& spec) {
  const std::size_t total = spec.domains * spec.topics_per_domain * spec.words_per_topic;
  if (spec.dim == 0 || total == 0) fail(ErrorCode::invalid_argument, "empty synthetic vocabulary");
  // Word names are base-64 numerals of a shuffled index, written in syllables.
  std::size_t digits = 1;
  for (std::size_t cap = kSyllableCount; cap < total; cap *= kSyllableCount) ++digits;
  std::vector<std::size_t> names(total);
  for (std::size_t i = 0; i < total; ++i) names[i] = i;
  Rng name_rng(mix_seed(spec.seed, 11));
  name_rng.shuffle(names);

  Rng rng(spec.seed);
  EmbeddingStore store(spec.dim);
  std::vector<double> word(spec.dim);
  const double noise = spec.word_noise / std::sqrt(static_cast<double>(spec.dim));
  std::size_t w = 0;
  for (std::size_t d = 0; d < spec.domains; ++d) {
    const auto domain = random_unit(rng, spec.dim);
    for (std::size_t t = 0; t < spec.topics_per_domain; ++t) {
      auto topic = random_unit(rng, spec.dim);
      for (std::size_t k = 0; k < spec.dim; ++k) {
        topic[k] = spec.domain_weight * domain[k] + spec.topic_weight * topic[k];
      }
      topic = unit(topic);
      for (std::size_t i = 0; i < spec.words_per_topic; ++i, ++w) {
        for (std::size_t k = 0; k < spec.dim; ++k) word[k] = topic[k] + noise * rng.normal();
        std::string name;
        std::size_t code = names[w];
        for (std::size_t g = 0; g < digits; ++g) {
          name += kSyllables[code % kSyllableCount];
          code /= kSyllableCount;
        }
        store.add(std::move(name), word);
      }
    }
  }
  return store;
}

}  // namespace lakeorg
