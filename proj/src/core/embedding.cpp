#include "core/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "core/error.hpp"

namespace lakeorg {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> unit(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  const double n = norm(v);
  if (n > 0.0) {
    for (double& x : out) x /= n;
  }
  return out;
}

bool EmbeddingStore::add(std::string token, std::span<const double> vec) {
  if (vec.size() != dim_) {
    fail(ErrorCode::dimension_mismatch, "vector for '" + token + "' has dimension " +
                                            std::to_string(vec.size()) + ", expected " +
                                            std::to_string(dim_));
  }
  const double n = norm(vec);
  if (n == 0.0) {
    ++skipped_zero_;
    return false;
  }
  if (index_.contains(token)) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  for (double x : vec) data_.push_back(x / n);
  return true;
}

std::optional<std::span<const double>> EmbeddingStore::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return vector(it->second);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open embedding file " + path.string());

  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vec;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (first_record) {
      first_record = false;
      std::size_t count = 0;
      std::size_t dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim)) {
        if (dim == 0) fail(ErrorCode::parse, "line 1: header declares dimension 0");
        store.dim_ = dim;
        store.tokens_.reserve(count);
        store.data_.reserve(count * dim);
        continue;
      }
    }
    if (fields.size() < 2) {
      fail(ErrorCode::parse, path.string() + ": line " + std::to_string(line_no) +
                                 ": expected a token followed by components");
    }
    vec.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x;
      if (!parse_double(fields[i], x)) {
        fail(ErrorCode::parse, path.string() + ": line " + std::to_string(line_no) +
                                   ": bad component '" + std::string(fields[i]) + "'");
      }
      vec.push_back(x);
    }
    if (store.dim_ == 0) store.dim_ = vec.size();
    if (vec.size() != store.dim_) {
      fail(ErrorCode::dimension_mismatch,
           path.string() + ": line " + std::to_string(line_no) + ": dimension " +
               std::to_string(vec.size()) + " differs from " + std::to_string(store.dim_));
    }
    store.add(std::string(fields[0]), vec);
  }
  if (store.dim_ == 0) fail(ErrorCode::parse, path.string() + ": no embedding records");
  return store;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << store.size() << ' ' << store.dim() << '\n';
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < store.size(); ++i) {
    line = store.token(i);
    for (double x : store.vector(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
      line.push_back(' ');
      line.append(buf, end);
    }
    line.push_back('\n');
    out << line;
  }
}

std::vector<std::string> tokenize(std::string_view value) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : value) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TopicVector topic_vector(std::span<const std::string> values, const EmbeddingStore& store) {
  TopicVector topic;
  topic.mean.assign(store.dim(), 0.0);
  std::set<std::string_view> distinct(values.begin(), values.end());
  for (std::string_view value : distinct) {
    for (const auto& token : tokenize(value)) {
      if (auto vec = store.find(token)) {
        for (std::size_t i = 0; i < vec->size(); ++i) topic.mean[i] += (*vec)[i];
        ++topic.support;
      }
    }
  }
  if (topic.support > 0) {
    for (double& x : topic.mean) x /= static_cast<double>(topic.support);
  }
  return topic;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double cosine(const TopicVector& u, const TopicVector& v) {
  if (!u.covered() || !v.covered()) {
    fail(ErrorCode::undefined_similarity, "cosine of a topic vector with zero support");
  }
  if (u.dim() != v.dim()) {
    fail(ErrorCode::dimension_mismatch, "cosine of topic vectors with different dimensions");
  }
  return cosine(std::span<const double>(u.mean), std::span<const double>(v.mean));
}

std::vector<std::string> knn(const EmbeddingStore& store, std::span<const double> query,
                             std::size_t k) {
  if (k == 0 || k > store.size()) {
    fail(ErrorCode::invalid_argument, "knn: k=" + std::to_string(k) +
                                          " must be in [1, " + std::to_string(store.size()) + "]");
  }
  if (query.size() != store.dim()) {
    fail(ErrorCode::dimension_mismatch, "knn: query dimension differs from the store");
  }
  // Stored vectors are unit length, so ranking by dot product equals ranking by cosine.
  std::vector<double> scores(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) scores[i] = dot(store.vector(i), query);
  std::vector<std::size_t> order(store.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return store.token(a) < store.token(b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(store.token(order[i]));
  return out;
}

}  // namespace lakeorg
