// Seeded generators and small fixtures shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/lake.hpp"
#include "core/navmodel.hpp"
#include "core/optimizer.hpp"
#include "core/organization.hpp"
#include "core/rng.hpp"

namespace testlib {

using namespace lakeorg;

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return unit(v);
}

/// Topic with an explicit mean; support defaults to 1.
inline TopicVector topic(std::vector<double> mean, std::size_t support = 1) {
  return TopicVector{std::move(mean), support};
}

struct ColumnSpec {
  std::vector<double> mean;
  std::vector<std::string> tags;
  std::size_t support = 1;
};

/// One table per column, table ids t0, t1, ...; column ids t<i>.0.
inline DataLake lake_of(const std::vector<ColumnSpec>& cols) {
  std::vector<TableRecord> records;
  const std::size_t dim = cols.empty() ? 1 : cols.front().mean.size();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    TableRecord r;
    r.id = "t" + std::to_string(i);
    r.name = "table " + std::to_string(i);
    TableRecord::Column c;
    c.id = r.id + ".0";
    c.name = "c" + std::to_string(i);
    c.values = {"v" + std::to_string(i)};
    c.topic = topic(cols[i].mean, cols[i].support);
    c.tags = cols[i].tags;
    r.tags = cols[i].tags;
    r.columns.push_back(std::move(c));
    records.push_back(std::move(r));
  }
  return DataLake(dim, std::move(records));
}

/// Lake with n_tags tags and n_attrs attributes spread over tables of up to 3
/// attributes. Every attribute gets a tag; about a fifth get a second one.
/// Topics are a tag centroid plus noise so that tags form loose clusters.
inline DataLake random_lake(Rng& rng, std::size_t n_tags, std::size_t n_attrs, std::size_t dim = 8,
                            double noise = 0.6) {
  std::vector<std::vector<double>> centroids;
  for (std::size_t t = 0; t < n_tags; ++t) centroids.push_back(random_unit(rng, dim));
  std::vector<TableRecord> records;
  std::size_t made = 0;
  for (std::size_t ti = 0; made < n_attrs; ++ti) {
    TableRecord r;
    r.id = "t" + std::to_string(ti);
    r.name = "table " + std::to_string(ti);
    const std::size_t width = std::min<std::size_t>(n_attrs - made, 1 + rng.below(3));
    for (std::size_t c = 0; c < width; ++c, ++made) {
      TableRecord::Column col;
      col.id = r.id + "." + std::to_string(c);
      col.name = "a" + std::to_string(made);
      col.values = {"v" + std::to_string(made)};
      // The first n_tags attributes cover every tag once.
      const std::size_t tag = made < n_tags ? made : rng.below(n_tags);
      col.tags = {"tag" + std::to_string(tag)};
      if (n_tags > 1 && rng.uniform() < 0.2) {
        std::size_t other = rng.below(n_tags);
        if (other != tag) col.tags.push_back("tag" + std::to_string(other));
      }
      std::vector<double> mean(dim);
      for (std::size_t d = 0; d < dim; ++d) mean[d] = centroids[tag][d] + noise * rng.normal();
      col.topic = topic(mean, 1 + rng.below(5));
      r.columns.push_back(std::move(col));
    }
    records.push_back(std::move(r));
  }
  return DataLake(dim, std::move(records));
}

/// Random reach vector for steering the operators.
inline std::vector<double> random_reach(Rng& rng, const Organization& org) {
  std::vector<double> r(org.capacity(), 0.0);
  for (StateId id : org.ids()) r[id] = rng.uniform();
  return r;
}

/// Applies up to n random ADD_PARENT / DELETE_PARENT operations, keeping only
/// candidates that validate and stay within max_states.
inline Organization random_walk(Rng& rng, const DataLake& lake, Organization org, std::size_t n,
                                std::size_t max_states = 1000) {
  for (std::size_t step = 0, tries = 0; step < n && tries < 20 * n + 20; ++tries) {
    auto ids = org.ids();
    StateId s = ids[rng.below(ids.size())];
    const State& st = org.state(s);
    if (st.kind == StateKind::root || st.kind == StateKind::leaf) continue;
    auto lv = levels(org);
    auto reach = random_reach(rng, org);
    std::optional<Candidate> cand = rng.uniform() < 0.5 ? op_add_parent(org, s, lake, lv, reach)
                                                       : op_delete_parent(org, s, reach);
    if (!cand || cand->org.size() > max_states || !validate(cand->org).empty()) continue;
    org = std::move(cand->org);
    ++step;
  }
  return org;
}

/// A small random valid organization: agglomerative or flat start plus a
/// random walk of operations.
inline Organization random_org(Rng& rng, const DataLake& lake, double gamma, std::size_t ops) {
  Organization org = rng.uniform() < 0.8 ? initial_org(lake, {}, gamma) : flat_org(lake, {}, gamma);
  return random_walk(rng, lake, std::move(org), ops);
}

inline std::vector<double> query_of(const DataLake& lake, AttrIndex a) {
  return lake.attribute(a).topic.mean;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lakeorg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testlib
