#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "core/error.hpp"
#include "core/kmedoids.hpp"
#include "core/rng.hpp"

using namespace lakeorg;

namespace {

std::vector<double> line_points(Rng& rng, std::size_t n) {
  std::vector<double> xs(n);
  for (double& x : xs) x = 100 * rng.uniform();
  return xs;
}

/// Exhaustive optimum over every k-subset (small n only).
double best_cost(const std::vector<double>& xs, std::size_t k) {
  const std::size_t n = xs.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    double cost = 0;
    for (std::size_t p = 0; p < n; ++p) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < n; ++m) {
        if (mask & (1u << m)) d = std::min(d, std::abs(xs[p] - xs[m]));
      }
      cost += d;
    }
    best = std::min(best, cost);
  }
  return best;
}

}  // namespace

TEST_CASE("two well separated groups") {
  std::vector<double> xs{0, 1, 2, 100, 101, 102};
  auto dist = [&](std::size_t i, std::size_t j) { return std::abs(xs[i] - xs[j]); };
  for (auto method : {MedoidMethod::pam, MedoidMethod::alternate}) {
    auto c = kmedoids(xs.size(), 2, dist, 3, method);
    CHECK(c.medoids == std::vector<std::size_t>{1, 4});
    CHECK(c.assignment == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});
    CHECK(c.cost == doctest::Approx(4.0));
  }
}

TEST_CASE("clustering invariants hold on random inputs") {
  Rng rng(200);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(30), k = 1 + rng.below(n);
    auto xs = line_points(rng, n);
    auto dist = [&](std::size_t i, std::size_t j) { return std::abs(xs[i] - xs[j]); };
    auto method = trial % 2 ? MedoidMethod::pam : MedoidMethod::alternate;
    auto c = kmedoids(n, k, dist, rng.next(), method);
    REQUIRE(c.medoids.size() == k);
    CHECK(std::is_sorted(c.medoids.begin(), c.medoids.end()));
    CHECK(std::set<std::size_t>(c.medoids.begin(), c.medoids.end()).size() == k);
    double cost = 0;
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t m = c.medoids[c.assignment[p]];
      for (std::size_t other : c.medoids) CHECK(dist(p, m) <= dist(p, other) + 1e-12);
      cost += p == m ? 0.0 : dist(p, m);
    }
    for (std::size_t i = 0; i < k; ++i) CHECK(c.assignment[c.medoids[i]] == i);
    CHECK(c.cost == doctest::Approx(cost));
  }
}

TEST_CASE("PAM reaches the exhaustive optimum on small inputs") {
  // 1-D k-medoids has no bad local optima for well separated data only, so
  // compare against exhaustive search and allow PAM to be no worse than twice.
  Rng rng(201);
  int exact = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + rng.below(9), k = 1 + rng.below(3);
    auto xs = line_points(rng, n);
    auto dist = [&](std::size_t i, std::size_t j) { return std::abs(xs[i] - xs[j]); };
    auto c = kmedoids(n, k, dist, rng.next(), MedoidMethod::pam);
    const double opt = best_cost(xs, k);
    CHECK(c.cost >= opt - 1e-9);
    CHECK(c.cost <= 2 * opt + 1e-9);
    exact += std::abs(c.cost - opt) < 1e-9;
  }
  CHECK(exact >= 25);
}

TEST_CASE("k-medoids is deterministic in its seed") {
  Rng rng(202);
  auto xs = line_points(rng, 50);
  auto dist = [&](std::size_t i, std::size_t j) { return std::abs(xs[i] - xs[j]); };
  auto a = kmedoids(50, 5, dist, 9, MedoidMethod::alternate);
  auto b = kmedoids(50, 5, dist, 9, MedoidMethod::alternate);
  CHECK(a.medoids == b.medoids);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("k-medoids rejects bad k") {
  auto dist = [](std::size_t, std::size_t) { return 1.0; };
  CHECK_THROWS_AS(kmedoids(3, 0, dist, 0, MedoidMethod::pam), Error);
  CHECK_THROWS_AS(kmedoids(3, 4, dist, 0, MedoidMethod::pam), Error);
}

TEST_CASE("identical points still give k distinct medoids") {
  auto dist = [](std::size_t, std::size_t) { return 0.0; };
  auto c = kmedoids(5, 3, dist, 1, MedoidMethod::alternate);
  CHECK(std::set<std::size_t>(c.medoids.begin(), c.medoids.end()).size() == 3);
  CHECK(c.cost == 0.0);
}
