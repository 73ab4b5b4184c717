#include "core/kmedoids.hpp"

#include <algorithm>
#include <limits>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace lakeorg {

namespace {

void assign(std::size_t n, const Distance& dist, Clustering& c) {
  c.assignment.assign(n, 0);
  c.cost = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < c.medoids.size(); ++m) {
      if (c.medoids[m] == p) {
        best = 0.0;
        c.assignment[p] = m;
        break;
      }
      const double d = dist(p, c.medoids[m]);
      if (d < best) {
        best = d;
        c.assignment[p] = m;
      }
    }
    c.cost += best;
  }
}

double total_cost(std::size_t n, const Distance& dist, const std::vector<std::size_t>& medoids) {
  double cost = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, m == p ? 0.0 : dist(p, m));
    cost += best;
  }
  return cost;
}

}  // namespace

Clustering kmedoids(std::size_t n, std::size_t k, const Distance& dist, std::uint64_t seed,
                    MedoidMethod method) {
  if (k == 0 || k > n) fail(ErrorCode::invalid_argument, "k-medoids needs 1 <= k <= n");
  Rng rng(seed);
  Clustering c;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t next = rng.below(n);
  for (std::size_t i = 0; i < k; ++i) {
    c.medoids.push_back(next);
    chosen[next] = true;
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (chosen[p]) continue;
      nearest[p] = std::min(nearest[p], dist(p, next));
      if (nearest[p] > far_d) {
        far_d = nearest[p];
        far = p;
      }
    }
    next = far;
  }
  std::sort(c.medoids.begin(), c.medoids.end());

  if (method == MedoidMethod::alternate) {
    for (int iter = 0; iter < 100; ++iter) {
      assign(n, dist, c);
      std::vector<std::vector<std::size_t>> members(k);
      for (std::size_t p = 0; p < n; ++p) members[c.assignment[p]].push_back(p);
      bool changed = false;
      for (std::size_t m = 0; m < k; ++m) {
        std::size_t best = c.medoids[m];
        double best_cost = 0.0;
        for (std::size_t q : members[m]) best_cost += q == best ? 0.0 : dist(q, best);
        for (std::size_t cand : members[m]) {
          double cost = 0.0;
          for (std::size_t q : members[m]) {
            cost += q == cand ? 0.0 : dist(q, cand);
            if (cost >= best_cost) break;
          }
          if (cost < best_cost) {
            best_cost = cost;
            best = cand;
          }
        }
        if (best != c.medoids[m]) {
          c.medoids[m] = best;
          changed = true;
        }
      }
      std::sort(c.medoids.begin(), c.medoids.end());
      if (!changed) break;
    }
  } else {
    double cost = total_cost(n, dist, c.medoids);
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t m = 0; m < k && !improved; ++m) {
        for (std::size_t h = 0; h < n; ++h) {
          if (std::binary_search(c.medoids.begin(), c.medoids.end(), h)) continue;
          auto trial = c.medoids;
          trial[m] = h;
          const double t = total_cost(n, dist, trial);
          if (t < cost - 1e-12) {
            cost = t;
            std::sort(trial.begin(), trial.end());
            c.medoids = std::move(trial);
            improved = true;
            break;
          }
        }
      }
    }
  }
  assign(n, dist, c);
  return c;
}

}  // namespace lakeorg
