#include "core/enrich.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace lakeorg {

using json = nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score(std::span<const double> w, double b, std::span<const double> x) {
  double z = b;
  for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[k];
  return sigmoid(z);
}

}  // namespace

double TagClassifier::probability(std::span<const double> topic_mean) const {
  if (topic_mean.size() != weights.size()) {
    fail(ErrorCode::dimension_mismatch, "classifier for " + tag + " expects dimension " +
                                            std::to_string(weights.size()));
  }
  return score(weights, bias, unit(topic_mean));
}

void fit_logistic(std::span<const std::vector<double>> x, std::span<const int> y, double lambda,
                  std::size_t epochs, double learning_rate, std::vector<double>& w, double& b) {
  const std::size_t n = x.size();
  const std::size_t d = n ? x[0].size() : 0;
  w.assign(d, 0.0);
  b = 0.0;
  if (n == 0) return;
  std::vector<double> grad(d);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = score(w, b, x[i]) - y[i];
      for (std::size_t k = 0; k < d; ++k) grad[k] += r * x[i][k];
      gb += r;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) w[k] -= learning_rate * (grad[k] * inv + lambda * w[k]);
    b -= learning_rate * gb * inv;
  }
}

double f1_score(std::span<const int> truth, std::span<const int> predicted) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] && truth[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (truth[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

namespace {

std::optional<TagClassifier> train_one(const DataLake& lake, TagId t,
                                       const std::vector<std::vector<double>>& features,
                                       const EnrichConfig& cfg) {
  // Positives deduplicated on identical value sets.
  std::set<std::vector<std::string>> seen;
  std::vector<AttrIndex> pos;
  for (AttrIndex a : lake.data(t)) {
    if (seen.insert(lake.attribute(a).values).second) pos.push_back(a);
  }
  if (pos.size() < cfg.min_positives || pos.empty()) return std::nullopt;

  std::vector<AttrIndex> pool;
  for (AttrIndex a = 0; a < lake.attributes().size(); ++a) {
    const auto& tags = lake.attribute(a).tags;
    if (!std::binary_search(tags.begin(), tags.end(), t)) pool.push_back(a);
  }
  Rng rng(mix_seed(cfg.seed, t));
  rng.shuffle(pool);
  pool.resize(std::min(pool.size(), cfg.neg_ratio * pos.size()));
  if (pool.empty()) return std::nullopt;

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (AttrIndex a : pos) {
    x.push_back(features[a]);
    y.push_back(1);
  }
  for (AttrIndex a : pool) {
    x.push_back(features[a]);
    y.push_back(0);
  }

  // Stratified folds: shuffle each class, deal round-robin.
  const std::size_t folds = std::max<std::size_t>(2, std::min(cfg.folds, pos.size()));
  std::vector<std::size_t> fold(x.size());
  std::vector<std::size_t> pi(pos.size()), ni(pool.size());
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = i;
  for (std::size_t i = 0; i < ni.size(); ++i) ni[i] = pos.size() + i;
  rng.shuffle(pi);
  rng.shuffle(ni);
  for (std::size_t i = 0; i < pi.size(); ++i) fold[pi[i]] = i % folds;
  for (std::size_t i = 0; i < ni.size(); ++i) fold[ni[i]] = i % folds;

  TagClassifier best;
  best.tag = lake.tag_name(t);
  best.cv_f1 = -1.0;
  for (double lambda : cfg.lambdas) {
    std::vector<double> oof(x.size());
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::vector<double>> tx;
      std::vector<int> ty;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (fold[i] != f) {
          tx.push_back(x[i]);
          ty.push_back(y[i]);
        }
      }
      std::vector<double> w;
      double b;
      fit_logistic(tx, ty, lambda, cfg.epochs, cfg.learning_rate, w, b);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (fold[i] == f) oof[i] = score(w, b, x[i]);
      }
    }
    for (double thr : cfg.thresholds) {
      std::vector<int> pred(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) pred[i] = oof[i] >= thr;
      const double f1 = f1_score(y, pred);
      if (f1 > best.cv_f1) {
        best.cv_f1 = f1;
        best.lambda = lambda;
        best.threshold = thr;
      }
    }
  }
  fit_logistic(x, y, best.lambda, cfg.epochs, cfg.learning_rate, best.weights, best.bias);
  best.positives = pos.size();
  best.negatives = pool.size();
  return best;
}

}  // namespace

std::vector<TagClassifier> train_classifiers(const DataLake& lake, const EnrichConfig& cfg,
                                             std::vector<std::string>* warnings) {
  if (lake.tag_count() == 0) fail(ErrorCode::invalid_argument, "training lake has no tags");
  std::vector<std::vector<double>> features(lake.attributes().size());
  for (AttrIndex a = 0; a < features.size(); ++a) features[a] = unit(lake.attribute(a).topic.mean);
  std::vector<std::optional<TagClassifier>> slots(lake.tag_count());
  parallel_for(lake.tag_count(), [&](std::size_t t) {
    slots[t] = train_one(lake, static_cast<TagId>(t), features, cfg);
  });
  std::vector<TagClassifier> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  if (out.empty() && warnings) {
    warnings->push_back("no tag has " + std::to_string(cfg.min_positives) + " distinct positive attributes");
  }
  return out;
}

DataLake transfer_tags(std::span<const TagClassifier> classifiers, const DataLake& target,
                       TransferReport* report) {
  for (const auto& c : classifiers) {
    if (c.weights.size() != target.dim()) {
      fail(ErrorCode::dimension_mismatch, "classifier for " + c.tag + " has dimension " +
                                              std::to_string(c.weights.size()) + ", lake has " +
                                              std::to_string(target.dim()));
    }
  }
  std::vector<std::vector<std::string>> gained(target.attributes().size());
  std::vector<std::size_t> counts(classifiers.size(), 0);
  parallel_for(target.attributes().size(), [&](std::size_t a) {
    const auto& attr = target.attribute(static_cast<AttrIndex>(a));
    for (const auto& c : classifiers) {
      if (c.predict(attr.topic.mean)) gained[a].push_back(c.tag);
    }
  });
  auto records = target.records();
  std::size_t labeled = 0;
  std::size_t a = 0;
  for (auto& rec : records) {
    for (auto& col : rec.columns) {
      bool any_new = false;
      for (const auto& tag : gained[a]) {
        if (std::find(col.tags.begin(), col.tags.end(), tag) == col.tags.end()) {
          col.tags.push_back(tag);
          any_new = true;
        }
      }
      if (any_new) ++labeled;
      ++a;
    }
  }
  if (report) {
    report->per_tag.clear();
    for (std::size_t i = 0; i < classifiers.size(); ++i) {
      std::size_t n = 0;
      for (const auto& g : gained) n += std::count(g.begin(), g.end(), classifiers[i].tag);
      report->per_tag.emplace_back(classifiers[i].tag, n);
    }
    report->attributes_labeled = labeled;
  }
  return DataLake(target.dim(), std::move(records));
}

json to_json(std::span<const TagClassifier> classifiers) {
  json out = json::array();
  for (const auto& c : classifiers) {
    out.push_back({{"tag", c.tag},
                   {"weights", c.weights},
                   {"bias", c.bias},
                   {"threshold", c.threshold},
                   {"stats",
                    {{"lambda", c.lambda}, {"positives", c.positives}, {"negatives", c.negatives}, {"cv_f1", c.cv_f1}}}});
  }
  return out;
}

std::vector<TagClassifier> classifiers_from_json(const json& j) {
  try {
    std::vector<TagClassifier> out;
    for (const auto& c : j) {
      TagClassifier t;
      t.tag = c.at("tag").get<std::string>();
      t.weights = c.at("weights").get<std::vector<double>>();
      t.bias = c.at("bias").get<double>();
      t.threshold = c.at("threshold").get<double>();
      if (c.contains("stats")) {
        const auto& s = c.at("stats");
        t.lambda = s.value("lambda", 0.0);
        t.positives = s.value("positives", std::size_t{0});
        t.negatives = s.value("negatives", std::size_t{0});
        t.cv_f1 = s.value("cv_f1", 0.0);
      }
      out.push_back(std::move(t));
    }
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("classifier schema: ") + e.what());
  }
}

}  // namespace lakeorg
