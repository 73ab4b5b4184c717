#include "lakeorg/lakeorg.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/approx.hpp"
#include "core/benchgen.hpp"
#include "core/embedding.hpp"
#include "core/enrich.hpp"
#include "core/error.hpp"
#include "core/lake.hpp"
#include "core/navmodel.hpp"
#include "core/optimizer.hpp"
#include "core/organization.hpp"
#include "core/service.hpp"

using nlohmann::json;

struct lakeorg_embeddings {
  lakeorg::EmbeddingStore store;
};

struct lakeorg_lake {
  std::shared_ptr<const lakeorg::DataLake> lake;
  std::vector<std::string> warnings;
};

struct lakeorg_orgset {
  std::shared_ptr<const lakeorg::DataLake> lake;
  std::vector<lakeorg::Organization> orgs;
  std::vector<lakeorg::SearchTrace> traces;
  std::optional<lakeorg::Representatives> reps;
};

struct lakeorg_report {
  std::shared_ptr<const lakeorg::DataLake> lake;
  lakeorg::EvalReport report;
};

struct lakeorg_service {
  std::unique_ptr<lakeorg::NavService> service;
};

namespace {

thread_local std::string last_error;

lakeorg_status to_status(lakeorg::ErrorCode code) {
  switch (code) {
    case lakeorg::ErrorCode::invalid_argument: return LAKEORG_ERR_INVALID_ARGUMENT;
    case lakeorg::ErrorCode::parse: return LAKEORG_ERR_PARSE;
    case lakeorg::ErrorCode::io: return LAKEORG_ERR_IO;
    case lakeorg::ErrorCode::dimension_mismatch: return LAKEORG_ERR_DIMENSION_MISMATCH;
    case lakeorg::ErrorCode::undefined_similarity: return LAKEORG_ERR_UNDEFINED_SIMILARITY;
    case lakeorg::ErrorCode::validation: return LAKEORG_ERR_VALIDATION;
    case lakeorg::ErrorCode::not_found: return LAKEORG_ERR_NOT_FOUND;
    case lakeorg::ErrorCode::inapplicable: return LAKEORG_ERR_INAPPLICABLE;
  }
  return LAKEORG_ERR_INTERNAL;
}

lakeorg_status set_error(lakeorg_status status, std::string what) {
  last_error = std::move(what);
  return status;
}

template <class F>
lakeorg_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return LAKEORG_OK;
  } catch (const lakeorg::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(LAKEORG_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(LAKEORG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LAKEORG_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(LAKEORG_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) lakeorg::fail(lakeorg::ErrorCode::invalid_argument, what);
}

lakeorg::SearchConfig to_core(const lakeorg_search_config& c) {
  lakeorg::SearchConfig cfg;
  cfg.gamma = c.gamma;
  cfg.max_iterations = c.max_iterations;
  cfg.plateau_window = c.plateau_window;
  cfg.plateau_epsilon = c.plateau_epsilon;
  cfg.seed = c.seed;
  cfg.use_representatives = c.use_representatives != 0;
  cfg.representative_fraction = c.representative_fraction;
  cfg.dimensions = c.dimensions;
  return cfg;
}

void from_core(const lakeorg::SearchConfig& cfg, lakeorg_search_config* c) {
  c->gamma = cfg.gamma;
  c->max_iterations = cfg.max_iterations;
  c->plateau_window = cfg.plateau_window;
  c->plateau_epsilon = cfg.plateau_epsilon;
  c->seed = cfg.seed;
  c->use_representatives = cfg.use_representatives ? 1 : 0;
  c->representative_fraction = cfg.representative_fraction;
  c->dimensions = cfg.dimensions;
}

std::ofstream open_out(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) lakeorg::fail(lakeorg::ErrorCode::io, std::string("cannot write ") + path);
  return out;
}

}  // namespace

extern "C" {

const char* lakeorg_version(void) { return "1.0.0"; }

const char* lakeorg_last_error(void) { return last_error.c_str(); }

const char* lakeorg_status_name(lakeorg_status status) {
  switch (status) {
    case LAKEORG_OK: return "ok";
    case LAKEORG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LAKEORG_ERR_PARSE: return "parse";
    case LAKEORG_ERR_IO: return "io";
    case LAKEORG_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case LAKEORG_ERR_UNDEFINED_SIMILARITY: return "undefined_similarity";
    case LAKEORG_ERR_VALIDATION: return "validation";
    case LAKEORG_ERR_NOT_FOUND: return "not_found";
    case LAKEORG_ERR_INAPPLICABLE: return "inapplicable";
    case LAKEORG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

// --- embeddings

void lakeorg_synth_config_default(lakeorg_synth_config* cfg) {
  if (!cfg) return;
  lakeorg::SynthSpec s;
  *cfg = {s.dim, s.domains, s.topics_per_domain, s.words_per_topic,
          s.domain_weight, s.topic_weight, s.word_noise, s.seed};
}

lakeorg_status lakeorg_embeddings_load(const char* path, lakeorg_embeddings** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new lakeorg_embeddings{lakeorg::load_embeddings(path)};
  });
}

lakeorg_status lakeorg_embeddings_synthesize(const lakeorg_synth_config* cfg, lakeorg_embeddings** out) {
  return guarded([&] {
    require(cfg && out, "cfg and out are required");
    lakeorg::SynthSpec s{cfg->dim, cfg->domains, cfg->topics_per_domain, cfg->words_per_topic,
                         cfg->domain_weight, cfg->topic_weight, cfg->word_noise, cfg->seed};
    *out = new lakeorg_embeddings{lakeorg::synthesize_embeddings(s)};
  });
}

lakeorg_status lakeorg_embeddings_save(const lakeorg_embeddings* store, const char* path) {
  return guarded([&] {
    require(store && path, "store and path are required");
    lakeorg::save_embeddings(store->store, path);
  });
}

size_t lakeorg_embeddings_size(const lakeorg_embeddings* store) { return store ? store->store.size() : 0; }
size_t lakeorg_embeddings_dim(const lakeorg_embeddings* store) { return store ? store->store.dim() : 0; }
size_t lakeorg_embeddings_skipped(const lakeorg_embeddings* store) {
  return store ? store->store.skipped_zero() : 0;
}
void lakeorg_embeddings_free(lakeorg_embeddings* store) { delete store; }

// --- benchmark generation

void lakeorg_bench_config_default(lakeorg_bench_config* cfg) {
  if (!cfg) return;
  lakeorg::BenchSpec s;
  *cfg = {s.n_tags, s.n_tables, s.min_values, s.max_values, s.min_attrs, s.max_attrs,
          s.zipf_exponent, s.tag_min_separation, s.extra_tag_per_attribute ? 1 : 0, s.seed};
}

lakeorg_status lakeorg_bench_generate(const lakeorg_embeddings* store, const lakeorg_bench_config* cfg,
                                      const char* out_dir) {
  return guarded([&] {
    require(store && cfg && out_dir, "store, cfg and out_dir are required");
    lakeorg::BenchSpec s;
    s.n_tags = cfg->n_tags;
    s.n_tables = cfg->n_tables;
    s.min_values = cfg->min_values;
    s.max_values = cfg->max_values;
    s.min_attrs = cfg->min_attrs;
    s.max_attrs = cfg->max_attrs;
    s.zipf_exponent = cfg->zipf_exponent;
    s.tag_min_separation = cfg->tag_min_separation;
    s.extra_tag_per_attribute = cfg->extra_tag_per_attribute != 0;
    s.seed = cfg->seed;
    lakeorg::write_bench(lakeorg::generate(store->store, s), out_dir);
  });
}

// --- lakes

lakeorg_status lakeorg_lake_ingest(const char* tables_dir, const char* metadata, const lakeorg_embeddings* store,
                                   double text_threshold, lakeorg_lake** out) {
  return guarded([&] {
    require(tables_dir && metadata && store && out, "tables_dir, metadata, store and out are required");
    require(text_threshold >= 0 && text_threshold <= 1, "text_threshold must lie in [0, 1]");
    auto handle = std::make_unique<lakeorg_lake>();
    lakeorg::IngestOptions options;
    options.text_threshold = text_threshold;
    handle->lake = std::make_shared<const lakeorg::DataLake>(
        lakeorg::ingest(tables_dir, metadata, store->store, options, &handle->warnings));
    *out = handle.release();
  });
}

lakeorg_status lakeorg_lake_load(const char* path, lakeorg_lake** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    auto handle = std::make_unique<lakeorg_lake>();
    handle->lake = std::make_shared<const lakeorg::DataLake>(lakeorg::load_lake(path));
    *out = handle.release();
  });
}

lakeorg_status lakeorg_lake_save(const lakeorg_lake* lake, const char* path) {
  return guarded([&] {
    require(lake && path, "lake and path are required");
    lakeorg::save_lake(*lake->lake, path);
  });
}

size_t lakeorg_lake_table_count(const lakeorg_lake* lake) { return lake ? lake->lake->tables().size() : 0; }
size_t lakeorg_lake_attribute_count(const lakeorg_lake* lake) {
  return lake ? lake->lake->attributes().size() : 0;
}
size_t lakeorg_lake_tag_count(const lakeorg_lake* lake) { return lake ? lake->lake->tag_count() : 0; }
size_t lakeorg_lake_warning_count(const lakeorg_lake* lake) { return lake ? lake->warnings.size() : 0; }
const char* lakeorg_lake_warning(const lakeorg_lake* lake, size_t i) {
  if (!lake || i >= lake->warnings.size()) return nullptr;
  return lake->warnings[i].c_str();
}
void lakeorg_lake_free(lakeorg_lake* lake) { delete lake; }

// --- organizations

void lakeorg_search_config_default(lakeorg_search_config* cfg) {
  if (cfg) from_core(lakeorg::SearchConfig{}, cfg);
}

lakeorg_status lakeorg_search_config_load(const char* path, lakeorg_search_config* cfg) {
  return guarded([&] {
    require(path && cfg, "path and cfg are required");
    std::ifstream in(path, std::ios::binary);
    if (!in) lakeorg::fail(lakeorg::ErrorCode::io, std::string("cannot read ") + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      lakeorg::fail(lakeorg::ErrorCode::parse, std::string(path) + ": " + e.what());
    }
    from_core(lakeorg::config_from_json(j, to_core(*cfg)), cfg);
  });
}

lakeorg_status lakeorg_build(const lakeorg_lake* lake, const lakeorg_search_config* cfg, lakeorg_orgset** out) {
  return guarded([&] {
    require(lake && cfg && out, "lake, cfg and out are required");
    // Round-trip through JSON validation so the C struct gets the same checks
    // as a config file.
    const lakeorg::SearchConfig core = lakeorg::config_from_json(lakeorg::to_json(to_core(*cfg)));
    auto handle = std::make_unique<lakeorg_orgset>();
    handle->lake = lake->lake;
    if (core.use_representatives) {
      handle->reps = lakeorg::select_representatives(*lake->lake, core.representative_fraction, core.seed);
    }
    auto result = lakeorg::build_multidim(*lake->lake, core, handle->reps ? &*handle->reps : nullptr);
    handle->orgs = std::move(result.orgs);
    handle->traces = std::move(result.traces);
    *out = handle.release();
  });
}

lakeorg_status lakeorg_build_baseline(const lakeorg_lake* lake, lakeorg_baseline kind, double gamma,
                                      lakeorg_orgset** out) {
  return guarded([&] {
    require(lake && out, "lake and out are required");
    require(gamma > 0 && std::isfinite(gamma), "gamma must be positive");
    auto handle = std::make_unique<lakeorg_orgset>();
    handle->lake = lake->lake;
    switch (kind) {
      case LAKEORG_BASELINE_FLAT: handle->orgs.push_back(lakeorg::flat_org(*lake->lake, {}, gamma)); break;
      case LAKEORG_BASELINE_CLUSTERING:
        handle->orgs.push_back(lakeorg::initial_org(*lake->lake, {}, gamma));
        break;
      default: lakeorg::fail(lakeorg::ErrorCode::invalid_argument, "unknown baseline");
    }
    *out = handle.release();
  });
}

lakeorg_status lakeorg_orgset_load(const char* path, const lakeorg_lake* lake, lakeorg_orgset** out) {
  return guarded([&] {
    require(path && lake && out, "path, lake and out are required");
    auto handle = std::make_unique<lakeorg_orgset>();
    handle->lake = lake->lake;
    handle->orgs = lakeorg::load_organizations(path, *lake->lake);
    *out = handle.release();
  });
}

lakeorg_status lakeorg_orgset_save(const lakeorg_orgset* orgs, const char* path) {
  return guarded([&] {
    require(orgs && path, "orgs and path are required");
    lakeorg::save_organizations(orgs->orgs, *orgs->lake, path);
  });
}

lakeorg_status lakeorg_orgset_save_trace(const lakeorg_orgset* orgs, const char* path) {
  return guarded([&] {
    require(orgs && path, "orgs and path are required");
    if (orgs->traces.empty()) lakeorg::fail(lakeorg::ErrorCode::inapplicable, "organization set has no trace");
    auto out = open_out(path);
    for (std::size_t d = 0; d < orgs->traces.size(); ++d) lakeorg::write_trace(orgs->traces[d], out, d);
    if (!out) lakeorg::fail(lakeorg::ErrorCode::io, std::string("write failed: ") + path);
  });
}

lakeorg_status lakeorg_orgset_save_reps(const lakeorg_orgset* orgs, const char* path) {
  return guarded([&] {
    require(orgs && path, "orgs and path are required");
    if (!orgs->reps) lakeorg::fail(lakeorg::ErrorCode::inapplicable, "organization set has no representatives");
    auto out = open_out(path);
    out << lakeorg::to_json(*orgs->reps, *orgs->lake).dump(2) << '\n';
    if (!out) lakeorg::fail(lakeorg::ErrorCode::io, std::string("write failed: ") + path);
  });
}

size_t lakeorg_orgset_dimensions(const lakeorg_orgset* orgs) { return orgs ? orgs->orgs.size() : 0; }

size_t lakeorg_orgset_state_count(const lakeorg_orgset* orgs, size_t dimension) {
  if (!orgs || dimension >= orgs->orgs.size()) return 0;
  return orgs->orgs[dimension].size();
}

size_t lakeorg_orgset_validate(const lakeorg_orgset* orgs) {
  if (!orgs) {
    set_error(LAKEORG_ERR_INVALID_ARGUMENT, "orgs is required");
    return 1;
  }
  std::size_t count = 0;
  std::string first;
  for (std::size_t d = 0; d < orgs->orgs.size(); ++d) {
    auto problems = lakeorg::validate(orgs->orgs[d]);
    if (!problems.empty() && first.empty()) first = "dimension " + std::to_string(d) + ": " + problems.front();
    count += problems.size();
  }
  last_error = first;
  return count;
}

void lakeorg_orgset_free(lakeorg_orgset* orgs) { delete orgs; }

// --- evaluation

lakeorg_status lakeorg_evaluate(const lakeorg_orgset* orgs, double theta, double reps_fraction, uint64_t seed,
                                lakeorg_report** out) {
  return guarded([&] {
    require(orgs && out, "orgs and out are required");
    require(theta >= -1 && theta <= 1, "theta must lie in [-1, 1]");
    require(reps_fraction >= 0 && reps_fraction <= 1, "reps_fraction must lie in [0, 1]");
    const lakeorg::DataLake& lake = *orgs->lake;
    std::optional<lakeorg::Representatives> reps;
    if (reps_fraction > 0) reps = lakeorg::select_representatives(lake, reps_fraction, seed);
    lakeorg::SimilarityIndex sims(lake, theta);
    lakeorg::EvalOptions options;
    options.theta = theta;
    options.reps = reps ? &*reps : nullptr;
    auto handle = std::make_unique<lakeorg_report>();
    handle->lake = orgs->lake;
    handle->report = lakeorg::evaluate(orgs->orgs, lake, sims, options);
    *out = handle.release();
  });
}

double lakeorg_report_effectiveness(const lakeorg_report* report) {
  return report ? report->report.effectiveness : 0.0;
}
double lakeorg_report_mean_success(const lakeorg_report* report) {
  return report ? report->report.mean_success : 0.0;
}
size_t lakeorg_report_table_count(const lakeorg_report* report) {
  return report ? report->report.tables.size() : 0;
}
const char* lakeorg_report_table_id(const lakeorg_report* report, size_t i) {
  if (!report || i >= report->report.tables.size()) return nullptr;
  return report->lake->tables()[report->report.tables[i]].id.c_str();
}
double lakeorg_report_table_discovery(const lakeorg_report* report, size_t i) {
  if (!report || i >= report->report.tables.size()) return 0.0;
  return report->report.table_discovery[i];
}
double lakeorg_report_table_success(const lakeorg_report* report, size_t i) {
  if (!report || i >= report->report.tables.size()) return 0.0;
  return report->report.table_success[i];
}

lakeorg_status lakeorg_report_write_csv(const lakeorg_report* report, const char* path) {
  return guarded([&] {
    require(report && path, "report and path are required");
    auto out = open_out(path);
    out << "table_id,discovery_prob,success_prob\n";
    const auto& r = report->report;
    char buf[64];
    for (std::size_t i = 0; i < r.tables.size(); ++i) {
      out << lakeorg::csv_escape(report->lake->tables()[r.tables[i]].id);
      std::snprintf(buf, sizeof buf, ",%.17g", r.table_discovery[i]);
      out << buf;
      std::snprintf(buf, sizeof buf, ",%.17g\n", r.table_success[i]);
      out << buf;
    }
    if (!out) lakeorg::fail(lakeorg::ErrorCode::io, std::string("write failed: ") + path);
  });
}

lakeorg_status lakeorg_report_write_summary(const lakeorg_report* report, const char* path) {
  return guarded([&] {
    require(report && path, "report and path are required");
    auto out = open_out(path);
    json j = {{"effectiveness", report->report.effectiveness},
              {"mean_success", report->report.mean_success},
              {"n_tables", report->report.tables.size()}};
    out << j.dump(2) << '\n';
    if (!out) lakeorg::fail(lakeorg::ErrorCode::io, std::string("write failed: ") + path);
  });
}

void lakeorg_report_free(lakeorg_report* report) { delete report; }

// --- enrichment

void lakeorg_enrich_config_default(lakeorg_enrich_config* cfg) {
  if (!cfg) return;
  lakeorg::EnrichConfig c;
  *cfg = {c.min_positives, c.neg_ratio, c.folds, c.seed};
}

lakeorg_status lakeorg_enrich(const lakeorg_lake* source, const lakeorg_lake* target,
                              const lakeorg_enrich_config* cfg, const char* models_path, const char* report_path,
                              lakeorg_lake** out) {
  return guarded([&] {
    require(source && target && cfg && out, "source, target, cfg and out are required");
    if (source->lake->dim() != target->lake->dim()) {
      lakeorg::fail(lakeorg::ErrorCode::dimension_mismatch, "source and target lakes use different embeddings");
    }
    lakeorg::EnrichConfig c;
    c.min_positives = cfg->min_positives;
    c.neg_ratio = cfg->neg_ratio;
    c.folds = cfg->folds;
    c.seed = cfg->seed;
    auto handle = std::make_unique<lakeorg_lake>();
    const auto classifiers = lakeorg::train_classifiers(*source->lake, c, &handle->warnings);
    lakeorg::TransferReport transfer;
    handle->lake = std::make_shared<const lakeorg::DataLake>(
        lakeorg::transfer_tags(classifiers, *target->lake, &transfer));
    if (models_path) {
      auto f = open_out(models_path);
      f << lakeorg::to_json(classifiers).dump(2) << '\n';
    }
    if (report_path) {
      json tags = json::array();
      for (const auto& [tag, n] : transfer.per_tag) tags.push_back({{"tag", tag}, {"predicted", n}});
      json cls = json::array();
      for (const auto& k : classifiers) {
        cls.push_back({{"tag", k.tag}, {"cv_f1", k.cv_f1}, {"lambda", k.lambda}, {"threshold", k.threshold},
                       {"positives", k.positives}, {"negatives", k.negatives}});
      }
      json j = {{"classifiers", cls}, {"transfer", tags}, {"attributes_labeled", transfer.attributes_labeled}};
      auto f = open_out(report_path);
      f << j.dump(2) << '\n';
    }
    *out = handle.release();
  });
}

// --- navigation service

lakeorg_status lakeorg_service_start(const lakeorg_orgset* orgs, const char* host, int port,
                                     const char* static_dir, lakeorg_service** out) {
  return guarded([&] {
    require(orgs && host && out, "orgs, host and out are required");
    require(port >= 0 && port <= 65535, "port must lie in [0, 65535]");
    require(!orgs->orgs.empty(), "organization set is empty");
    std::optional<double> eff;
    {
      lakeorg::SimilarityIndex sims(*orgs->lake, 0.9);
      eff = lakeorg::evaluate(orgs->orgs, *orgs->lake, sims).effectiveness;
    }
    auto views = std::make_shared<const lakeorg::NavViews>(orgs->lake, orgs->orgs, eff);
    std::optional<std::filesystem::path> dir;
    if (static_dir) dir = static_dir;
    auto handle = std::make_unique<lakeorg_service>();
    handle->service = std::make_unique<lakeorg::NavService>(views, dir);
    handle->service->start(host, port);
    *out = handle.release();
  });
}

int lakeorg_service_port(const lakeorg_service* service) {
  return service && service->service ? service->service->port() : 0;
}
void lakeorg_service_wait(lakeorg_service* service) {
  if (service && service->service) service->service->wait();
}
void lakeorg_service_stop(lakeorg_service* service) {
  if (service && service->service) service->service->stop();
}
void lakeorg_service_free(lakeorg_service* service) {
  if (service && service->service) service->service->stop();
  delete service;
}

}  // extern "C"
