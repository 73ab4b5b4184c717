// Command-line driver. Talks to the library only through the C API.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "lakeorg/lakeorg.h"

namespace {

struct Failure {
  int code;
};

void check(lakeorg_status status, const std::string& what) {
  if (status == LAKEORG_OK) return;
  std::fprintf(stderr, "lakeorg: %s: %s (%s)\n", what.c_str(), lakeorg_last_error(),
               lakeorg_status_name(status));
  throw Failure{static_cast<int>(status) + 1};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Embeddings = std::unique_ptr<lakeorg_embeddings, Deleter<lakeorg_embeddings, lakeorg_embeddings_free>>;
using Lake = std::unique_ptr<lakeorg_lake, Deleter<lakeorg_lake, lakeorg_lake_free>>;
using OrgSet = std::unique_ptr<lakeorg_orgset, Deleter<lakeorg_orgset, lakeorg_orgset_free>>;
using Report = std::unique_ptr<lakeorg_report, Deleter<lakeorg_report, lakeorg_report_free>>;
using Service = std::unique_ptr<lakeorg_service, Deleter<lakeorg_service, lakeorg_service_free>>;

// Embedding source shared by gen-bench and ingest: a word-vector file, or the
// built-in synthetic vocabulary when no file is given.
struct EmbeddingArgs {
  std::string path;
  lakeorg_synth_config synth{};

  void attach(CLI::App* cmd) {
    lakeorg_synth_config_default(&synth);
    cmd->add_option("--embeddings", path, "word-vector text file (default: synthetic vocabulary)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--synth-seed", synth.seed, "seed of the synthetic vocabulary");
  }

  Embeddings load() const {
    lakeorg_embeddings* e = nullptr;
    if (path.empty()) {
      check(lakeorg_embeddings_synthesize(&synth, &e), "synthesize embeddings");
    } else {
      check(lakeorg_embeddings_load(path.c_str(), &e), "load " + path);
    }
    return Embeddings(e);
  }
};

Lake ingest_lake(const std::string& tables, const std::string& metadata, const lakeorg_embeddings* store,
                 double threshold) {
  lakeorg_lake* lake = nullptr;
  check(lakeorg_lake_ingest(tables.c_str(), metadata.c_str(), store, threshold, &lake), "ingest");
  Lake owned(lake);
  for (size_t i = 0; i < lakeorg_lake_warning_count(lake); ++i) {
    std::fprintf(stderr, "warning: %s\n", lakeorg_lake_warning(lake, i));
  }
  return owned;
}

Lake load_lake(const std::string& path) {
  lakeorg_lake* lake = nullptr;
  check(lakeorg_lake_load(path.c_str(), &lake), "load lake " + path);
  return Lake(lake);
}

OrgSet load_orgs(const std::string& path, const lakeorg_lake* lake) {
  lakeorg_orgset* orgs = nullptr;
  check(lakeorg_orgset_load(path.c_str(), lake, &orgs), "load organization " + path);
  return OrgSet(orgs);
}

void print_lake(const lakeorg_lake* lake) {
  std::printf("tables=%zu attributes=%zu tags=%zu\n", lakeorg_lake_table_count(lake),
              lakeorg_lake_attribute_count(lake), lakeorg_lake_tag_count(lake));
}

lakeorg_service* running_service = nullptr;

extern "C" void on_signal(int) {
  if (running_service) lakeorg_service_stop(running_service);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navigable organizations over data lakes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lakeorg_version()));

  // gen-embeddings
  auto* gen_emb = app.add_subcommand("gen-embeddings", "write the synthetic word-vector vocabulary");
  lakeorg_synth_config synth;
  lakeorg_synth_config_default(&synth);
  std::string emb_out;
  gen_emb->add_option("--out", emb_out, "output file")->required();
  gen_emb->add_option("--dim", synth.dim)->check(CLI::PositiveNumber);
  gen_emb->add_option("--domains", synth.domains)->check(CLI::PositiveNumber);
  gen_emb->add_option("--topics", synth.topics_per_domain)->check(CLI::PositiveNumber);
  gen_emb->add_option("--words", synth.words_per_topic)->check(CLI::PositiveNumber);
  gen_emb->add_option("--seed", synth.seed);

  // gen-bench
  auto* gen_bench = app.add_subcommand("gen-bench", "generate a synthetic tagged benchmark lake");
  EmbeddingArgs bench_emb;
  bench_emb.attach(gen_bench);
  lakeorg_bench_config bench;
  lakeorg_bench_config_default(&bench);
  bool extra_tag = false;
  std::string bench_out, bench_lake_out;
  gen_bench->add_option("--out", bench_out, "output directory (tables/, metadata.jsonl, ground_truth.csv)")
      ->required();
  gen_bench->add_option("--lake-out", bench_lake_out, "also ingest the generated tables into this lake file");
  gen_bench->add_option("--tags", bench.n_tags)->check(CLI::PositiveNumber);
  gen_bench->add_option("--tables", bench.n_tables)->check(CLI::PositiveNumber);
  gen_bench->add_option("--min-values", bench.min_values)->check(CLI::PositiveNumber);
  gen_bench->add_option("--max-values", bench.max_values)->check(CLI::PositiveNumber);
  gen_bench->add_option("--min-attrs", bench.min_attrs)->check(CLI::PositiveNumber);
  gen_bench->add_option("--max-attrs", bench.max_attrs)->check(CLI::PositiveNumber);
  gen_bench->add_option("--zipf", bench.zipf_exponent)->check(CLI::NonNegativeNumber);
  gen_bench->add_option("--tag-separation", bench.tag_min_separation);
  gen_bench->add_flag("--extra-tag", extra_tag, "give every attribute a second tag");
  gen_bench->add_option("--seed", bench.seed);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "read CSV tables and metadata into a lake file");
  EmbeddingArgs ingest_emb;
  ingest_emb.attach(ingest);
  std::string ingest_tables, ingest_meta, ingest_out;
  double text_threshold = 0.5;
  ingest->add_option("--tables", ingest_tables, "directory of CSV files")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--metadata", ingest_meta, "newline-delimited JSON metadata")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "lake file to write")->required();
  ingest->add_option("--text-threshold", text_threshold, "fraction of non-numeric cells making a column textual")
      ->check(CLI::Range(0.0, 1.0));

  // build
  auto* build = app.add_subcommand("build", "organize a lake");
  lakeorg_search_config search;
  lakeorg_search_config_default(&search);
  std::string build_lake, build_out, build_config, build_trace, build_reps, baseline;
  bool exact = false;
  build->add_option("--lake", build_lake)->required()->check(CLI::ExistingFile);
  build->add_option("--out", build_out, "organization file to write")->required();
  build->add_option("--config", build_config, "JSON search configuration; flags override it")
      ->check(CLI::ExistingFile);
  auto* o_gamma = build->add_option("--gamma", search.gamma);
  auto* o_dims = build->add_option("--dimensions", search.dimensions);
  auto* o_frac = build->add_option("--reps-fraction", search.representative_fraction);
  auto* o_seed = build->add_option("--seed", search.seed);
  auto* o_iters = build->add_option("--max-iters", search.max_iterations);
  auto* o_window = build->add_option("--plateau-window", search.plateau_window);
  build->add_flag("--exact", exact, "evaluate every attribute instead of representatives");
  build->add_option("--trace", build_trace, "write the search trace (NDJSON)");
  build->add_option("--reps-out", build_reps, "write the representatives used");
  build->add_option("--baseline", baseline, "build a baseline instead of searching")
      ->check(CLI::IsMember({"flat", "clustering"}));

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate an organization");
  std::string eval_lake, eval_org, eval_csv, eval_summary;
  double theta = 0.9, eval_frac = 0.0;
  uint64_t eval_seed = 0;
  eval->add_option("--lake", eval_lake)->required()->check(CLI::ExistingFile);
  eval->add_option("--org", eval_org)->required()->check(CLI::ExistingFile);
  eval->add_option("--theta", theta, "success similarity threshold");
  eval->add_option("--reps-fraction", eval_frac, "0 evaluates exactly")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--seed", eval_seed);
  eval->add_option("--out", eval_csv, "per-table CSV");
  eval->add_option("--summary", eval_summary, "summary JSON");

  // enrich
  auto* enrich = app.add_subcommand("enrich", "transfer tags from a tagged lake to another lake");
  lakeorg_enrich_config enrich_cfg;
  lakeorg_enrich_config_default(&enrich_cfg);
  std::string enrich_src, enrich_dst, enrich_out, enrich_models, enrich_report;
  enrich->add_option("--source", enrich_src)->required()->check(CLI::ExistingFile);
  enrich->add_option("--target", enrich_dst)->required()->check(CLI::ExistingFile);
  enrich->add_option("--out", enrich_out, "augmented target lake")->required();
  enrich->add_option("--models", enrich_models, "write the trained classifiers");
  enrich->add_option("--report", enrich_report, "write per-tag training and transfer statistics");
  enrich->add_option("--min-positives", enrich_cfg.min_positives)->check(CLI::PositiveNumber);
  enrich->add_option("--neg-ratio", enrich_cfg.neg_ratio)->check(CLI::PositiveNumber);
  enrich->add_option("--folds", enrich_cfg.folds)->check(CLI::Range(2, 1000));
  enrich->add_option("--seed", enrich_cfg.seed);

  // serve
  auto* serve = app.add_subcommand("serve", "serve an organization over HTTP");
  std::string serve_lake, serve_org, serve_static, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--lake", serve_lake)->required()->check(CLI::ExistingFile);
  serve->add_option("--org", serve_org)->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host);
  serve->add_option("--port", port, "overridden by LAKEORG_PORT")->check(CLI::Range(0, 65535));
  serve->add_option("--static", serve_static, "directory of UI assets")->check(CLI::ExistingDirectory);

  // validate
  auto* valid = app.add_subcommand("validate", "check organization invariants");
  std::string valid_lake, valid_org;
  valid->add_option("--lake", valid_lake)->required()->check(CLI::ExistingFile);
  valid->add_option("--org", valid_org)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen_emb) {
      lakeorg_embeddings* e = nullptr;
      check(lakeorg_embeddings_synthesize(&synth, &e), "synthesize embeddings");
      Embeddings owned(e);
      check(lakeorg_embeddings_save(e, emb_out.c_str()), "write " + emb_out);
      std::printf("words=%zu dim=%zu\n", lakeorg_embeddings_size(e), lakeorg_embeddings_dim(e));
    } else if (*gen_bench) {
      bench.extra_tag_per_attribute = extra_tag ? 1 : 0;
      auto store = bench_emb.load();
      check(lakeorg_bench_generate(store.get(), &bench, bench_out.c_str()), "generate benchmark");
      if (!bench_lake_out.empty()) {
        auto lake = ingest_lake(bench_out + "/tables", bench_out + "/metadata.jsonl", store.get(), 0.5);
        check(lakeorg_lake_save(lake.get(), bench_lake_out.c_str()), "write " + bench_lake_out);
        print_lake(lake.get());
      }
    } else if (*ingest) {
      auto store = ingest_emb.load();
      auto lake = ingest_lake(ingest_tables, ingest_meta, store.get(), text_threshold);
      check(lakeorg_lake_save(lake.get(), ingest_out.c_str()), "write " + ingest_out);
      print_lake(lake.get());
    } else if (*build) {
      auto lake = load_lake(build_lake);
      lakeorg_orgset* raw = nullptr;
      if (!baseline.empty()) {
        auto kind = baseline == "flat" ? LAKEORG_BASELINE_FLAT : LAKEORG_BASELINE_CLUSTERING;
        check(lakeorg_build_baseline(lake.get(), kind, search.gamma, &raw), "build baseline");
      } else {
        if (!build_config.empty()) {
          // Reapply explicit flags on top of the file.
          lakeorg_search_config flags = search;
          lakeorg_search_config_default(&search);
          check(lakeorg_search_config_load(build_config.c_str(), &search), "load " + build_config);
          if (o_gamma->count()) search.gamma = flags.gamma;
          if (o_dims->count()) search.dimensions = flags.dimensions;
          if (o_frac->count()) search.representative_fraction = flags.representative_fraction;
          if (o_seed->count()) search.seed = flags.seed;
          if (o_iters->count()) search.max_iterations = flags.max_iterations;
          if (o_window->count()) search.plateau_window = flags.plateau_window;
        }
        if (exact) search.use_representatives = 0;
        check(lakeorg_build(lake.get(), &search, &raw), "build");
      }
      OrgSet orgs(raw);
      check(lakeorg_orgset_save(raw, build_out.c_str()), "write " + build_out);
      if (!build_trace.empty()) check(lakeorg_orgset_save_trace(raw, build_trace.c_str()), "write trace");
      if (!build_reps.empty()) check(lakeorg_orgset_save_reps(raw, build_reps.c_str()), "write representatives");
      for (size_t d = 0; d < lakeorg_orgset_dimensions(raw); ++d) {
        std::printf("dimension %zu: states=%zu\n", d, lakeorg_orgset_state_count(raw, d));
      }
    } else if (*eval) {
      auto lake = load_lake(eval_lake);
      auto orgs = load_orgs(eval_org, lake.get());
      lakeorg_report* raw = nullptr;
      check(lakeorg_evaluate(orgs.get(), theta, eval_frac, eval_seed, &raw), "evaluate");
      Report report(raw);
      if (!eval_csv.empty()) check(lakeorg_report_write_csv(raw, eval_csv.c_str()), "write " + eval_csv);
      if (!eval_summary.empty()) {
        check(lakeorg_report_write_summary(raw, eval_summary.c_str()), "write " + eval_summary);
      }
      std::printf("effectiveness=%.6f mean_success=%.6f tables=%zu\n", lakeorg_report_effectiveness(raw),
                  lakeorg_report_mean_success(raw), lakeorg_report_table_count(raw));
    } else if (*enrich) {
      auto src = load_lake(enrich_src);
      auto dst = load_lake(enrich_dst);
      lakeorg_lake* raw = nullptr;
      check(lakeorg_enrich(src.get(), dst.get(), &enrich_cfg, enrich_models.empty() ? nullptr : enrich_models.c_str(),
                           enrich_report.empty() ? nullptr : enrich_report.c_str(), &raw),
            "enrich");
      Lake out(raw);
      for (size_t i = 0; i < lakeorg_lake_warning_count(raw); ++i) {
        std::fprintf(stderr, "warning: %s\n", lakeorg_lake_warning(raw, i));
      }
      check(lakeorg_lake_save(raw, enrich_out.c_str()), "write " + enrich_out);
      print_lake(raw);
    } else if (*serve) {
      if (const char* env = std::getenv("LAKEORG_PORT"); env && *env) {
        try {
          port = std::stoi(env);
        } catch (const std::exception&) {
          std::fprintf(stderr, "lakeorg: LAKEORG_PORT is not a port number: %s\n", env);
          return 2;
        }
      }
      auto lake = load_lake(serve_lake);
      auto orgs = load_orgs(serve_org, lake.get());
      lakeorg_service* raw = nullptr;
      check(lakeorg_service_start(orgs.get(), host.c_str(), port, serve_static.empty() ? nullptr : serve_static.c_str(),
                                  &raw),
            "start service");
      Service service(raw);
      running_service = raw;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on http://%s:%d\n", host.c_str(), lakeorg_service_port(raw));
      std::fflush(stdout);
      lakeorg_service_wait(raw);
      running_service = nullptr;
    } else if (*valid) {
      auto lake = load_lake(valid_lake);
      auto orgs = load_orgs(valid_org, lake.get());
      if (size_t n = lakeorg_orgset_validate(orgs.get()); n > 0) {
        std::fprintf(stderr, "lakeorg: %zu invariant violations; first: %s\n", n, lakeorg_last_error());
        return 1;
      }
      std::printf("ok\n");
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
