#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "theseus/classify.hpp"
#include "theseus/contentsim.hpp"
#include "theseus/corpus.hpp"
#include "theseus/features.hpp"
#include "theseus/paraphrase.hpp"
#include "theseus/pipeline.hpp"
#include "theseus/stylemodel.hpp"
#include "theseus/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace theseus;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output file or directory (default: stdout)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--config", c.config, "Experiment config supplying defaults");
}

std::optional<ExperimentConfig> config_of(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  return load_experiment_config(c.config);
}

std::uint64_t seed_of(const Common& c, const std::optional<ExperimentConfig>& cfg) {
  if (c.seed) return *c.seed;
  return cfg ? cfg->seed : 0;
}

void emit(const Common& c, const std::string& content) {
  if (c.out.empty()) {
    std::cout << content;
    return;
  }
  const fs::path p(c.out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + c.out);
  out << content;
}

void write_to(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
}

std::vector<Document> originals_of(const Corpus& corpus) {
  std::vector<Document> out;
  for (const auto& d : corpus) {
    if (d.iteration == 0) out.push_back(d);
  }
  return out;
}

FeatureConfig features_of(const std::optional<ExperimentConfig>& cfg) { return cfg ? cfg->features : FeatureConfig{}; }

ClassifierConfig classifier_of(const std::optional<ExperimentConfig>& cfg, const std::string& kind) {
  ClassifierConfig cc = cfg ? cfg->classifier : ClassifierConfig{};
  if (!kind.empty()) cc.kind = parse_classifier_kind(kind);
  return cc;
}

SplitSpec split_of(const Common& c, const std::optional<ExperimentConfig>& cfg, std::optional<double> fraction) {
  SplitSpec s = cfg ? cfg->split : SplitSpec{};
  if (c.seed) s.seed = *c.seed;
  if (fraction) s.train_fraction = *fraction;
  return s;
}

std::string report_output(const Common& c, std::span<const EvaluationReport> reports) {
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    return arr.dump(2) + "\n";
  }
  std::ostringstream ss;
  write_f1_csv(ss, reports);
  return ss.str();
}

// Writes report.json, f1_table.csv and confusion matrices when --out names a
// directory; otherwise prints to stdout.
void emit_reports(const Common& c, std::span<const EvaluationReport> reports) {
  if (c.out.empty()) {
    std::cout << report_output(c, reports);
    return;
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  Common as_json = c;
  as_json.format = "json";
  Common as_csv = c;
  as_csv.format = "csv";
  write_to(dir / "report.json", report_output(as_json, reports));
  write_to(dir / "f1_table.csv", report_output(as_csv, reports));
  for (const auto& r : reports) {
    for (const auto& s : r.scores) {
      std::ostringstream ss;
      write_confusion_csv(ss, s.confusion);
      write_to(dir / fmt::format("confusion_{}_{}.csv", r.setting, s.iteration), ss.str());
    }
  }
}

void setup_logging(bool verbose, bool quiet) {
  auto sink = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  if (std::getenv("NO_COLOR") != nullptr) sink->set_color_mode(spdlog::color_mode::never);
  auto logger = std::make_shared<spdlog::logger>("theseus", sink);
  logger->set_pattern("%^%l%$: %v");
  logger->set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_default_logger(logger);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stylometric authorship analysis under repeated paraphrasing"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");
  app.add_flag("-q,--quiet", quiet, "Log errors only");
  std::function<void()> action;

  // corpus ------------------------------------------------------------------
  auto* corpus_cmd = app.add_subcommand("corpus", "Validate, split or filter a corpus")->require_subcommand(1);
  Common cv, cs, cf;
  std::string cv_in, cs_in, cf_in;
  std::optional<double> cs_fraction;
  std::size_t cf_min = 0;
  auto* validate_cmd = corpus_cmd->add_subcommand("validate", "Check corpus integrity");
  add_common(validate_cmd, cv);
  validate_cmd->add_option("corpus", cv_in, "Corpus JSONL")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const auto corpus = load_corpus(cv_in);
      json j{{"documents", corpus.size()},       {"authors", corpus.authors()},
             {"paraphrasers", corpus.paraphrasers()}, {"datasets", corpus.datasets()},
             {"source_keys", corpus.source_keys().size()}, {"max_iteration", corpus.max_iteration()}};
      if (cv.format == "json") {
        emit(cv, j.dump(2) + "\n");
      } else {
        emit(cv, fmt::format("ok: {} documents, {} authors, {} paraphrasers, max iteration {}\n", corpus.size(),
                             corpus.authors().size(), corpus.paraphrasers().size(), corpus.max_iteration()));
      }
    };
  });
  auto* split_cmd = corpus_cmd->add_subcommand("split", "Split by source key into train.jsonl and test.jsonl");
  add_common(split_cmd, cs);
  split_cmd->add_option("corpus", cs_in, "Corpus JSONL")->required();
  split_cmd->add_option("--fraction", cs_fraction, "Training share of source keys");
  split_cmd->callback([&] {
    action = [&] {
      const auto cfg = config_of(cs);
      const auto parts = split(load_corpus(cs_in), split_of(cs, cfg, cs_fraction));
      const fs::path dir = cs.out.empty() ? fs::path(".") : fs::path(cs.out);
      fs::create_directories(dir);
      save_corpus(dir / "train.jsonl", parts.train);
      save_corpus(dir / "test.jsonl", parts.test);
      write_to(dir / "split.json",
               json{{"train_keys", parts.train_keys}, {"test_keys", parts.test_keys}, {"warnings", parts.warnings}}.dump(2) + "\n");
      std::cout << fmt::format("train: {} documents, test: {} documents\n", parts.train.size(), parts.test.size());
    };
  });
  auto* filter_cmd = corpus_cmd->add_subcommand("filter", "Drop short documents and their descendants");
  add_common(filter_cmd, cf);
  filter_cmd->add_option("corpus", cf_in, "Corpus JSONL")->required();
  filter_cmd->add_option("--min-words", cf_min, "Minimum word count")->required();
  filter_cmd->callback([&] {
    action = [&] {
      std::ostringstream ss;
      write_corpus(ss, filter_by_length(load_corpus(cf_in), cf_min));
      emit(cf, ss.str());
    };
  });

  // paraphrase ----------------------------------------------------------------
  auto* para_cmd = app.add_subcommand("paraphrase", "Build paraphrase chains")->require_subcommand(1);
  Common pr;
  std::string pr_in, pr_spec, pr_failures;
  int pr_iterations = 3;
  std::size_t pr_jobs = 1;
  auto* prun = para_cmd->add_subcommand("run", "Paraphrase every original and append the chains");
  add_common(prun, pr);
  prun->add_option("corpus", pr_in, "Corpus JSONL")->required();
  prun->add_option("--spec", pr_spec, "Paraphraser spec JSON (default: the config's paraphrasers)");
  prun->add_option("--iterations", pr_iterations, "Paraphrasing iterations")->check(CLI::PositiveNumber);
  prun->add_option("--jobs", pr_jobs, "Worker threads");
  prun->add_option("--failures", pr_failures, "Where to write the failure manifest");
  prun->callback([&] {
    action = [&] {
      const auto cfg = config_of(pr);
      std::vector<ParaphraserSpec> specs;
      if (!pr_spec.empty()) {
        std::ifstream in(pr_spec);
        if (!in) throw IoError("cannot read " + pr_spec);
        specs.push_back(paraphraser_spec_from_json(json::parse(in), fs::absolute(pr_spec).parent_path()));
      } else if (cfg) {
        specs = cfg->paraphrasers;
      }
      if (specs.empty()) throw ConfigError("no paraphraser: pass --spec or a config with paraphrasers");
      Corpus corpus = load_corpus(pr_in);
      json failures = json::array();
      for (auto& spec : specs) {
        if (pr.seed && spec.synthetic) spec.synthetic->seed = *pr.seed;
        Paraphraser p(spec);
        const auto originals = originals_of(corpus);
        const auto built = build_chains(originals, p, pr_iterations, pr_jobs);
        for (const auto& f : failures_to_json(built.failures)) failures.push_back(f);
        corpus = append_chains(corpus, built.chains);
      }
      std::ostringstream ss;
      write_corpus(ss, corpus);
      emit(pr, ss.str());
      if (!pr_failures.empty()) write_to(pr_failures, failures.dump(2) + "\n");
      if (!failures.empty()) spdlog::warn("{} chain(s) stopped early", failures.size());
    };
  });

  // features ------------------------------------------------------------------
  auto* feat_cmd = app.add_subcommand("features", "Fit a feature schema or extract vectors")->require_subcommand(1);
  Common ff, fe;
  std::string ff_in, fe_in, fe_schema, ff_lexicon;
  std::optional<std::size_t> ff_bigrams, ff_trigrams;
  bool fe_standardize = false;
  auto* ffit = feat_cmd->add_subcommand("fit", "Fit vocabularies and standardization on T^0 texts");
  add_common(ffit, ff);
  ffit->add_option("corpus", ff_in, "Training corpus JSONL")->required();
  ffit->add_option("--bigram-k", ff_bigrams, "Character bigrams kept");
  ffit->add_option("--trigram-k", ff_trigrams, "Character trigrams kept");
  ffit->add_option("--lexicon", ff_lexicon, "Category lexicon file");
  ffit->callback([&] {
    action = [&] {
      auto fc = features_of(config_of(ff));
      if (ff_bigrams) fc.bigram_k = *ff_bigrams;
      if (ff_trigrams) fc.trigram_k = *ff_trigrams;
      if (!ff_lexicon.empty()) fc.lexicon = load_lexicon(ff_lexicon);
      std::vector<std::string> texts;
      for (const auto& d : load_corpus(ff_in)) {
        if (d.iteration == 0) texts.push_back(d.text);
      }
      emit(ff, to_json(fit_schema(texts, fc)).dump(2) + "\n");
    };
  });
  auto* fext = feat_cmd->add_subcommand("extract", "Style vectors for every document");
  add_common(fext, fe);
  fext->add_option("corpus", fe_in, "Corpus JSONL")->required();
  fext->add_option("--schema", fe_schema, "Schema JSON from 'features fit'")->required();
  fext->add_flag("--standardize", fe_standardize, "Standardize with the schema statistics");
  fext->callback([&] {
    action = [&] {
      std::ifstream in(fe_schema);
      const auto schema = schema_from_json(json::parse(in));
      std::vector<std::string> ids;
      std::vector<FeatureVector> vecs;
      for (const auto& d : load_corpus(fe_in)) {
        ids.push_back(d.id);
        auto v = style_vector(d.text, schema);
        vecs.push_back(fe_standardize ? schema.standardize(v) : v);
      }
      if (fe.format == "json") {
        json arr = json::array();
        for (std::size_t i = 0; i < ids.size(); ++i) arr.push_back({{"doc_id", ids[i]}, {"values", vecs[i].values}});
        emit(fe, json{{"schema_id", schema.schema_id}, {"features", schema.feature_names()}, {"vectors", arr}}.dump() + "\n");
      } else {
        std::ostringstream ss;
        write_feature_csv(ss, ids, vecs);
        emit(fe, ss.str());
      }
    };
  });

  // style -------------------------------------------------------------------
  auto* style_cmd = app.add_subcommand("style", "Style models, validation, drift and PCA")->require_subcommand(1);
  Common sf, sv, sd, sp;
  std::string sf_in, sf_schema, sv_in, sd_in, sd_paraphraser, sd_metric = "style", sp_in;
  std::optional<double> sf_lambda, sv_lambda, sv_alpha, sv_fraction;
  int sp_k = 2;
  auto* sfit = style_cmd->add_subcommand("fit", "Fit one style model per author on T^0");
  add_common(sfit, sf);
  sfit->add_option("corpus", sf_in, "Training corpus JSONL")->required();
  sfit->add_option("--schema", sf_schema, "Schema JSON")->required();
  sfit->add_option("--lambda", sf_lambda, "Minimum covariance eigenvalue");
  sfit->callback([&] {
    action = [&] {
      const auto cfg = config_of(sf);
      std::ifstream in(sf_schema);
      const auto schema = schema_from_json(json::parse(in));
      std::map<std::string, std::vector<FeatureVector>> vecs;
      std::map<std::string, std::vector<std::string>> ids;
      for (const auto& d : load_corpus(sf_in)) {
        if (d.iteration != 0) continue;
        vecs[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
        ids[d.origin_author].push_back(d.id);
      }
      const double lambda = sf_lambda.value_or(cfg ? cfg->style_lambda : kDefaultShrinkageLambda);
      json arr = json::array();
      for (const auto& [a, v] : vecs) arr.push_back(to_json(fit_style_model(a, v, lambda, ids[a])));
      emit(sf, arr.dump() + "\n");
    };
  });
  auto* sval = style_cmd->add_subcommand("validate", "Split, fit style models and test author separation");
  add_common(sval, sv);
  sval->add_option("corpus", sv_in, "Corpus JSONL")->required();
  sval->add_option("--lambda", sv_lambda, "Minimum covariance eigenvalue");
  sval->add_option("--alpha", sv_alpha, "Significance level");
  sval->add_option("--fraction", sv_fraction, "Training share of source keys");
  sval->callback([&] {
    action = [&] {
      const auto cfg = config_of(sv);
      const auto parts = split(load_corpus(sv_in), split_of(sv, cfg, sv_fraction));
      std::vector<std::string> texts;
      for (const auto& d : parts.train) {
        if (d.iteration == 0) texts.push_back(d.text);
      }
      const auto schema = fit_schema(texts, features_of(cfg));
      std::map<std::string, std::vector<FeatureVector>> train_v, test_v;
      for (const auto& d : parts.train) {
        if (d.iteration == 0) train_v[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
      }
      for (const auto& d : parts.test) {
        if (d.iteration == 0) test_v[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
      }
      const double lambda = sv_lambda.value_or(cfg ? cfg->style_lambda : kDefaultShrinkageLambda);
      std::map<std::string, AuthorStyleModel> models;
      for (const auto& [a, v] : train_v) models.emplace(a, fit_style_model(a, v, lambda));
      const auto report = validate_style_models(models, test_v, sv_alpha.value_or(cfg ? cfg->alpha : 0.001));
      json j = report.to_json();
      j["lambda"] = lambda;
      if (sv.out.empty() || sv.format == "json") {
        emit(sv, j.dump(2) + "\n");
      } else {
        emit(sv, j.dump(2) + "\n");
      }
      std::cerr << (report.all_passed() ? "all author pairs separated\n" : "some author pairs not separated\n");
    };
  });
  auto* sdrift = style_cmd->add_subcommand("drift", "Mean cosine distance of T^n from T^0");
  add_common(sdrift, sd);
  sdrift->add_option("corpus", sd_in, "Corpus JSONL with chains")->required();
  sdrift->add_option("--paraphraser", sd_paraphraser, "Paraphraser label")->required();
  sdrift->add_option("--metric", sd_metric, "style or content")->check(CLI::IsMember({"style", "content"}));
  sdrift->callback([&] {
    action = [&] {
      const auto cfg = config_of(sd);
      const auto corpus = load_corpus(sd_in);
      const auto chains = extract_chains(corpus, sd_paraphraser);
      std::vector<std::string> texts;
      for (const auto& d : corpus) {
        if (d.iteration == 0) texts.push_back(d.text);
      }
      const auto schema = fit_schema(texts, features_of(cfg));
      EmbeddingProvider provider(cfg ? cfg->embedding : EmbeddingConfig{});
      const auto curve = parse_drift_metric(sd_metric) == DriftMetric::Style
                             ? drift_curve(chains, schema)
                             : drift_curve(chains, content_vectorizer(provider));
      if (sd.format == "json") {
        emit(sd, json{{"paraphraser", curve.paraphraser}, {"metric", sd_metric}, {"iterations", curve.iterations},
                      {"mean_distance", curve.values}, {"n", curve.n_per_iteration}}
                     .dump(2) + "\n");
      } else {
        std::ostringstream ss;
        write_drift_csv(ss, curve);
        emit(sd, ss.str());
      }
    };
  });
  auto* spca = style_cmd->add_subcommand("pca", "Project standardized style vectors on principal components");
  add_common(spca, sp);
  spca->add_option("corpus", sp_in, "Corpus JSONL")->required();
  spca->add_option("--k", sp_k, "Components")->check(CLI::PositiveNumber);
  spca->callback([&] {
    action = [&] {
      const auto cfg = config_of(sp);
      const auto corpus = load_corpus(sp_in);
      std::vector<std::string> texts;
      for (const auto& d : corpus) {
        if (d.iteration == 0) texts.push_back(d.text);
      }
      const auto schema = fit_schema(texts, features_of(cfg));
      std::vector<FeatureVector> vecs;
      for (const auto& d : corpus) vecs.push_back(schema.standardize(style_vector(d.text, schema)));
      const auto pca = pca_project(vecs, sp_k);
      std::string csv = "doc_id,author,iteration";
      for (int k = 1; k <= sp_k; ++k) csv += fmt::format(",pc{}", k);
      csv += '\n';
      std::size_t i = 0;
      for (const auto& d : corpus) {
        csv += fmt::format("{},{},{}", d.id, d.origin_author, d.iteration);
        for (int k = 0; k < sp_k; ++k) csv += fmt::format(",{:.6f}", pca.projections(static_cast<Eigen::Index>(i), k));
        csv += '\n';
        ++i;
      }
      if (sp.format == "json") {
        emit(sp, json{{"explained_variance_ratio", pca.explained_variance_ratio}}.dump(2) + "\n");
      } else {
        emit(sp, csv);
      }
    };
  });

  // train ---------------------------------------------------------------------
  Common tr;
  std::string tr_in, tr_kind;
  auto* train_cmd = app.add_subcommand("train", "Train an attribution classifier on T^0 documents");
  add_common(train_cmd, tr);
  train_cmd->add_option("corpus", tr_in, "Training corpus JSONL")->required();
  train_cmd->add_option("--kind", tr_kind, "style-linear or tfidf-linear");
  train_cmd->callback([&] {
    action = [&] {
      const auto cfg = config_of(tr);
      auto cc = classifier_of(cfg, tr_kind);
      cc.training.seed = seed_of(tr, cfg);
      const auto docs = originals_of(load_corpus(tr_in));
      std::vector<std::string> labels;
      for (const auto& d : docs) labels.push_back(d.origin_author);
      emit(tr, TextClassifier::fit(cc, docs, labels).to_json().dump() + "\n");
    };
  });

  // eval ----------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate attribution, detection or external predictions")->require_subcommand(1);
  Common ea, ed, ee;
  std::string ea_in, ea_policy = "traditional", ea_paraphraser, ea_kind;
  std::optional<double> ea_fraction, ed_fraction, ee_fraction;
  int ea_max = -1;
  auto* eattr = eval_cmd->add_subcommand("attribution", "Macro-F1 per paraphrase iteration");
  add_common(eattr, ea);
  eattr->add_option("corpus", ea_in, "Corpus JSONL with chains")->required();
  eattr->add_option("--policy", ea_policy, "traditional or alternative")
      ->check(CLI::IsMember({"traditional", "alternative"}));
  eattr->add_option("--paraphraser", ea_paraphraser, "Paraphraser label")->required();
  eattr->add_option("--kind", ea_kind, "style-linear or tfidf-linear");
  eattr->add_option("--fraction", ea_fraction, "Training share of source keys");
  eattr->add_option("--max-iteration", ea_max, "Last iteration to score");
  eattr->callback([&] {
    action = [&] {
      const auto cfg = config_of(ea);
      auto cc = classifier_of(cfg, ea_kind);
      cc.training.seed = seed_of(ea, cfg);
      const auto report = evaluate_attribution(load_corpus(ea_in), split_of(ea, cfg, ea_fraction),
                                               parse_policy(ea_policy), ea_paraphraser, cc, ea_max);
      emit_reports(ea, std::span(&report, 1));
    };
  });
  std::string ed_in, ed_scenario = "normal", ed_paraphraser, ed_llm, ed_human = "Human", ed_kind;
  auto* edet = eval_cmd->add_subcommand("detection", "Binary human/AI detection");
  add_common(edet, ed);
  edet->add_option("corpus", ed_in, "Corpus JSONL")->required();
  edet->add_option("--scenario", ed_scenario, "normal, traditional or alternative")
      ->check(CLI::IsMember({"normal", "traditional", "alternative"}));
  edet->add_option("--paraphraser", ed_paraphraser, "Paraphraser label");
  edet->add_option("--llm-author", ed_llm, "Author label of the LLM texts")->required();
  edet->add_option("--human-author", ed_human, "Author label of the human texts");
  edet->add_option("--kind", ed_kind, "style-linear or tfidf-linear");
  edet->add_option("--fraction", ed_fraction, "Training share of source keys");
  edet->callback([&] {
    action = [&] {
      const auto cfg = config_of(ed);
      auto cc = classifier_of(cfg, ed_kind);
      cc.training.seed = seed_of(ed, cfg);
      DetectionScenario s{parse_detection_kind(ed_scenario), ed_paraphraser, ed_llm, ed_human};
      const auto report = evaluate_detection(load_corpus(ed_in), split_of(ed, cfg, ed_fraction), s, cc);
      emit_reports(ed, std::span(&report, 1));
    };
  });
  std::string ee_in, ee_pred, ee_policy = "traditional";
  bool ee_all = false;
  auto* eext = eval_cmd->add_subcommand("external", "Score third-party predictions (doc_id,label CSV)");
  add_common(eext, ee);
  eext->add_option("corpus", ee_in, "Corpus JSONL")->required();
  eext->add_option("--predictions", ee_pred, "Predictions CSV")->required();
  eext->add_option("--policy", ee_policy, "Ground truth policy")->check(CLI::IsMember({"traditional", "alternative"}));
  eext->add_option("--fraction", ee_fraction, "Training share of source keys");
  eext->add_flag("--all", ee_all, "Score every document instead of the test split");
  eext->callback([&] {
    action = [&] {
      const auto cfg = config_of(ee);
      const auto corpus = load_corpus(ee_in);
      const auto labels = label(corpus, parse_policy(ee_policy));
      std::vector<LabeledDocument> golds;
      if (ee_all) {
        golds = labels;
      } else {
        const auto parts = split(corpus, split_of(ee, cfg, ee_fraction));
        for (const auto& l : labels) {
          if (parts.test.find(l.doc_id)) golds.push_back(l);
        }
      }
      const auto report = ingest_external_predictions(ee_pred, golds, &corpus);
      emit_reports(ee, std::span(&report, 1));
    };
  });

  // synth ---------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic authors")->require_subcommand(1);
  Common sg;
  std::size_t sg_authors = 3, sg_sources = 60, sg_words = 120;
  double sg_delta = 0.3;
  std::string sg_dataset = "synthetic", sg_profiles, sg_synonyms;
  auto* sgen = synth_cmd->add_subcommand("generate", "Generate a corpus of separated synthetic authors");
  add_common(sgen, sg);
  sgen->add_option("--authors", sg_authors, "Number of authors");
  sgen->add_option("--delta", sg_delta, "Function-word total-variation separation");
  sgen->add_option("--sources", sg_sources, "Source keys (one document per author each)");
  sgen->add_option("--words", sg_words, "Minimum words per document");
  sgen->add_option("--dataset", sg_dataset, "Dataset label");
  sgen->add_option("--profiles", sg_profiles, "Also write the profiles as JSON here");
  sgen->add_option("--synonyms", sg_synonyms, "Also write the topic synonym lexicon here");
  sgen->callback([&] {
    action = [&] {
      const auto profiles = separated_profiles(sg_authors, sg_delta, sg.seed.value_or(0));
      std::ostringstream ss;
      write_corpus(ss, generate_corpus(profiles, sg_sources, sg_words, sg_dataset));
      emit(sg, ss.str());
      if (!sg_profiles.empty()) {
        json arr = json::array();
        for (const auto& p : profiles) arr.push_back(to_json(p));
        write_to(sg_profiles, arr.dump(2) + "\n");
      }
      if (!sg_synonyms.empty()) {
        std::ostringstream syn;
        write_synonyms(syn, topic_synonyms(profiles.front()));
        write_to(sg_synonyms, syn.str());
      }
    };
  });

  // report / run ----------------------------------------------------------------
  std::string rp_dir;
  auto* report_cmd = app.add_subcommand("report", "Print the summary of a run directory");
  report_cmd->add_option("run_dir", rp_dir, "Run directory")->required();
  report_cmd->callback([&] { action = [&] { std::cout << summarize_run(rp_dir); }; });

  Common rn;
  std::size_t rn_jobs = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the whole experiment described by a config");
  add_common(run_cmd, rn);
  run_cmd->add_option("--jobs", rn_jobs, "Worker threads for chain building");
  run_cmd->callback([&] {
    action = [&] {
      if (rn.config.empty()) throw ConfigError("run needs --config");
      auto cfg = *config_of(rn);
      if (rn.seed) {
        cfg.seed = *rn.seed;
        cfg.split.seed = *rn.seed;
        cfg.classifier.training.seed = *rn.seed;
      }
      if (rn_jobs > 0) cfg.jobs = rn_jobs;
      const fs::path dir = rn.out.empty() ? default_run_dir(cfg) : fs::path(rn.out);
      run_pipeline(cfg, dir);
      std::cout << dir.string() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  setup_logging(verbose, quiet);
  try {
    if (action) action();
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
