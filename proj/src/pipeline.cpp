#include "theseus/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "theseus/hashing.hpp"
#include "theseus/stats.hpp"
#include "theseus/stylemodel.hpp"

namespace theseus {

using nlohmann::json;
namespace fs = std::filesystem;

StageError::StageError(std::string stage, const std::string& what)
    : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

namespace {

const std::set<std::string> kTopLevelKeys = {"corpus",    "synthetic",   "min_words",  "split",   "features",
                                             "style",     "classifier",  "paraphrasers", "iterations", "policies",
                                             "detection", "embedding",   "llm_authors", "pca",     "jobs",
                                             "output_dir", "seed"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [k, _] : j.items()) {
    if (!allowed.contains(k)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, k));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

fs::path existing(const fs::path& base, const std::string& p, std::string_view what) {
  auto path = resolve(base, p);
  if (!fs::exists(path)) throw ConfigError(fmt::format("{} not found: {}", what, path.string()));
  return path;
}

std::vector<std::string> read_word_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read word list " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(to_lower(line));
  }
  return out;
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out.empty() ? "none" : out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double x) { return fmt::format("{:.6f}", x); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, kTopLevelKeys, "config");
  ExperimentConfig c;
  c.source = j;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("runs")));
    c.iterations = j.value("iterations", 3);
    if (c.iterations < 1) throw ConfigError("iterations must be >= 1");
    c.jobs = j.value("jobs", std::size_t{1});
    c.min_words = j.value("min_words", std::size_t{0});

    if (j.contains("corpus")) {
      const auto& cj = j["corpus"];
      std::vector<std::string> paths = cj.is_string() ? std::vector<std::string>{cj.get<std::string>()}
                                                      : cj.get<std::vector<std::string>>();
      for (const auto& p : paths) c.corpus_paths.push_back(existing(base_dir, p, "corpus file"));
    }
    std::vector<SyntheticAuthorProfile> profiles;
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      reject_unknown(s, {"authors", "delta", "sources", "words", "dataset", "seed"}, "synthetic");
      SyntheticCorpusConfig sc;
      sc.authors = s.value("authors", sc.authors);
      sc.delta = s.value("delta", sc.delta);
      sc.sources = s.value("sources", sc.sources);
      sc.words = s.value("words", sc.words);
      sc.dataset = s.value("dataset", sc.dataset);
      sc.seed = s.value("seed", c.seed);
      profiles = separated_profiles(sc.authors, sc.delta, sc.seed);
      c.synthetic = sc;
    }
    if (c.corpus_paths.empty() && !c.synthetic) throw ConfigError("config needs 'corpus' files or a 'synthetic' block");

    const json split = j.value("split", json::object());
    reject_unknown(split, {"train_fraction", "seed"}, "split");
    c.split.train_fraction = split.value("train_fraction", 0.5);
    c.split.seed = split.value("seed", c.seed);

    const json feat = j.value("features", json::object());
    reject_unknown(feat, {"bigram_k", "trigram_k", "lexicon", "function_words"}, "features");
    c.features.bigram_k = feat.value("bigram_k", c.features.bigram_k);
    c.features.trigram_k = feat.value("trigram_k", c.features.trigram_k);
    if (feat.contains("lexicon")) {
      c.lexicon_path = existing(base_dir, feat["lexicon"].get<std::string>(), "lexicon");
      c.features.lexicon = load_lexicon(*c.lexicon_path);
    }
    if (feat.contains("function_words")) {
      c.features.function_words = read_word_list(existing(base_dir, feat["function_words"].get<std::string>(), "function-word list"));
    }

    const json style = j.value("style", json::object());
    reject_unknown(style, {"lambda", "alpha"}, "style");
    c.style_lambda = style.value("lambda", c.style_lambda);
    c.alpha = style.value("alpha", c.alpha);
    if (!(c.style_lambda > 0.0)) throw ConfigError("style.lambda must be positive");

    const json cls = j.value("classifier", json::object());
    reject_unknown(cls, {"kind", "l2", "learning_rate", "epochs", "tfidf"}, "classifier");
    c.classifier.kind = parse_classifier_kind(cls.value("kind", std::string("style-linear")));
    c.classifier.training.l2 = cls.value("l2", c.classifier.training.l2);
    c.classifier.training.learning_rate = cls.value("learning_rate", c.classifier.training.learning_rate);
    c.classifier.training.epochs = cls.value("epochs", c.classifier.training.epochs);
    c.classifier.training.seed = c.seed;
    if (cls.contains("tfidf")) {
      const auto& t = cls["tfidf"];
      reject_unknown(t, {"n_min", "n_max", "min_df", "max_features"}, "classifier.tfidf");
      c.classifier.tfidf.n_min = t.value("n_min", c.classifier.tfidf.n_min);
      c.classifier.tfidf.n_max = t.value("n_max", c.classifier.tfidf.n_max);
      c.classifier.tfidf.min_df = t.value("min_df", c.classifier.tfidf.min_df);
      c.classifier.tfidf.max_features = t.value("max_features", c.classifier.tfidf.max_features);
    }
    c.classifier.features = c.features;

    for (json p : j.value("paraphrasers", json::array())) {
      if (p.contains("synthetic")) {
        auto& s = p["synthetic"];
        if (s.contains("style_target_author")) {
          const auto name = s["style_target_author"].get<std::string>();
          auto it = std::find_if(profiles.begin(), profiles.end(), [&](const auto& pr) { return pr.name == name; });
          if (it == profiles.end()) throw ConfigError("style_target_author '" + name + "' is not a synthetic author");
          s["style_target"] = to_json(*it);
          s.erase("style_target_author");
        }
        if (s.contains("synonyms") && s["synonyms"] == "@topics") {
          if (profiles.empty()) throw ConfigError("synonyms '@topics' needs a synthetic corpus");
          s["synonym_entries"] = topic_synonyms(profiles.front()).entries;
          s.erase("synonyms");
        } else if (s.contains("synonyms")) {
          s["synonyms"] = existing(base_dir, s["synonyms"].get<std::string>(), "synonym lexicon").string();
        }
        if (!s.contains("seed")) s["seed"] = c.seed;
      }
      auto spec = paraphraser_spec_from_json(p, base_dir);
      if (spec.llm && !spec.llm->cache_dir) spec.llm->cache_dir = c.output_dir / "cache" / "llm";
      c.paraphrasers.push_back(std::move(spec));
    }

    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j["policies"]) c.policies.push_back(parse_policy(p.get<std::string>()));
    }
    for (const auto& d : j.value("detection", json::array())) {
      reject_unknown(d, {"kind", "paraphraser", "llm_author", "human_author"}, "detection");
      DetectionScenario s;
      s.kind = parse_detection_kind(d.at("kind").get<std::string>());
      s.paraphraser = d.value("paraphraser", std::string());
      s.llm_author = d.at("llm_author").get<std::string>();
      s.human_author = d.value("human_author", s.human_author);
      c.detection.push_back(std::move(s));
    }

    const json emb = j.value("embedding", json::object());
    reject_unknown(emb, {"kind", "dimension", "n_min", "n_max", "model", "endpoint", "api_key_env", "cache_dir",
                         "requests_per_second", "max_tokens"},
                   "embedding");
    c.embedding.kind = parse_embedding_kind(emb.value("kind", std::string("local-hash")));
    c.embedding.dimension = emb.value("dimension", c.embedding.dimension);
    c.embedding.n_min = emb.value("n_min", c.embedding.n_min);
    c.embedding.n_max = emb.value("n_max", c.embedding.n_max);
    c.embedding.model_name = emb.value("model", c.embedding.model_name);
    c.embedding.endpoint = emb.value("endpoint", c.embedding.endpoint);
    c.embedding.api_key_env = emb.value("api_key_env", c.embedding.api_key_env);
    c.embedding.requests_per_second = emb.value("requests_per_second", c.embedding.requests_per_second);
    c.embedding.max_tokens = emb.value("max_tokens", c.embedding.max_tokens);
    if (emb.contains("cache_dir")) {
      c.embedding.cache_dir = resolve(base_dir, emb["cache_dir"].get<std::string>());
    } else if (c.embedding.kind == EmbeddingKind::ExternalAPI) {
      c.embedding.cache_dir = c.output_dir / "cache" / "embeddings";
    }

    c.llm_authors = j.value("llm_authors", std::map<std::string, std::string>{});
    const json pca = j.value("pca", json::object());
    reject_unknown(pca, {"components"}, "pca");
    c.pca_components = pca.value("components", 2);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j, fs::absolute(path).parent_path());
}

json resolved_config(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["corpus"] = json::array();
  for (const auto& p : c.corpus_paths) j["corpus"].push_back(p.string());
  if (c.synthetic) {
    j["synthetic"] = {{"authors", c.synthetic->authors}, {"delta", c.synthetic->delta},
                      {"sources", c.synthetic->sources}, {"words", c.synthetic->words},
                      {"dataset", c.synthetic->dataset}, {"seed", c.synthetic->seed}};
  }
  j["min_words"] = c.min_words;
  j["split"] = {{"train_fraction", c.split.train_fraction}, {"seed", c.split.seed}};
  j["features"] = {{"bigram_k", c.features.bigram_k}, {"trigram_k", c.features.trigram_k},
                   {"function_words", c.features.function_words.size()},
                   {"lexicon", c.lexicon_path ? c.lexicon_path->string() : std::string("<bundled demo>")}};
  j["style"] = {{"lambda", c.style_lambda}, {"alpha", c.alpha}};
  j["classifier"] = {{"kind", to_string(c.classifier.kind)},
                     {"l2", c.classifier.training.l2},
                     {"learning_rate", c.classifier.training.learning_rate},
                     {"epochs", c.classifier.training.epochs},
                     {"tfidf",
                      {{"n_min", c.classifier.tfidf.n_min}, {"n_max", c.classifier.tfidf.n_max},
                       {"min_df", c.classifier.tfidf.min_df}, {"max_features", c.classifier.tfidf.max_features}}}};
  j["paraphrasers"] = json::array();
  for (const auto& p : c.paraphrasers) {
    json pj = to_json(p);
    if (pj.contains("synthetic") && pj["synthetic"].contains("synonym_entries")) {
      pj["synthetic"]["synonym_entries"] = fmt::format("<{} entries>", p.synthetic->synonyms->entries.size());
    }
    j["paraphrasers"].push_back(std::move(pj));
  }
  j["iterations"] = c.iterations;
  j["policies"] = json::array();
  for (auto p : c.policies) j["policies"].push_back(to_string(p));
  j["detection"] = json::array();
  for (const auto& d : c.detection) {
    j["detection"].push_back({{"kind", to_string(d.kind)}, {"paraphraser", d.paraphraser},
                              {"llm_author", d.llm_author}, {"human_author", d.human_author}});
  }
  j["embedding"] = {{"kind", to_string(c.embedding.kind)}, {"dimension", c.embedding.dimension},
                    {"n_min", c.embedding.n_min}, {"n_max", c.embedding.n_max}, {"model", c.embedding.model_name}};
  j["llm_authors"] = c.llm_authors;
  j["pca"] = {{"components", c.pca_components}};
  j["jobs"] = c.jobs;
  j["output_dir"] = c.output_dir.string();
  return j;
}

LoadedCorpus load_experiment_corpus(const ExperimentConfig& c) {
  LoadedCorpus out;
  std::vector<Document> docs;
  for (const auto& p : c.corpus_paths) {
    const auto part = load_corpus(p);
    docs.insert(docs.end(), part.begin(), part.end());
  }
  if (c.synthetic) {
    out.profiles = separated_profiles(c.synthetic->authors, c.synthetic->delta, c.synthetic->seed);
    const auto gen = generate_corpus(out.profiles, c.synthetic->sources, c.synthetic->words, c.synthetic->dataset);
    docs.insert(docs.end(), gen.begin(), gen.end());
  }
  out.corpus = Corpus(std::move(docs));
  if (c.min_words > 0) out.corpus = filter_by_length(out.corpus, c.min_words);
  if (out.corpus.empty()) throw DataError("corpus is empty after filtering");
  return out;
}

fs::path default_run_dir(const ExperimentConfig& c) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  return c.output_dir / fmt::format("run-{}-{}", stamp, sha256_hex(resolved_config(c).dump()).substr(0, 8));
}

// ---------------------------------------------------------------------------
// Run

fs::path run_pipeline(const ExperimentConfig& cfg, const fs::path& run_dir) {
  std::string stage = "setup";
  std::vector<std::string> notes;
  std::vector<std::string> artifacts;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(run_dir / name, content);
    artifacts.push_back(name);
  };
  auto put_json = [&](const std::string& name, const json& j) { put(name, j.dump(2) + "\n"); };
  auto note = [&](std::string msg) {
    spdlog::info("{}", msg);
    notes.push_back(std::move(msg));
  };

  try {
    if (fs::exists(run_dir) && !fs::is_empty(run_dir)) throw IoError("run directory is not empty: " + run_dir.string());
    fs::create_directories(run_dir);

    stage = "corpus";
    auto loaded = load_experiment_corpus(cfg);
    Corpus corpus = std::move(loaded.corpus);
    const auto authors = corpus.authors();

    stage = "paraphrase";
    std::vector<ChainFailure> failures;
    std::vector<ProvenanceRecord> provenance;
    for (const auto& spec : cfg.paraphrasers) {
      const auto existing_names = corpus.paraphrasers();
      if (std::binary_search(existing_names.begin(), existing_names.end(), spec.name)) {
        note("paraphraser " + spec.name + ": corpus already holds its chains; not rebuilt");
        continue;
      }
      std::vector<Document> originals;
      for (const auto& d : corpus) {
        if (d.iteration == 0) originals.push_back(d);
      }
      Paraphraser paraphraser(spec);
      auto built = build_chains(originals, paraphraser, cfg.iterations, cfg.jobs);
      failures.insert(failures.end(), built.failures.begin(), built.failures.end());
      provenance.insert(provenance.end(), built.provenance.begin(), built.provenance.end());
      corpus = append_chains(corpus, built.chains);
    }
    put_json("failures.json", failures_to_json(failures));
    put_json("provenance.json", provenance_to_json(provenance));
    {
      std::ostringstream ss;
      write_corpus(ss, corpus);
      put("corpus.jsonl", ss.str());
    }
    const auto paraphrasers = corpus.paraphrasers();

    stage = "split";
    const auto parts = split(corpus, cfg.split);
    for (const auto& w : parts.warnings) note("split: " + w);
    put_json("split.json", {{"train_keys", parts.train_keys}, {"test_keys", parts.test_keys}, {"warnings", parts.warnings}});

    stage = "features";
    std::vector<std::string> train_texts;
    for (const auto& d : parts.train) {
      if (d.iteration == 0) train_texts.push_back(d.text);
    }
    const FeatureSchema schema = fit_schema(train_texts, cfg.features);
    put_json("schema.json", to_json(schema));

    stage = "style";
    std::map<std::string, std::vector<FeatureVector>> train_vecs, test_vecs;
    std::map<std::string, std::vector<std::string>> train_ids;
    for (const auto& d : parts.train) {
      if (d.iteration != 0) continue;
      train_vecs[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
      train_ids[d.origin_author].push_back(d.id);
    }
    for (const auto& d : parts.test) {
      if (d.iteration == 0) test_vecs[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
    }
    std::map<std::string, AuthorStyleModel> models;
    json models_json = json::array();
    for (const auto& [author, vecs] : train_vecs) {
      models.emplace(author, fit_style_model(author, vecs, cfg.style_lambda, train_ids[author]));
      models_json.push_back(to_json(models.at(author)));
    }
    put_json("style_models.json", models_json);
    json validation = validate_style_models(models, test_vecs, cfg.alpha).to_json();
    validation["lambda"] = cfg.style_lambda;
    put_json("validation.json", validation);

    stage = "classify";
    AttributionHarness harness(corpus, cfg.split, cfg.classifier);
    std::vector<EvaluationReport> reports;
    if (paraphrasers.empty()) reports.push_back(harness.evaluate(GroundTruthPolicy::Traditional, ""));
    for (const auto& p : paraphrasers) {
      for (auto policy : cfg.policies) {
        if (policy == GroundTruthPolicy::Alternative && !std::binary_search(authors.begin(), authors.end(), p)) {
          note("alternative policy skipped for " + p + ": not a candidate author");
          continue;
        }
        reports.push_back(harness.evaluate(policy, p));
      }
    }
    for (auto& r : reports) r.notes.push_back("classifier: logistic regression stands in for gradient-boosted trees");
    json reports_json = json::array();
    for (const auto& r : reports) {
      reports_json.push_back(r.to_json());
      for (const auto& s : r.scores) {
        std::ostringstream ss;
        write_confusion_csv(ss, s.confusion);
        put(fmt::format("confusion_{}_{}_{}.csv", safe_name(r.setting), safe_name(r.paraphraser), s.iteration), ss.str());
      }
    }
    put_json("reports.json", reports_json);
    {
      std::ostringstream ss;
      write_f1_csv(ss, reports);
      put("f1_table.csv", ss.str());
    }

    stage = "statistics";
    json stats = json::object();
    stats["policy_tests"] = json::array();
    for (const auto& p : paraphrasers) {
      const EvaluationReport* trad = nullptr;
      const EvaluationReport* alt = nullptr;
      for (const auto& r : reports) {
        if (r.paraphraser != p) continue;
        (r.setting == "traditional" ? trad : alt) = &r;
      }
      if (!trad || !alt) continue;
      std::vector<double> t, a;
      for (std::size_t i = 1; i < trad->scores.size() && i < alt->scores.size(); ++i) {
        for (const auto& [ds, f] : trad->scores[i].f1_by_dataset) {
          t.push_back(f);
          a.push_back(alt->scores[i].f1_by_dataset.at(ds));
        }
      }
      json entry{{"paraphraser", p}, {"pairs", t.size()}, {"pairing", "(dataset, iteration >= 1)"}};
      try {
        entry["test"] = to_json(paired_policy_test(t, a));
      } catch (const Error& e) {
        entry["test"] = nullptr;
        entry["note"] = e.what();
      }
      stats["policy_tests"].push_back(std::move(entry));
    }

    stage = "drift";
    EmbeddingProvider provider(cfg.embedding);
    const Vectorizer style_vec = style_vectorizer(schema);
    const Vectorizer content_vec = content_vectorizer(provider);
    std::string drift_csv = "paraphraser,metric,iteration,mean_distance,n\n";
    std::string by_author_csv = "paraphraser,metric,author,iteration,mean_distance,n\n";
    std::map<std::string, DriftCurve> style_curves;
    stats["content_correlation"] = json::array();
    for (const auto& p : paraphrasers) {
      auto chains = extract_chains(corpus, p);
      if (chains.empty()) continue;
      int common = chains.front().length();
      for (const auto& ch : chains) common = std::min(common, ch.length());
      if (common < 1) {
        note("drift skipped for " + p + ": some chain has no paraphrase");
        continue;
      }
      for (auto metric : {DriftMetric::Style, DriftMetric::Content}) {
        const Vectorizer& vec = metric == DriftMetric::Style ? style_vec : content_vec;
        const auto curve = drift_curve(chains, vec, common);
        if (metric == DriftMetric::Style) style_curves.emplace(p, curve);
        for (std::size_t i = 0; i < curve.iterations.size(); ++i) {
          drift_csv += fmt::format("{},{},{},{},{}\n", p, to_string(metric), curve.iterations[i], num(curve.values[i]),
                                   curve.n_per_iteration[i]);
        }
        for (const auto& [author, c] : drift_by_author(chains, vec, common)) {
          for (std::size_t i = 0; i < c.iterations.size(); ++i) {
            by_author_csv += fmt::format("{},{},{},{},{},{}\n", p, to_string(metric), author, c.iterations[i],
                                         num(c.values[i]), c.n_per_iteration[i]);
          }
        }
      }
      json cc{{"paraphraser", p}};
      try {
        const auto r = content_metric_correlation(chains, provider);
        cc["pearson_r_embed_vs_bleu"] = r.pearson_r;
        cc["p_value"] = r.p_value;
        cc["pairs"] = r.pairs;
      } catch (const Error& e) {
        cc["note"] = e.what();
      }
      stats["content_correlation"].push_back(std::move(cc));
    }
    put("drift.csv", drift_csv);
    put("drift_by_author.csv", by_author_csv);

    stats["f1_style_correlation"] = json::array();
    for (const auto& r : reports) {
      if (r.setting != "traditional" || !style_curves.contains(r.paraphraser)) continue;
      const auto& curve = style_curves.at(r.paraphraser);
      std::vector<double> f1, sim;
      for (std::size_t i = 0; i < r.scores.size() && i < curve.values.size(); ++i) {
        f1.push_back(r.scores[i].f1);
        sim.push_back(1.0 - curve.values[i]);
      }
      json e{{"paraphraser", r.paraphraser}, {"points", f1.size()}};
      try {
        const auto t = pearson(f1, sim);
        e["r"] = t.statistic;
        e["p_value"] = t.p_value;
      } catch (const Error& ex) {
        e["note"] = ex.what();
      }
      stats["f1_style_correlation"].push_back(std::move(e));
    }

    stage = "nearer";
    std::string nearer_csv = "paraphraser,metric,iteration,fraction,n\n";
    for (const auto& [p, llm_author] : cfg.llm_authors) {
      if (!std::binary_search(paraphrasers.begin(), paraphrasers.end(), p)) {
        throw ConfigError("llm_authors names unknown paraphraser '" + p + "'");
      }
      std::map<std::string, Document> g;
      for (const auto& d : corpus) {
        if (d.iteration == 0 && d.origin_author == llm_author) g.emplace(d.source_key, d);
      }
      if (g.empty()) throw ConfigError("llm_authors: author '" + llm_author + "' has no originals");
      std::vector<ParaphraseChain> chains;
      for (auto& ch : extract_chains(corpus, p)) {
        if (ch.original().origin_author != llm_author) chains.push_back(std::move(ch));
      }
      for (auto metric : {DriftMetric::Style, DriftMetric::Content}) {
        const auto nf = nearer_to_llm_fraction(chains, g, metric == DriftMetric::Style ? style_vec : content_vec);
        for (std::size_t i = 0; i < nf.iterations.size(); ++i) {
          nearer_csv += fmt::format("{},{},{},{},{}\n", p, to_string(metric), nf.iterations[i], num(nf.fractions[i]),
                                    nf.n_per_iteration[i]);
        }
      }
    }
    put("nearer.csv", nearer_csv);

    stage = "pca";
    {
      std::vector<FeatureVector> vecs;
      std::vector<const Document*> docs;
      for (const auto& d : parts.test) {
        vecs.push_back(schema.standardize(style_vector(d.text, schema)));
        docs.push_back(&d);
      }
      std::string csv = "doc_id,author,iteration";
      for (int k = 1; k <= cfg.pca_components; ++k) csv += fmt::format(",pc{}", k);
      csv += '\n';
      try {
        const auto pca = pca_project(vecs, cfg.pca_components);
        for (std::size_t i = 0; i < docs.size(); ++i) {
          csv += fmt::format("{},{},{}", docs[i]->id, docs[i]->origin_author, docs[i]->iteration);
          for (int k = 0; k < cfg.pca_components; ++k) csv += "," + num(pca.projections(static_cast<Eigen::Index>(i), k));
          csv += '\n';
        }
        stats["pca_explained_variance_ratio"] = pca.explained_variance_ratio;
      } catch (const Error& e) {
        note(std::string("pca: ") + e.what());
      }
      put("pca.csv", csv);
    }

    stage = "detection";
    if (!cfg.detection.empty()) {
      json det = json::array();
      std::string csv = "scenario,paraphraser,f1,n\n";
      for (const auto& s : cfg.detection) {
        const auto r = evaluate_detection(corpus, cfg.split, s, cfg.classifier);
        det.push_back(r.to_json());
        csv += fmt::format("{},{},{},{}\n", r.setting, r.paraphraser, num(r.scores.front().f1), r.scores.front().n);
      }
      put_json("detection.json", det);
      put("detection.csv", csv);
    }
    stats["notes"] = notes;
    put_json("stats.json", stats);

    stage = "report";
    json manifest;
    manifest["tool"] = "theseus";
    manifest["version"] = kToolVersion;
    const json resolved = resolved_config(cfg);
    manifest["config_sha256"] = sha256_hex(resolved.dump());
    manifest["config"] = resolved;
    manifest["config_as_read"] = cfg.source;
    manifest["corpus_sha256"] = sha256_hex(read_file(run_dir / "corpus.jsonl"));
    manifest["inputs"] = json::array();
    for (const auto& p : cfg.corpus_paths) manifest["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    if (cfg.lexicon_path) {
      manifest["inputs"].push_back({{"path", cfg.lexicon_path->string()}, {"sha256", sha256_file(*cfg.lexicon_path)}});
    }
    json caches = json::array();
    auto cache_state = [&](const fs::path& dir) {
      std::size_t n = 0;
      if (fs::exists(dir)) {
        for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
      }
      caches.push_back({{"dir", dir.string()}, {"records", n}});
    };
    for (const auto& p : cfg.paraphrasers) {
      if (p.llm && p.llm->cache_dir) cache_state(*p.llm->cache_dir);
    }
    if (cfg.embedding.cache_dir) cache_state(*cfg.embedding.cache_dir);
    manifest["caches"] = caches;
    manifest["artifacts"] = json::array();
    for (const auto& a : artifacts) manifest["artifacts"].push_back({{"name", a}, {"sha256", sha256_file(run_dir / a)}});
    manifest["status"] = "complete";
    write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
    write_file(run_dir / "summary.txt", summarize_run(run_dir));
  } catch (const std::exception& e) {
    spdlog::error("stage {} failed: {}", stage, e.what());
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (!ec) write_file(run_dir / "FAILED", fmt::format("stage: {}\nerror: {}\n", stage, e.what()));
    throw StageError(stage, e.what());
  }
  return run_dir;
}

std::string summarize_run(const fs::path& run_dir) {
  if (!fs::exists(run_dir / "reports.json")) throw IoError("no finished run in " + run_dir.string());
  const json reports = json::parse(read_file(run_dir / "reports.json"));
  std::string out = "Authorship under repeated paraphrasing\n\n";
  out += fmt::format("{:<14} {:<12} {:>4} {:>8} {:>8} {:>9}\n", "paraphraser", "policy", "T^n", "F1", "pooled", "drop%");
  for (const auto& r : reports) {
    for (const auto& s : r.at("scores")) {
      out += fmt::format("{:<14} {:<12} {:>4} {:>8.3f} {:>8.3f} {:>9}\n", r.at("paraphraser").get<std::string>(),
                         r.at("setting").get<std::string>(), s.at("iteration").get<int>(), s.at("f1").get<double>(),
                         s.at("pooled_f1").get<double>(),
                         s.at("drop").is_null() ? std::string("-") : fmt::format("{:.1f}", s.at("drop").get<double>() * 100.0));
    }
  }
  if (fs::exists(run_dir / "validation.json")) {
    const json v = json::parse(read_file(run_dir / "validation.json"));
    std::size_t passed = 0;
    for (const auto& p : v.at("pairs")) passed += p.at("passed").get<bool>();
    out += fmt::format("\nStyle-model validation (alpha {}): {}/{} author pairs separated\n", v.at("alpha").get<double>(),
                       passed, v.at("pairs").size());
  }
  if (fs::exists(run_dir / "stats.json")) {
    const json s = json::parse(read_file(run_dir / "stats.json"));
    for (const auto& t : s.value("policy_tests", json::array())) {
      if (t.at("test").is_null()) {
        out += fmt::format("Policy test {}: {}\n", t.at("paraphraser").get<std::string>(), t.value("note", std::string()));
      } else {
        out += fmt::format("Policy test {}: alternative > traditional, Wilcoxon p = {:.4g} over {} pairs\n",
                           t.at("paraphraser").get<std::string>(), t.at("test").at("p_value").get<double>(),
                           t.at("pairs").get<std::size_t>());
      }
    }
    for (const auto& n : s.value("notes", json::array())) out += "note: " + n.get<std::string>() + "\n";
  }
  return out;
}

}  // namespace theseus
