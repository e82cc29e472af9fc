#include "theseus/stylemodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "theseus/contentsim.hpp"
#include "theseus/errors.hpp"

namespace theseus {

using nlohmann::json;

namespace {

constexpr std::array<double, 16> kShrinkageGrid = {0.0,   1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 0.01,
                                                   0.02,  0.05, 0.1,  0.2,  0.3,  0.5,  0.7,  1.0};

void factorize(AuthorStyleModel& model) {
  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success) throw FitError("covariance of " + model.author + " is not positive definite");
  model.cholesky_l = llt.matrixL();
}

}  // namespace

std::span<const double> shrinkage_grid() { return kShrinkageGrid; }

AuthorStyleModel fit_style_model(std::string author, std::span<const FeatureVector> vectors, double lambda,
                                 std::span<const std::string> doc_ids) {
  if (vectors.size() < 2) throw FitError("fit_style_model(" + author + "): need at least 2 vectors");
  if (!(lambda > 0.0)) throw FitError("fit_style_model: lambda must be positive");
  const std::size_t d = vectors.front().dimension();
  const std::string& schema_id = vectors.front().schema_id;
  const std::size_t n = vectors.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = vectors[i];
    if (v.dimension() != d || v.schema_id != schema_id) {
      throw DimensionError("fit_style_model: vectors do not share one schema");
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(v.values[j])) {
        const std::string who = i < doc_ids.size() ? doc_ids[i] : fmt::format("vector #{}", i);
        throw DataError(fmt::format("non-finite feature {} in {}", j, who));
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.values[j];
    }
  }

  AuthorStyleModel model;
  model.author = std::move(author);
  model.schema_id = schema_id;
  model.shrinkage_lambda = lambda;
  model.sample_count = n;
  model.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  Eigen::MatrixXd sample = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sample = 0.5 * (sample + sample.transpose());

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sample, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double target = std::max(sample.trace() / static_cast<double>(d), lambda);
  // Eigenvalues of (1-g)S + g*t*I are (1-g)e_i + g*t, so the grid search is analytic.
  double gamma = 1.0;
  for (double g : kShrinkageGrid) {
    if ((1.0 - g) * min_eig + g * target >= lambda) {
      gamma = g;
      break;
    }
  }
  model.shrinkage_gamma = gamma;
  model.covariance = (1.0 - gamma) * sample;
  model.covariance.diagonal().array() += gamma * target;
  factorize(model);
  return model;
}

double mahalanobis(const AuthorStyleModel& model, std::span<const double> x) {
  if (x.size() != model.dimension()) {
    throw DimensionError(fmt::format("mahalanobis: vector has {} values, model of {} expects {}", x.size(),
                                     model.author, model.dimension()));
  }
  Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - model.mean;
  model.cholesky_l.triangularView<Eigen::Lower>().solveInPlace(diff);
  return diff.norm();
}

double mahalanobis(const AuthorStyleModel& model, const FeatureVector& x) {
  if (!x.schema_id.empty() && !model.schema_id.empty() && x.schema_id != model.schema_id) {
    throw DimensionError("mahalanobis: schema " + x.schema_id + " does not match model schema " + model.schema_id);
  }
  return mahalanobis(model, std::span<const double>(x.values));
}

json to_json(const AuthorStyleModel& m) {
  const auto d = m.mean.size();
  std::vector<double> mean(m.mean.data(), m.mean.data() + d);
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) cov.push_back(m.covariance(r, c));
  }
  return json{{"version", 1},
              {"author", m.author},
              {"schema_id", m.schema_id},
              {"dimension", d},
              {"lambda", m.shrinkage_lambda},
              {"gamma", m.shrinkage_gamma},
              {"sample_count", m.sample_count},
              {"mean", mean},
              {"covariance", cov}};
}

AuthorStyleModel style_model_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw SchemaError("unsupported style model version");
    AuthorStyleModel m;
    m.author = j.at("author").get<std::string>();
    m.schema_id = j.at("schema_id").get<std::string>();
    m.shrinkage_lambda = j.at("lambda").get<double>();
    m.shrinkage_gamma = j.at("gamma").get<double>();
    m.sample_count = j.at("sample_count").get<std::size_t>();
    const auto d = j.at("dimension").get<Eigen::Index>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("covariance").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(mean.size()) != d || static_cast<Eigen::Index>(cov.size()) != d * d) {
      throw SchemaError("style model dimension mismatch");
    }
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
    m.covariance = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), d, d);
    factorize(m);
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed style model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

bool ValidationReport::all_passed() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const PairValidation& p) { return p.passed; });
}

json ValidationReport::to_json() const {
  json out;
  out["alpha"] = alpha;
  out["test"] = "one-sample Wilcoxon signed-rank on MD(x, train(B)) - MD(x, train(A)), alternative greater";
  out["all_passed"] = all_passed();
  out["pairs"] = json::array();
  for (const auto& p : pairs) {
    json t = theseus::to_json(p.test);
    out["pairs"].push_back({{"author", p.author},
                            {"other", p.other},
                            {"n", p.n},
                            {"median_difference", p.median_difference},
                            {"fraction_positive", p.fraction_positive},
                            {"p_value", p.test.p_value},
                            {"test", t},
                            {"passed", p.passed},
                            {"status", p.passed ? "separated" : "not separated"}});
  }
  return out;
}

ValidationReport validate_style_models(const std::map<std::string, AuthorStyleModel>& train_models,
                                       const std::map<std::string, std::vector<FeatureVector>>& test_vectors,
                                       double alpha) {
  if (train_models.size() < 2) throw PreconditionError("validate_style_models: need at least 2 authors");
  for (const auto& [author, _] : train_models) {
    if (!test_vectors.contains(author)) throw PreconditionError("validate_style_models: no test vectors for " + author);
  }
  for (const auto& [author, _] : test_vectors) {
    if (!train_models.contains(author)) throw PreconditionError("validate_style_models: no train model for " + author);
  }
  ValidationReport report;
  report.alpha = alpha;
  for (const auto& [a, model_a] : train_models) {
    const auto& xs = test_vectors.at(a);
    if (xs.empty()) throw ValidationError("validate_style_models: empty test set for " + a);
    std::vector<double> own;
    own.reserve(xs.size());
    for (const auto& x : xs) own.push_back(mahalanobis(model_a, x));
    for (const auto& [b, model_b] : train_models) {
      if (a == b) continue;
      std::vector<double> diffs;
      diffs.reserve(xs.size());
      std::size_t positive = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        diffs.push_back(mahalanobis(model_b, xs[i]) - own[i]);
        positive += diffs.back() > 0.0;
      }
      PairValidation pv;
      pv.author = a;
      pv.other = b;
      pv.n = diffs.size();
      pv.median_difference = median(diffs);
      pv.fraction_positive = static_cast<double>(positive) / static_cast<double>(diffs.size());
      try {
        pv.test = wilcoxon_signed_rank(diffs, Alternative::Greater);
      } catch (const DegenerateSampleError&) {
        pv.test = TestResult{0.0, 1.0, 0, TestMethod::Exact, Alternative::Greater};
      }
      pv.passed = pv.test.p_value < alpha;
      report.pairs.push_back(std::move(pv));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError(fmt::format("cosine_similarity: dimensions {} and {} differ", x.size(), y.size()));
  }
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 && yy == 0.0) throw UndefinedError("cosine_similarity: both vectors are zero");
  if (xx == 0.0 || yy == 0.0) return 0.0;
  return std::clamp(xy / (std::sqrt(xx) * std::sqrt(yy)), -1.0, 1.0);
}

double style_similarity(const FeatureVector& x, const FeatureVector& y) {
  if (x.schema_id != y.schema_id) throw DimensionError("style_similarity: vectors come from different schemas");
  return cosine_similarity(x.values, y.values);
}

double style_similarity(const FeatureSchema& schema, const FeatureVector& x, const FeatureVector& y) {
  return style_similarity(schema.standardize(x), schema.standardize(y));
}

Vectorizer style_vectorizer(const FeatureSchema& schema) {
  return [&schema](const Document& d) { return schema.standardize(style_vector(d.text, schema)).values; };
}

Vectorizer content_vectorizer(EmbeddingProvider& provider) {
  return [&provider](const Document& d) { return provider.embed(d.text); };
}

std::string to_string(DriftMetric m) { return m == DriftMetric::Style ? "style" : "content"; }

DriftMetric parse_drift_metric(std::string_view name) {
  if (name == "style") return DriftMetric::Style;
  if (name == "content") return DriftMetric::Content;
  throw ConfigError("unknown drift metric '" + std::string(name) + "'");
}

namespace {

int resolve_max_iteration(std::span<const ParaphraseChain> chains, int max_iteration) {
  if (chains.empty()) throw PreconditionError("drift_curve: no chains");
  int longest = 0;
  for (const auto& c : chains) longest = std::max(longest, c.length());
  const int target = max_iteration < 0 ? longest : max_iteration;
  std::vector<std::string> short_chains;
  for (const auto& c : chains) {
    if (c.length() < target) short_chains.push_back(c.chain_id);
  }
  if (!short_chains.empty()) {
    std::string msg = fmt::format("drift_curve: {} chain(s) stop before iteration {}:", short_chains.size(), target);
    for (const auto& id : short_chains) msg += " " + id;
    throw ValidationError(msg);
  }
  return target;
}

}  // namespace

DriftCurve drift_curve(std::span<const ParaphraseChain> chains, const Vectorizer& vectorize, int max_iteration) {
  const int target = resolve_max_iteration(chains, max_iteration);
  DriftCurve curve;
  curve.paraphraser = chains.front().paraphraser;
  std::vector<double> sums(static_cast<std::size_t>(target) + 1, 0.0);
  for (const auto& chain : chains) {
    const auto base = vectorize(chain.original());
    for (int n = 1; n <= target; ++n) {
      sums[static_cast<std::size_t>(n)] += 1.0 - cosine_similarity(vectorize(chain.documents[static_cast<std::size_t>(n)]), base);
    }
  }
  for (int n = 0; n <= target; ++n) {
    curve.iterations.push_back(n);
    curve.values.push_back(n == 0 ? 0.0 : sums[static_cast<std::size_t>(n)] / static_cast<double>(chains.size()));
    curve.n_per_iteration.push_back(chains.size());
  }
  return curve;
}

DriftCurve drift_curve(std::span<const ParaphraseChain> chains, const FeatureSchema& schema, int max_iteration) {
  return drift_curve(chains, style_vectorizer(schema), max_iteration);
}

std::map<std::string, DriftCurve> drift_by_author(std::span<const ParaphraseChain> chains,
                                                  const Vectorizer& vectorize, int max_iteration) {
  const int target = resolve_max_iteration(chains, max_iteration);
  std::map<std::string, std::vector<ParaphraseChain>> groups;
  for (const auto& c : chains) groups[c.original().origin_author].push_back(c);
  std::map<std::string, DriftCurve> out;
  for (const auto& [author, group] : groups) out.emplace(author, drift_curve(group, vectorize, target));
  return out;
}

void write_drift_csv(std::ostream& out, const DriftCurve& curve) {
  out << "iteration,mean_distance,n\n";
  for (std::size_t i = 0; i < curve.iterations.size(); ++i) {
    out << curve.iterations[i] << ',' << fmt::format("{:.10g}", curve.values[i]) << ',' << curve.n_per_iteration[i]
        << '\n';
  }
}

NearerFraction nearer_to_llm_fraction(std::span<const ParaphraseChain> chains,
                                      const std::map<std::string, Document>& g_texts, const Vectorizer& vectorize) {
  if (chains.empty()) throw PreconditionError("nearer_to_llm_fraction: no chains");
  std::vector<std::string> missing;
  for (const auto& c : chains) {
    if (!g_texts.contains(c.original().source_key)) missing.push_back(c.original().source_key);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "nearer_to_llm_fraction: no G text for source key(s):";
    for (const auto& k : missing) msg += " " + k;
    throw CoverageError(msg);
  }
  int longest = 0;
  for (const auto& c : chains) longest = std::max(longest, c.length());
  std::vector<std::size_t> nearer(static_cast<std::size_t>(longest) + 1, 0), total(nearer.size(), 0);
  std::map<std::string, std::vector<double>> g_vectors;
  for (const auto& chain : chains) {
    const auto& key = chain.original().source_key;
    auto git = g_vectors.find(key);
    if (git == g_vectors.end()) git = g_vectors.emplace(key, vectorize(g_texts.at(key))).first;
    const auto base = vectorize(chain.original());
    for (std::size_t n = 0; n < chain.documents.size(); ++n) {
      const auto v = n == 0 ? base : vectorize(chain.documents[n]);
      ++total[n];
      if (cosine_similarity(v, git->second) > cosine_similarity(v, base)) ++nearer[n];
    }
  }
  NearerFraction out;
  out.paraphraser = chains.front().paraphraser;
  for (std::size_t n = 0; n < total.size(); ++n) {
    out.iterations.push_back(static_cast<int>(n));
    out.fractions.push_back(total[n] ? static_cast<double>(nearer[n]) / static_cast<double>(total[n]) : 0.0);
    out.n_per_iteration.push_back(total[n]);
  }
  return out;
}

SimilarityPair similarity_pair(const Document& paraphrased, const Document& original, const Document& g_text,
                               const Vectorizer& style, const Vectorizer& content) {
  const auto sp = style(paraphrased);
  const auto cp = content(paraphrased);
  return {cosine_similarity(sp, style(original)), cosine_similarity(sp, style(g_text)),
          cosine_similarity(cp, content(original)), cosine_similarity(cp, content(g_text))};
}

}  // namespace theseus
