#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "theseus/contentsim.hpp"
#include "theseus/errors.hpp"
#include "theseus/features.hpp"
#include "theseus/stylemodel.hpp"
#include "theseus/synthgen.hpp"

using namespace theseus;

namespace {

std::vector<FeatureVector> gaussian(std::size_t n, std::vector<double> mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<FeatureVector> out(n);
  for (auto& v : out) {
    for (double m : mean) v.values.push_back(m + g(rng));
  }
  return out;
}

std::vector<FeatureVector> with_means(const std::vector<FeatureVector>& vs, double shift) {
  auto out = vs;
  for (auto& v : out) v.values[0] += shift;
  return out;
}

}  // namespace

TEST(StyleModel, IdenticalVectorsGivePureLoading) {
  const std::vector<FeatureVector> v(2, FeatureVector{"s", {1.0, 2.0, 3.0}});
  const auto m = fit_style_model("A", v, 0.5);
  EXPECT_TRUE(m.covariance.isApprox(0.5 * Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST(StyleModel, MonteCarloMean) {
  const auto v = gaussian(500, {0, 0, 0}, 1.0, 11);
  const auto m = fit_style_model("A", v);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m.mean(i), 0.0, 0.1);
  EXPECT_EQ(m.sample_count, 500u);
}

TEST(StyleModel, RefitAndJsonRoundTrip) {
  const auto v = gaussian(20, {1, -1}, 0.3, 4);
  const auto a = fit_style_model("A", v), b = fit_style_model("A", v);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  const auto back = style_model_from_json(to_json(a));
  EXPECT_EQ(back.mean, a.mean);
  EXPECT_EQ(back.covariance, a.covariance);
  const std::vector<double> x = {0.3, 0.1};
  EXPECT_DOUBLE_EQ(mahalanobis(back, x), mahalanobis(a, x));
}

TEST(StyleModel, Errors) {
  const std::vector<FeatureVector> one(1, FeatureVector{"s", {1.0}});
  EXPECT_THROW(fit_style_model("A", one), FitError);
  const auto two = gaussian(2, {0, 0}, 1.0, 1);
  EXPECT_THROW(fit_style_model("A", two, 0.0), FitError);
  auto bad = gaussian(3, {0, 0}, 1.0, 1);
  bad[1].values[0] = std::nan("");
  const std::vector<std::string> ids = {"d0", "d1", "d2"};
  try {
    fit_style_model("A", bad, 1e-3, ids);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("d1"), std::string::npos);
  }
  const auto m = fit_style_model("A", two);
  EXPECT_THROW(mahalanobis(m, std::vector<double>{1.0}), DimensionError);
}

TEST(StyleModel, MinimumEigenvalueAndShrinkageMonotone) {
  // d > n: the raw sample covariance is singular.
  const auto v = gaussian(5, std::vector<double>(12, 0.0), 1.0, 7);
  double previous = 0.0;
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const auto m = fit_style_model("A", v, lambda);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.covariance);
    const double min_eig = es.eigenvalues().minCoeff();
    EXPECT_GE(min_eig, lambda * (1 - 1e-9));
    EXPECT_GE(min_eig, previous);
    EXPECT_TRUE(m.covariance.isApprox(m.covariance.transpose()));
    previous = min_eig;
  }
}

TEST(Mahalanobis, ZeroAtMeanAndEuclideanUnderIdentity) {
  const std::vector<FeatureVector> v(2, FeatureVector{"s", {0.0, 0.0}});
  const auto m = fit_style_model("A", v, 1.0);
  EXPECT_DOUBLE_EQ(mahalanobis(m, std::vector<double>{3.0, 4.0}), 5.0);
  EXPECT_EQ(mahalanobis(m, std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(Mahalanobis, ClosedFormTwoByTwo) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const auto v = gaussian(10, {g(rng), g(rng)}, 1.0 + t % 3, 300 + t);
    const auto m = fit_style_model("A", v, 1e-9);
    const Eigen::Matrix2d s = m.covariance;
    const Eigen::Vector2d x(g(rng), g(rng));
    const Eigen::Vector2d d = x - m.mean;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    Eigen::Matrix2d inv;
    inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    inv /= det;
    EXPECT_NEAR(mahalanobis(m, std::vector<double>{x(0), x(1)}), std::sqrt(d.dot(inv * d)), 1e-9);
    EXPECT_GT(mahalanobis(m, std::vector<double>{x(0), x(1)}), 0.0);
  }
}

TEST(Validation, FarApartAuthorsSeparate) {
  const auto a_train = gaussian(100, {0, 0, 0}, 1.0, 1), a_test = gaussian(100, {0, 0, 0}, 1.0, 2);
  const auto b_train = with_means(gaussian(100, {0, 0, 0}, 1.0, 3), 6.0);
  const auto b_test = with_means(gaussian(100, {0, 0, 0}, 1.0, 4), 6.0);
  std::map<std::string, AuthorStyleModel> models{{"A", fit_style_model("A", a_train)},
                                                 {"B", fit_style_model("B", b_train)}};
  const auto report = validate_style_models(models, {{"A", a_test}, {"B", b_test}}, 0.001);
  ASSERT_EQ(report.pairs.size(), 2u);
  EXPECT_TRUE(report.all_passed());
  for (const auto& p : report.pairs) {
    EXPECT_LT(p.test.p_value, 0.001);
    EXPECT_EQ(p.test.alternative, Alternative::Greater);
  }
  EXPECT_EQ(report.to_json().at("pairs").size(), 2u);
}

TEST(Validation, IdenticalGeneratorsNotSeparated) {
  int separated = 0;
  double p_sum = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::map<std::string, AuthorStyleModel> models{{"A", fit_style_model("A", gaussian(100, {0, 0}, 1, 10 * s + 1))},
                                                   {"B", fit_style_model("B", gaussian(100, {0, 0}, 1, 10 * s + 2))}};
    const auto r = validate_style_models(
        models, {{"A", gaussian(100, {0, 0}, 1, 10 * s + 3)}, {"B", gaussian(100, {0, 0}, 1, 10 * s + 4)}});
    separated += r.all_passed();
    for (const auto& p : r.pairs) p_sum += p.test.p_value;
  }
  EXPECT_EQ(separated, 0);
  EXPECT_GT(p_sum / 40.0, 0.05);
}

TEST(Validation, Preconditions) {
  const auto v = gaussian(10, {0}, 1, 1);
  std::map<std::string, AuthorStyleModel> one{{"A", fit_style_model("A", v)}};
  EXPECT_THROW(validate_style_models(one, {{"A", v}}), PreconditionError);
  std::map<std::string, AuthorStyleModel> two{{"A", fit_style_model("A", v)}, {"B", fit_style_model("B", v)}};
  EXPECT_THROW(validate_style_models(two, {{"A", v}, {"B", {}}}), ValidationError);
}

TEST(Validation, SyntheticAuthorsWithWideSeparation) {
  const auto profiles = separated_profiles(3, 0.6, 5);
  const auto corpus = generate_corpus(profiles, 200, 120);
  std::vector<std::string> texts;
  for (const auto& d : corpus) {
    if (std::stoi(d.source_key.substr(1)) < 100) texts.push_back(d.text);
  }
  const auto schema = fit_schema(texts, FeatureConfig{});
  std::map<std::string, std::vector<FeatureVector>> train, test;
  for (const auto& d : corpus) {
    (std::stoi(d.source_key.substr(1)) < 100 ? train : test)[d.origin_author].push_back(
        schema.standardize(style_vector(d.text, schema)));
  }
  std::map<std::string, AuthorStyleModel> models;
  for (const auto& [a, v] : train) models.emplace(a, fit_style_model(a, v));
  EXPECT_TRUE(validate_style_models(models, test).all_passed());
}

TEST(Cosine, BasicCases) {
  const std::vector<double> x = {1, 2, 3}, nx = {-1, -2, -3}, o1 = {1, 0}, o2 = {0, 1}, z = {0, 0, 0};
  EXPECT_NEAR(cosine_similarity(x, x), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(x, nx), -1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(o1, o2), 0.0);
  EXPECT_EQ(cosine_similarity(x, z), 0.0);
  EXPECT_THROW(cosine_similarity(z, z), UndefinedError);
  EXPECT_THROW(cosine_similarity(x, o1), DimensionError);
}

TEST(Drift, IdentityChainsAreZero) {
  const auto profiles = separated_profiles(2, 0.4, 1);
  const auto corpus = theseus::testing::chained(generate_corpus(profiles, 6, 60), theseus::testing::identity_spec(), 3);
  std::vector<std::string> texts;
  for (const auto& d : corpus) texts.push_back(d.text);
  const auto schema = fit_schema(texts, FeatureConfig{});
  const auto curve = drift_curve(extract_chains(corpus, "ident"), schema);
  ASSERT_EQ(curve.iterations, (std::vector<int>{0, 1, 2, 3}));
  for (double v : curve.values) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_EQ(curve.values[0], 0.0);
  EXPECT_EQ(curve.n_per_iteration[2], 12u);
}

TEST(Drift, SubstitutionIncreasesDistance) {
  int increasing = 0;
  for (int s = 0; s < 20; ++s) {
    const auto profiles = separated_profiles(2, 0.3, 40 + s);
    const auto base = generate_corpus(profiles, 8, 80);
    const auto corpus = theseus::testing::chained(
        base, theseus::testing::pulling_spec(profiles, "author1", 0.5, 0.5, 40 + s, "p"), 3);
    std::vector<std::string> texts;
    for (const auto& d : base) texts.push_back(d.text);
    const auto c = drift_curve(extract_chains(corpus, "p"), fit_schema(texts, FeatureConfig{}));
    increasing += c.values[1] < c.values[2] && c.values[2] < c.values[3];
  }
  EXPECT_EQ(increasing, 20);
}

TEST(Drift, Errors) {
  EXPECT_THROW(drift_curve(std::vector<ParaphraseChain>{}, FeatureSchema{}), PreconditionError);
  const auto profiles = separated_profiles(2, 0.4, 1);
  auto corpus = theseus::testing::chained(generate_corpus(profiles, 2, 40), theseus::testing::identity_spec(), 2);
  auto chains = extract_chains(corpus, "ident");
  chains[0].documents.pop_back();
  std::vector<std::string> texts;
  for (const auto& d : corpus) texts.push_back(d.text);
  try {
    drift_curve(chains, fit_schema(texts, FeatureConfig{}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(chains[0].chain_id), std::string::npos);
  }
}

TEST(Nearer, FixedPointsAndCoverage) {
  const auto profiles = separated_profiles(2, 0.4, 3);
  const auto base = generate_corpus(profiles, 4, 60);
  const auto corpus = theseus::testing::chained(base, theseus::testing::identity_spec(), 1);
  std::map<std::string, Document> g;
  for (const auto& d : base) {
    if (d.origin_author == "author1") g.emplace(d.source_key, d);
  }
  std::vector<ParaphraseChain> human;
  for (auto& c : extract_chains(corpus, "ident")) {
    if (c.original().origin_author == "author0") human.push_back(c);
  }
  std::vector<std::string> texts;
  for (const auto& d : base) texts.push_back(d.text);
  const auto schema = fit_schema(texts, FeatureConfig{});
  const auto nf = nearer_to_llm_fraction(human, g, style_vectorizer(schema));
  EXPECT_EQ(nf.fractions[1], 0.0);

  // A chain whose T1 is literally G.
  const auto& t0 = human[0].original();
  const Document t1 = make_paraphrase(t0, "ident", g.at(t0.source_key).text);
  ParaphraseChain lit{t0.id, "ident", {t0, t1}};
  EXPECT_EQ(nearer_to_llm_fraction(std::vector<ParaphraseChain>{lit}, g, style_vectorizer(schema)).fractions[1], 1.0);

  g.erase(t0.source_key);
  EXPECT_THROW(nearer_to_llm_fraction(human, g, style_vectorizer(schema)), CoverageError);
}

TEST(Nearer, StylePullGrowsWithIterations) {
  const auto profiles = separated_profiles(3, 0.4, 9);
  const auto base = generate_corpus(profiles, 30, 100);
  const auto corpus =
      theseus::testing::chained(base, theseus::testing::pulling_spec(profiles, "author2", 0.6, 0.8, 9), 3);
  std::map<std::string, Document> g;
  std::vector<std::string> texts;
  for (const auto& d : base) {
    texts.push_back(d.text);
    if (d.origin_author == "author2") g.emplace(d.source_key, d);
  }
  std::vector<ParaphraseChain> chains;
  for (auto& c : extract_chains(corpus, "author2")) {
    if (c.original().origin_author != "author2") chains.push_back(c);
  }
  const auto nf = nearer_to_llm_fraction(chains, g, style_vectorizer(fit_schema(texts, FeatureConfig{})));
  EXPECT_GE(nf.fractions[3], nf.fractions[1]);
  EXPECT_GT(nf.fractions[3], 0.5);
}

TEST(SimilarityPair, Ranges) {
  const auto profiles = separated_profiles(2, 0.4, 2);
  const auto base = generate_corpus(profiles, 2, 60);
  std::vector<std::string> texts;
  for (const auto& d : base) texts.push_back(d.text);
  const auto schema = fit_schema(texts, FeatureConfig{});
  EmbeddingProvider provider;
  const auto& docs = base.documents();
  const auto sp = similarity_pair(docs[1], docs[0], docs[2], style_vectorizer(schema), content_vectorizer(provider));
  for (double v : {sp.s_origin, sp.s_llm, sp.c_origin, sp.c_llm}) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Pca, RankOneLine) {
  Eigen::MatrixXd m(6, 2);
  for (int i = 0; i < 6; ++i) m.row(i) << i, 2.0 * i + 1.0;
  const auto r = pca_project(m, 1);
  EXPECT_NEAR(r.explained_variance_ratio[0], 1.0, 1e-9);
  EXPECT_THROW(pca_project(m, 2), FitError);
}

TEST(Pca, IsotropicRatios) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  const int d = 5;
  Eigen::MatrixXd m(4000, d);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  const auto r = pca_project(m, 2);
  for (double v : r.explained_variance_ratio) EXPECT_NEAR(v, 1.0 / d, 0.05);
}

TEST(Pca, DeterministicSignAndReconstruction) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(40, 4);
  for (int i = 0; i < m.rows(); ++i) {
    const double z = g(rng);
    m.row(i) << z + 0.1 * g(rng), 2 * z + 0.5 * g(rng), g(rng), -z + g(rng);
  }
  const auto a = pca_project(m, 4), b = pca_project(m, 4);
  EXPECT_EQ(a.projections, b.projections);
  for (int k = 0; k < 4; ++k) {
    Eigen::Index j;
    a.components.row(k).cwiseAbs().maxCoeff(&j);
    EXPECT_GT(a.components(k, j), 0.0);
  }
  const Eigen::MatrixXd prepared = pca_prepared(m, a);
  EXPECT_LT((a.projections * a.components - prepared).norm(), 1e-6);
  EXPECT_THROW(pca_project(m, 0), PreconditionError);
  EXPECT_THROW(pca_project(m.topRows(2), 3), PreconditionError);
}
