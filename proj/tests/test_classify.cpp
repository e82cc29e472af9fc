#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "theseus/classify.hpp"
#include "theseus/errors.hpp"
#include "theseus/synthgen.hpp"

using namespace theseus;

namespace {

SparseVector row(std::initializer_list<double> v) { return SparseVector::from_dense(std::vector<double>(v)); }

struct Blobs {
  std::vector<SparseVector> rows;
  std::vector<std::string> labels;
};

Blobs blobs(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  Blobs b;
  for (std::size_t i = 0; i < per_class; ++i) {
    b.rows.push_back(row({-2 + g(rng), g(rng)}));
    b.labels.push_back("neg");
    b.rows.push_back(row({2 + g(rng), g(rng)}));
    b.labels.push_back("pos");
  }
  return b;
}

ClassifierConfig style_config() {
  ClassifierConfig c;
  c.kind = ClassifierKind::StyleLinear;
  return c;
}

}  // namespace

TEST(Train, SeparableTwoClasses) {
  const auto b = blobs(50, 1);
  const auto m = train(ClassifierKind::StyleLinear, b.rows, b.labels);
  EXPECT_EQ(m.classes, (std::vector<std::string>{"neg", "pos"}));
  EXPECT_EQ(predict(m, b.rows), b.labels);
}

TEST(Train, SingleClassFails) {
  const std::vector<SparseVector> rows = {row({1, 2}), row({2, 3})};
  const std::vector<std::string> labels = {"a", "a"};
  EXPECT_THROW(train(ClassifierKind::StyleLinear, rows, labels), TrainingError);
  EXPECT_THROW(train(ClassifierKind::StyleLinear, std::vector<SparseVector>{}, std::vector<std::string>{}),
               TrainingError);
}

TEST(Train, NonFiniteFeatureIsDataError) {
  const std::vector<SparseVector> rows = {row({1, 2}), row({std::nan(""), 3})};
  const std::vector<std::string> labels = {"a", "b"};
  EXPECT_THROW(train(ClassifierKind::StyleLinear, rows, labels), DataError);
}

TEST(Train, DeterministicAndMonotoneLoss) {
  const auto b = blobs(30, 2);
  TrainingConfig cfg;
  cfg.learning_rate = 5.0;
  const auto m1 = train(ClassifierKind::StyleLinear, b.rows, b.labels, cfg);
  const auto m2 = train(ClassifierKind::StyleLinear, b.rows, b.labels, cfg);
  EXPECT_EQ(m1.weights, m2.weights);
  EXPECT_EQ(m1.bias, m2.bias);
  ASSERT_EQ(m1.loss_history.size(), static_cast<std::size_t>(cfg.epochs));
  for (std::size_t i = 1; i < m1.loss_history.size(); ++i) EXPECT_LE(m1.loss_history[i], m1.loss_history[i - 1]);
}

TEST(Predict, ZeroWeightsAreUniform) {
  ClassifierModel m;
  m.classes = {"a", "b", "c"};
  m.weights = Eigen::MatrixXd::Zero(3, 2);
  m.bias = Eigen::VectorXd::Zero(3);
  const std::vector<SparseVector> rows = {row({1, 5}), row({-3, 0})};
  const auto p = predict_proba(m, rows);
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(p(i, j), 1.0 / 3.0, 1e-12);
  }
  EXPECT_EQ(predict(m, rows), (std::vector<std::string>{"a", "a"}));
  EXPECT_THROW(predict(m, std::vector<SparseVector>{row({1, 2, 3})}), DimensionError);
}

TEST(Predict, ProbabilitiesSumToOneAndArgmaxScales) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 3.0);
  ClassifierModel m;
  m.classes = {"a", "b", "c", "d"};
  m.weights = Eigen::MatrixXd::NullaryExpr(4, 3, [&] { return g(rng); });
  m.bias = Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); });
  std::vector<SparseVector> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(row({g(rng), g(rng), g(rng)}));
  const auto p = predict_proba(m, rows);
  for (int i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  auto scaled = m;
  scaled.weights *= 3.0;
  scaled.bias *= 3.0;
  EXPECT_EQ(predict(m, rows), predict(scaled, rows));
}

TEST(Classifier, JsonRoundTrip) {
  const auto b = blobs(10, 3);
  const auto m = train(ClassifierKind::StyleLinear, b.rows, b.labels, {}, "ref");
  const auto back = classifier_from_json(to_json(m));
  EXPECT_EQ(back.classes, m.classes);
  EXPECT_EQ(predict_proba(back, b.rows), predict_proba(m, b.rows));
  EXPECT_EQ(back.pipeline_ref, "ref");
}

TEST(Metrics, MacroF1Fixture) {
  const std::vector<std::string> gold = {"A", "A", "B", "C"};
  const std::vector<std::string> pred = {"A", "B", "C", "A"};
  // A: P 1/2 R 1/2; B: P 0 R 0; C: P 0 R 0.
  EXPECT_NEAR(macro_f1(pred, gold), 1.0 / 6.0, 1e-12);
  const std::vector<std::string> g2 = {"A", "B", "C"};
  const std::vector<std::string> p2 = {"A", "A", "A"};
  EXPECT_NEAR(macro_f1(p2, g2), (2.0 * (1.0 / 3.0) / (1.0 + 1.0 / 3.0)) / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(macro_f1(g2, g2), 1.0);
  EXPECT_THROW(macro_f1(std::vector<std::string>{}, std::vector<std::string>{}), PreconditionError);
  EXPECT_THROW(macro_f1(p2, gold), PreconditionError);
}

TEST(Metrics, ThirdFixtureAndPermutation) {
  // Each class gets P = R = 1/3 once the labels are rotated in one of three slots.
  const std::vector<std::string> gold = {"A", "A", "A", "B", "B", "B", "C", "C", "C"};
  const std::vector<std::string> pred = {"A", "B", "C", "B", "C", "A", "C", "A", "B"};
  EXPECT_NEAR(macro_f1(pred, gold), 1.0 / 3.0, 1e-12);
  std::vector<std::size_t> idx(gold.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::string> g, p;
  for (auto i : idx) {
    g.push_back(gold[i]);
    p.push_back(pred[i]);
  }
  EXPECT_NEAR(macro_f1(p, g), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(class_f1(pred, gold, "A"), 1.0 / 3.0, 1e-12);
}

TEST(Metrics, ConfusionConservation) {
  const std::vector<std::string> gold = {"A", "A", "B", "C", "C"};
  const std::vector<std::string> pred = {"A", "X", "B", "A", "C"};
  const auto cm = confusion_matrix(pred, gold);
  EXPECT_EQ(cm.total(), 5u);
  EXPECT_EQ(cm.rows, (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(cm.cols, (std::vector<std::string>{"A", "B", "C", "X"}));
  EXPECT_EQ(cm.row_sum(0), 2u);
  std::size_t cols = 0;
  for (std::size_t j = 0; j < cm.cols.size(); ++j) cols += cm.col_sum(j);
  EXPECT_EQ(cols, 5u);
  std::ostringstream out;
  write_confusion_csv(out, cm);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "gold\\predicted,A,B,C,X");
}

TEST(TextClassifierTest, TfidfAndStyleBothSeparateSyntheticAuthors) {
  const auto profiles = separated_profiles(3, 0.4, 8);
  const auto corpus = generate_corpus(profiles, 60, 120);
  std::vector<Document> train_docs, test_docs;
  std::vector<std::string> train_labels, test_labels;
  for (const auto& d : corpus) {
    const bool is_train = std::stoi(d.source_key.substr(1)) < 30;
    (is_train ? train_docs : test_docs).push_back(d);
    (is_train ? train_labels : test_labels).push_back(d.origin_author);
  }
  for (auto kind : {ClassifierKind::StyleLinear, ClassifierKind::TfidfLinear}) {
    ClassifierConfig c;
    c.kind = kind;
    const auto clf = TextClassifier::fit(c, train_docs, train_labels);
    EXPECT_GE(macro_f1(clf.predict(test_docs), test_labels), 0.9) << to_string(kind);
    const auto back = TextClassifier::from_json(clf.to_json());
    EXPECT_EQ(back.predict(test_docs), clf.predict(test_docs));
  }
}

TEST(Harness, IdentityParaphraseKeepsF1Constant) {
  const auto profiles = separated_profiles(3, 0.3, 10);
  const auto corpus = theseus::testing::chained(generate_corpus(profiles, 30, 100), theseus::testing::identity_spec(), 3);
  AttributionHarness h(corpus, SplitSpec{0.5, 10}, style_config());
  const auto r = h.evaluate(GroundTruthPolicy::Traditional, "ident");
  ASSERT_EQ(r.scores.size(), 4u);
  for (const auto& s : r.scores) EXPECT_DOUBLE_EQ(s.f1, r.scores[0].f1);
  EXPECT_FALSE(r.scores[0].drop.has_value());
  EXPECT_DOUBLE_EQ(*r.scores[1].drop, 0.0);
  EXPECT_THROW(h.evaluate(GroundTruthPolicy::Traditional, "nobody"), PreconditionError);
  EXPECT_THROW(h.evaluate(GroundTruthPolicy::Traditional, "ident", 5), ValidationError);
}

TEST(Harness, StylePullConcentratesInTargetColumn) {
  const auto profiles = separated_profiles(3, 0.3, 12);
  const auto corpus = theseus::testing::chained(
      generate_corpus(profiles, 40, 120), theseus::testing::pulling_spec(profiles, "author2", 0.6, 0.8, 12), 2);
  const auto r = evaluate_attribution(corpus, SplitSpec{0.5, 12}, GroundTruthPolicy::Traditional, "author2",
                                      style_config());
  const auto& cm = r.scores[1].confusion;
  const auto col = std::find(cm.cols.begin(), cm.cols.end(), "author2") - cm.cols.begin();
  for (std::size_t i = 0; i < cm.rows.size(); ++i) {
    if (cm.rows[i] == "author2") continue;
    for (std::size_t j = 0; j < cm.cols.size(); ++j) {
      if (static_cast<long>(j) != col) EXPECT_GT(cm.counts[i][col], cm.counts[i][j]) << cm.rows[i];
    }
  }
  const auto alt = evaluate_attribution(corpus, SplitSpec{0.5, 12}, GroundTruthPolicy::Alternative, "author2",
                                        style_config());
  EXPECT_GT(alt.scores[1].f1, r.scores[1].f1);
}

TEST(Detection, SeparableScenario) {
  const auto profiles = separated_profiles(2, 0.5, 14);
  const auto corpus = generate_corpus(profiles, 40, 100);
  const auto r = evaluate_detection(corpus, SplitSpec{0.5, 1},
                                    DetectionScenario{DetectionKind::Normal, "", "author1", "author0"}, style_config());
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_GE(r.scores[0].f1, 0.95);
  EXPECT_THROW(evaluate_detection(corpus, SplitSpec{0.5, 1},
                                  DetectionScenario{DetectionKind::Traditional, "author1", "author1", "author0"},
                                  style_config()),
               ScenarioError);
}

TEST(External, ExactAndMissingAndRandom) {
  const auto dir = theseus::testing::temp_dir("external");
  std::vector<LabeledDocument> golds;
  std::mt19937_64 rng(15);
  for (int i = 0; i < 7000; ++i) golds.push_back({"doc" + std::to_string(i), "c" + std::to_string(rng() % 7)});
  {
    std::ofstream out(dir / "exact.csv");
    out << "doc_id,label\n";
    for (const auto& g : golds) out << g.doc_id << ',' << g.label << '\n';
  }
  EXPECT_DOUBLE_EQ(ingest_external_predictions(dir / "exact.csv", golds).scores[0].f1, 1.0);
  {
    std::ofstream out(dir / "random.csv");
    for (const auto& g : golds) out << g.doc_id << ",c" << rng() % 7 << '\n';
  }
  EXPECT_NEAR(ingest_external_predictions(dir / "random.csv", golds).scores[0].f1, 1.0 / 7.0, 0.05);
  {
    std::ofstream out(dir / "partial.csv");
    out << golds[0].doc_id << ',' << golds[0].label << '\n';
  }
  try {
    ingest_external_predictions(dir / "partial.csv", golds);
    FAIL();
  } catch (const CoverageError& e) {
    EXPECT_NE(std::string(e.what()).find("doc1 "), std::string::npos);
  }
  EXPECT_THROW(ingest_external_predictions(dir / "absent.csv", golds), IoError);
  std::filesystem::remove_all(dir);
}

TEST(LeaveOneOut, RowsAndColumns) {
  const auto profiles = separated_profiles(4, 0.3, 16);
  const auto corpus = theseus::testing::chained(generate_corpus(profiles, 30, 100), theseus::testing::identity_spec(), 1);
  const SplitSpec sp{0.5, 16};
  const auto cm = leave_one_out_confusion(corpus, sp, "author0", "ident", 1, style_config());
  EXPECT_EQ(std::count(cm.cols.begin(), cm.cols.end(), "author0"), 0);
  ASSERT_EQ(cm.rows.size(), 4u);
  EXPECT_EQ(cm.rows[0], "author0");
  const auto test_keys = split(corpus, sp).test_keys.size();
  for (std::size_t i = 0; i < cm.rows.size(); ++i) EXPECT_EQ(cm.row_sum(i), test_keys);
  for (std::size_t i = 1; i < cm.rows.size(); ++i) {
    const auto j = std::find(cm.cols.begin(), cm.cols.end(), cm.rows[i]) - cm.cols.begin();
    EXPECT_GT(cm.counts[i][j] * 2, cm.row_sum(i));
  }
  EXPECT_THROW(leave_one_out_confusion(corpus, sp, "ghost", "ident", 1, style_config()), PreconditionError);
}
