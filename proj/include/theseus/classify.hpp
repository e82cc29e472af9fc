#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "theseus/corpus.hpp"
#include "theseus/features.hpp"
#include "theseus/stats.hpp"

namespace theseus {

enum class ClassifierKind { TfidfLinear, StyleLinear };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct TrainingConfig {
  double l2 = 1e-3;
  double learning_rate = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression.
struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::StyleLinear;
  std::vector<std::string> classes;  // sorted
  Eigen::MatrixXd weights;           // classes x d
  Eigen::VectorXd bias;
  std::string pipeline_ref;          // schema or vocabulary id
  TrainingConfig config;
  std::vector<double> loss_history;  // one entry per epoch, non-increasing

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

/// Full-batch gradient descent on mean cross-entropy + (l2/2)||W||^2 from zero
/// weights. A step that would raise the loss is retried at half the rate, so
/// the recorded loss never increases. Throws TrainingError for fewer than 2
/// classes and DataError for non-finite features.
ClassifierModel train(ClassifierKind kind, std::span<const SparseVector> rows, std::span<const std::string> labels,
                      const TrainingConfig& config = {}, std::string pipeline_ref = {});

/// Row-stochastic class probabilities (softmax of the logits).
Eigen::MatrixXd predict_proba(const ClassifierModel& model, std::span<const SparseVector> rows);
/// Argmax labels; ties go to the earlier class.
std::vector<std::string> predict(const ClassifierModel& model, std::span<const SparseVector> rows);

nlohmann::json to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Metrics

/// Mean per-class F1 over the classes with gold support > 0 (among `classes`,
/// default: every gold label). Throws PreconditionError on empty or unequal input.
double macro_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::span<const std::string> classes = {});

/// F1 of one positive class.
double class_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::string_view positive);

/// counts[i][j]: documents with gold rows[i] predicted as cols[j].
struct ConfusionMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t row_sum(std::size_t i) const;
  std::size_t col_sum(std::size_t j) const;
};

/// Rows are the gold labels present, columns the union of `classes` and the
/// predicted labels, both sorted.
ConfusionMatrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> golds,
                                 std::span<const std::string> classes = {});

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
nlohmann::json to_json(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Feature pipeline + model

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::StyleLinear;
  TrainingConfig training;
  FeatureConfig features;
  TfidfConfig tfidf;
};

/// A fitted representation (standardized style schema or TF-IDF vocabulary)
/// together with the model trained on it.
class TextClassifier {
 public:
  static TextClassifier fit(const ClassifierConfig& config, std::span<const Document> docs,
                            std::span<const std::string> labels);

  std::vector<SparseVector> vectorize(std::span<const Document> docs) const;
  std::vector<std::string> predict(std::span<const Document> docs) const;
  const ClassifierModel& model() const noexcept { return model_; }
  const std::vector<std::string>& classes() const noexcept { return model_.classes; }

  nlohmann::json to_json() const;
  static TextClassifier from_json(const nlohmann::json& j);

 private:
  ClassifierKind kind_ = ClassifierKind::StyleLinear;
  std::optional<FeatureSchema> schema_;
  std::optional<NGramVocabulary> vocab_;
  ClassifierModel model_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct IterationScore {
  int iteration = 0;
  double f1 = 0.0;          // mean over datasets
  double pooled_f1 = 0.0;   // over every test document at once
  std::optional<double> drop;  // (F1_{n-1} - F1_n) / F1_{n-1}
  std::size_t n = 0;
  std::map<std::string, double> f1_by_dataset;
  ConfusionMatrix confusion;
};

struct EvaluationReport {
  std::string kind;        // "attribution", "detection", "external", ...
  std::string setting;     // policy or scenario name
  std::string paraphraser;
  std::string classifier;
  std::vector<IterationScore> scores;
  std::vector<std::string> notes;

  std::vector<double> f1_series() const;
  nlohmann::json to_json() const;
};

/// Fills IterationScore::drop from consecutive F1 values.
void compute_drops(EvaluationReport& report);

/// `paraphraser,iteration,f1,drop_pct` rows; the header is written when asked.
void write_f1_csv(std::ostream& out, std::span<const EvaluationReport> reports, bool header = true);

/// Trains one classifier per dataset on the T^0 training documents of every
/// origin author and evaluates paraphrase iterations of the test keys.
class AttributionHarness {
 public:
  AttributionHarness(const Corpus& corpus, const SplitSpec& split, ClassifierConfig config);

  /// Iteration 0 scores every test original; iteration n >= 1 scores the
  /// test documents produced by `paraphraser` at that iteration. Labels follow
  /// `policy`; max_iteration < 0 means as far as the corpus goes.
  EvaluationReport evaluate(GroundTruthPolicy policy, std::string_view paraphraser, int max_iteration = -1) const;

  const std::map<std::string, TextClassifier>& classifiers() const noexcept { return classifiers_; }
  const SplitResult& split() const noexcept { return split_; }

 private:
  Corpus corpus_;
  SplitResult split_;
  ClassifierConfig config_;
  std::map<std::string, TextClassifier> classifiers_;  // per dataset
};

EvaluationReport evaluate_attribution(const Corpus& corpus, const SplitSpec& split, GroundTruthPolicy policy,
                                      std::string_view paraphraser, const ClassifierConfig& config,
                                      int max_iteration = -1);

/// Binary human/AI detection: trains on the scenario's labeled documents of the
/// training keys and scores those of the test keys. The single score row
/// carries macro-F1 over both classes; notes record the AI-class F1.
EvaluationReport evaluate_detection(const Corpus& corpus, const SplitSpec& split, const DetectionScenario& scenario,
                                    const ClassifierConfig& config);

/// Scores a `doc_id,label` CSV of third-party predictions against `golds`.
/// With a corpus, scores are broken down by iteration. Throws CoverageError
/// listing the gold ids without a prediction.
EvaluationReport ingest_external_predictions(const std::filesystem::path& path,
                                             std::span<const LabeledDocument> golds, const Corpus* corpus = nullptr);
std::map<std::string, std::string> read_predictions_csv(std::istream& in);

/// Trains without `excluded_author` and classifies the test documents of
/// `paraphraser` at `iteration` (T^0 when iteration is 0). Rows are origin
/// authors, columns the remaining classes.
ConfusionMatrix leave_one_out_confusion(const Corpus& corpus, const SplitSpec& split,
                                        std::string_view excluded_author, std::string_view paraphraser,
                                        int iteration, const ClassifierConfig& config);

}  // namespace theseus
