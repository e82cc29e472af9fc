#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "theseus/corpus.hpp"
#include "theseus/features.hpp"
#include "theseus/stats.hpp"

namespace theseus {

class EmbeddingProvider;

/// Mean and regularized covariance of one author's style vectors.
struct AuthorStyleModel {
  std::string author;
  std::string schema_id;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;   // symmetric, min eigenvalue >= shrinkage_lambda
  Eigen::MatrixXd cholesky_l;   // lower factor of covariance
  double shrinkage_lambda = 1e-3;
  double shrinkage_gamma = 0.0;
  std::size_t sample_count = 0;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

inline constexpr double kDefaultShrinkageLambda = 1e-3;

/// Grid searched (ascending) for the shrinkage intensity.
std::span<const double> shrinkage_grid();

/// Sample covariance (denominator n - 1) shrunk toward a scaled identity:
///   S_g = (1 - g) S + g * max(tr(S) / d, lambda) * I
/// with g the smallest grid value whose minimum eigenvalue is >= lambda.
/// Vectors are used as given; pass standardized vectors.
/// Throws FitError for fewer than 2 vectors or lambda <= 0, DataError naming the
/// offending document (from `doc_ids`, if given) for non-finite values.
AuthorStyleModel fit_style_model(std::string author, std::span<const FeatureVector> vectors,
                                 double lambda = kDefaultShrinkageLambda, std::span<const std::string> doc_ids = {});

/// sqrt((x - mu)^T S^-1 (x - mu)) via the Cholesky factor.
double mahalanobis(const AuthorStyleModel& model, const FeatureVector& x);
double mahalanobis(const AuthorStyleModel& model, std::span<const double> x);

nlohmann::json to_json(const AuthorStyleModel& model);
AuthorStyleModel style_model_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Validation: for authors A != B and every x in test(A),
//   d = MD(x, train(B)) - MD(x, train(A))
// should be positive; tested with a one-sided Wilcoxon signed-rank test.

struct PairValidation {
  std::string author;  // A: owner of the test vectors
  std::string other;   // B
  std::size_t n = 0;
  double median_difference = 0.0;
  double fraction_positive = 0.0;
  TestResult test;
  bool passed = false;
};

struct ValidationReport {
  double alpha = 0.001;
  std::vector<PairValidation> pairs;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

ValidationReport validate_style_models(const std::map<std::string, AuthorStyleModel>& train_models,
                                       const std::map<std::string, std::vector<FeatureVector>>& test_vectors,
                                       double alpha = 0.001);

// ---------------------------------------------------------------------------
// Similarity and drift

/// Plain cosine similarity. Throws DimensionError on size mismatch and
/// UndefinedError when both vectors are zero; one zero vector gives 0.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Cosine similarity of the vectors as given.
double style_similarity(const FeatureVector& x, const FeatureVector& y);
/// Cosine similarity after standardizing both raw vectors with the schema.
double style_similarity(const FeatureSchema& schema, const FeatureVector& x, const FeatureVector& y);

/// Maps a document to the vector used for similarity.
using Vectorizer = std::function<std::vector<double>(const Document&)>;

/// Standardized style vectors.
Vectorizer style_vectorizer(const FeatureSchema& schema);
/// Content embeddings from the provider (which must outlive the vectorizer).
Vectorizer content_vectorizer(EmbeddingProvider& provider);

enum class DriftMetric { Style, Content };
std::string to_string(DriftMetric m);
DriftMetric parse_drift_metric(std::string_view name);

/// Mean cosine distance between T^n and T^0 per iteration; the value at
/// iteration 0 is 0 by construction.
struct DriftCurve {
  std::string paraphraser;
  std::vector<int> iterations;
  std::vector<double> values;
  std::vector<std::size_t> n_per_iteration;
};

/// Requires every chain to reach `max_iteration` (default: the longest chain);
/// throws PreconditionError for no chains and ValidationError listing the
/// incomplete chain ids otherwise.
DriftCurve drift_curve(std::span<const ParaphraseChain> chains, const Vectorizer& vectorize, int max_iteration = -1);
DriftCurve drift_curve(std::span<const ParaphraseChain> chains, const FeatureSchema& schema, int max_iteration = -1);

/// Same curve computed separately for each origin author.
std::map<std::string, DriftCurve> drift_by_author(std::span<const ParaphraseChain> chains,
                                                  const Vectorizer& vectorize, int max_iteration = -1);

void write_drift_csv(std::ostream& out, const DriftCurve& curve);

/// Per iteration, the share of chains whose T^n is strictly more similar to
/// the paraphraser's own text G on the same source key than to T^0.
struct NearerFraction {
  std::string paraphraser;
  std::vector<int> iterations;
  std::vector<double> fractions;
  std::vector<std::size_t> n_per_iteration;
};

NearerFraction nearer_to_llm_fraction(std::span<const ParaphraseChain> chains,
                                      const std::map<std::string, Document>& g_texts, const Vectorizer& vectorize);

/// S, S' (style) and C, C' (content) similarities of one paraphrase against
/// its own original and against G.
struct SimilarityPair {
  double s_origin = 0.0;
  double s_llm = 0.0;
  double c_origin = 0.0;
  double c_llm = 0.0;
};

SimilarityPair similarity_pair(const Document& paraphrased, const Document& original, const Document& g_text,
                               const Vectorizer& style, const Vectorizer& content);

// ---------------------------------------------------------------------------
// PCA by power iteration with deflation

struct PcaOptions {
  bool standardize = true;
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

struct PcaResult {
  Eigen::MatrixXd projections;   // n x k
  Eigen::MatrixXd components;    // k x d, orthonormal rows
  std::vector<double> explained_variance_ratio;
  Eigen::RowVectorXd center;
  Eigen::RowVectorXd scale;
};

/// Top-k principal components of the centered (and, by default,
/// column-standardized) matrix. Each component's largest-magnitude loading is
/// made positive. Throws PreconditionError unless n >= k >= 1 and
/// FitError when k exceeds the numerical rank.
PcaResult pca_project(const Eigen::MatrixXd& matrix, int k, const PcaOptions& options = {});
PcaResult pca_project(std::span<const FeatureVector> vectors, int k, const PcaOptions& options = {});

/// Rows of the transformed (centered/scaled) input matrix.
Eigen::MatrixXd pca_prepared(const Eigen::MatrixXd& matrix, const PcaResult& fit);

}  // namespace theseus
