#include <cmath>
#include <random>

#include "theseus/errors.hpp"
#include "theseus/stylemodel.hpp"

namespace theseus {

namespace {

void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index rows) {
  for (Eigen::Index r = 0; r < rows; ++r) v -= basis.row(r).dot(v) * basis.row(r).transpose();
}

}  // namespace

Eigen::MatrixXd pca_prepared(const Eigen::MatrixXd& matrix, const PcaResult& fit) {
  if (matrix.cols() != fit.center.size()) throw DimensionError("pca_prepared: column count differs from the fit");
  Eigen::MatrixXd x = matrix.rowwise() - fit.center;
  return x.array().rowwise() / fit.scale.array();
}

PcaResult pca_project(const Eigen::MatrixXd& matrix, int k, const PcaOptions& options) {
  const Eigen::Index n = matrix.rows();
  const Eigen::Index d = matrix.cols();
  if (k < 1 || k > n || k > d) throw PreconditionError("pca_project: need 1 <= k <= min(n, d)");
  if (!matrix.allFinite()) throw DataError("pca_project: non-finite input");

  PcaResult res;
  res.center = matrix.colwise().mean();
  res.scale = Eigen::RowVectorXd::Ones(d);
  if (options.standardize && n > 1) {
    const Eigen::MatrixXd c = matrix.rowwise() - res.center;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sd = std::sqrt(c.col(j).squaredNorm() / static_cast<double>(n - 1));
      res.scale(j) = sd > 0.0 ? sd : 1.0;
    }
  }
  const Eigen::MatrixXd x = pca_prepared(matrix, res);
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  const double total = cov.trace();
  if (!(total > 0.0)) throw FitError("pca_project: input has no variance");

  std::mt19937_64 rng(0x9ca);
  std::normal_distribution<double> normal;
  res.components.resize(k, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
    orthogonalize(v, res.components, c);
    v.normalize();
    double eigenvalue = 0.0;
    for (int it = 0; it < options.max_iterations; ++it) {
      Eigen::VectorXd w = cov * v;
      orthogonalize(w, res.components, c);
      const double norm = w.norm();
      if (norm <= 1e-300) {
        eigenvalue = 0.0;
        break;
      }
      w /= norm;
      eigenvalue = norm;
      const double delta = (w - v).lpNorm<Eigen::Infinity>();
      v = w;
      if (delta < options.tolerance) break;
    }
    eigenvalue = v.dot(cov * v);
    if (eigenvalue <= 1e-12 * total) {
      throw FitError("pca_project: k = " + std::to_string(k) + " exceeds the numerical rank " + std::to_string(c));
    }
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    res.components.row(c) = v.transpose();
    res.explained_variance_ratio.push_back(eigenvalue / total);
    cov -= eigenvalue * v * v.transpose();
  }
  res.projections = x * res.components.transpose();
  return res;
}

PcaResult pca_project(std::span<const FeatureVector> vectors, int k, const PcaOptions& options) {
  if (vectors.empty()) throw PreconditionError("pca_project: no vectors");
  const std::size_t d = vectors.front().dimension();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dimension() != d) throw DimensionError("pca_project: vectors differ in dimension");
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i].values[j];
  }
  return pca_project(m, k, options);
}

}  // namespace theseus
