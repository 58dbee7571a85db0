// SPDX-License-Identifier: Apache-2.0
#pragma once

// Kernel PCA on categorical rows with the exponential Hamming kernel
// k(x, y) = exp(-gamma * Ham(x, y)). The Gram matrix is centered in feature
// space with survey weights, eigendecomposed, and rows are scored by their
// squared reconstruction error outside the retained principal subspace.
//
// With principal axes v_i = sum_j alpha_ij * phi~(x_j) of unit norm,
//
//   RE(z) = ||phi~(z)||^2 - sum_{i <= k*} (v_i' phi~(z))^2,
//
// evaluated entirely through centered kernel columns, so it applies to
// training rows and held-out rows alike.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"
#include "surveykit/linalg.hpp"
#include "surveykit/parallel.hpp"

namespace surveykit {

struct KernelConfig {
  double gamma = 1.0;              // kernel decay rate
  double variance_fraction = 0.95; // retained spectrum mass

  void validate() const {
    require(gamma > 0.0, ErrorCode::invalid_argument, "gamma must be positive");
    require(variance_fraction > 0.0 && variance_fraction <= 1.0, ErrorCode::invalid_argument,
            "variance_fraction must lie in (0, 1]");
  }
};

inline int hamming(std::span<const int> x, std::span<const int> y) {
  require(x.size() == y.size(), ErrorCode::length_mismatch,
          "hamming distance needs rows of equal length");
  int distance = 0;
  for (std::size_t i = 0; i < x.size(); ++i) distance += x[i] != y[i];
  return distance;
}

inline double kernel_value(std::span<const int> x, std::span<const int> y,
                           const KernelConfig& config) {
  return std::exp(-config.gamma * hamming(x, y));
}

inline Eigen::MatrixXd gram_matrix(const CategoricalDataset& data, const KernelConfig& config) {
  config.validate();
  const std::size_t n = data.n_rows();
  Eigen::MatrixXd gram(n, n);
  parallel_for(0, n, [&](std::size_t i) {
    gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double value = kernel_value(data.row(i), data.row(j), config);
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  });
  return gram;
}

struct CenteredGram {
  Eigen::MatrixXd matrix;
  NormalizedWeights weights;
};

// K~_ij = K_ij - sum_l w_l K_il - sum_l w_l K_lj + sum_lm w_l w_m K_lm.
// Weighted row sums of the result vanish identically.
inline CenteredGram center_gram(const Eigen::MatrixXd& gram, const NormalizedWeights& weights) {
  const auto n = gram.rows();
  require(gram.cols() == n, ErrorCode::dimension_mismatch, "gram matrix must be square");
  require(static_cast<Eigen::Index>(weights.size()) == n, ErrorCode::dimension_mismatch,
          "weight count does not match gram size");
  const Eigen::Map<const Eigen::VectorXd> w(weights.values.data(), n);
  const Eigen::VectorXd row_means = gram * w;
  const double grand_mean = w.dot(row_means);
  CenteredGram out{gram, weights};
  out.matrix.colwise() -= row_means;
  out.matrix.rowwise() -= row_means.transpose();
  out.matrix.array() += grand_mean;
  return out;
}

struct KpcaModel {
  KernelConfig config;
  Eigen::VectorXd eigenvalues;  // descending, clamped to >= 0
  Eigen::MatrixXd components;   // n x retained; column i = alpha_i / sqrt(lambda_i)
  std::size_t retained = 0;

  // training-set state needed for out-of-sample centered kernel columns
  std::vector<int> train_cells;
  std::size_t n = 0, p = 0;
  NormalizedWeights weights;
  Eigen::VectorXd row_means;   // sum_l w_l K_il
  double grand_mean = 0.0;     // sum_lm w_l w_m K_lm
  Eigen::VectorXd centered_diag;

  std::span<const int> train_row(std::size_t i) const { return {train_cells.data() + i * p, p}; }
};

namespace detail {

inline KpcaModel kpca_fit_with_gram(const Eigen::MatrixXd& gram, const CategoricalDataset& data,
                                    const NormalizedWeights& weights, const KernelConfig& config) {
  config.validate();
  const std::size_t n = data.n_rows();
  require(n >= 2, ErrorCode::invalid_argument, "kpca needs at least 2 rows");
  require(weights.size() == n, ErrorCode::dimension_mismatch,
          "weights do not match row count");

  KpcaModel model;
  model.config = config;
  model.train_cells = data.cells;
  model.n = n;
  model.p = data.n_vars();
  model.weights = weights;
  {
    const Eigen::Map<const Eigen::VectorXd> w(weights.values.data(),
                                              static_cast<Eigen::Index>(n));
    model.row_means = gram * w;
    model.grand_mean = w.dot(model.row_means);
  }

  CenteredGram centered = center_gram(gram, weights);
  model.centered_diag = centered.matrix.diagonal();
  SymmetricEigen eig = sym_eigen_descending(std::move(centered.matrix));

  const double min_eigenvalue = eig.values[static_cast<Eigen::Index>(n) - 1];
  require(min_eigenvalue >= -1e-8, ErrorCode::not_psd,
          "centered kernel matrix has eigenvalue " + std::to_string(min_eigenvalue));
  eig.values = eig.values.cwiseMax(0.0);

  const double total = eig.values.sum();
  require(total > static_cast<double>(n) * 1e-12, ErrorCode::degenerate_data,
          "kernel spectrum is null (all rows identical?)");

  const double target = config.variance_fraction * total - 1e-12 * total;
  std::size_t retained = 0;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size() && eig.values[i] > 0.0; ++i) {
    cumulative += eig.values[i];
    ++retained;
    if (cumulative >= target) break;
  }
  model.retained = retained;
  model.eigenvalues = eig.values;
  model.components.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(retained));
  for (std::size_t i = 0; i < retained; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    model.components.col(col) = eig.vectors.col(col) / std::sqrt(eig.values[col]);
  }
  return model;
}

}  // namespace detail

inline KpcaModel kpca_fit(const CategoricalDataset& data, const NormalizedWeights& weights,
                          const KernelConfig& config = {}) {
  return detail::kpca_fit_with_gram(gram_matrix(data, config), data, weights, config);
}

// In-sample reconstruction errors. For a training row j the projection onto
// axis i is sqrt(lambda_i) * u_ij, so RE_j = K~_jj - sum_{i<=k*} lambda_i u_ij^2.
inline std::vector<double> kpca_train_scores(const KpcaModel& model) {
  std::vector<double> scores(model.n);
  for (std::size_t j = 0; j < model.n; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    double projected = 0.0;
    for (std::size_t i = 0; i < model.retained; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const double axis = model.eigenvalues[col] * model.components(row, col);
      projected += axis * axis;
    }
    scores[j] = std::max(0.0, model.centered_diag[row] - projected);
  }
  return scores;
}

inline double kpca_score(const KpcaModel& model, std::span<const int> z) {
  require(z.size() == model.p, ErrorCode::length_mismatch,
          "row length does not match the trained model");
  Eigen::VectorXd column(static_cast<Eigen::Index>(model.n));
  for (std::size_t l = 0; l < model.n; ++l) {
    column[static_cast<Eigen::Index>(l)] = kernel_value(model.train_row(l), z, model.config);
  }
  const Eigen::Map<const Eigen::VectorXd> w(model.weights.values.data(),
                                            static_cast<Eigen::Index>(model.n));
  const double z_mean = w.dot(column);
  // centered column and centered self-similarity (k(z,z) = 1)
  column.array() -= z_mean;
  column -= model.row_means;
  column.array() += model.grand_mean;
  const double self_centered = 1.0 - 2.0 * z_mean + model.grand_mean;

  double projected = 0.0;
  for (std::size_t i = 0; i < model.retained; ++i) {
    const double coordinate = model.components.col(static_cast<Eigen::Index>(i)).dot(column);
    projected += coordinate * coordinate;
  }
  return std::max(0.0, self_centered - projected);
}

inline std::vector<double> kpca_scores(const KpcaModel& model, const CategoricalDataset& data) {
  std::vector<double> scores(data.n_rows());
  parallel_for(0, data.n_rows(), [&](std::size_t i) { scores[i] = kpca_score(model, data.row(i)); });
  return scores;
}

}  // namespace surveykit
