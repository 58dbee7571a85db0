// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shallow autoencoder for reconstruction-error scoring of integer-coded
// rows. Layout for input dimension p:
//
//   encoder: p -> ceil(p/2) (tanh) -> ceil(p/4) (tanh)
//   decoder: ceil(p/4) -> ceil(p/2) (identity) -> p (softplus)
//
// Rows enter as raw category codes cast to reals. Training minimizes the
// survey-weighted squared reconstruction error sum_j w_j ||x_j - g(f(x_j))||^2
// with plain gradient descent plus momentum; scoring rounds the
// reconstruction to the nearest valid code first so scores live on the same
// integer grid as the data.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"
#include "surveykit/rng.hpp"

namespace surveykit {

struct AeArchitecture {
  int input_dim = 0;
  int half_dim = 0;      // ceil(p/2)
  int embedding_dim = 0; // ceil(p/4)

  static AeArchitecture for_input(int p) {
    require(p >= 1, ErrorCode::invalid_argument, "input dimension must be positive");
    return {p, (p + 1) / 2, (p + 3) / 4};
  }
};

struct TrainingConfig {
  int epochs = 500;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  int batch_size = 0; // 0 = full batch
  std::uint64_t seed = 0;
  double loss_tolerance = 0.0; // early stop when the epoch loss delta falls below

  void validate() const {
    require(epochs > 0, ErrorCode::invalid_argument, "epochs must be positive");
    require(learning_rate > 0.0, ErrorCode::invalid_argument, "learning rate must be positive");
    require(momentum >= 0.0 && momentum < 1.0, ErrorCode::invalid_argument,
            "momentum must lie in [0, 1)");
    require(batch_size >= 0, ErrorCode::invalid_argument, "batch size must be nonnegative");
    require(loss_tolerance >= 0.0, ErrorCode::invalid_argument,
            "loss tolerance must be nonnegative");
  }
};

namespace detail {

inline double softplus(double a) {
  return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
}

inline double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace detail

struct AeParameters {
  Eigen::MatrixXd w1, w2, w3, w4;
  Eigen::VectorXd b1, b2, b3, b4;

  void setZero() {
    w1.setZero(); w2.setZero(); w3.setZero(); w4.setZero();
    b1.setZero(); b2.setZero(); b3.setZero(); b4.setZero();
  }
};

struct AeModel {
  AeArchitecture arch;
  AeParameters params;
  std::vector<int> category_counts; // per variable, for rounding in score()
  std::vector<double> loss_trace;
};

inline AeModel ae_init(int input_dim, std::uint64_t seed) {
  AeModel model;
  model.arch = AeArchitecture::for_input(input_dim);
  const int p = model.arch.input_dim;
  const int h = model.arch.half_dim;
  const int d = model.arch.embedding_dim;
  auto& prm = model.params;
  prm.w1.resize(h, p); prm.b1 = Eigen::VectorXd::Zero(h);
  prm.w2.resize(d, h); prm.b2 = Eigen::VectorXd::Zero(d);
  prm.w3.resize(h, d); prm.b3 = Eigen::VectorXd::Zero(h);
  prm.w4.resize(p, h); prm.b4 = Eigen::VectorXd::Zero(p);

  // symmetric uniform fan-in initialization
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = (2.0 * rng.next_double() - 1.0) * scale;
      }
    }
  };
  fill(prm.w1); fill(prm.w2); fill(prm.w3); fill(prm.w4);
  return model;
}

// Dataset rows as a p x n real matrix (codes cast to doubles, columns = rows).
inline Eigen::MatrixXd dataset_matrix(const CategoricalDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n_rows());
  const auto p = static_cast<Eigen::Index>(data.n_vars());
  Eigen::MatrixXd x(p, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      x(j, i) = static_cast<double>(data.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
  return x;
}

namespace detail {

struct AeActivations {
  Eigen::MatrixXd z1, z2, z3, a4, xhat;
};

inline AeActivations ae_forward_batch(const AeModel& model, const Eigen::MatrixXd& x) {
  const auto& prm = model.params;
  AeActivations act;
  act.z1 = ((prm.w1 * x).colwise() + prm.b1).array().tanh();
  act.z2 = ((prm.w2 * act.z1).colwise() + prm.b2).array().tanh();
  act.z3 = (prm.w3 * act.z2).colwise() + prm.b3;
  act.a4 = (prm.w4 * act.z3).colwise() + prm.b4;
  act.xhat = act.a4.unaryExpr([](double a) { return softplus(a); });
  return act;
}

}  // namespace detail

struct AeForwardResult {
  Eigen::VectorXd reconstruction;
  Eigen::VectorXd embedding;
};

inline AeForwardResult ae_forward(const AeModel& model, const Eigen::VectorXd& x) {
  require(x.size() == model.arch.input_dim, ErrorCode::length_mismatch,
          "input length does not match the architecture");
  const auto act = detail::ae_forward_batch(model, x);
  return {act.xhat.col(0), act.z2.col(0)};
}

inline double ae_weighted_loss(const AeModel& model, const Eigen::MatrixXd& x,
                               const NormalizedWeights& weights) {
  require(static_cast<std::size_t>(x.cols()) == weights.size(), ErrorCode::dimension_mismatch,
          "weights do not match sample count");
  const auto act = detail::ae_forward_batch(model, x);
  const Eigen::Map<const Eigen::VectorXd> w(weights.values.data(), x.cols());
  const double loss = ((act.xhat - x).colwise().squaredNorm() * w.asDiagonal()).sum();
  require(std::isfinite(loss), ErrorCode::non_finite_loss, "reconstruction loss is not finite");
  return loss;
}

// Analytic gradient of the weighted loss; exposed so tests can compare it to
// finite differences.
inline AeParameters ae_gradients(const AeModel& model, const Eigen::MatrixXd& x,
                                 std::span<const double> column_weights, double* loss_out = nullptr) {
  const auto& prm = model.params;
  const auto act = detail::ae_forward_batch(model, x);
  const Eigen::Map<const Eigen::VectorXd> w(column_weights.data(),
                                            static_cast<Eigen::Index>(column_weights.size()));

  Eigen::MatrixXd residual = act.xhat - x;
  if (loss_out != nullptr) {
    *loss_out = (residual.colwise().squaredNorm() * w.asDiagonal()).sum();
  }
  // dL/dxhat, columns scaled by their weights
  Eigen::MatrixXd grad = 2.0 * (residual * w.asDiagonal());

  AeParameters g;
  const Eigen::MatrixXd da4 =
      grad.array() * act.a4.unaryExpr([](double a) { return detail::logistic(a); }).array();
  g.w4 = da4 * act.z3.transpose();
  g.b4 = da4.rowwise().sum();
  const Eigen::MatrixXd da3 = prm.w4.transpose() * da4; // identity activation
  g.w3 = da3 * act.z2.transpose();
  g.b3 = da3.rowwise().sum();
  const Eigen::MatrixXd da2 =
      (prm.w3.transpose() * da3).array() * (1.0 - act.z2.array().square());
  g.w2 = da2 * act.z1.transpose();
  g.b2 = da2.rowwise().sum();
  const Eigen::MatrixXd da1 =
      (prm.w2.transpose() * da2).array() * (1.0 - act.z1.array().square());
  g.w1 = da1 * x.transpose();
  g.b1 = da1.rowwise().sum();
  return g;
}

inline AeModel ae_train(const CategoricalDataset& data, const NormalizedWeights& weights,
                        const TrainingConfig& config) {
  config.validate();
  const std::size_t n = data.n_rows();
  require(weights.size() == n, ErrorCode::dimension_mismatch, "weights do not match row count");
  const std::size_t batch = config.batch_size == 0 ? n : static_cast<std::size_t>(config.batch_size);
  require(n >= batch, ErrorCode::invalid_argument, "batch size exceeds row count");

  AeModel model = ae_init(static_cast<int>(data.n_vars()), config.seed);
  for (const auto& spec : data.specs) {
    model.category_counts.push_back(static_cast<int>(spec.category_count()));
  }
  const Eigen::MatrixXd x = dataset_matrix(data);

  AeParameters velocity = model.params;
  velocity.setZero();
  auto step = [&](const AeParameters& g) {
    auto update = [&](Eigen::MatrixXd& v, Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad) {
      v = config.momentum * v - config.learning_rate * grad;
      theta += v;
    };
    auto update_vec = [&](Eigen::VectorXd& v, Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
      v = config.momentum * v - config.learning_rate * grad;
      theta += v;
    };
    update(velocity.w1, model.params.w1, g.w1);
    update_vec(velocity.b1, model.params.b1, g.b1);
    update(velocity.w2, model.params.w2, g.w2);
    update_vec(velocity.b2, model.params.b2, g.b2);
    update(velocity.w3, model.params.w3, g.w3);
    update_vec(velocity.b3, model.params.b3, g.b3);
    update(velocity.w4, model.params.w4, g.w4);
    update_vec(velocity.b4, model.params.b4, g.b4);
  };

  Rng shuffle_rng(derive_seed(config.seed, 0x5u));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  model.loss_trace.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch == n) {
      const auto g = ae_gradients(model, x, weights.values);
      step(g);
    } else {
      shuffle_rng.shuffle(order);
      for (std::size_t start = 0; start + batch <= n; start += batch) {
        Eigen::MatrixXd xb(x.rows(), static_cast<Eigen::Index>(batch));
        std::vector<double> wb(batch);
        for (std::size_t c = 0; c < batch; ++c) {
          xb.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(order[start + c]));
          wb[c] = weights[order[start + c]];
        }
        const auto g = ae_gradients(model, xb, wb);
        step(g);
      }
    }
    const double loss = ae_weighted_loss(model, x, weights);
    require(std::isfinite(loss), ErrorCode::diverged, "training loss diverged");
    model.loss_trace.push_back(loss);
    if (config.loss_tolerance > 0.0 && model.loss_trace.size() >= 2) {
      const double previous = model.loss_trace[model.loss_trace.size() - 2];
      if (std::abs(previous - loss) <= config.loss_tolerance) break;
    }
  }
  return model;
}

// Score one row: squared distance between the codes and the reconstruction
// rounded to the nearest valid code of each variable.
inline double ae_score_row(const AeModel& model, std::span<const int> row) {
  require(row.size() == static_cast<std::size_t>(model.arch.input_dim), ErrorCode::length_mismatch,
          "row length does not match the architecture");
  Eigen::VectorXd x(model.arch.input_dim);
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = static_cast<double>(row[static_cast<std::size_t>(j)]);
  const auto forward = ae_forward(model, x);
  double score = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double rounded = std::round(forward.reconstruction[j]);
    if (!model.category_counts.empty()) {
      const double top = static_cast<double>(model.category_counts[static_cast<std::size_t>(j)] - 1);
      rounded = std::min(std::max(rounded, 0.0), top);
    }
    const double r = x[j] - rounded;
    score += r * r;
  }
  return score;
}

inline std::vector<double> ae_scores(const AeModel& model, const CategoricalDataset& data) {
  std::vector<double> scores(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) scores[i] = ae_score_row(model, data.row(i));
  return scores;
}

// Flat parameter vector in a fixed order (column-major blocks); used by the
// finite-difference tests and the parameter file.
inline Eigen::VectorXd ae_flatten(const AeParameters& prm) {
  const auto total = prm.w1.size() + prm.b1.size() + prm.w2.size() + prm.b2.size() +
                     prm.w3.size() + prm.b3.size() + prm.w4.size() + prm.b4.size();
  Eigen::VectorXd flat(total);
  Eigen::Index offset = 0;
  auto push = [&](const auto& block) {
    flat.segment(offset, block.size()) = Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    offset += block.size();
  };
  push(prm.w1); push(prm.b1); push(prm.w2); push(prm.b2);
  push(prm.w3); push(prm.b3); push(prm.w4); push(prm.b4);
  return flat;
}

inline void ae_unflatten(const Eigen::VectorXd& flat, AeParameters& prm) {
  Eigen::Index offset = 0;
  auto pull = [&](auto& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) = flat.segment(offset, block.size());
    offset += block.size();
  };
  pull(prm.w1); pull(prm.b1); pull(prm.w2); pull(prm.b2);
  pull(prm.w3); pull(prm.b3); pull(prm.w4); pull(prm.b4);
  require(offset == flat.size(), ErrorCode::dimension_mismatch, "parameter vector size mismatch");
}

}  // namespace surveykit
