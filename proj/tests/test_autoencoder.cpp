// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/fixtures.hpp"
#include "surveykit/autoencoder.hpp"
#include "surveykit/reports.hpp"

using namespace surveykit;

namespace {

// Central finite differences of the weighted loss over the flat parameters.
Eigen::VectorXd numeric_gradient(AeModel model, const Eigen::MatrixXd& x,
                                 const NormalizedWeights& w, double h = 1e-6) {
  Eigen::VectorXd flat = ae_flatten(model.params);
  Eigen::VectorXd grad(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double original = flat[i];
    flat[i] = original + h;
    ae_unflatten(flat, model.params);
    const double up = ae_weighted_loss(model, x, w);
    flat[i] = original - h;
    ae_unflatten(flat, model.params);
    const double down = ae_weighted_loss(model, x, w);
    flat[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  ae_unflatten(flat, model.params);
  return grad;
}

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-4});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("architecture widths") {
  const auto a4 = AeArchitecture::for_input(4);
  CHECK(a4.half_dim == 2);
  CHECK(a4.embedding_dim == 1);
  const auto a19 = AeArchitecture::for_input(19);
  CHECK(a19.half_dim == 10);
  CHECK(a19.embedding_dim == 5);
  auto model = ae_init(19, 1);
  CHECK(model.params.w1.rows() == 10);
  CHECK(model.params.w1.cols() == 19);
  CHECK(model.params.w2.rows() == 5);
  CHECK(model.params.w3.rows() == 10);
  CHECK(model.params.w4.rows() == 19);
}

TEST_CASE("forward pass") {
  SECTION("zero parameters give softplus(0) = log 2 everywhere") {
    auto model = ae_init(6, 3);
    model.params.setZero();
    Eigen::VectorXd x(6);
    x << 1, 4, 2, 0, 3, 1;
    const auto out = ae_forward(model, x);
    REQUIRE(out.reconstruction.size() == 6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      CHECK(out.reconstruction[i] == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    }
    CHECK(out.embedding.size() == 2);
  }
  SECTION("outputs are always positive") {
    auto model = ae_init(5, 9);
    Eigen::VectorXd x(5);
    x << 0, 1, 2, 3, 4;
    const auto out = ae_forward(model, x);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(out.reconstruction[i] > 0.0);
  }
}

TEST_CASE("weighted loss") {
  SECTION("single row with unit weight and residual (1,1) gives 2") {
    auto model = ae_init(2, 4);
    model.params.setZero();
    // reconstruction is log(2) per coordinate; pick x so the residual is 1
    Eigen::MatrixXd x(2, 1);
    x << std::log(2.0) - 1.0, std::log(2.0) + 1.0;
    NormalizedWeights w;
    w.values = {1.0};
    CHECK(ae_weighted_loss(model, x, w) == Catch::Approx(2.0).epsilon(1e-12));
  }
  SECTION("uniform weights equal the unweighted mean formula") {
    const auto data = fixtures::random_dataset(9, 5, 3, 2);
    const auto x = dataset_matrix(data);
    auto model = ae_init(5, 6);
    const double weighted = ae_weighted_loss(model, x, uniform_weights(9));
    double unweighted = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto out = ae_forward(model, x.col(c));
      unweighted += (x.col(c) - out.reconstruction).squaredNorm();
    }
    unweighted /= 9.0;
    CHECK(weighted == Catch::Approx(unweighted).margin(1e-12));
  }
}

TEST_CASE("gradients match central finite differences") {
  SECTION("toy set, uniform and non-uniform weights") {
    const auto data = fixtures::random_dataset(8, 6, 3, 13);
    const auto x = dataset_matrix(data);
    auto model = ae_init(6, 21);
    for (const bool uniform : {true, false}) {
      NormalizedWeights w;
      if (uniform) {
        w = uniform_weights(8);
      } else {
        std::vector<double> raw = {1, 2, 0.5, 1, 3, 1, 0.25, 1};
        w = normalize_weights(raw);
      }
      const auto g = ae_gradients(model, x, w.values);
      const auto numeric = numeric_gradient(model, x, w);
      CHECK(max_relative_error(ae_flatten(g), numeric) <= 1e-4);
    }
  }
  SECTION("after a few training steps the gradient still checks out") {
    const auto data = fixtures::random_dataset(10, 4, 3, 5);
    TrainingConfig config;
    config.epochs = 25;
    config.seed = 3;
    config.momentum = 0.0;
    config.learning_rate = 5e-3;
    const auto w = normalize_weights(data);
    auto model = ae_train(data, w, config);
    const auto x = dataset_matrix(data);
    const auto g = ae_gradients(model, x, w.values);
    CHECK(max_relative_error(ae_flatten(g), numeric_gradient(model, x, w)) <= 1e-4);
  }
}

TEST_CASE("training") {
  SECTION("constant dataset is learnable by the biases") {
    CategoricalDataset data;
    data.specs = fixtures::generic_specs(6, 4);
    for (int i = 0; i < 12; ++i) {
      const int pattern[] = {2, 1, 3, 0, 2, 1};
      data.cells.insert(data.cells.end(), pattern, pattern + 6);
    }
    data.weights.assign(12, 1.0);
    TrainingConfig config;
    config.seed = 11;
    const auto model = ae_train(data, normalize_weights(data), config);
    CHECK(model.loss_trace.back() < 0.1 * model.loss_trace.front());
  }
  SECTION("same seed reproduces parameters exactly") {
    const auto data = fixtures::random_dataset(15, 5, 3, 7);
    TrainingConfig config;
    config.epochs = 40;
    config.seed = 99;
    const auto w = normalize_weights(data);
    const auto a = ae_train(data, w, config);
    const auto b = ae_train(data, w, config);
    CHECK(ae_flatten(a.params) == ae_flatten(b.params));
  }
  SECTION("full-batch descent is non-increasing within tolerance") {
    const auto data = fixtures::random_dataset(20, 5, 3, 23);
    TrainingConfig config;
    config.epochs = 150;
    config.momentum = 0.0;
    config.learning_rate = 2e-3;
    config.seed = 4;
    const auto model = ae_train(data, normalize_weights(data), config);
    for (std::size_t e = 1; e < model.loss_trace.size(); ++e) {
      CHECK(model.loss_trace[e] <= model.loss_trace[e - 1] + 1e-6);
    }
  }
  SECTION("loss tolerance stops training early") {
    const auto data = fixtures::random_dataset(20, 4, 3, 3);
    TrainingConfig config;
    config.epochs = 400;
    config.seed = 8;
    config.loss_tolerance = 1e-3;
    const auto model = ae_train(data, normalize_weights(data), config);
    CHECK(model.loss_trace.size() < 400);
  }
  SECTION("uniform explicit weights equal implicit unit weights") {
    const auto data = fixtures::random_dataset(12, 4, 3, 8);
    TrainingConfig config;
    config.epochs = 30;
    config.seed = 5;
    NormalizedWeights explicit_uniform = uniform_weights(12);
    const auto a = ae_train(data, explicit_uniform, config);
    const auto b = ae_train(data, normalize_weights(data), config); // unit weights normalize to uniform
    CHECK(ae_flatten(a.params) == ae_flatten(b.params));
  }
}

TEST_CASE("scores") {
  SECTION("rounding semantics") {
    auto model = ae_init(2, 1);
    model.category_counts = {4, 4};
    // force a reconstruction of (1.4, 2.6) by zeroing the net and fixing b4
    model.params.setZero();
    model.params.b4 << std::log(std::exp(1.4) - 1.0), std::log(std::exp(2.6) - 1.0);
    const int row[] = {1, 3};
    CHECK(ae_score_row(model, row) == Catch::Approx(0.0).margin(1e-18));
  }
  SECTION("scores are nonnegative and duplicates score identically") {
    const auto data = fixtures::random_dataset(30, 5, 4, 77);
    TrainingConfig config;
    config.epochs = 60;
    config.seed = 2;
    const auto model = ae_train(data, normalize_weights(data), config);
    const auto scores = ae_scores(model, data);
    for (const double s : scores) CHECK(s >= 0.0);
    CHECK(ae_score_row(model, data.row(4)) == ae_score_row(model, data.row(4)));
  }
  SECTION("parameter file round-trips to identical scores") {
    const auto data = fixtures::random_dataset(25, 5, 4, 19);
    TrainingConfig config;
    config.epochs = 50;
    config.seed = 6;
    const auto model = ae_train(data, normalize_weights(data), config);
    const auto restored = ae_model_from_json(ae_model_json(model));
    CHECK(restored.arch.input_dim == model.arch.input_dim);
    CHECK(ae_scores(restored, data) == ae_scores(model, data));
  }
  SECTION("a rare pattern scores above the median across seeds") {
    const auto m = fixtures::liguria_marginals();
    int successes = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
      auto data = generate_fixture(m, 300, 1000 + static_cast<std::uint64_t>(trial));
      const auto anomaly_rows = fixtures::pick_rows(300, 9, 555 + static_cast<std::uint64_t>(trial));
      fixtures::inject_pattern(data, anomaly_rows, fixtures::rare_signature(m));
      TrainingConfig config;
      config.epochs = 200;
      config.seed = 40 + static_cast<std::uint64_t>(trial);
      const auto model = ae_train(data, normalize_weights(data), config);
      const auto scores = ae_scores(model, data);
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      bool all_above = true;
      for (const std::size_t r : anomaly_rows) all_above = all_above && scores[r] > median;
      successes += all_above;
    }
    CHECK(successes >= 18); // >= 90%
  }
}
