// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adapters giving the row-level detectors (KPCA, autoencoder) the uniform
// fit/score surface the validation templates expect, plus the entropy
// detector's own validation loops (its items are variables, not rows, so the
// generic templates do not apply; frequencies are updated incrementally
// instead of refit from scratch).

#include <cstdint>
#include <vector>

#include "surveykit/autoencoder.hpp"
#include "surveykit/dataset.hpp"
#include "surveykit/entropy.hpp"
#include "surveykit/kpca.hpp"
#include "surveykit/labeling.hpp"
#include "surveykit/parallel.hpp"

namespace surveykit {

struct KpcaDetector {
  KernelConfig config{};

  struct Model {
    KpcaModel model;
    std::vector<double> scores;

    const std::vector<double>& train_scores() const { return scores; }
    double score(std::span<const int> row) const { return kpca_score(model, row); }
  };

  Model fit(const CategoricalDataset& data, const NormalizedWeights& weights) const {
    Model out{kpca_fit(data, weights, config), {}};
    out.scores = kpca_train_scores(out.model);
    return out;
  }
};

struct AeDetector {
  TrainingConfig config{};

  struct Model {
    AeModel model;
    std::vector<double> scores;

    const std::vector<double>& train_scores() const { return scores; }
    double score(std::span<const int> row) const { return ae_score_row(model, row); }
  };

  Model fit(const CategoricalDataset& data, const NormalizedWeights& weights) const {
    Model out{ae_train(data, weights, config), {}};
    out.scores = ae_scores(out.model, data);
    return out;
  }
};

// --- entropy validation -----------------------------------------------------

inline OutlierLabeling entropy_labeling(const CategoricalDataset& data,
                                        const NormalizedWeights& weights) {
  return two_means_1d(entropy_report(data, weights).scores());
}

namespace detail {

// Per-variable weighted frequency table for fast removal of rows.
struct FrequencyTable {
  std::vector<std::vector<double>> freqs; // per variable, per category, unnormalized mass
  double total_mass = 0.0;

  static FrequencyTable build(const CategoricalDataset& data, const NormalizedWeights& weights) {
    FrequencyTable table;
    table.freqs.resize(data.n_vars());
    for (std::size_t v = 0; v < data.n_vars(); ++v) {
      table.freqs[v].assign(data.specs[v].category_count(), 0.0);
    }
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      for (std::size_t v = 0; v < data.n_vars(); ++v) {
        table.freqs[v][static_cast<std::size_t>(data.at(i, v))] += weights[i];
      }
      table.total_mass += weights[i];
    }
    return table;
  }

  // Gamma1 scores after removing the given rows (frequencies renormalized).
  std::vector<double> scores_without(const CategoricalDataset& data,
                                     const NormalizedWeights& weights,
                                     std::span<const std::size_t> removed, bool* degenerate) const {
    std::vector<std::vector<double>> reduced = freqs;
    double mass = total_mass;
    for (const std::size_t i : removed) {
      for (std::size_t v = 0; v < data.n_vars(); ++v) {
        reduced[v][static_cast<std::size_t>(data.at(i, v))] -= weights[i];
      }
      mass -= weights[i];
    }
    *degenerate = mass <= 0.0;
    std::vector<double> scores(data.n_vars(), 1.0);
    if (*degenerate) return scores;
    for (std::size_t v = 0; v < data.n_vars(); ++v) {
      for (double& f : reduced[v]) f = std::max(0.0, f / mass);
      scores[v] = gamma1(reduced[v]);
    }
    return scores;
  }
};

}  // namespace detail

inline ValidationReport entropy_stability_validation(const CategoricalDataset& data,
                                                     const NormalizedWeights& weights) {
  const std::size_t n = data.n_rows();
  require(n >= 3, ErrorCode::too_few_items, "stability validation needs at least 3 rows");
  const OutlierLabeling full = entropy_labeling(data, weights);
  const auto table = detail::FrequencyTable::build(data, weights);

  std::vector<double> mccs(n, 0.0);
  std::vector<std::uint8_t> degenerate(n, 0);
  parallel_for(0, n, [&](std::size_t held_out) {
    const std::size_t removed[] = {held_out};
    bool iteration_degenerate = false;
    const auto scores = table.scores_without(data, weights, removed, &iteration_degenerate);
    const auto labels = detail::safe_two_means(scores, &iteration_degenerate);
    bool mcc_degenerate = false;
    mccs[held_out] = mcc(labels, full.labels, &mcc_degenerate);
    degenerate[held_out] = iteration_degenerate || mcc_degenerate;
  });
  const auto flagged = static_cast<std::size_t>(
      std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
  return detail::summarize_mcc(std::move(mccs), flagged, ValidationScheme::leave_one_out);
}

inline ValidationReport entropy_internal_validation(const CategoricalDataset& data,
                                                    const NormalizedWeights& weights,
                                                    std::size_t folds, std::uint64_t seed) {
  const std::size_t n = data.n_rows();
  require(folds >= 2, ErrorCode::invalid_argument, "need at least 2 folds");
  require(n >= folds, ErrorCode::too_few_items, "fewer rows than folds");
  const OutlierLabeling full = entropy_labeling(data, weights);
  const auto table = detail::FrequencyTable::build(data, weights);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<double> mccs(folds, 0.0);
  std::vector<std::uint8_t> degenerate(folds, 0);
  parallel_for(0, folds, [&](std::size_t fold) {
    std::vector<std::size_t> held;
    for (std::size_t i = fold; i < n; i += folds) held.push_back(order[i]);
    bool iteration_degenerate = false;
    const auto scores = table.scores_without(data, weights, held, &iteration_degenerate);
    const auto labels = detail::safe_two_means(scores, &iteration_degenerate);
    bool mcc_degenerate = false;
    mccs[fold] = mcc(labels, full.labels, &mcc_degenerate);
    degenerate[fold] = iteration_degenerate || mcc_degenerate;
  });
  const auto flagged = static_cast<std::size_t>(
      std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
  return detail::summarize_mcc(std::move(mccs), flagged, ValidationScheme::ten_fold);
}

}  // namespace surveykit
