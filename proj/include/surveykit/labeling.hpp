// SPDX-License-Identifier: Apache-2.0
#pragma once

// Score-to-label conversion and the validation machinery around it.
//
// One-dimensional 2-means is solved exactly: scores are sorted and every
// contiguous split between distinct values is evaluated for total
// within-cluster SSE. This sidesteps Lloyd initialization entirely while
// returning the same optimum. The higher-centroid cluster is "atypical".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"
#include "surveykit/parallel.hpp"
#include "surveykit/rng.hpp"

namespace surveykit {

enum class OutlierLabel : std::uint8_t { typical = 0, atypical = 1 };

struct OutlierLabeling {
  std::vector<OutlierLabel> labels;
  double centroid_low = 0.0;
  double centroid_high = 0.0;
  double boundary = 0.0;

  std::vector<std::size_t> atypical_ids() const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == OutlierLabel::atypical) ids.push_back(i);
    }
    return ids;
  }
};

inline OutlierLabeling two_means_1d(std::span<const double> scores) {
  const std::size_t n = scores.size();
  require(n >= 2, ErrorCode::invalid_argument, "need at least two scores");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] < scores[b] : a < b;
  });
  require(scores[order.front()] != scores[order.back()], ErrorCode::all_equal_scores,
          "all scores are equal; no two-cluster structure");

  std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores[order[i]];
    prefix_sum[i + 1] = prefix_sum[i] + s;
    prefix_sq[i + 1] = prefix_sq[i] + s * s;
  }
  auto sse = [&](std::size_t begin, std::size_t end) {
    const double sum = prefix_sum[end] - prefix_sum[begin];
    const double sq = prefix_sq[end] - prefix_sq[begin];
    const double m = static_cast<double>(end - begin);
    return sq - sum * sum / m;
  };

  // Splits inside a run of equal values never beat the run boundary, and
  // skipping them keeps "score >= boundary implies atypical" exact.
  std::size_t best_split = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t split = 1; split < n; ++split) {
    if (scores[order[split - 1]] == scores[order[split]]) continue;
    const double total = sse(0, split) + sse(split, n);
    if (total < best_sse) {
      best_sse = total;
      best_split = split;
    }
  }

  OutlierLabeling out;
  out.labels.assign(n, OutlierLabel::typical);
  for (std::size_t i = best_split; i < n; ++i) out.labels[order[i]] = OutlierLabel::atypical;
  out.centroid_low = prefix_sum[best_split] / static_cast<double>(best_split);
  out.centroid_high =
      (prefix_sum[n] - prefix_sum[best_split]) / static_cast<double>(n - best_split);
  out.boundary = 0.5 * (scores[order[best_split - 1]] + scores[order[best_split]]);
  return out;
}

inline std::vector<OutlierLabel> apply_boundary(std::span<const double> scores, double boundary) {
  std::vector<OutlierLabel> labels(scores.size(), OutlierLabel::typical);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= boundary) labels[i] = OutlierLabel::atypical;
  }
  return labels;
}

// Matthews correlation on the 2x2 confusion table; degenerate denominators
// (either side single-class) return 0, optionally flagged.
inline double mcc(std::span<const OutlierLabel> a, std::span<const OutlierLabel> b,
                  bool* degenerate = nullptr) {
  require(a.size() == b.size(), ErrorCode::length_mismatch, "label vectors differ in length");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ai = a[i] == OutlierLabel::atypical;
    const bool bi = b[i] == OutlierLabel::atypical;
    tp += ai && bi;
    tn += !ai && !bi;
    fp += ai && !bi;
    fn += !ai && bi;
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (degenerate != nullptr) *degenerate = denom == 0.0;
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

enum class ValidationScheme { leave_one_out, ten_fold };

inline const char* to_string(ValidationScheme scheme) {
  return scheme == ValidationScheme::leave_one_out ? "leave_one_out" : "ten_fold";
}

struct ValidationReport {
  double mcc_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  ValidationScheme scheme = ValidationScheme::leave_one_out;
  std::size_t iterations = 0;
  std::size_t degenerate_count = 0; // single-class or all-equal-score iterations
};

// How leave-one-out treats the detector. `full` refits the detector on every
// reduced dataset; `threshold_only` keeps the full-data scores and refits
// only the two-means split, which is the practical choice when one fit is
// expensive (the removed item still leaves the clustering, just not the
// scores).
enum class RefitMode { full, threshold_only };

namespace detail {

inline ValidationReport summarize_mcc(std::vector<double> values, std::size_t degenerate,
                                      ValidationScheme scheme) {
  ValidationReport report;
  report.scheme = scheme;
  report.iterations = values.size();
  report.degenerate_count = degenerate;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  report.mcc_mean = mean;
  report.ci_low = std::max(-1.0, mean - 1.96 * se);
  report.ci_high = std::min(1.0, mean + 1.96 * se);
  return report;
}

// Two-means that tolerates degenerate score vectors: all-equal scores mean
// "no outliers" rather than an error during validation loops.
inline std::vector<OutlierLabel> safe_two_means(std::span<const double> scores, bool* degenerate) {
  *degenerate = false;
  bool all_equal = true;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] != scores[0]) {
      all_equal = false;
      break;
    }
  }
  if (scores.size() < 2 || all_equal) {
    *degenerate = true;
    return std::vector<OutlierLabel>(scores.size(), OutlierLabel::typical);
  }
  return two_means_1d(scores).labels;
}

}  // namespace detail

// Leave-one-out stability validation. The fitter must provide
//   Model fit(const CategoricalDataset&, const NormalizedWeights&) const
// with Model exposing train_scores(). Per held-out item the remaining rows
// are relabeled and compared (MCC) against the full-data labeling restricted
// to them.
template <typename Fitter>
ValidationReport stability_validation(const Fitter& fitter, const CategoricalDataset& data,
                                      const NormalizedWeights& weights,
                                      RefitMode mode = RefitMode::full) {
  const std::size_t n = data.n_rows();
  require(n >= 3, ErrorCode::too_few_items, "stability validation needs at least 3 rows");

  const auto full_model = fitter.fit(data, weights);
  const std::vector<double> full_scores = full_model.train_scores();
  const OutlierLabeling full_labels = two_means_1d(full_scores);

  std::vector<double> mccs(n, 0.0);
  std::vector<std::uint8_t> degenerate(n, 0);
  parallel_for(0, n, [&](std::size_t held_out) {
    std::vector<std::size_t> kept;
    kept.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != held_out) kept.push_back(i);
    }
    std::vector<double> scores;
    bool iteration_degenerate = false;
    if (mode == RefitMode::full) {
      const CategoricalDataset reduced = data.subset(kept);
      const auto model = fitter.fit(reduced, normalize_weights(reduced));
      scores = model.train_scores();
    } else {
      scores.reserve(n - 1);
      for (const std::size_t i : kept) scores.push_back(full_scores[i]);
    }
    const auto labels = detail::safe_two_means(scores, &iteration_degenerate);
    std::vector<OutlierLabel> reference;
    reference.reserve(n - 1);
    for (const std::size_t i : kept) reference.push_back(full_labels.labels[i]);
    bool mcc_degenerate = false;
    mccs[held_out] = mcc(labels, reference, &mcc_degenerate);
    degenerate[held_out] = iteration_degenerate || mcc_degenerate;
  });

  const auto flagged = static_cast<std::size_t>(
      std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
  return detail::summarize_mcc(std::move(mccs), flagged, ValidationScheme::leave_one_out);
}

// K-fold internal validation. The fitter's Model additionally needs
//   double score(std::span<const int> row) const
// so held-out rows can be scored by a model trained without them.
template <typename Fitter>
ValidationReport internal_validation(const Fitter& fitter, const CategoricalDataset& data,
                                     const NormalizedWeights& weights, std::size_t folds,
                                     std::uint64_t seed) {
  const std::size_t n = data.n_rows();
  require(folds >= 2, ErrorCode::invalid_argument, "need at least 2 folds");
  require(n >= folds, ErrorCode::too_few_items, "fewer rows than folds");

  const auto full_model = fitter.fit(data, weights);
  const OutlierLabeling full_labels = two_means_1d(full_model.train_scores());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<double> mccs(folds, 0.0);
  std::vector<std::uint8_t> degenerate(folds, 0);
  parallel_for(0, folds, [&](std::size_t fold) {
    std::vector<std::size_t> held, kept;
    for (std::size_t i = 0; i < n; ++i) {
      (i % folds == fold ? held : kept).push_back(order[i]);
    }
    const CategoricalDataset training = data.subset(kept);
    const auto model = fitter.fit(training, normalize_weights(training));
    std::vector<double> scores;
    scores.reserve(held.size());
    for (const std::size_t i : held) scores.push_back(model.score(data.row(i)));
    bool iteration_degenerate = false;
    const auto labels = detail::safe_two_means(scores, &iteration_degenerate);
    std::vector<OutlierLabel> reference;
    reference.reserve(held.size());
    for (const std::size_t i : held) reference.push_back(full_labels.labels[i]);
    bool mcc_degenerate = false;
    mccs[fold] = mcc(labels, reference, &mcc_degenerate);
    degenerate[fold] = iteration_degenerate || mcc_degenerate;
  });

  const auto flagged = static_cast<std::size_t>(
      std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
  return detail::summarize_mcc(std::move(mccs), flagged, ValidationScheme::ten_fold);
}

struct ImportanceReport {
  struct Row {
    std::string variable;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
  };
  std::vector<Row> rows; // in variable order
  std::size_t permutations = 0;
};

// Permutation feature importance against a fitted model. One variable at a
// time is shuffled (weights untouched), every row is rescored, labels are
// re-derived with the fitted two-means boundary, and the importance is
// 1 - accuracy against the reference labels. The 95% CI comes from jackknife
// resampling over the permutation replicates.
template <typename Model>
ImportanceReport permutation_importance(const Model& model, const OutlierLabeling& reference,
                                        const CategoricalDataset& data, std::size_t reps,
                                        std::uint64_t seed) {
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_vars();
  require(reps >= 2, ErrorCode::invalid_argument, "need at least 2 permutations");
  require(reference.labels.size() == n, ErrorCode::dimension_mismatch,
          "reference labels do not match row count");

  std::vector<std::vector<double>> importance(p, std::vector<double>(reps, 0.0));
  parallel_for(0, p * reps, [&](std::size_t task) {
    const std::size_t variable = task / reps;
    const std::size_t rep = task % reps;
    std::vector<int> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = data.at(i, variable);
    Rng rng(derive_seed(seed, task));
    rng.shuffle(column);

    std::vector<int> row(p);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto original = data.row(i);
      std::copy(original.begin(), original.end(), row.begin());
      row[variable] = column[i];
      const double score = model.score(std::span<const int>(row));
      const OutlierLabel label =
          score >= reference.boundary ? OutlierLabel::atypical : OutlierLabel::typical;
      agree += label == reference.labels[i];
    }
    importance[variable][rep] =
        1.0 - static_cast<double>(agree) / static_cast<double>(n);
  });

  ImportanceReport report;
  report.permutations = reps;
  const double r = static_cast<double>(reps);
  for (std::size_t v = 0; v < p; ++v) {
    const auto& values = importance[v];
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    const double mean = total / r;
    // jackknife over replicates
    double ss = 0.0;
    for (const double value : values) {
      const double loo_mean = (total - value) / (r - 1.0);
      ss += (loo_mean - mean) * (loo_mean - mean);
    }
    const double se = std::sqrt((r - 1.0) / r * ss);
    report.rows.push_back({data.specs[v].name, mean, std::max(0.0, mean - 1.96 * se),
                           std::min(1.0, mean + 1.96 * se)});
  }
  return report;
}

}  // namespace surveykit
