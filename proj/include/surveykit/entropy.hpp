// SPDX-License-Identifier: Apache-2.0
#pragma once

// Univariate entropy scoring. Each variable gets a normalized score in [0,1]
// (0 = uniform across observed categories, 1 = degenerate), plus per-category
// information content in nats to single out the rare categories.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"

namespace surveykit {

// Survey-weighted category frequencies of one variable. Weights must be
// normalized; the result sums to 1.
inline std::vector<double> weighted_frequencies(const CategoricalDataset& data,
                                                const NormalizedWeights& weights,
                                                std::size_t variable) {
  require(variable < data.n_vars(), ErrorCode::bad_variable_index,
          "variable index " + std::to_string(variable) + " out of range");
  require(weights.size() == data.n_rows(), ErrorCode::dimension_mismatch,
          "weights do not match row count");
  std::vector<double> freqs(data.specs[variable].category_count(), 0.0);
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    freqs[static_cast<std::size_t>(data.at(i, variable))] += weights[i];
  }
  return freqs;
}

// Normalized entropy complement: 1 + (1/log k) * sum p_i log p_i, where k
// counts the categories with nonzero frequency and 0 log 0 := 0. A variable
// with fewer than two observed categories scores 1 (the concentration limit);
// `degenerate`, when given, flags that case instead of raising an error.
inline double gamma1(std::span<const double> frequencies, bool* degenerate = nullptr) {
  std::size_t observed = 0;
  double plogp = 0.0;
  for (const double p : frequencies) {
    if (p > 0.0) {
      ++observed;
      plogp += p * std::log(p);
    }
  }
  if (degenerate != nullptr) *degenerate = observed < 2;
  if (observed < 2) return 1.0;
  const double score = 1.0 + plogp / std::log(static_cast<double>(observed));
  return std::min(1.0, std::max(0.0, score));
}

// -log p per category; +inf marks unobserved categories.
inline std::vector<double> information_content(std::span<const double> frequencies) {
  std::vector<double> info;
  info.reserve(frequencies.size());
  for (const double p : frequencies) {
    info.push_back(p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity());
  }
  return info;
}

struct CategoryEntropy {
  std::string label;
  double frequency = 0.0;
  double info_nats = 0.0; // +inf when unobserved
};

struct VariableEntropy {
  std::string variable;
  double gamma1 = 0.0;
  bool degenerate = false;
  std::size_t observed_categories = 0;
  std::vector<CategoryEntropy> categories;
};

struct EntropyReport {
  std::vector<VariableEntropy> variables;

  std::vector<double> scores() const {
    std::vector<double> out;
    out.reserve(variables.size());
    for (const auto& v : variables) out.push_back(v.gamma1);
    return out;
  }
};

inline EntropyReport entropy_report(const CategoricalDataset& data,
                                    const NormalizedWeights& weights) {
  EntropyReport report;
  report.variables.reserve(data.n_vars());
  for (std::size_t v = 0; v < data.n_vars(); ++v) {
    VariableEntropy entry;
    entry.variable = data.specs[v].name;
    const auto freqs = weighted_frequencies(data, weights, v);
    entry.gamma1 = gamma1(freqs, &entry.degenerate);
    const auto info = information_content(freqs);
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      if (freqs[k] > 0.0) ++entry.observed_categories;
      entry.categories.push_back({data.specs[v].categories[k], freqs[k], info[k]});
    }
    report.variables.push_back(std::move(entry));
  }
  return report;
}

}  // namespace surveykit
