// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared fixture builders for the test suites: the published marginal table,
// anomaly injection, categorical blob generators, and stub detectors for the
// validation machinery.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/labeling.hpp"
#include "surveykit/rng.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return std::filesystem::path(SURVEYKIT_DATA_DIR); }

inline surveykit::Marginals liguria_marginals() {
  return surveykit::load_marginals(data_dir() / "eusilc_liguria_2019.marginals");
}

// The seven variables reported atypical, with their published entropy scores.
inline std::vector<std::pair<std::string, double>> published_atypical_scores() {
  return {
      {"Lived within the household for the whole 2019", 0.951527},
      {"Secondary citizenship (if applicable)", 0.874917},
      {"Severity of material deprivation", 0.804957},
      {"Type of school attended (if applicable)", 0.737139},
      {"Italian citizenship", 0.725303},
      {"Italian citizen from birth", 0.714841},
      {"Continuous residence in Italy", 0.657279},
  };
}

// Overwrite the chosen rows with a coherent rare pattern: every listed
// (variable, category) pair is forced, other cells stay as generated. Used to
// plant detectable anomalies in marginal fixtures.
inline void inject_pattern(surveykit::CategoricalDataset& data,
                           std::span<const std::size_t> rows,
                           const std::vector<std::pair<std::size_t, int>>& pattern) {
  for (const std::size_t r : rows) {
    for (const auto& [variable, code] : pattern) {
      data.row(r)[variable] = code;
    }
  }
}

// Picks `count` distinct anomaly row ids deterministically.
inline std::vector<std::size_t> pick_rows(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  surveykit::Rng rng(seed);
  rng.shuffle(ids);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// A rare multivariate signature over the published schema: rare categories of
// six citizenship/residence/deprivation variables forced simultaneously.
inline std::vector<std::pair<std::size_t, int>> rare_signature(const surveykit::Marginals& m) {
  auto index_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t v = 0; v < m.specs.size(); ++v) {
      if (m.specs[v].name == name) return v;
    }
    throw std::runtime_error("unknown variable " + name);
  };
  auto code_of = [&](std::size_t v, const std::string& label) {
    return m.specs[v].code_of(label);
  };
  std::vector<std::pair<std::size_t, int>> pattern;
  const std::size_t citizenship = index_of("Italian citizenship");
  pattern.emplace_back(citizenship, code_of(citizenship, "No"));
  const std::size_t birth = index_of("Italian citizen from birth");
  pattern.emplace_back(birth, code_of(birth, "No"));
  const std::size_t secondary = index_of("Secondary citizenship (if applicable)");
  pattern.emplace_back(secondary, code_of(secondary, "Yes"));
  const std::size_t residence = index_of("Continuous residence in Italy");
  pattern.emplace_back(residence, code_of(residence, "No"));
  const std::size_t lived = index_of("Lived within the household for the whole 2019");
  pattern.emplace_back(lived, code_of(lived, "No, only for a period"));
  const std::size_t deprivation = index_of("Severity of material deprivation");
  pattern.emplace_back(deprivation, code_of(deprivation, "Yes"));
  return pattern;
}

// Make each chosen row a unique diffuse rarity: `coords` randomly chosen
// columns are reset to uniformly random categories. Unlike a shared pattern,
// scrambled rows do not form a cluster of their own, which is the kind of
// anomaly reconstruction-error detectors respond to.
inline void scramble_rows(surveykit::CategoricalDataset& data,
                          std::span<const std::size_t> rows, std::size_t coords,
                          std::uint64_t seed) {
  surveykit::Rng rng(seed);
  for (const std::size_t r : rows) {
    for (std::size_t c = 0; c < coords; ++c) {
      const std::size_t v = rng.next_below(data.n_vars());
      const auto cats = static_cast<std::uint64_t>(data.specs[v].category_count());
      data.row(r)[v] = static_cast<int>(rng.next_below(cats));
    }
  }
}

// Correlated survey-like bulk: every row follows one of `classes` latent
// profiles (profiles themselves drawn from the marginals); each cell keeps the
// profile's category with probability 1 - noise, otherwise it is redrawn from
// the variable's marginal. Independent-column fixtures have a flat kernel
// spectrum on which in-sample reconstruction errors are uninformative, so the
// KPCA detection tests use this generator.
inline surveykit::CategoricalDataset latent_class_fixture(const surveykit::Marginals& m,
                                                          std::size_t n, std::size_t classes,
                                                          double noise, std::uint64_t seed) {
  surveykit::Rng rng(seed);
  std::vector<std::vector<double>> cumulative(m.n_vars());
  for (std::size_t v = 0; v < m.n_vars(); ++v) {
    cumulative[v] = m.frequencies[v];
    for (std::size_t k = 1; k < cumulative[v].size(); ++k) cumulative[v][k] += cumulative[v][k - 1];
  }
  std::vector<std::vector<int>> profiles(classes, std::vector<int>(m.n_vars()));
  for (auto& profile : profiles) {
    for (std::size_t v = 0; v < m.n_vars(); ++v) {
      profile[v] = static_cast<int>(surveykit::sample_cumulative(cumulative[v], rng));
    }
  }
  surveykit::CategoricalDataset data;
  data.specs = m.specs;
  data.weights.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::size_t>(rng.next_below(classes));
    for (std::size_t v = 0; v < m.n_vars(); ++v) {
      int code = profiles[cls][v];
      if (rng.next_double() < noise) {
        code = static_cast<int>(surveykit::sample_cumulative(cumulative[v], rng));
      }
      data.cells.push_back(code);
    }
  }
  return data;
}

// Generic categorical schema with `p` variables of `cats` categories each.
inline std::vector<surveykit::VariableSpec> generic_specs(std::size_t p, int cats) {
  std::vector<surveykit::VariableSpec> specs;
  for (std::size_t v = 0; v < p; ++v) {
    surveykit::VariableSpec spec;
    spec.name = "v" + std::to_string(v);
    spec.kind = surveykit::VariableKind::nominal;
    for (int c = 0; c < cats; ++c) spec.categories.push_back("c" + std::to_string(c));
    specs.push_back(std::move(spec));
  }
  return specs;
}

// Planted categorical blobs: `sizes[c]` members copied from prototype c with
// each cell flipped to a random other category with probability `jitter`.
// Prototypes are mutually far apart (distinct categories coordinate-wise).
inline surveykit::CategoricalDataset blob_dataset(std::span<const std::size_t> sizes,
                                                  std::size_t p, int cats, double jitter,
                                                  std::uint64_t seed,
                                                  std::vector<int>* truth = nullptr) {
  surveykit::CategoricalDataset data;
  data.specs = generic_specs(p, cats);
  surveykit::Rng rng(seed);
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t member = 0; member < sizes[c]; ++member) {
      for (std::size_t v = 0; v < p; ++v) {
        int code = static_cast<int>(c % static_cast<std::size_t>(cats));
        if (rng.next_double() < jitter) {
          code = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cats)));
        }
        data.cells.push_back(code);
      }
      data.weights.push_back(1.0);
      if (truth != nullptr) truth->push_back(static_cast<int>(c));
    }
  }
  return data;
}

// Random dataset with independent uniform categories.
inline surveykit::CategoricalDataset random_dataset(std::size_t n, std::size_t p, int cats,
                                                    std::uint64_t seed) {
  surveykit::CategoricalDataset data;
  data.specs = generic_specs(p, cats);
  surveykit::Rng rng(seed);
  for (std::size_t i = 0; i < n * p; ++i) {
    data.cells.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cats))));
  }
  data.weights.assign(n, 1.0);
  return data;
}

// Stub detector whose score is the code of column 0; refitting is trivial, so
// it exercises the validation plumbing with exactly separable scores.
struct ColumnScoreDetector {
  struct Model {
    std::vector<double> scores;
    const std::vector<double>& train_scores() const { return scores; }
    double score(std::span<const int> row) const { return static_cast<double>(row[0]); }
  };
  Model fit(const surveykit::CategoricalDataset& data, const surveykit::NormalizedWeights&) const {
    Model m;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      m.scores.push_back(static_cast<double>(data.at(i, 0)));
    }
    return m;
  }
};

}  // namespace fixtures
