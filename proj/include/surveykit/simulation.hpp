// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario-driven Monte Carlo runs: stratified SRS + STS versus multi-frame
// Sampford + SM/PML, per allocation scheme, with MSE / relative-bias metrics
// over the replications. Replication r derives its seed from the master seed,
// so results are identical for any thread count.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"
#include "surveykit/parallel.hpp"
#include "surveykit/rng.hpp"
#include "surveykit/sampling.hpp"

namespace surveykit {

struct ScenarioConfig {
  PopulationConfig population{};
  int strata = 3;
  int frames = 3;
  std::vector<std::size_t> domain_sizes;
  FrameAssignment frame_assignment = FrameAssignment::random_shuffle;
  std::size_t sample_size = 0;
  double budget = 0.0;
  double fixed_cost = 0.0;
  std::vector<double> unit_costs;
  std::vector<AllocationScheme> allocations;
  std::size_t replications = 2500;

  void validate() const {
    population.validate();
    require(sample_size > 0, ErrorCode::schema_mismatch, "missing config field 'sample_size'");
    require(!allocations.empty(), ErrorCode::schema_mismatch,
            "missing config field 'allocations'");
    require(!domain_sizes.empty(), ErrorCode::schema_mismatch,
            "missing config field 'domain_sizes'");
    require(replications >= 1, ErrorCode::invalid_argument, "replications must be positive");
    const bool needs_costs =
        std::find(allocations.begin(), allocations.end(), AllocationScheme::optimal_cost) !=
        allocations.end();
    if (needs_costs) {
      require(!unit_costs.empty(), ErrorCode::schema_mismatch,
              "missing config field 'unit_costs'");
      require(budget > 0.0, ErrorCode::schema_mismatch, "missing config field 'budget'");
    }
  }
};

inline ScenarioConfig parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open '" + path.string() + "'");
  ScenarioConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::strip(line);
    if (text.empty() || text[0] == '#') continue;
    std::istringstream tokens(text);
    std::string key;
    tokens >> key;
    auto context = [&](const std::string& msg) {
      return path.string() + ":" + std::to_string(line_no) + ": " + msg;
    };
    auto read_double = [&](double& value) {
      require(static_cast<bool>(tokens >> value), ErrorCode::parse_error,
              context("expected a number after '" + key + "'"));
    };
    auto read_size = [&](std::size_t& value) {
      long long raw = 0;
      require(static_cast<bool>(tokens >> raw) && raw >= 0, ErrorCode::parse_error,
              context("expected a nonnegative integer after '" + key + "'"));
      value = static_cast<std::size_t>(raw);
    };
    if (key == "population_size") read_size(config.population.size);
    else if (key == "mu_x") read_double(config.population.mu_x);
    else if (key == "mu_y") read_double(config.population.mu_y);
    else if (key == "sigma_x") read_double(config.population.sigma_x);
    else if (key == "sigma_y") read_double(config.population.sigma_y);
    else if (key == "rho") read_double(config.population.rho);
    else if (key == "strata") { std::size_t v; read_size(v); config.strata = static_cast<int>(v); }
    else if (key == "frames") { std::size_t v; read_size(v); config.frames = static_cast<int>(v); }
    else if (key == "sample_size") read_size(config.sample_size);
    else if (key == "budget") read_double(config.budget);
    else if (key == "fixed_cost") read_double(config.fixed_cost);
    else if (key == "replications") read_size(config.replications);
    else if (key == "domain_sizes") {
      std::size_t v;
      long long raw;
      while (tokens >> raw) {
        require(raw >= 0, ErrorCode::parse_error, context("domain sizes must be nonnegative"));
        v = static_cast<std::size_t>(raw);
        config.domain_sizes.push_back(v);
      }
    } else if (key == "unit_costs") {
      double v;
      while (tokens >> v) config.unit_costs.push_back(v);
    } else if (key == "frame_assignment") {
      std::string name;
      require(static_cast<bool>(tokens >> name), ErrorCode::parse_error,
              context("expected 'random' or 'sequential_x'"));
      if (name == "random") config.frame_assignment = FrameAssignment::random_shuffle;
      else if (name == "sequential_x") config.frame_assignment = FrameAssignment::sequential_by_x;
      else fail(ErrorCode::parse_error, context("unknown frame_assignment '" + name + "'"));
    } else if (key == "allocations") {
      std::string name;
      while (tokens >> name) {
        if (name == "proportional") config.allocations.push_back(AllocationScheme::proportional);
        else if (name == "optimal_cost") config.allocations.push_back(AllocationScheme::optimal_cost);
        else fail(ErrorCode::parse_error, context("unknown allocation '" + name + "'"));
      }
    } else {
      fail(ErrorCode::parse_error, context("unknown scenario key '" + key + "'"));
    }
  }
  config.validate();
  return config;
}

struct EstimatorRunResult {
  std::string estimator;  // STS, SM, PML
  std::string allocation; // proportional, optimal_cost
  std::vector<double> estimates;
  double mse = 0.0;
  double relative_bias = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  std::size_t replications = 0;
  bool unreliable = false;
};

struct MonteCarloResult {
  double true_mean = 0.0;
  std::size_t replications = 0;
  std::vector<std::size_t> stratum_sizes;
  std::vector<std::size_t> frame_sizes;
  std::vector<std::size_t> sts_proportional, sts_optimal;
  std::vector<std::size_t> mf_proportional, mf_optimal;
  std::vector<EstimatorRunResult> results;
};

namespace detail {

inline double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Kahan-compensated mean of f(value).
template <typename F>
double compensated_mean(std::span<const double> values, F&& f) {
  double sum = 0.0, carry = 0.0;
  for (const double v : values) {
    const double term = f(v) - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum / static_cast<double>(values.size());
}

inline EstimatorRunResult summarize_estimates(std::string estimator, std::string allocation,
                                              std::vector<double> estimates, double true_mean) {
  EstimatorRunResult out;
  out.estimator = std::move(estimator);
  out.allocation = std::move(allocation);
  out.replications = estimates.size();
  out.unreliable = estimates.size() < 2;
  out.mse = compensated_mean(estimates, [&](double e) {
    const double d = e - true_mean;
    return d * d;
  });
  out.relative_bias = compensated_mean(estimates, [&](double e) { return (e - true_mean) / true_mean; });
  out.p5 = percentile(estimates, 0.05);
  out.p95 = percentile(estimates, 0.95);
  out.estimates = std::move(estimates);
  return out;
}

inline double population_sd(std::span<const double> values) {
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace detail

inline MonteCarloResult run_monte_carlo(const ScenarioConfig& config, std::uint64_t master_seed) {
  config.validate();

  PopulationConfig pop_config = config.population;
  pop_config.seed = derive_seed(master_seed, 0);
  SyntheticPopulation pop = generate_population(pop_config);
  stratify(pop, config.strata);
  build_frames(pop, config.domain_sizes, config.frames, derive_seed(master_seed, 1),
               config.frame_assignment);

  MonteCarloResult result;
  result.true_mean = pop.mean_y();
  result.replications = config.replications;
  result.stratum_sizes = pop.stratum_sizes();
  result.frame_sizes = pop.frame_sizes();

  // Unit lists and allocation inputs. Sigmas come from the true population
  // values: plain sd of y within strata, sd of y/multiplicity within frames.
  std::vector<std::vector<std::size_t>> stratum_units, frame_units;
  std::vector<double> stratum_sigma, frame_sigma;
  for (int s = 0; s < config.strata; ++s) {
    stratum_units.push_back(pop.stratum_units(s));
    std::vector<double> values;
    for (const std::size_t unit : stratum_units.back()) values.push_back(pop.y[unit]);
    stratum_sigma.push_back(detail::population_sd(values));
  }
  for (int q = 0; q < config.frames; ++q) {
    frame_units.push_back(pop.frame_units(q));
    std::vector<double> values;
    for (const std::size_t unit : frame_units.back()) {
      values.push_back(pop.y[unit] / static_cast<double>(pop.multiplicity[unit]));
    }
    frame_sigma.push_back(detail::population_sd(values));
  }

  struct Series {
    std::string estimator;
    AllocationScheme allocation;
    std::vector<std::size_t> sizes;        // per stratum or frame
    std::vector<double> estimates;
  };
  std::vector<Series> series;
  for (const AllocationScheme scheme : config.allocations) {
    std::vector<std::size_t> sts_sizes, mf_sizes;
    if (scheme == AllocationScheme::proportional) {
      sts_sizes = allocate_proportional(result.stratum_sizes, config.sample_size).sizes;
      mf_sizes = allocate_proportional(result.frame_sizes, config.sample_size).sizes;
      result.sts_proportional = sts_sizes;
      result.mf_proportional = mf_sizes;
    } else {
      sts_sizes = allocate_optimal_cost(result.stratum_sizes, stratum_sigma, config.unit_costs,
                                        config.budget, config.fixed_cost)
                      .sizes;
      mf_sizes = allocate_optimal_cost(result.frame_sizes, frame_sigma, config.unit_costs,
                                       config.budget, config.fixed_cost)
                     .sizes;
      result.sts_optimal = sts_sizes;
      result.mf_optimal = mf_sizes;
    }
    series.push_back({"STS", scheme, sts_sizes, std::vector<double>(config.replications)});
    series.push_back({"SM", scheme, mf_sizes, std::vector<double>(config.replications)});
    series.push_back({"PML", scheme, mf_sizes, std::vector<double>(config.replications)});
  }

  parallel_for(0, config.replications, [&](std::size_t rep) {
    Rng rng(derive_seed(master_seed, 100 + rep));
    for (std::size_t block = 0; block < series.size(); block += 3) {
      auto& sts = series[block];
      auto& sm = series[block + 1];
      auto& pml = series[block + 2];

      std::vector<std::vector<std::size_t>> sts_samples;
      for (int s = 0; s < config.strata; ++s) {
        const auto positions =
            srs_sample(stratum_units[static_cast<std::size_t>(s)].size(),
                       sts.sizes[static_cast<std::size_t>(s)], rng);
        std::vector<std::size_t> units;
        units.reserve(positions.size());
        for (const std::size_t p : positions) {
          units.push_back(stratum_units[static_cast<std::size_t>(s)][p]);
        }
        sts_samples.push_back(std::move(units));
      }
      sts.estimates[rep] = estimate_sts(sts_samples, pop);

      std::vector<FrameSampleData> frame_samples;
      for (int q = 0; q < config.frames; ++q) {
        const auto& units = frame_units[static_cast<std::size_t>(q)];
        const std::vector<double> measure(units.size(), 1.0);
        const auto draw =
            sampford_sample(measure, sm.sizes[static_cast<std::size_t>(q)], rng);
        FrameSampleData data;
        data.frame = q;
        for (const std::size_t position : draw.selected) {
          data.units.push_back(units[position]);
          data.pi.push_back(draw.inclusion[position]);
        }
        frame_samples.push_back(std::move(data));
      }
      sm.estimates[rep] = estimate_sm(frame_samples, pop);
      pml.estimates[rep] = estimate_pml(frame_samples, pop).estimate;
    }
  });

  for (auto& s : series) {
    result.results.push_back(detail::summarize_estimates(s.estimator, to_string(s.allocation),
                                                         std::move(s.estimates), result.true_mean));
  }
  return result;
}

}  // namespace surveykit
