// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo evaluation of integrative sampling strategies on a synthetic
// population: stratified SRS with the classical stratified estimator (STS)
// versus overlapping multi-frame designs sampled by Rao-Sampford with the
// simple-multiplicity (SM) and pseudo-maximum-likelihood (PML) estimators.
//
// Frames are built from 2^Q - 1 disjoint membership domains (domain mask bit
// q = unit listed in frame q), so a unit's multiplicity is the popcount of
// its domain mask. The PML estimator maximizes the multinomial
// pseudo-likelihood of the domain sizes under the known frame totals; the
// constrained maximum is found by coordinate descent on the dual variables,
// i.e. by iteratively adjusting domain-frame totals until every frame
// constraint is met.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "surveykit/error.hpp"
#include "surveykit/parallel.hpp"
#include "surveykit/rng.hpp"

namespace surveykit {

struct PopulationConfig {
  std::size_t size = 3000;
  double mu_x = 4.0;
  double mu_y = 1.0;
  double sigma_x = 0.3;
  double sigma_y = 0.2;
  double rho = 0.85;
  std::uint64_t seed = 0;

  void validate() const {
    require(size >= 1, ErrorCode::invalid_argument, "population size must be at least 1");
    require(sigma_x > 0.0 && sigma_y > 0.0, ErrorCode::invalid_argument,
            "sigmas must be positive");
    require(std::abs(rho) < 1.0, ErrorCode::invalid_argument, "|rho| must be below 1");
  }
};

struct SyntheticPopulation {
  std::vector<double> x; // design variable
  std::vector<double> y; // study variable
  std::vector<int> stratum;
  std::vector<unsigned> frame_mask; // bit q set = unit listed in frame q
  std::vector<int> multiplicity;
  int frame_count = 0;
  bool degenerate_strata = false;

  std::size_t size() const { return y.size(); }

  double mean_y() const {
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(size());
  }

  std::vector<std::size_t> stratum_sizes() const {
    std::vector<std::size_t> sizes;
    for (const int s : stratum) {
      if (static_cast<std::size_t>(s) >= sizes.size()) sizes.resize(static_cast<std::size_t>(s) + 1, 0);
      ++sizes[static_cast<std::size_t>(s)];
    }
    return sizes;
  }

  std::vector<std::size_t> stratum_units(int s) const {
    std::vector<std::size_t> units;
    for (std::size_t i = 0; i < size(); ++i) {
      if (stratum[i] == s) units.push_back(i);
    }
    return units;
  }

  std::vector<std::size_t> frame_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(frame_count), 0);
    for (const unsigned mask : frame_mask) {
      for (int q = 0; q < frame_count; ++q) {
        if (mask & (1u << q)) ++sizes[static_cast<std::size_t>(q)];
      }
    }
    return sizes;
  }

  std::vector<std::size_t> frame_units(int q) const {
    std::vector<std::size_t> units;
    for (std::size_t i = 0; i < size(); ++i) {
      if (frame_mask[i] & (1u << q)) units.push_back(i);
    }
    return units;
  }
};

// Bivariate Gaussian pairs, rejection-resampled until both coordinates are
// strictly positive. At the default parameters the truncated mass is far
// below 1e-8, so rejection is exact and cheap.
inline SyntheticPopulation generate_population(const PopulationConfig& config) {
  config.validate();
  SyntheticPopulation pop;
  pop.x.reserve(config.size);
  pop.y.reserve(config.size);
  Rng rng(config.seed);
  const double cross = config.rho;
  const double residual = std::sqrt(1.0 - config.rho * config.rho);
  for (std::size_t i = 0; i < config.size; ++i) {
    double x = 0.0, y = 0.0;
    do {
      const double z1 = rng.next_gaussian();
      const double z2 = rng.next_gaussian();
      x = config.mu_x + config.sigma_x * z1;
      y = config.mu_y + config.sigma_y * (cross * z1 + residual * z2);
    } while (x <= 0.0 || y <= 0.0);
    pop.x.push_back(x);
    pop.y.push_back(y);
  }
  pop.stratum.assign(config.size, 0);
  pop.frame_mask.assign(config.size, 0);
  pop.multiplicity.assign(config.size, 0);
  return pop;
}

// Three strata split at the empirical 33rd and 66th percentiles of x. With
// all x equal the split degenerates to index order; the flag records it.
inline void stratify(SyntheticPopulation& pop, int strata = 3) {
  require(strata == 3, ErrorCode::invalid_argument, "stratification is defined for 3 strata");
  const std::size_t n = pop.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pop.x[a] != pop.x[b] ? pop.x[a] < pop.x[b] : a < b;
  });
  pop.degenerate_strata = n > 0 && pop.x[order.front()] == pop.x[order.back()];
  const auto cut1 = static_cast<std::size_t>(0.33 * static_cast<double>(n));
  const auto cut2 = static_cast<std::size_t>(0.66 * static_cast<double>(n));
  pop.stratum.assign(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    pop.stratum[order[rank]] = rank < cut1 ? 0 : (rank < cut2 ? 1 : 2);
  }
}

// How population units are laid out across the membership domains.
// `random_shuffle` scatters units uniformly; `sequential_by_x` walks the
// units in ascending x and lays the domains out as bands ordered by their
// mean frame index, so each frame covers a contiguous x-range (adjacent
// frames sharing their boundary overlap). The banded layout is what makes
// frame membership informative about the design variable, the way real
// partial frames tend to be.
enum class FrameAssignment { random_shuffle, sequential_by_x };

// Assignment of units to the 2^Q - 1 membership domains with the given sizes
// (indexed by domain mask 1..2^Q-1, frame q = bit q-1). Frame membership and
// multiplicity follow from the masks; the frame union is the whole population
// by construction.
inline void build_frames(SyntheticPopulation& pop, std::span<const std::size_t> domain_sizes,
                         int frames, std::uint64_t seed,
                         FrameAssignment assignment = FrameAssignment::random_shuffle) {
  require(frames >= 1 && frames <= 8, ErrorCode::invalid_argument,
          "frame count must lie in [1, 8]");
  const std::size_t domains = (std::size_t{1} << frames) - 1;
  require(domain_sizes.size() == domains, ErrorCode::infeasible_domains,
          "expected " + std::to_string(domains) + " domain sizes, got " +
              std::to_string(domain_sizes.size()));
  const std::size_t total = std::accumulate(domain_sizes.begin(), domain_sizes.end(), std::size_t{0});
  require(total == pop.size(), ErrorCode::infeasible_domains,
          "domain sizes sum to " + std::to_string(total) + ", population is " +
              std::to_string(pop.size()));

  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> mask_order(domains);
  std::iota(mask_order.begin(), mask_order.end(), 1);
  if (assignment == FrameAssignment::random_shuffle) {
    Rng rng(seed);
    rng.shuffle(order);
  } else {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pop.x[a] != pop.x[b] ? pop.x[a] < pop.x[b] : a < b;
    });
    std::sort(mask_order.begin(), mask_order.end(), [](std::size_t a, std::size_t b) {
      auto mean_frame = [](std::size_t mask) {
        double sum = 0.0;
        int count = 0;
        for (int q = 0; q < 8; ++q) {
          if (mask & (std::size_t{1} << q)) {
            sum += q;
            ++count;
          }
        }
        return sum / count;
      };
      const double ma = mean_frame(a), mb = mean_frame(b);
      return ma != mb ? ma < mb : a < b;
    });
  }

  pop.frame_count = frames;
  pop.frame_mask.assign(pop.size(), 0);
  pop.multiplicity.assign(pop.size(), 0);
  std::size_t cursor = 0;
  for (const std::size_t mask : mask_order) {
    for (std::size_t c = 0; c < domain_sizes[mask - 1]; ++c, ++cursor) {
      pop.frame_mask[order[cursor]] = static_cast<unsigned>(mask);
    }
  }
  for (std::size_t i = 0; i < pop.size(); ++i) {
    pop.multiplicity[i] = std::popcount(pop.frame_mask[i]);
  }
}

// --- allocation -------------------------------------------------------------

enum class AllocationScheme { proportional, optimal_cost };

inline const char* to_string(AllocationScheme scheme) {
  return scheme == AllocationScheme::proportional ? "proportional" : "optimal_cost";
}

struct AllocationPlan {
  AllocationScheme scheme = AllocationScheme::proportional;
  std::vector<std::size_t> sizes;
  bool zero_variance_fallback = false;
};

namespace detail {

// Largest-remainder rounding of nonnegative targets to integers preserving
// the requested total, then clamped into [1, capacity] with deterministic
// redistribution.
inline std::vector<std::size_t> round_allocation(std::span<const double> target,
                                                 std::size_t total,
                                                 std::span<const std::size_t> capacity) {
  const std::size_t g = target.size();
  std::vector<std::size_t> sizes(g, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t q = 0; q < g; ++q) {
    sizes[q] = static_cast<std::size_t>(std::floor(target[q]));
    assigned += sizes[q];
    remainders.emplace_back(target[q] - std::floor(target[q]), q);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned) {
    ++sizes[remainders[i].second];
  }
  // clamp and repair
  for (std::size_t q = 0; q < g; ++q) {
    while (sizes[q] == 0) {
      std::size_t donor = g;
      for (std::size_t r = 0; r < g; ++r) {
        if (sizes[r] > 1 && (donor == g || sizes[r] > sizes[donor])) donor = r;
      }
      require(donor < g, ErrorCode::budget_infeasible, "cannot give every group a unit");
      --sizes[donor];
      ++sizes[q];
    }
  }
  for (std::size_t q = 0; q < g; ++q) {
    while (sizes[q] > capacity[q]) {
      std::size_t taker = g;
      for (std::size_t r = 0; r < g; ++r) {
        if (sizes[r] < capacity[r] &&
            (taker == g || capacity[r] - sizes[r] > capacity[taker] - sizes[taker])) {
          taker = r;
        }
      }
      require(taker < g, ErrorCode::budget_infeasible, "total exceeds population capacity");
      --sizes[q];
      ++sizes[taker];
    }
  }
  return sizes;
}

}  // namespace detail

inline AllocationPlan allocate_proportional(std::span<const std::size_t> group_sizes,
                                            std::size_t n) {
  require(!group_sizes.empty(), ErrorCode::invalid_argument, "no groups to allocate over");
  require(n >= group_sizes.size(), ErrorCode::budget_infeasible,
          "sample size smaller than the group count");
  const double total =
      static_cast<double>(std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0}));
  std::vector<double> target;
  target.reserve(group_sizes.size());
  for (const std::size_t g : group_sizes) {
    target.push_back(static_cast<double>(n) * static_cast<double>(g) / total);
  }
  AllocationPlan plan;
  plan.scheme = AllocationScheme::proportional;
  plan.sizes = detail::round_allocation(target, n, group_sizes);
  return plan;
}

// n_q = (C - c0) N_q sigma_q / sqrt(c_q) / sum_r N_r sigma_r sqrt(c_r),
// rounded by largest remainder and trimmed back under the budget. With all
// sigmas zero the plan falls back to proportional allocation at the largest
// affordable total.
inline AllocationPlan allocate_optimal_cost(std::span<const std::size_t> group_sizes,
                                            std::span<const double> sigma,
                                            std::span<const double> unit_cost, double budget,
                                            double fixed_cost = 0.0) {
  const std::size_t g = group_sizes.size();
  require(g >= 1, ErrorCode::invalid_argument, "no groups to allocate over");
  require(sigma.size() == g && unit_cost.size() == g, ErrorCode::dimension_mismatch,
          "sigma/cost vectors do not match group count");
  double min_cost = fixed_cost;
  for (const double c : unit_cost) {
    require(c > 0.0, ErrorCode::invalid_argument, "unit costs must be positive");
    min_cost += c;
  }
  require(budget >= min_cost, ErrorCode::budget_infeasible,
          "budget cannot afford one unit per group");

  const bool all_zero = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 0.0; });
  auto plan_cost = [&](std::span<const std::size_t> sizes) {
    double cost = fixed_cost;
    for (std::size_t q = 0; q < g; ++q) cost += static_cast<double>(sizes[q]) * unit_cost[q];
    return cost;
  };

  if (all_zero) {
    // ZeroVariance fallback: proportional at the largest total under budget.
    std::size_t lo = g;
    std::size_t hi = std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      bool feasible = false;
      try {
        feasible = plan_cost(allocate_proportional(group_sizes, mid).sizes) <= budget;
      } catch (const Error&) {
        feasible = false;
      }
      if (feasible) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    AllocationPlan plan = allocate_proportional(group_sizes, lo);
    plan.scheme = AllocationScheme::optimal_cost;
    plan.zero_variance_fallback = true;
    return plan;
  }

  double scale = 0.0;
  for (std::size_t q = 0; q < g; ++q) {
    scale += static_cast<double>(group_sizes[q]) * sigma[q] * std::sqrt(unit_cost[q]);
  }
  std::vector<double> target(g, 0.0);
  double fractional_total = 0.0;
  for (std::size_t q = 0; q < g; ++q) {
    target[q] =
        (budget - fixed_cost) * static_cast<double>(group_sizes[q]) * sigma[q] /
        std::sqrt(unit_cost[q]) / scale;
    fractional_total += target[q];
  }
  AllocationPlan plan;
  plan.scheme = AllocationScheme::optimal_cost;
  plan.sizes = detail::round_allocation(
      target, static_cast<std::size_t>(std::llround(fractional_total)), group_sizes);
  // rounding can push past the budget; trim the most over-allocated groups
  while (plan_cost(plan.sizes) > budget) {
    std::size_t worst = g;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < g; ++q) {
      if (plan.sizes[q] <= 1) continue;
      const double excess = static_cast<double>(plan.sizes[q]) - target[q];
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = q;
      }
    }
    require(worst < g, ErrorCode::budget_infeasible, "cannot trim allocation into budget");
    --plan.sizes[worst];
  }
  return plan;
}

// --- designs ----------------------------------------------------------------

// Uniform without-replacement sample of n positions from [0, population).
inline std::vector<std::size_t> srs_sample(std::size_t population, std::size_t n, Rng& rng) {
  require(n >= 1, ErrorCode::invalid_argument, "sample size must be positive");
  require(n <= population, ErrorCode::oversized_sample,
          "sample size exceeds the population");
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct SampfordSample {
  std::vector<std::size_t> selected;  // positions into the unit list
  std::vector<double> inclusion;      // first-order pi per position
};

// Rao-Sampford design: fixed size, without replacement, first-order inclusion
// probabilities proportional to the size measure. Units pushed to pi >= 1 are
// taken with certainty and peeled off first. Equal residual measures are
// routed to SRS (the rejective procedure conditions on distinct draws, which
// for equal probabilities is exactly SRSWOR and would otherwise reject almost
// every trial at realistic sampling fractions). Unequal measures use the
// classical rejective procedure with a retry cap.
inline SampfordSample sampford_sample(std::span<const double> size_measure, std::size_t n,
                                      Rng& rng, std::size_t max_retries = 1000000) {
  const std::size_t population = size_measure.size();
  require(n >= 1, ErrorCode::invalid_argument, "sample size must be positive");
  require(n <= population, ErrorCode::oversized_sample, "sample size exceeds the frame");
  for (const double s : size_measure) {
    require(std::isfinite(s) && s > 0.0, ErrorCode::invalid_size_measure,
            "size measures must be positive and finite");
  }

  SampfordSample out;
  out.inclusion.assign(population, 0.0);
  std::vector<std::size_t> active(population);
  std::iota(active.begin(), active.end(), 0);
  std::size_t remaining = n;

  // certainty peeling
  for (bool changed = true; changed && remaining > 0;) {
    changed = false;
    double total = 0.0;
    for (const std::size_t k : active) total += size_measure[k];
    std::vector<std::size_t> still;
    still.reserve(active.size());
    for (const std::size_t k : active) {
      const double pi = static_cast<double>(remaining) * size_measure[k] / total;
      if (pi >= 1.0) {
        out.inclusion[k] = 1.0;
        out.selected.push_back(k);
        --remaining;
        changed = true;
      } else {
        still.push_back(k);
      }
    }
    active = std::move(still);
  }
  if (remaining == 0) {
    std::sort(out.selected.begin(), out.selected.end());
    return out;
  }
  if (remaining == active.size()) {
    for (const std::size_t k : active) {
      out.inclusion[k] = 1.0;
      out.selected.push_back(k);
    }
    std::sort(out.selected.begin(), out.selected.end());
    return out;
  }

  double total = 0.0;
  double min_measure = std::numeric_limits<double>::infinity();
  double max_measure = 0.0;
  for (const std::size_t k : active) {
    total += size_measure[k];
    min_measure = std::min(min_measure, size_measure[k]);
    max_measure = std::max(max_measure, size_measure[k]);
  }
  for (const std::size_t k : active) {
    out.inclusion[k] = static_cast<double>(remaining) * size_measure[k] / total;
  }

  if (max_measure - min_measure <= 1e-12 * max_measure) {
    const auto positions = srs_sample(active.size(), remaining, rng);
    for (const std::size_t p : positions) out.selected.push_back(active[p]);
    std::sort(out.selected.begin(), out.selected.end());
    return out;
  }

  // rejective Sampford: one draw proportional to pi, the rest proportional to
  // pi/(1-pi), accepted only when all n draws are distinct
  std::vector<double> first_cum(active.size()), rest_cum(active.size());
  double acc1 = 0.0, acc2 = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double pi = out.inclusion[active[i]];
    acc1 += pi;
    acc2 += pi / (1.0 - pi);
    first_cum[i] = acc1;
    rest_cum[i] = acc2;
  }

  std::vector<std::uint32_t> stamp(active.size(), 0);
  std::uint32_t epoch = 0;
  std::vector<std::size_t> draw(remaining);
  for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
    ++epoch;
    bool distinct = true;
    draw[0] = sample_cumulative(first_cum, rng);
    stamp[draw[0]] = epoch;
    for (std::size_t d = 1; d < remaining && distinct; ++d) {
      const std::size_t pick = sample_cumulative(rest_cum, rng);
      if (stamp[pick] == epoch) {
        distinct = false;
      } else {
        stamp[pick] = epoch;
        draw[d] = pick;
      }
    }
    if (distinct) {
      for (const std::size_t d : draw) out.selected.push_back(active[d]);
      std::sort(out.selected.begin(), out.selected.end());
      return out;
    }
  }
  fail(ErrorCode::retry_exhausted, "sampford rejection did not accept within the retry cap");
}

// --- estimators ---------------------------------------------------------------

// Classical stratified estimator: weighted sum of within-stratum sample means
// with population stratum shares as weights.
inline double estimate_sts(std::span<const std::vector<std::size_t>> samples,
                           const SyntheticPopulation& pop) {
  const auto sizes = pop.stratum_sizes();
  require(samples.size() == sizes.size(), ErrorCode::dimension_mismatch,
          "one sample per stratum required");
  double estimate = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    require(!samples[s].empty(), ErrorCode::empty_stratum_sample,
            "stratum " + std::to_string(s) + " has no sample");
    double mean = 0.0;
    for (const std::size_t unit : samples[s]) mean += pop.y[unit];
    mean /= static_cast<double>(samples[s].size());
    estimate += static_cast<double>(sizes[s]) / static_cast<double>(pop.size()) * mean;
  }
  return estimate;
}

struct FrameSampleData {
  int frame = 0;
  std::vector<std::size_t> units; // population unit ids
  std::vector<double> pi;         // aligned with units
};

// Simple-multiplicity estimator of the mean: each sampled value contributes
// y / (m * pi), summed across frames and divided by N.
inline double estimate_sm(std::span<const FrameSampleData> samples,
                          const SyntheticPopulation& pop) {
  double total = 0.0;
  for (const auto& frame : samples) {
    require(frame.units.size() == frame.pi.size(), ErrorCode::dimension_mismatch,
            "pi vector does not match sample size");
    for (std::size_t i = 0; i < frame.units.size(); ++i) {
      require(frame.pi[i] > 0.0, ErrorCode::zero_inclusion_probability,
              "sampled unit with nonpositive inclusion probability");
      const std::size_t unit = frame.units[i];
      total += pop.y[unit] / (static_cast<double>(pop.multiplicity[unit]) * frame.pi[i]);
    }
  }
  return total / static_cast<double>(pop.size());
}

struct PmlResult {
  double estimate = 0.0;
  int iterations = 0;
  int dropped_domains = 0; // domains never sampled; their mass is reabsorbed
};

inline PmlResult estimate_pml(std::span<const FrameSampleData> samples,
                              const SyntheticPopulation& pop, double tolerance = 1e-10,
                              int max_iterations = 200) {
  const int frames = pop.frame_count;
  require(frames >= 1, ErrorCode::invalid_argument, "population has no frames");
  const std::size_t domains = (std::size_t{1} << frames) - 1;
  const auto frame_sizes = pop.frame_sizes();

  // Horvitz-Thompson domain counts/totals per frame.
  std::vector<std::vector<double>> ht_count(domains + 1, std::vector<double>(static_cast<std::size_t>(frames), 0.0));
  std::vector<std::vector<double>> ht_total(domains + 1, std::vector<double>(static_cast<std::size_t>(frames), 0.0));
  std::vector<double> sample_count(static_cast<std::size_t>(frames), 0.0);
  for (const auto& frame : samples) {
    require(frame.frame >= 0 && frame.frame < frames, ErrorCode::invalid_argument,
            "frame index out of range");
    const auto q = static_cast<std::size_t>(frame.frame);
    sample_count[q] += static_cast<double>(frame.units.size());
    for (std::size_t i = 0; i < frame.units.size(); ++i) {
      require(frame.pi[i] > 0.0, ErrorCode::zero_inclusion_probability,
              "sampled unit with nonpositive inclusion probability");
      const std::size_t unit = frame.units[i];
      const unsigned mask = pop.frame_mask[unit];
      ht_count[mask][q] += 1.0 / frame.pi[i];
      ht_total[mask][q] += pop.y[unit] / frame.pi[i];
    }
  }

  // Pseudo-likelihood cell weights c_d = sum_{q in d} n_q * (N^_dq / N_q).
  std::vector<double> cell(domains + 1, 0.0);
  int dropped = 0;
  for (std::size_t mask = 1; mask <= domains; ++mask) {
    bool observable = false;
    for (int q = 0; q < frames; ++q) {
      if (!(mask & (1u << q))) continue;
      observable = observable || sample_count[static_cast<std::size_t>(q)] > 0.0;
      cell[mask] += sample_count[static_cast<std::size_t>(q)] * ht_count[mask][static_cast<std::size_t>(q)] /
                    static_cast<double>(frame_sizes[static_cast<std::size_t>(q)]);
    }
    if (observable && cell[mask] == 0.0) ++dropped;
  }

  // Coordinate descent on the dual: domain sizes N_d = c_d / sum_{q in d} mu_q
  // with mu adjusted one frame at a time to meet sum_{d in q} N_d = N_q.
  std::vector<double> mu(static_cast<std::size_t>(frames), 0.0);
  for (int q = 0; q < frames; ++q) {
    mu[static_cast<std::size_t>(q)] =
        sample_count[static_cast<std::size_t>(q)] / static_cast<double>(frame_sizes[static_cast<std::size_t>(q)]);
    if (mu[static_cast<std::size_t>(q)] <= 0.0) mu[static_cast<std::size_t>(q)] = 1.0;
  }
  auto domain_size = [&](std::size_t mask) {
    double denom = 0.0;
    for (int q = 0; q < frames; ++q) {
      if (mask & (1u << q)) denom += mu[static_cast<std::size_t>(q)];
    }
    return cell[mask] / denom;
  };

  PmlResult result;
  result.dropped_domains = dropped;
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    for (int q = 0; q < frames; ++q) {
      // residual mu over the other frames per domain containing q
      std::vector<std::pair<std::size_t, double>> rows; // (mask, residual mu)
      double floor_mu = -std::numeric_limits<double>::infinity();
      for (std::size_t mask = 1; mask <= domains; ++mask) {
        if (!(mask & (1u << q)) || cell[mask] <= 0.0) continue;
        double rest = 0.0;
        for (int r = 0; r < frames; ++r) {
          if (r != q && (mask & (1u << r))) rest += mu[static_cast<std::size_t>(r)];
        }
        rows.emplace_back(mask, rest);
        floor_mu = std::max(floor_mu, -rest);
      }
      if (rows.empty()) continue;
      const double target = static_cast<double>(frame_sizes[static_cast<std::size_t>(q)]);
      auto constraint = [&](double m) {
        double sum = 0.0;
        for (const auto& [mask, rest] : rows) sum += cell[mask] / (m + rest);
        return sum;
      };
      // bisection on a strictly decreasing function of mu_q
      double lo = floor_mu + 1e-300;
      double hi = std::max(mu[static_cast<std::size_t>(q)], floor_mu + 1.0);
      while (constraint(hi) > target) hi = floor_mu + 2.0 * (hi - floor_mu);
      double lo_gap = hi - lo;
      for (int step = 0; step < 200 && lo_gap > 1e-15 * (1.0 + std::abs(hi)); ++step) {
        const double mid = 0.5 * (lo + hi);
        if (constraint(mid) > target) {
          lo = mid;
        } else {
          hi = mid;
        }
        lo_gap = hi - lo;
      }
      mu[static_cast<std::size_t>(q)] = 0.5 * (lo + hi);
    }
    result.iterations = iteration + 1;
    double worst = 0.0;
    for (int q = 0; q < frames; ++q) {
      double sum = 0.0;
      for (std::size_t mask = 1; mask <= domains; ++mask) {
        if ((mask & (1u << q)) && cell[mask] > 0.0) sum += domain_size(mask);
      }
      const double size_q = static_cast<double>(frame_sizes[static_cast<std::size_t>(q)]);
      worst = std::max(worst, std::abs(sum - size_q) / size_q);
    }
    if (worst <= tolerance) {
      // Domain means pooled across frames with weights proportional to the
      // expected domain sample share n_q / N_q, then combined with the PML
      // domain sizes.
      double total = 0.0;
      for (std::size_t mask = 1; mask <= domains; ++mask) {
        if (cell[mask] <= 0.0) continue;
        double num = 0.0, den = 0.0;
        for (int q = 0; q < frames; ++q) {
          if (!(mask & (1u << q))) continue;
          const double share = sample_count[static_cast<std::size_t>(q)] /
                               static_cast<double>(frame_sizes[static_cast<std::size_t>(q)]);
          num += share * ht_total[mask][static_cast<std::size_t>(q)];
          den += share * ht_count[mask][static_cast<std::size_t>(q)];
        }
        if (den > 0.0) total += domain_size(mask) * (num / den);
      }
      result.estimate = total / static_cast<double>(pop.size());
      return result;
    }
  }
  fail(ErrorCode::non_convergence, "pml fixed point did not converge within " +
                                       std::to_string(max_iterations) + " iterations");
}

}  // namespace surveykit
