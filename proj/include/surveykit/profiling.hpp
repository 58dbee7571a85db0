// SPDX-License-Identifier: Apache-2.0
#pragma once

// Structure discovery inside a detected outlier set: spectral clustering on
// the exponential Hamming affinity, silhouette-driven choice of the cluster
// count, and medoid extraction as interpretable exemplars.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "surveykit/dataset.hpp"
#include "surveykit/error.hpp"
#include "surveykit/kpca.hpp"
#include "surveykit/linalg.hpp"
#include "surveykit/rng.hpp"

namespace surveykit {

namespace detail {

inline Eigen::MatrixXi hamming_matrix(const CategoricalDataset& data,
                                      std::span<const std::size_t> rows) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXi dist(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    dist(i, i) = 0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const int d = hamming(data.row(rows[static_cast<std::size_t>(i)]),
                            data.row(rows[static_cast<std::size_t>(j)]));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

// Lloyd k-means with k-means++ seeding and a fixed number of restarts; the
// lowest-SSE run wins (ties keep the earlier restart).
inline std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, Rng& rng, int restarts = 10,
                               int max_iterations = 100) {
  const auto m = points.rows();
  std::vector<int> best_assignment(static_cast<std::size_t>(m), 0);
  double best_sse = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < restarts; ++restart) {
    // k-means++ seeding.
    Eigen::MatrixXd centers(k, points.cols());
    std::vector<double> dist2(static_cast<std::size_t>(m),
                              std::numeric_limits<double>::infinity());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(m))));
    for (int c = 1; c < k; ++c) {
      std::vector<double> cumulative(static_cast<std::size_t>(m), 0.0);
      double total = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = (points.row(i) - centers.row(c - 1)).squaredNorm();
        dist2[static_cast<std::size_t>(i)] = std::min(dist2[static_cast<std::size_t>(i)], d);
        total += dist2[static_cast<std::size_t>(i)];
        cumulative[static_cast<std::size_t>(i)] = total;
      }
      if (total <= 0.0) {
        centers.row(c) = points.row(static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(m))));
      } else {
        centers.row(c) = points.row(static_cast<Eigen::Index>(sample_cumulative(cumulative, rng)));
      }
    }

    std::vector<int> assignment(static_cast<std::size_t>(m), -1);
    for (int iteration = 0; iteration < max_iterations; ++iteration) {
      bool changed = false;
      for (Eigen::Index i = 0; i < m; ++i) {
        int nearest = 0;
        double nearest_d = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double d = (points.row(i) - centers.row(c)).squaredNorm();
          if (d < nearest_d) {
            nearest_d = d;
            nearest = c;
          }
        }
        if (assignment[static_cast<std::size_t>(i)] != nearest) {
          assignment[static_cast<std::size_t>(i)] = nearest;
          changed = true;
        }
      }
      if (!changed) break;
      centers.setZero();
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < m; ++i) {
        centers.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        } else {
          // reseed an emptied cluster at the point farthest from its center
          Eigen::Index farthest = 0;
          double farthest_d = -1.0;
          for (Eigen::Index i = 0; i < m; ++i) {
            const double d =
                (points.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
            if (d > farthest_d) {
              farthest_d = d;
              farthest = i;
            }
          }
          centers.row(c) = points.row(farthest);
        }
      }
    }

    double sse = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      sse += (points.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_assignment = assignment;
    }
  }

  // canonical ids by first occurrence
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next_id = 0;
  for (auto& a : best_assignment) {
    if (remap[static_cast<std::size_t>(a)] < 0) remap[static_cast<std::size_t>(a)] = next_id++;
    a = remap[static_cast<std::size_t>(a)];
  }
  return best_assignment;
}

}  // namespace detail

// Normalized-Laplacian spectral clustering of the selected rows into k
// groups. The affinity reuses the detection kernel exp(-gamma * Ham) with a
// small additive floor as a numerical guard; the embedding rows are
// normalized to unit length before the k-means step.
inline std::vector<int> spectral_cluster(const CategoricalDataset& data,
                                         std::span<const std::size_t> rows, int k,
                                         const KernelConfig& config, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  require(k >= 2, ErrorCode::invalid_argument, "cluster count must be at least 2");
  require(m >= k, ErrorCode::too_few_items,
          "need at least " + std::to_string(k) + " items, got " + std::to_string(m));

  const Eigen::MatrixXi dist = detail::hamming_matrix(data, rows);
  Eigen::MatrixXd affinity =
      (-config.gamma * dist.cast<double>().array()).exp().matrix();
  affinity.array() += 1e-12;

  const Eigen::VectorXd degree = affinity.rowwise().sum();
  const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
  const Eigen::MatrixXd normalized =
      inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
  const SymmetricEigen eig = sym_eigen_descending(normalized);

  Eigen::MatrixXd embedding = eig.vectors.leftCols(k);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }

  Rng rng(seed);
  return detail::kmeans(embedding, k, rng);
}

// Classical mean silhouette with raw Hamming distance. Items in singleton
// clusters contribute 0, as does the 0/0 case of coincident points.
inline double silhouette(const CategoricalDataset& data, std::span<const std::size_t> rows,
                         std::span<const int> assignment) {
  const std::size_t m = rows.size();
  require(assignment.size() == m, ErrorCode::dimension_mismatch,
          "assignment does not match item count");
  int k = 0;
  for (const int a : assignment) k = std::max(k, a + 1);
  std::vector<std::size_t> cluster_sizes(static_cast<std::size_t>(k), 0);
  for (const int a : assignment) ++cluster_sizes[static_cast<std::size_t>(a)];
  std::size_t nonempty = 0;
  for (const std::size_t size : cluster_sizes) nonempty += size > 0;
  require(nonempty >= 2, ErrorCode::single_cluster, "silhouette needs at least 2 clusters");

  const Eigen::MatrixXi dist = detail::hamming_matrix(data, rows);
  double total = 0.0;
  std::vector<double> mean_dist(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int own = assignment[i];
    if (cluster_sizes[static_cast<std::size_t>(own)] == 1) continue; // singleton contributes 0
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      mean_dist[static_cast<std::size_t>(assignment[j])] +=
          dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double a = mean_dist[static_cast<std::size_t>(own)] /
                     static_cast<double>(cluster_sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || cluster_sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, mean_dist[static_cast<std::size_t>(c)] /
                          static_cast<double>(cluster_sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(m);
}

struct SubgroupPartition {
  std::vector<std::size_t> outlier_rows; // original row ids
  std::vector<int> assignment;           // per outlier, for the chosen k
  int chosen_k = 0;
  std::vector<std::pair<int, double>> silhouette_by_k;
};

// Runs spectral clustering for each candidate k and keeps the mean-silhouette
// maximizer; ties break toward the smaller k.
inline SubgroupPartition select_k(const CategoricalDataset& data,
                                  std::span<const std::size_t> rows, int k_max,
                                  const KernelConfig& config, std::uint64_t seed, int k_min = 2) {
  require(k_min >= 2, ErrorCode::invalid_argument, "k_min must be at least 2");
  require(k_max >= k_min, ErrorCode::invalid_argument, "k_max must be >= k_min");
  require(rows.size() >= static_cast<std::size_t>(k_max) + 1, ErrorCode::too_few_items,
          "k_max must not exceed the outlier count minus 1");

  SubgroupPartition out;
  out.outlier_rows.assign(rows.begin(), rows.end());
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto assignment = spectral_cluster(data, rows, k, config, derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double score = silhouette(data, rows, assignment);
    out.silhouette_by_k.emplace_back(k, score);
    if (score > best) {
      best = score;
      out.chosen_k = k;
      out.assignment = std::move(assignment);
    }
  }
  return out;
}

struct MedoidProfile {
  struct Cluster {
    std::size_t medoid_row = 0; // original row id
    std::vector<std::string> labels;
    std::size_t size = 0;
  };
  std::vector<Cluster> clusters;
};

// Per cluster, the member minimizing the mean Hamming distance to its
// co-members; ties break toward the lowest original row id.
inline MedoidProfile medoids(const CategoricalDataset& data, std::span<const std::size_t> rows,
                             std::span<const int> assignment) {
  require(assignment.size() == rows.size(), ErrorCode::dimension_mismatch,
          "assignment does not match item count");
  int k = 0;
  for (const int a : assignment) k = std::max(k, a + 1);
  const Eigen::MatrixXi dist = detail::hamming_matrix(data, rows);

  MedoidProfile profile;
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (assignment[i] == c) members.push_back(i);
    }
    if (members.empty()) continue;
    std::size_t best = members.front();
    double best_mean = std::numeric_limits<double>::infinity();
    for (const std::size_t i : members) {
      double total = 0.0;
      for (const std::size_t j : members) {
        total += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      const double mean =
          members.size() > 1 ? total / static_cast<double>(members.size() - 1) : 0.0;
      if (mean < best_mean || (mean == best_mean && rows[i] < rows[best])) {
        best_mean = mean;
        best = i;
      }
    }
    MedoidProfile::Cluster cluster;
    cluster.medoid_row = rows[best];
    cluster.size = members.size();
    const auto medoid = data.row(rows[best]);
    for (std::size_t v = 0; v < data.n_vars(); ++v) {
      cluster.labels.push_back(data.specs[v].categories[static_cast<std::size_t>(medoid[v])]);
    }
    profile.clusters.push_back(std::move(cluster));
  }
  return profile;
}

}  // namespace surveykit
