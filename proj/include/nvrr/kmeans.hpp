#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <vector>

#include "nvrr/errors.hpp"
#include "nvrr/rng.hpp"

namespace nvrr {

// Lloyd's algorithm with k-means++ seeding on cumulative-sum features.
// Assignment is nearest centroid in Euclidean distance.
struct KMeansModel {
  int k = 0;
  Eigen::MatrixXd centroids;  // k x dim
};

namespace detail {

inline int nearest_centroid(const Eigen::MatrixXd& centroids,
                            const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace detail

// rows of `features` are samples.
inline KMeansModel kmeans_fit(const Eigen::MatrixXd& features, int k, uint64_t seed,
                              int max_iters = 300) {
  const int n = static_cast<int>(features.rows());
  if (k < 1) throw invalid_parameter("kmeans: k must be >= 1");
  if (k > n) throw invalid_parameter("kmeans: k exceeds the number of samples");

  RngStream rng = RngStream::derive(seed, 0x6B);
  KMeansModel model;
  model.k = k;
  model.centroids.resize(k, features.cols());

  // k-means++ seeding.
  model.centroids.row(0) = features.row(static_cast<Eigen::Index>(rng.uniform_below(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d =
          (features.row(i) - model.centroids.row(c - 1)).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    int pick = 0;
    if (total > 0.0) {
      const double u = rng.next_double() * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= u) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_below(n));  // all points coincide
    }
    model.centroids.row(c) = features.row(pick);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = detail::nearest_centroid(model.centroids, features.row(i).transpose());
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, features.cols());
    std::vector<int> sizes(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += features.row(i);
      sizes[assign[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        model.centroids.row(c) = sums.row(c) / sizes[c];
      } else {
        // Re-seed an empty cluster with the point farthest from its centroid.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d =
              (features.row(i) - model.centroids.row(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        model.centroids.row(c) = features.row(far);
      }
    }
  }
  return model;
}

inline std::vector<int> kmeans_assign(const KMeansModel& model,
                                      const Eigen::MatrixXd& features) {
  std::vector<int> assign(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    assign[i] = detail::nearest_centroid(model.centroids, features.row(i).transpose());
  return assign;
}

// Indices that survive dropping the minimum-cardinality cluster (ties resolve
// to the lowest cluster index).
inline std::vector<size_t> kmeans_discard_kept(const KMeansModel& model,
                                               const Eigen::MatrixXd& features) {
  const std::vector<int> assign = kmeans_assign(model, features);
  std::vector<int> sizes(model.k, 0);
  for (const int a : assign) sizes[a] += 1;
  int smallest = 0;
  for (int c = 1; c < model.k; ++c)
    if (sizes[c] < sizes[smallest]) smallest = c;
  std::vector<size_t> kept;
  kept.reserve(assign.size());
  for (size_t i = 0; i < assign.size(); ++i)
    if (assign[i] != smallest) kept.push_back(i);
  return kept;
}

}  // namespace nvrr
