#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hcdn/prep/features.hpp"

namespace hcdn {

struct MatchSet {
  std::vector<std::pair<int, int>> pairs;  // (index in a, index in b)
  std::vector<double> nearest_distance;
  std::vector<double> second_distance;
  bool empty_input = false;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Lowe ratio test over exact 2-nearest-neighbour search: for each
/// descriptor in `a`, keep its best match in `b` iff
/// nearest < ratio_threshold * second-nearest (L2). Exact search keeps the
/// result a pure function of the descriptors; approximate indexes do not.
inline MatchSet match_features(const KeypointSet& a, const KeypointSet& b,
                               double ratio_threshold = 0.7) {
  MatchSet out;
  if (a.empty() || b.empty() || b.size() < 2) {
    out.empty_input = true;
    return out;
  }

  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  Eigen::MatrixXf A(na, 128), B(nb, 128);
  for (int i = 0; i < na; ++i)
    for (int c = 0; c < 128; ++c) A(i, c) = a.descriptors[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  for (int j = 0; j < nb; ++j)
    for (int c = 0; c < 128; ++c) B(j, c) = b.descriptors[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];

  const Eigen::VectorXf a2 = A.rowwise().squaredNorm();
  const Eigen::VectorXf b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXf d2 = (-2.0f * A * B.transpose());
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();

  for (int i = 0; i < na; ++i) {
    int best = -1, second = -1;
    float best_d = 0.0f, second_d = 0.0f;
    for (int j = 0; j < nb; ++j) {
      const float d = std::max(0.0f, d2(i, j));
      if (best < 0 || d < best_d) {
        second = best;
        second_d = best_d;
        best = j;
        best_d = d;
      } else if (second < 0 || d < second_d) {
        second = j;
        second_d = d;
      }
    }
    const double nearest = std::sqrt(static_cast<double>(best_d));
    const double next = std::sqrt(static_cast<double>(second_d));
    if (nearest < ratio_threshold * next) {
      out.pairs.emplace_back(i, best);
      out.nearest_distance.push_back(nearest);
      out.second_distance.push_back(next);
    }
  }
  return out;
}

}  // namespace hcdn
