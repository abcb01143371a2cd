#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hcdn/errors.hpp"
#include "hcdn/prep/matching.hpp"
#include "hcdn/rng.hpp"

namespace hcdn {

/// 2D rotation + translation, applied as p' = R(theta) p + t.
struct RigidTransform {
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  std::array<double, 2> apply(double x, double y) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * x - s * y + tx, s * x + c * y + ty};
  }

  RigidTransform inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    // p = R⁻¹(p' − t); R⁻¹ = R(−theta)
    return {-theta, -(c * tx + s * ty), -(-s * tx + c * ty)};
  }
};

struct ConsensusParams {
  double inlier_threshold_px = 3.0;
  int max_iterations = 1000;
  std::uint64_t seed = 7;
};

namespace detail {

// Least-squares rigid fit (2D Procrustes without scale) sending src -> dst.
inline RigidTransform fit_rigid(const std::vector<std::array<double, 2>>& src,
                                const std::vector<std::array<double, 2>>& dst) {
  const double n = static_cast<double>(src.size());
  double cx_s = 0, cy_s = 0, cx_d = 0, cy_d = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    cx_s += src[i][0];
    cy_s += src[i][1];
    cx_d += dst[i][0];
    cy_d += dst[i][1];
  }
  cx_s /= n;
  cy_s /= n;
  cx_d /= n;
  cy_d /= n;
  double dot = 0, cross = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double xs = src[i][0] - cx_s, ys = src[i][1] - cy_s;
    const double xd = dst[i][0] - cx_d, yd = dst[i][1] - cy_d;
    dot += xs * xd + ys * yd;
    cross += xs * yd - ys * xd;
  }
  RigidTransform t;
  t.theta = (dot == 0.0 && cross == 0.0) ? 0.0 : std::atan2(cross, dot);
  const double c = std::cos(t.theta), s = std::sin(t.theta);
  t.tx = cx_d - (c * cx_s - s * cy_s);
  t.ty = cy_d - (s * cx_s + c * cy_s);
  return t;
}

}  // namespace detail

/// Robust rigid estimate mapping `b` (good image) keypoint coordinates onto
/// `a` (poor image) coordinates: random 2-point minimal samples, inlier
/// count at a reprojection threshold, then a least-squares refit on the best
/// inlier set.
inline RigidTransform estimate_alignment(const MatchSet& matches, const KeypointSet& a,
                                         const KeypointSet& b, const ConsensusParams& params = {}) {
  const std::size_t n = matches.size();
  if (n < 2) raise(ErrorCode::InsufficientMatches, "need >= 2 matches, have " + std::to_string(n));

  std::vector<std::array<double, 2>> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = b.locations[static_cast<std::size_t>(matches.pairs[i].second)];
    dst[i] = a.locations[static_cast<std::size_t>(matches.pairs[i].first)];
  }

  bool all_coincident = true;
  for (std::size_t i = 1; i < n && all_coincident; ++i)
    all_coincident = std::hypot(src[i][0] - src[0][0], src[i][1] - src[0][1]) < 1e-9;
  if (all_coincident)
    raise(ErrorCode::DegenerateConfiguration, "all matched points coincident");

  const double thresh2 = params.inlier_threshold_px * params.inlier_threshold_px;
  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> best_inliers;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const std::size_t i = rng_below(rng, n);
    std::size_t j = rng_below(rng, n - 1);
    if (j >= i) ++j;
    const double base = std::hypot(src[j][0] - src[i][0], src[j][1] - src[i][1]);
    if (base < 1e-9) continue;
    // Exact rigid map from two point pairs: rotate the src segment onto the
    // dst segment, then translate the first point into place.
    const double ang_src = std::atan2(src[j][1] - src[i][1], src[j][0] - src[i][0]);
    const double ang_dst = std::atan2(dst[j][1] - dst[i][1], dst[j][0] - dst[i][0]);
    RigidTransform cand;
    cand.theta = ang_dst - ang_src;
    const double c = std::cos(cand.theta), s = std::sin(cand.theta);
    cand.tx = dst[i][0] - (c * src[i][0] - s * src[i][1]);
    cand.ty = dst[i][1] - (s * src[i][0] + c * src[i][1]);

    std::vector<std::size_t> inliers;
    for (std::size_t k = 0; k < n; ++k) {
      const auto p = cand.apply(src[k][0], src[k][1]);
      const double dx = p[0] - dst[k][0], dy = p[1] - dst[k][1];
      if (dx * dx + dy * dy <= thresh2) inliers.push_back(k);
    }
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      if (best_inliers.size() == n) break;
    }
  }

  if (best_inliers.size() < 2)
    raise(ErrorCode::DegenerateConfiguration, "no consensus set of size >= 2");

  std::vector<std::array<double, 2>> in_src, in_dst;
  in_src.reserve(best_inliers.size());
  in_dst.reserve(best_inliers.size());
  for (const std::size_t k : best_inliers) {
    in_src.push_back(src[k]);
    in_dst.push_back(dst[k]);
  }
  return detail::fit_rigid(in_src, in_dst);
}

}  // namespace hcdn
