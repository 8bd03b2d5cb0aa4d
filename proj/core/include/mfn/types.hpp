#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfn {

/// Thrown for data/domain errors (bad inputs, size caps, key mismatches).
/// Message starts with a short category tag, e.g. "empty-graph: ...".
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kFeatureDim = 14;  // 7 Gaussian means + 7 variances
inline constexpr int kMeanDim = 7;
inline constexpr int kDegreeCap = 2;  // degree prior modelled for 0..2, uniform beyond

// Stored edge beliefs live in [kBeliefClamp, 1 - kBeliefClamp] so that
// odds ratios, entropies and cross-entropy terms stay finite.
inline constexpr double kBeliefClamp = 1e-7;

using Vec3 = std::array<double, 3>;
using FeatureVec = std::array<double, kFeatureDim>;

// Per-node 14-vector: means for (x, y, z, r, vx, vy, vz) followed by the
// per-feature variances in the same order.
struct NodeFeatures {
  FeatureVec x{};

  static constexpr int kPosX = 0, kPosY = 1, kPosZ = 2;
  static constexpr int kRadius = 3;
  static constexpr int kOriX = 4, kOriY = 5, kOriZ = 6;
  static constexpr int kVarBase = 7;

  Vec3 position() const { return {x[kPosX], x[kPosY], x[kPosZ]}; }
  double radius() const { return x[kRadius]; }
  Vec3 orientation() const { return {x[kOriX], x[kOriY], x[kOriZ]}; }

  bool finite() const {
    for (double v : x)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline NodeFeatures make_node(const Vec3& pos, double radius, const Vec3& orientation,
                              const std::array<double, kMeanDim>& variance) {
  NodeFeatures n;
  n.x = {pos[0],      pos[1],      pos[2],      radius,      orientation[0],
         orientation[1], orientation[2], variance[0], variance[1], variance[2],
         variance[3], variance[4], variance[5], variance[6]};
  return n;
}

// theta = {beta0..beta2, lambda, a, eta, nu}; shared across all MFN layers.
struct ModelParams {
  std::array<double, 3> beta{};
  double lambda = 0.0;
  FeatureVec a{};
  FeatureVec eta{};
  FeatureVec nu{};

  static constexpr int kCount = 3 + 1 + 3 * kFeatureDim;  // 46 scalar components

  double& flat(int i) {
    if (i < 3) return beta[static_cast<std::size_t>(i)];
    if (i == 3) return lambda;
    i -= 4;
    if (i < kFeatureDim) return a[static_cast<std::size_t>(i)];
    i -= kFeatureDim;
    if (i < kFeatureDim) return eta[static_cast<std::size_t>(i)];
    i -= kFeatureDim;
    return nu[static_cast<std::size_t>(i)];
  }
  double flat(int i) const { return const_cast<ModelParams*>(this)->flat(i); }

  static std::string component_name(int i);

  bool finite() const {
    for (int i = 0; i < kCount; ++i)
      if (!std::isfinite(flat(i))) return false;
    return true;
  }
};

// Loss gradients have the same shape as the parameters themselves.
using GradientSet = ModelParams;

inline double dot(const FeatureVec& a, const FeatureVec& b) {
  double s = 0.0;
  for (int i = 0; i < kFeatureDim; ++i) s += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
  return s;
}

inline double distance_sq(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Vec3& a, const Vec3& b) { return std::sqrt(distance_sq(a, b)); }

inline double clamp_belief(double a) {
  if (a < kBeliefClamp) return kBeliefClamp;
  if (a > 1.0 - kBeliefClamp) return 1.0 - kBeliefClamp;
  return a;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double a) { return std::log(a / (1.0 - a)); }

// Gradient-check error measure: relative for large magnitudes, absolute below
// unit scale (keeps finite-difference noise from inflating near-zero values).
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace mfn
