#pragma once

// Expected Fisher information for Type-I censored log-location-scale data.
//
// For one unit with standardized censoring point zc the information about
// (mu, nu) is F(zc) / nu^2, where
//
//   F = int_{-inf}^{zc} s(z) s(z)' f(z) dz + S(zc) lambda(zc)^2 [1 zc; zc zc^2],
//   s(z) = (h(z), 1 + z h(z)),  h = d log f / dz,  lambda = f / S.
//
// The stress-life model enters through the Jacobian of (mu, nu) with respect
// to (A, B, nu).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "seqalt/distributions.hpp"
#include "seqalt/errors.hpp"
#include "seqalt/fatigue_model.hpp"
#include "seqalt/quadrature.hpp"

namespace seqalt {

// Parameter order (A, B, nu).
using InfoMatrix = Eigen::Matrix3d;

struct CovMatrix {
  Eigen::Matrix3d entries = Eigen::Matrix3d::Zero();
  double ridge = 0.0;  // diagonal loading applied before inversion
};

namespace detail {

// Integration window outside which the standardized density is negligible.
struct Support {
  double lo;
  double hi;
};

inline Support effective_support(DistributionFamily family) {
  return family == DistributionFamily::Lognormal ? Support{-12.0, 12.0} : Support{-45.0, 6.0};
}

inline Eigen::Matrix2d location_scale_info_exact(double zc, DistributionFamily family) {
  const Support sup = effective_support(family);
  const double upper = std::min(zc, sup.hi);
  const auto failure = integrate<3>(
      [family](double z) {
        const double f = std_pdf(z, family);
        const double h = std_score(z, family);
        const double g = 1.0 + z * h;
        return Vec<3>{h * h * f, h * g * f, g * g * f};
      },
      sup.lo, upper, QuadratureOptions{1e-13, 40});

  Eigen::Matrix2d F;
  F << failure[0], failure[1], failure[1], failure[2];
  if (zc < sup.hi) {
    // S * lambda^2 = f^2 / S, evaluated in log space
    const double w = std::exp(2.0 * std_log_pdf(zc, family) - std_log_survival(zc, family));
    F(0, 0) += w;
    F(0, 1) += w * zc;
    F(1, 0) += w * zc;
    F(1, 1) += w * zc * zc;
  }
  return F;
}

inline constexpr double kZetaQuantum = 1e-6;
inline constexpr std::size_t kMemoLimit = 1u << 20;

}  // namespace detail

// Standardized 2x2 information about (mu, nu) for one unit censored at zc
// (scale by 1/nu^2 to obtain the information itself). zc may be +-inf.
// Results are memoized per thread on zc rounded to 1e-6.
inline Eigen::Matrix2d unit_info_location_scale(double zc, DistributionFamily family) {
  if (std::isnan(zc)) throw DomainError("unit_info_location_scale: censoring point is NaN");
  const detail::Support sup = detail::effective_support(family);
  if (zc <= sup.lo) return Eigen::Matrix2d::Zero();
  if (zc >= sup.hi) {
    thread_local Eigen::Matrix2d full[2];
    thread_local bool ready[2] = {false, false};
    const int idx = static_cast<int>(family);
    if (!ready[idx]) {
      full[idx] = detail::location_scale_info_exact(std::numeric_limits<double>::infinity(), family);
      ready[idx] = true;
    }
    return full[idx];
  }

  thread_local std::unordered_map<std::int64_t, Eigen::Matrix2d> memo[2];
  auto& cache = memo[static_cast<int>(family)];
  const auto key = static_cast<std::int64_t>(std::llround(zc / detail::kZetaQuantum));
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  if (cache.size() >= detail::kMemoLimit) cache.clear();
  const Eigen::Matrix2d F =
      detail::location_scale_info_exact(static_cast<double>(key) * detail::kZetaQuantum, family);
  cache.emplace(key, F);
  return F;
}

// Standardized censoring point of a unit tested at stress x.
inline double standardized_censor_point(const ModelParams& theta, double x, const TestConfig& cfg) {
  if (std::isinf(cfg.censor_time)) return std::numeric_limits<double>::infinity();
  return (std::log(cfg.censor_time) - mu(x, theta.A, theta.B, cfg)) / theta.nu;
}

inline InfoMatrix unit_info(const ModelParams& theta, double x, const TestConfig& cfg) {
  validate(theta);
  const double m = mu(x, theta.A, theta.B, cfg);
  const MuGradient g = mu_grad(x, theta.A, theta.B, cfg);
  const double zc = std::isinf(cfg.censor_time) ? std::numeric_limits<double>::infinity()
                                                : (std::log(cfg.censor_time) - m) / theta.nu;
  const Eigen::Matrix2d F = unit_info_location_scale(zc, cfg.family) / (theta.nu * theta.nu);
  Eigen::Matrix<double, 2, 3> J;
  J << g.dA, g.dB, 0.0, 0.0, 0.0, 1.0;
  return J.transpose() * F * J;
}

inline InfoMatrix total_info(const ModelParams& theta, const std::vector<double>& stresses,
                             const TestConfig& cfg) {
  if (stresses.empty()) throw ValidationError("total_info: stress list is empty");
  InfoMatrix I = InfoMatrix::Zero();
  for (double x : stresses) I += unit_info(theta, x, cfg);
  return I;
}

// Inverse of an information matrix through its symmetric eigendecomposition.
// When the spectrum is nearly degenerate (min < 1e-10 max) the diagonal is
// loaded with 1e-8 * trace / 3 first and the loading is reported.
inline CovMatrix invert_info(const InfoMatrix& info) {
  if (!info.allFinite()) throw SingularityError("invert_info: information matrix has non-finite entries");
  const Eigen::Matrix3d sym = 0.5 * (info + info.transpose());
  if (sym.cwiseAbs().maxCoeff() == 0.0)
    throw SingularityError("invert_info: information matrix is zero; design is not identifiable");

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SingularityError("invert_info: eigendecomposition failed");
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  CovMatrix out;
  Eigen::Matrix3d M = sym;
  if (ev(0) < 1e-10 * ev(2)) {
    out.ridge = 1e-8 * sym.trace() / 3.0;
    M.diagonal().array() += out.ridge;
  }
  // (A, B, nu) live on very different scales; invert the unit-diagonal
  // rescaling D M D and map back.
  if (!(M.diagonal().minCoeff() > 0.0))
    throw SingularityError("invert_info: information matrix is not positive definite");
  const Eigen::Vector3d d = M.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::Matrix3d S = d.asDiagonal() * M * d.asDiagonal();
  Eigen::LLT<Eigen::Matrix3d> llt(S);
  if (llt.info() != Eigen::Success) throw SingularityError("invert_info: information matrix is not positive definite");
  const Eigen::Matrix3d Sinv = llt.solve(Eigen::Matrix3d::Identity());
  out.entries = d.asDiagonal() * (0.5 * (Sinv + Sinv.transpose())) * d.asDiagonal();
  if (!out.entries.allFinite()) throw SingularityError("invert_info: inverse is not finite");
  return out;
}

// log|I|, or -inf when I is not positive definite.
inline double log_det(const InfoMatrix& info) {
  if (!info.allFinite()) return -std::numeric_limits<double>::infinity();
  Eigen::LLT<Eigen::Matrix3d> llt(info);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::Matrix3d L = llt.matrixL();
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (!(L(i, i) > 0.0)) return -std::numeric_limits<double>::infinity();
    s += std::log(L(i, i));
  }
  return 2.0 * s;
}

}  // namespace seqalt
