#pragma once

// Distance between signals modulo circular shifts (and optionally reflection).

#include "smra/core.hpp"
#include "smra/signal.hpp"

#include <cmath>
#include <limits>

namespace smra {

struct OrbitError {
  double relative_error = 0.0;
  int best_shift = 0;
  bool reflected = false;
  bool include_reflection = false;
};

// Applies the transform recorded in `err` to `x`: shift, after reflecting if
// err.reflected.
inline RealVector apply_orbit_transform(const RealVector& x, const OrbitError& err) {
  return circular_shift(err.reflected ? reflect(x) : x, err.best_shift);
}

namespace detail {

// c[s] = <R_s a, b> for all s, via a + b's transforms.
inline RealVector shift_correlation(const RealVector& a, const RealVector& b) {
  const ComplexVector ahat = dft(a);
  const ComplexVector bhat = dft(b);
  return inverse_dft_real(bhat.cwiseProduct(ahat.conjugate()));
}

}  // namespace detail

// Ties within a relative 1e-9 of the minimum resolve to the smallest shift,
// unreflected before reflected.
inline OrbitError align_to_orbit(const RealVector& x_est, const RealVector& x_true, bool include_reflection) {
  require(x_est.size() == x_true.size(), "align_to_orbit: length mismatch");
  require(x_true.size() >= 1, "align_to_orbit: empty input");
  const double true_sq = x_true.squaredNorm();
  if (!(true_sq > 0.0)) throw DegenerateError("align_to_orbit: reference signal has zero norm");
  const double est_sq = x_est.squaredNorm();
  const long L = x_true.size();

  std::vector<double> dist;  // squared distances, unreflected block first
  dist.reserve(include_reflection ? 2 * L : L);
  const RealVector c = detail::shift_correlation(x_est, x_true);
  for (long s = 0; s < L; ++s) dist.push_back(std::max(0.0, est_sq + true_sq - 2.0 * c[s]));
  if (include_reflection) {
    const RealVector cr = detail::shift_correlation(reflect(x_est), x_true);
    for (long s = 0; s < L; ++s) dist.push_back(std::max(0.0, est_sq + true_sq - 2.0 * cr[s]));
  }

  double best = std::numeric_limits<double>::infinity();
  for (double d : dist) best = std::min(best, d);
  const double slack = 1e-9 * (est_sq + true_sq);
  std::size_t arg = 0;
  while (dist[arg] > best + slack) ++arg;

  OrbitError err;
  err.include_reflection = include_reflection;
  err.reflected = arg >= static_cast<std::size_t>(L);
  err.best_shift = static_cast<int>(arg % L);
  // Recompute at the chosen transform to avoid cancellation in the expansion.
  err.relative_error = (apply_orbit_transform(x_est, err) - x_true).norm() / std::sqrt(true_sq);
  return err;
}

}  // namespace smra
