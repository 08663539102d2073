#pragma once

// Relaxed-reflect-reflect iteration for recovering a binary M-sparse signal
// from its power spectrum.
//
//   x <- x + beta * (P2(2 P1(x) - x) - P1(x))
//
// P1 puts ones at the M largest entries, P2 imposes the measured Fourier
// magnitudes while keeping the current phases.

#include "smra/core.hpp"
#include "smra/invariants.hpp"
#include "smra/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace smra {

struct RrrConfig {
  double beta = 0.5;
  int sparsity = 0;
  double tol = 1e-5;
  long max_iter = 1'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    require(beta > 0.0 && beta < 2.0, "RrrConfig: beta must lie in (0, 2)");
    require(sparsity >= 0, "RrrConfig: M must be non-negative");
    require(tol > 0.0, "RrrConfig: tol must be positive");
    require(max_iter >= 1, "RrrConfig: max_iter must be at least 1");
  }
};

struct RrrResult {
  SparseSignal estimate;
  long iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
};

// Binary top-M projection; ties go to the lower index.
inline RealVector project_sparsity(const RealVector& x, int sparsity) {
  const long L = x.size();
  require(sparsity >= 0 && sparsity <= L, "project_sparsity: M must lie in [0, L]");
  std::vector<int> idx(L);
  std::iota(idx.begin(), idx.end(), 0);
  auto before = [&](int a, int b) { return x[a] > x[b] || (x[a] == x[b] && a < b); };
  if (sparsity < L) std::nth_element(idx.begin(), idx.begin() + sparsity, idx.end(), before);
  RealVector out = RealVector::Zero(L);
  for (int i = 0; i < sparsity; ++i) out[idx[i]] = 1.0;
  return out;
}

// Magnitudes sqrt(max(ps, 0)) with the phases of x; a bin with
// |xhat| < 1e-12 takes phase 1.
inline RealVector project_power_spectrum(const RealVector& x, const RealVector& ps) {
  require(x.size() == ps.size(), "project_power_spectrum: length mismatch");
  ComplexVector xhat = dft(x);
  for (Eigen::Index k = 0; k < xhat.size(); ++k) {
    const double mag = std::sqrt(std::max(ps[k], 0.0));
    const double a = std::abs(xhat[k]);
    xhat[k] = a < 1e-12 ? Complex(mag, 0.0) : xhat[k] * (mag / a);
  }
  return inverse_dft_real(xhat);
}

inline double relative_spectrum_error(const RealVector& x, const RealVector& ps) {
  const double denom = ps.norm();
  require(denom > 0.0, "relative_spectrum_error: reference spectrum is zero");
  return (power_spectrum(x) - ps).norm() / denom;
}

// ps[0] = M^2 for a binary signal.
inline int infer_sparsity(const RealVector& ps) {
  require(ps.size() >= 1, "infer_sparsity: empty spectrum");
  return static_cast<int>(std::lround(std::sqrt(std::max(ps[0], 0.0))));
}

// One RRR step.
inline RealVector rrr_step(const RealVector& x, const RealVector& ps, int sparsity, double beta) {
  const RealVector p1 = project_sparsity(x, sparsity);
  const RealVector p2 = project_power_spectrum(2.0 * p1 - x, ps);
  return x + beta * (p2 - p1);
}

// Runs from the given starting point. Iteration t evaluates P1 on the current
// iterate and stops if its spectrum already matches; `iterations` counts
// those evaluations.
inline RrrResult rrr_solve_from(const RealVector& ps, const RrrConfig& config, RealVector x) {
  config.validate();
  require(x.size() == ps.size(), "rrr_solve: length mismatch");
  require(config.sparsity <= ps.size(), "rrr_solve: M exceeds L");
  const double ps_norm = ps.norm();
  require(ps_norm > 0.0, "rrr_solve: power spectrum is zero");

  RrrResult result;
  RealVector p1;
  for (long it = 1; it <= config.max_iter; ++it) {
    p1 = project_sparsity(x, config.sparsity);
    result.final_residual = (power_spectrum(p1) - ps).norm() / ps_norm;
    result.iterations = it;
    if (result.final_residual < config.tol) {
      result.converged = true;
      break;
    }
    const RealVector p2 = project_power_spectrum(2.0 * p1 - x, ps);
    x += config.beta * (p2 - p1);
  }
  result.estimate = SparseSignal(p1);
  return result;
}

// Random start with i.i.d. uniform(0,1) entries drawn from the config seed.
inline RrrResult rrr_solve(const RealVector& ps, const RrrConfig& config) {
  Rng rng(config.seed);
  RealVector x0(ps.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform();
  return rrr_solve_from(ps, config, std::move(x0));
}

}  // namespace smra
