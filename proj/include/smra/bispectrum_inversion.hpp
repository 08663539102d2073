#pragma once

// Signal recovery from (estimated) power spectrum and bispectrum: frequency
// marching for an initial phase vector, then least-squares refinement of the
// phases on the torus with magnitudes held at sqrt(ps).

#include "smra/core.hpp"
#include "smra/invariants.hpp"
#include "smra/signal.hpp"

#include <cmath>
#include <vector>

namespace smra {

struct PhaseVector {
  // phases[k] = angle of xhat[k]; phases[0] = 0 and phases[L-k] = -phases[k].
  RealVector phases;
};

struct BispectrumInversionOptions {
  double rel_decrease_tol = 1e-10;
  int max_steps = 5000;
  double degenerate_threshold = 1e-10;
  double imag_warning_ratio = 1e-6;
};

struct BispectrumInversionResult {
  RealVector continuous;
  SparseSignal estimate;  // continuous thresholded at 0.5
  PhaseVector initial_phases;
  PhaseVector phases;
  double marching_residual = 0.0;
  double refined_residual = 0.0;
  int refinement_steps = 0;
  double imag_residue = 0.0;
  bool imag_warning = false;
};

namespace detail {

// Free parameters are the phases of k = 1..(L-1)/2; for even L the real
// Nyquist bin keeps the fixed phase `nyquist` (0 or pi).
inline RealVector expand_phases(const RealVector& half, long L, double nyquist) {
  RealVector full = RealVector::Zero(L);
  for (long k = 1; k <= static_cast<long>(half.size()); ++k) {
    full[k] = half[k - 1];
    full[L - k] = -half[k - 1];
  }
  if (L % 2 == 0) full[L / 2] = nyquist;
  return full;
}

inline double bispectrum_residual(const ComplexMatrix& b, const RealVector& mag, const RealVector& phase) {
  const long L = mag.size();
  double f = 0.0;
  for (long k1 = 0; k1 < L; ++k1)
    for (long k2 = 0; k2 < L; ++k2) {
      const long k3 = wrap_index(k1 + k2, L);
      const Complex model = std::polar(mag[k1] * mag[k2] * mag[k3], phase[k1] + phase[k2] - phase[k3]);
      f += std::norm(b(k1, k2) - model);
    }
  return f;
}

// Gradient of the residual with respect to the half-phase parameters.
inline RealVector bispectrum_residual_gradient(const ComplexMatrix& b, const RealVector& mag, const RealVector& phase,
                                               long n_free) {
  const long L = mag.size();
  RealVector g_full = RealVector::Zero(L);
  for (long k1 = 0; k1 < L; ++k1)
    for (long k2 = 0; k2 < L; ++k2) {
      const long k3 = wrap_index(k1 + k2, L);
      const Complex model = std::polar(mag[k1] * mag[k2] * mag[k3], phase[k1] + phase[k2] - phase[k3]);
      const Complex r = b(k1, k2) - model;
      // d|r|^2 / d(delta) with delta = phase[k1] + phase[k2] - phase[k3]
      const double d = -2.0 * std::real(std::conj(r) * Complex(0.0, 1.0) * model);
      g_full[k1] += d;
      g_full[k2] += d;
      g_full[k3] -= d;
    }
  RealVector g(n_free);
  for (long k = 1; k <= n_free; ++k) g[k - 1] = g_full[k] - g_full[L - k];
  return g;
}

}  // namespace detail

// Marching with a provisional gauge phase[1] = 0 up to floor(L/2); the
// remaining linear-phase offset is read off the pairs that wrap past L/2, so
// the returned gauge differs from the truth by an integer shift only.
inline PhaseVector march_phases(const ComplexMatrix& b) {
  const long L = b.rows();
  require(L >= 3 && b.cols() == L, "march_phases: need a square bispectrum with L >= 3");
  const long K = L / 2;
  RealVector phi = RealVector::Zero(K + 1);
  for (long k = 2; k <= K; ++k) {
    Complex z(0.0, 0.0);
    for (long a = 1; a < k; ++a) z += std::polar(1.0, phi[a] + phi[k - a]) * std::conj(b(a, k - a));
    phi[k] = std::abs(z) > 0.0 ? std::arg(z) : 0.0;
  }
  // For c = a + b > K the marched gauge has phase[c] = -phase[L - c] - alpha.
  Complex z(0.0, 0.0);
  for (long a = 1; a <= K; ++a)
    for (long bb = a; bb <= K; ++bb) {
      const long c = a + bb;
      if (c <= K || c >= L) continue;
      z += b(a, bb) * std::polar(1.0, -(phi[a] + phi[bb] + phi[L - c]));
    }
  const double alpha = std::abs(z) > 0.0 ? std::arg(z) : 0.0;

  const long n_free = (L - 1) / 2;
  RealVector half(n_free);
  for (long k = 1; k <= n_free; ++k) half[k - 1] = phi[k] + static_cast<double>(k) * alpha / static_cast<double>(L);
  double nyquist = 0.0;
  if (L % 2 == 0) nyquist = std::cos(phi[K] + 0.5 * alpha) >= 0.0 ? 0.0 : kPi;
  return {detail::expand_phases(half, L, nyquist)};
}

inline BispectrumInversionResult invert_bispectrum(const InvariantEstimates& est,
                                                   const BispectrumInversionOptions& opts = {}) {
  const long L = est.length();
  require(L >= 3, "invert_bispectrum: need L >= 3");
  require(est.bispectrum_est.rows() == L && est.bispectrum_est.cols() == L, "invert_bispectrum: bispectrum size mismatch");
  require(est.power_spectrum_est.maxCoeff() > 0.0, "invert_bispectrum: power spectrum is identically non-positive");
  const ComplexMatrix& b = est.bispectrum_est;
  if (b.cwiseAbs().maxCoeff() < opts.degenerate_threshold)
    throw DegenerateError("invert_bispectrum: bispectrum vanishes; phases unidentifiable");

  const RealVector mag = est.power_spectrum_est.cwiseMax(0.0).cwiseSqrt();
  const long n_free = (L - 1) / 2;

  BispectrumInversionResult res;
  res.initial_phases = march_phases(b);
  const double nyquist = L % 2 == 0 ? res.initial_phases.phases[L / 2] : 0.0;
  RealVector half = res.initial_phases.phases.segment(1, n_free);
  RealVector phase = res.initial_phases.phases;
  double f = detail::bispectrum_residual(b, mag, phase);
  res.marching_residual = f;

  const double floor_f = 1e-28 * b.squaredNorm();
  double step = 1.0;
  for (int it = 0; it < opts.max_steps && f > floor_f; ++it) {
    const RealVector g = detail::bispectrum_residual_gradient(b, mag, phase, n_free);
    const double gg = g.squaredNorm();
    if (!(gg > 0.0)) break;
    if (it == 0) step = 0.1 / std::sqrt(gg);
    // Armijo backtracking
    double f_new = f;
    RealVector half_new, phase_new;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      half_new = half - step * g;
      phase_new = detail::expand_phases(half_new, L, nyquist);
      f_new = detail::bispectrum_residual(b, mag, phase_new);
      if (f_new <= f - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double decrease = (f - f_new) / f;
    half = std::move(half_new);
    phase = std::move(phase_new);
    f = f_new;
    ++res.refinement_steps;
    step *= 2.0;
    if (decrease < opts.rel_decrease_tol) break;
  }
  res.refined_residual = f;
  res.phases = {phase};

  ComplexVector xhat(L);
  for (long k = 0; k < L; ++k) xhat[k] = std::polar(mag[k], phase[k]);
  const ComplexVector x = inverse_dft(xhat);
  res.continuous = x.real();
  res.imag_residue = x.imag().norm();
  res.imag_warning = res.imag_residue > opts.imag_warning_ratio * std::max(res.continuous.norm(), 1e-300);
  res.estimate = SparseSignal::binarize(res.continuous, 0.5);
  return res;
}

}  // namespace smra
