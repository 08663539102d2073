#pragma once

// Shift-invariant features (mean, power spectrum, bispectrum) and their
// debiased estimates from noisy observations.

#include "smra/core.hpp"
#include "smra/signal.hpp"

#include <cmath>

namespace smra {

struct SpectrumData {
  ComplexVector dft;
  RealVector power_spectrum;
  double mean = 0.0;
};

struct Bispectrum {
  // values(k1, k2) = xhat[k1] xhat[k2] xhat[(-k1-k2) mod L]
  ComplexMatrix values;
};

struct InvariantEstimates {
  double mean_est = 0.0;
  RealVector power_spectrum_est;
  ComplexMatrix bispectrum_est;
  long n_used = 0;
  double sigma_assumed = 0.0;
  bool debiased = true;

  int length() const { return static_cast<int>(power_spectrum_est.size()); }
};

inline RealVector power_spectrum_from_dft(const ComplexVector& xhat) { return xhat.cwiseAbs2(); }

inline RealVector power_spectrum(const RealVector& x) { return power_spectrum_from_dft(dft(x)); }

inline SpectrumData spectrum(const RealVector& x) {
  SpectrumData s;
  s.dft = dft(x);
  s.power_spectrum = power_spectrum_from_dft(s.dft);
  s.mean = s.dft[0].real() / static_cast<double>(x.size());
  return s;
}

inline ComplexMatrix bispectrum_from_dft(const ComplexVector& xhat) {
  const long L = xhat.size();
  ComplexMatrix b(L, L);
  for (long k1 = 0; k1 < L; ++k1)
    for (long k2 = 0; k2 < L; ++k2) b(k1, k2) = xhat[k1] * xhat[k2] * xhat[wrap_index(-k1 - k2, L)];
  return b;
}

inline Bispectrum bispectrum(const RealVector& x) { return {bispectrum_from_dft(dft(x))}; }

// Replace v[k] and v[(L-k) mod L] by their average.
inline void symmetrize_spectrum(RealVector& v) {
  const long L = v.size();
  for (long k = 1; k < L; ++k) {
    const long j = L - k;
    if (j <= k) break;
    const double avg = 0.5 * (v[k] + v[j]);
    v[k] = avg;
    v[j] = avg;
  }
}

// Analytic noise bias of the averaged bispectrum for y = R_s x + e with
// e ~ N(0, sigma^2 I): E[yhat[k1] yhat[k2] yhat[k3]] picks up L sigma^2 xhat[0]
// once for each of k1, k2, k1+k2 that vanishes mod L.
inline Complex bispectrum_bias(long k1, long k2, long L, double sigma, Complex xhat0) {
  const int hits = (k1 == 0) + (k2 == 0) + (wrap_index(k1 + k2, L) == 0);
  return static_cast<double>(L) * sigma * sigma * xhat0 * static_cast<double>(hits);
}

inline double power_spectrum_bias(long L, double sigma) { return static_cast<double>(L) * sigma * sigma; }

// Single-pass accumulator for the raw moment sums. Partial accumulators over
// disjoint observation subsets can be merged.
class InvariantAccumulator {
 public:
  explicit InvariantAccumulator(int length)
      : length_(length),
        sum_dft0_(0.0),
        sum_ps_(RealVector::Zero(length)),
        sum_bs_(ComplexMatrix::Zero(length, length)) {
    require(length >= 1, "InvariantAccumulator: length must be positive");
  }

  void add(const RealVector& y) {
    require(y.size() == length_, "InvariantAccumulator: observation length mismatch");
    const ComplexVector yhat = dft(y);
    sum_dft0_ += yhat[0];
    sum_ps_ += yhat.cwiseAbs2();
    const long L = length_;
    for (long k1 = 0; k1 < L; ++k1) {
      const Complex a = yhat[k1];
      for (long k2 = 0; k2 < L; ++k2) sum_bs_(k1, k2) += a * yhat[k2] * yhat[wrap_index(-k1 - k2, L)];
    }
    ++count_;
  }

  void merge(const InvariantAccumulator& other) {
    require(other.length_ == length_, "InvariantAccumulator: merge length mismatch");
    sum_dft0_ += other.sum_dft0_;
    sum_ps_ += other.sum_ps_;
    sum_bs_ += other.sum_bs_;
    count_ += other.count_;
  }

  long count() const { return count_; }
  int length() const { return length_; }

  // Averages, subtracts the noise bias and deconvolves by the atom transform.
  InvariantEstimates finalize(double sigma, const AtomProfile& atom, bool debias = true,
                              double atom_tolerance = 1e-8) const {
    require(count_ >= 1, "estimate_invariants: need at least one observation");
    require(sigma >= 0.0, "estimate_invariants: sigma must be non-negative");
    require(atom.length() == length_, "estimate_invariants: atom length mismatch");
    if (atom.min_transform_magnitude() < atom_tolerance)
      throw DegenerateError("estimate_invariants: atom transform vanishes");

    const long L = length_;
    const double n = static_cast<double>(count_);
    const Complex dft0 = sum_dft0_ / n;

    InvariantEstimates est;
    est.n_used = count_;
    est.sigma_assumed = sigma;
    est.debiased = debias;
    est.power_spectrum_est = sum_ps_ / n;
    est.bispectrum_est = sum_bs_ / n;
    if (debias) {
      est.power_spectrum_est.array() -= power_spectrum_bias(L, sigma);
      for (long k1 = 0; k1 < L; ++k1)
        for (long k2 = 0; k2 < L; ++k2) est.bispectrum_est(k1, k2) -= bispectrum_bias(k1, k2, L, sigma, dft0);
    }

    const ComplexVector& g = atom.transform();
    est.mean_est = (dft0 / g[0]).real() / static_cast<double>(L);
    if (!atom.is_delta()) {
      for (long k = 0; k < L; ++k) est.power_spectrum_est[k] /= std::norm(g[k]);
      for (long k1 = 0; k1 < L; ++k1)
        for (long k2 = 0; k2 < L; ++k2) est.bispectrum_est(k1, k2) /= g[k1] * g[k2] * g[wrap_index(-k1 - k2, L)];
    }
    symmetrize_spectrum(est.power_spectrum_est);
    return est;
  }

 private:
  int length_;
  long count_ = 0;
  Complex sum_dft0_;
  RealVector sum_ps_;
  ComplexMatrix sum_bs_;
};

inline InvariantEstimates estimate_invariants(const ObservationSet& obs, double sigma, const AtomProfile& atom,
                                              bool debias = true) {
  require(obs.size() >= 1, "estimate_invariants: need at least one observation");
  InvariantAccumulator acc(obs.length);
  for (const auto& y : obs.observations) acc.add(y);
  return acc.finalize(sigma, atom, debias);
}

// Invariants of a known signal, packaged as exact (noise-free) estimates.
inline InvariantEstimates exact_invariants(const RealVector& x) {
  InvariantEstimates est;
  const ComplexVector xhat = dft(x);
  est.mean_est = xhat[0].real() / static_cast<double>(x.size());
  est.power_spectrum_est = power_spectrum_from_dft(xhat);
  est.bispectrum_est = bispectrum_from_dft(xhat);
  est.n_used = 0;
  est.sigma_assumed = 0.0;
  return est;
}

}  // namespace smra
