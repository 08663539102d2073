#pragma once

// Sparse binary signals, circular shifts, the atom model and generation of
// noisy shifted observations.

#include "smra/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace smra {

// Binary length-L signal with its support kept alongside.
class SparseSignal {
 public:
  SparseSignal() = default;

  explicit SparseSignal(RealVector values) : values_(std::move(values)) {
    require(values_.size() >= 1, "SparseSignal: length must be positive");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      require(v == 0.0 || v == 1.0, "SparseSignal: entries must be 0 or 1");
      if (v == 1.0) support_.push_back(static_cast<int>(i));
    }
  }

  static SparseSignal from_support(int length, const std::vector<int>& support) {
    require(length >= 1, "SparseSignal: length must be positive");
    RealVector v = RealVector::Zero(length);
    for (int s : support) {
      require(s >= 0 && s < length, "SparseSignal: support index out of range");
      v[s] = 1.0;
    }
    return SparseSignal(std::move(v));
  }

  // Threshold a continuous estimate at `threshold`.
  static SparseSignal binarize(const RealVector& x, double threshold = 0.5) {
    RealVector v(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = x[i] > threshold ? 1.0 : 0.0;
    return SparseSignal(std::move(v));
  }

  int length() const { return static_cast<int>(values_.size()); }
  int sparsity() const { return static_cast<int>(support_.size()); }
  const RealVector& values() const { return values_; }
  const std::vector<int>& support() const { return support_; }

  bool operator==(const SparseSignal& o) const { return values_ == o.values_; }

 private:
  RealVector values_;
  std::vector<int> support_;
};

// Atom shape g together with its transform. The default is the Kronecker
// delta, whose transform is all ones.
class AtomProfile {
 public:
  static AtomProfile delta(int length) {
    require(length >= 1, "AtomProfile: length must be positive");
    RealVector g = RealVector::Zero(length);
    g[0] = 1.0;
    return AtomProfile(std::move(g));
  }

  explicit AtomProfile(RealVector samples) : samples_(std::move(samples)) {
    require(samples_.size() >= 1, "AtomProfile: length must be positive");
    dft_ = dft(samples_);
  }

  int length() const { return static_cast<int>(samples_.size()); }
  const RealVector& samples() const { return samples_; }
  const ComplexVector& transform() const { return dft_; }

  bool is_delta() const {
    return samples_[0] == 1.0 && (samples_.size() == 1 || samples_.tail(samples_.size() - 1).isZero(0.0));
  }

  double min_transform_magnitude() const { return dft_.cwiseAbs().minCoeff(); }

 private:
  RealVector samples_;
  ComplexVector dft_;
};

struct ObservationSet {
  int length = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<RealVector> observations;
  // Diagnostics only; solvers never read these.
  std::vector<int> true_shifts;

  std::size_t size() const { return observations.size(); }
};

// out[l] = x[(l - s) mod L]
inline RealVector circular_shift(const RealVector& x, long s) {
  const long L = x.size();
  require(L >= 1, "circular_shift: empty input");
  RealVector out(L);
  const long r = wrap_index(s, L);
  for (long l = 0; l < L; ++l) out[l] = x[wrap_index(l - r, L)];
  return out;
}

// r(x)[l] = x[(-l) mod L]; fixes index 0.
inline RealVector reflect(const RealVector& x) {
  const long L = x.size();
  RealVector out(L);
  for (long l = 0; l < L; ++l) out[l] = x[wrap_index(-l, L)];
  return out;
}

inline SparseSignal sample_bernoulli_signal(int length, double q, Rng& rng) {
  require(length >= 1, "sample_bernoulli_signal: length must be positive");
  require(q >= 0.0 && q <= 1.0, "sample_bernoulli_signal: q must lie in [0,1]");
  RealVector v(length);
  for (int i = 0; i < length; ++i) v[i] = rng.bernoulli(q) ? 1.0 : 0.0;
  return SparseSignal(std::move(v));
}

inline SparseSignal sample_fixed_sparsity(int length, int sparsity, Rng& rng) {
  require(length >= 1, "sample_fixed_sparsity: length must be positive");
  require(sparsity >= 0 && sparsity <= length, "sample_fixed_sparsity: M must lie in [0, L]");
  std::vector<int> idx(length);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first M slots become a uniform M-subset.
  for (int i = 0; i < sparsity; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(length - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(sparsity);
  return SparseSignal::from_support(length, idx);
}

// Ordered pairwise differences (a - b) mod L over a != b, as value -> count.
inline std::map<int, int> difference_multiset(const std::vector<int>& support, int length) {
  require(length >= 1, "difference_multiset: length must be positive");
  std::map<int, int> counts;
  for (int a : support) {
    require(a >= 0 && a < length, "difference_multiset: support index out of range");
    for (int b : support) {
      if (a == b) continue;
      ++counts[static_cast<int>(wrap_index(a - b, length))];
    }
  }
  return counts;
}

inline bool is_collision_free(const std::vector<int>& support, int length) {
  const auto counts = difference_multiset(support, length);
  return std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second == 1; });
}

// Circular convolution of the support indicator with the atom.
inline RealVector embed_atoms(const std::vector<int>& support, const AtomProfile& atom, int length) {
  require(atom.length() == length, "embed_atoms: atom length must equal L");
  RealVector x = RealVector::Zero(length);
  for (int m : support) {
    require(m >= 0 && m < length, "embed_atoms: support index out of range");
    for (int n = 0; n < length; ++n) x[n] += atom.samples()[wrap_index(n - m, length)];
  }
  return x;
}

// Observation i draws its shift and noise from the substream rng.split(i).
inline ObservationSet generate_observations(const SparseSignal& x, const AtomProfile& atom, int n,
                                            double sigma, const Rng& rng) {
  require(n >= 0, "generate_observations: n must be non-negative");
  require(sigma >= 0.0, "generate_observations: sigma must be non-negative");
  const int L = x.length();
  const RealVector clean = embed_atoms(x.support(), atom, L);

  ObservationSet obs;
  obs.length = L;
  obs.sigma = sigma;
  obs.seed = rng.seed();
  obs.observations.reserve(n);
  obs.true_shifts.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng sub = rng.split(static_cast<std::uint64_t>(i));
    const int s = static_cast<int>(sub.uniform_index(L));
    RealVector y = circular_shift(clean, s);
    if (sigma > 0.0) {
      for (int l = 0; l < L; ++l) y[l] += sigma * sub.normal();
    }
    obs.observations.push_back(std::move(y));
    obs.true_shifts.push_back(s);
  }
  return obs;
}

}  // namespace smra
