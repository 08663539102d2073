#pragma once

// Expectation-maximization for the shift-marginalized posterior with an
// i.i.d. Bernoulli(q) prior.

#include "smra/core.hpp"
#include "smra/signal.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace smra {

struct EmConfig {
  double q = 0.5;
  double tol = 1e-7;
  long max_iter = 10'000;
  std::uint64_t seed = 0;
  int restarts = 1;

  void validate() const {
    require(q > 0.0 && q < 1.0, "EmConfig: q must lie in (0, 1)");
    require(tol > 0.0, "EmConfig: tol must be positive");
    require(max_iter >= 1, "EmConfig: max_iter must be at least 1");
    require(restarts >= 1, "EmConfig: restarts must be at least 1");
  }
};

struct EmState {
  RealVector x_t;
  long iteration = 0;
  double last_delta = std::numeric_limits<double>::infinity();
};

struct EmResult {
  RealVector continuous;
  SparseSignal estimate;  // continuous thresholded at 0.5
  long iterations = 0;
  bool converged = false;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<double> deltas;
};

inline double em_prior_term(double sigma, long n, double q) {
  return 2.0 * sigma * sigma / static_cast<double>(n) * std::log(q / (1.0 - q));
}

namespace detail {

// Posterior shift weights from precomputed transforms. Returns the log of
// the normalizer sum_s exp(-|y - R_s x|^2 / (2 sigma^2)).
inline double shift_weights(const ComplexVector& yhat, double y_sq, const ComplexVector& xhat, double x_sq,
                            double sigma, RealVector& w) {
  const long L = yhat.size();
  // c[s] = <y, R_s x>
  const RealVector c = inverse_dft_real(yhat.cwiseProduct(xhat.conjugate()));
  const double scale = 1.0 / (2.0 * sigma * sigma);
  w.resize(L);
  double top = -std::numeric_limits<double>::infinity();
  for (long s = 0; s < L; ++s) {
    w[s] = -(y_sq + x_sq - 2.0 * c[s]) * scale;
    top = std::max(top, w[s]);
  }
  double total = 0.0;
  for (long s = 0; s < L; ++s) {
    w[s] = std::exp(w[s] - top);
    total += w[s];
  }
  w /= total;
  return top + std::log(total);
}

}  // namespace detail

inline RealVector em_weights(const RealVector& y, const RealVector& x, double sigma) {
  require(sigma > 0.0, "em_weights: sigma must be positive");
  require(y.size() == x.size() && y.size() >= 1, "em_weights: length mismatch");
  RealVector w;
  detail::shift_weights(dft(y), y.squaredNorm(), dft(x), x.squaredNorm(), sigma, w);
  return w;
}

// Observation transforms and energies, computed once per solve.
class EmObservationCache {
 public:
  explicit EmObservationCache(const ObservationSet& obs) : length_(obs.length) {
    require(obs.size() >= 1, "em: need at least one observation");
    spectra_.reserve(obs.size());
    energies_.reserve(obs.size());
    for (const auto& y : obs.observations) {
      require(y.size() == length_, "em: observation length mismatch");
      spectra_.push_back(dft(y));
      energies_.push_back(y.squaredNorm());
    }
  }

  int length() const { return length_; }
  long size() const { return static_cast<long>(spectra_.size()); }

  // One EM step. Also reports the data log-likelihood of x_t (up to a constant).
  RealVector update(const RealVector& x_t, double sigma, double q, double* log_likelihood = nullptr) const {
    require(sigma > 0.0, "em_update: sigma must be positive");
    require(x_t.size() == length_, "em_update: iterate length mismatch");
    const ComplexVector xhat = dft(x_t);
    const double x_sq = x_t.squaredNorm();
    ComplexVector acc = ComplexVector::Zero(length_);
    RealVector w;
    double ll = 0.0;
    for (std::size_t i = 0; i < spectra_.size(); ++i) {
      ll += detail::shift_weights(spectra_[i], energies_[i], xhat, x_sq, sigma, w);
      // sum_s w[s] y[l + s]  <->  yhat[k] conj(what[k])
      acc += spectra_[i].cwiseProduct(dft(w).conjugate());
    }
    if (log_likelihood) *log_likelihood = ll;
    const long n = size();
    RealVector next = inverse_dft_real(acc) / static_cast<double>(n);
    next.array() += em_prior_term(sigma, n, q);
    return next;
  }

 private:
  int length_;
  std::vector<ComplexVector> spectra_;
  std::vector<double> energies_;
};

inline RealVector em_update(const RealVector& x_t, const ObservationSet& obs, double sigma, const EmConfig& config) {
  config.validate();
  return EmObservationCache(obs).update(x_t, sigma, config.q);
}

inline EmResult em_solve_from(const EmObservationCache& cache, double sigma, const EmConfig& config, RealVector x0) {
  config.validate();
  require(sigma > 0.0, "em_solve: sigma must be positive");
  EmState state{std::move(x0), 0, std::numeric_limits<double>::infinity()};
  EmResult result;
  double ll = 0.0;
  while (state.iteration < config.max_iter) {
    RealVector next = cache.update(state.x_t, sigma, config.q, &ll);
    state.last_delta = (next - state.x_t).norm();
    state.x_t = std::move(next);
    ++state.iteration;
    result.deltas.push_back(state.last_delta);
    if (state.last_delta < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.iterations = state.iteration;
  result.log_likelihood = ll;
  result.continuous = std::move(state.x_t);
  result.estimate = SparseSignal::binarize(result.continuous, 0.5);
  return result;
}

// Restarts draw uniform(0,1) starts from split streams of config.seed; the
// restart with the highest final log-likelihood wins.
inline EmResult em_solve(const ObservationSet& obs, double sigma, const EmConfig& config) {
  config.validate();
  const EmObservationCache cache(obs);
  const Rng root(config.seed);
  EmResult best;
  for (int r = 0; r < config.restarts; ++r) {
    Rng rng = root.split(static_cast<std::uint64_t>(r));
    RealVector x0(cache.length());
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform();
    EmResult run = em_solve_from(cache, sigma, config, std::move(x0));
    if (r == 0 || run.log_likelihood > best.log_likelihood) best = std::move(run);
  }
  return best;
}

}  // namespace smra
