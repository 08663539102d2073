#include "smra/invariants.hpp"
#include "smra/signal.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace smra;

namespace {

// Direct O(L^2) evaluation of the forward sum.
ComplexVector naive_dft(const RealVector& x) {
  const long L = x.size();
  ComplexVector out(L);
  for (long k = 0; k < L; ++k) {
    Complex acc(0.0, 0.0);
    for (long l = 0; l < L; ++l) acc += x[l] * std::polar(1.0, -2.0 * kPi * k * l / L);
    out[k] = acc;
  }
  return out;
}

RealVector random_vector(int L, Rng& rng) {
  RealVector v(L);
  for (int i = 0; i < L; ++i) v[i] = rng.normal();
  return v;
}

// Per-entry Monte-Carlo standard errors of the debiased bispectrum: the
// estimator is an average of per-observation terms, so its standard error is
// the sample standard deviation of those terms over sqrt(n).
struct BispectrumMoments {
  ComplexMatrix mean;
  RealMatrix se_re, se_im;
};

BispectrumMoments debiased_bispectrum_terms(const ObservationSet& obs, double sigma) {
  const long L = obs.length;
  const double n = static_cast<double>(obs.size());
  ComplexMatrix sum = ComplexMatrix::Zero(L, L);
  RealMatrix sq_re = RealMatrix::Zero(L, L), sq_im = RealMatrix::Zero(L, L);
  for (const auto& y : obs.observations) {
    const ComplexVector yh = naive_dft(y);
    for (long a = 0; a < L; ++a)
      for (long b = 0; b < L; ++b) {
        const long c = ((-(a + b)) % L + L) % L;
        const int hits = (a == 0) + (b == 0) + (c == 0);
        const Complex t = yh[a] * yh[b] * yh[c] - static_cast<double>(L) * sigma * sigma * yh[0] * double(hits);
        sum(a, b) += t;
        sq_re(a, b) += t.real() * t.real();
        sq_im(a, b) += t.imag() * t.imag();
      }
  }
  BispectrumMoments m;
  m.mean = sum / n;
  m.se_re = ((sq_re / n).array() - m.mean.real().array().square()).max(0.0).sqrt() / std::sqrt(n);
  m.se_im = ((sq_im / n).array() - m.mean.imag().array().square()).max(0.0).sqrt() / std::sqrt(n);
  return m;
}

}  // namespace

TEST_CASE("dft uses the unnormalized forward convention", "[invariants]") {
  RealVector delta = RealVector::Zero(4);
  delta[0] = 1.0;
  CHECK((dft(delta) - ComplexVector::Ones(4)).norm() < 1e-14);

  const ComplexVector ones = dft(RealVector(RealVector::Ones(4)));
  CHECK(std::abs(ones[0] - Complex(4, 0)) < 1e-14);
  CHECK(ones.tail(3).norm() < 1e-14);

  RealVector x(4);
  x << 1, 1, 0, 0;
  const ComplexVector xh = dft(x);
  CHECK(std::abs(xh[0] - Complex(2, 0)) < 1e-14);
  CHECK(std::abs(xh[1] - Complex(1, -1)) < 1e-14);
  CHECK(std::abs(xh[2]) < 1e-14);
  CHECK(std::abs(xh[3] - Complex(1, 1)) < 1e-14);
}

TEST_CASE("dft matches the direct sum and inverts", "[invariants][property]") {
  Rng rng(1);
  for (int L : {1, 2, 3, 7, 12, 20, 60, 80, 97, 120}) {
    const RealVector x = random_vector(L, rng);
    const ComplexVector fast = dft(x);
    CHECK((fast - naive_dft(x)).norm() <= 1e-10 * std::max(1.0, fast.norm()));
    CHECK((inverse_dft_real(fast) - x).norm() <= 1e-10 * x.norm());
  }
}

TEST_CASE("power_spectrum", "[invariants]") {
  RealVector d = RealVector::Zero(5);
  d[3] = 1.0;
  CHECK((power_spectrum(d) - RealVector::Ones(5)).norm() < 1e-14);

  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto x = sample_fixed_sparsity(15, 4, rng);
    const RealVector ps = power_spectrum(x.values());
    CHECK(std::abs(ps[0] - 16.0) < 1e-12);
    CHECK((power_spectrum(circular_shift(x.values(), t)) - ps).norm() < 1e-12);
    for (int k = 1; k < 15; ++k) CHECK(std::abs(ps[k] - ps[15 - k]) < 1e-12);
  }
}

TEST_CASE("bispectrum", "[invariants]") {
  RealVector d = RealVector::Zero(6);
  d[0] = 1.0;
  CHECK((bispectrum(d).values - ComplexMatrix::Ones(6, 6)).norm() < 1e-13);

  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto x = sample_fixed_sparsity(12, 4, rng);
    const ComplexMatrix b = bispectrum(x.values()).values;
    CHECK(std::abs(b(0, 0) - Complex(64, 0)) < 1e-11);
    const ComplexMatrix bs = bispectrum(circular_shift(x.values(), 1 + t)).values;
    CHECK((bs - b).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("estimate_invariants on noiseless data is exact", "[invariants]") {
  Rng rng(21);
  const auto x = sample_fixed_sparsity(14, 4, rng);
  const auto atom = AtomProfile::delta(14);
  const auto obs = generate_observations(x, atom, 37, 0.0, rng.split(1));
  const auto est = estimate_invariants(obs, 0.0, atom);
  CHECK(est.n_used == 37);
  CHECK(std::abs(est.mean_est - 4.0 / 14.0) < 1e-12);
  CHECK((est.power_spectrum_est - power_spectrum(x.values())).norm() < 1e-10);
  CHECK((est.bispectrum_est - bispectrum(x.values()).values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("estimate_invariants deconvolves a non-delta atom", "[invariants]") {
  const int L = 10;
  RealVector g = RealVector::Zero(L);
  g[0] = 1.0;
  g[1] = 0.4;
  g[L - 1] = 0.2;
  const AtomProfile atom(g);
  REQUIRE(atom.min_transform_magnitude() > 0.1);
  Rng rng(2);
  const auto x = sample_fixed_sparsity(L, 3, rng);
  const auto obs = generate_observations(x, atom, 12, 0.0, rng.split(3));
  const auto est = estimate_invariants(obs, 0.0, atom);
  CHECK(std::abs(est.mean_est - 0.3) < 1e-12);
  CHECK((est.power_spectrum_est - power_spectrum(x.values())).norm() < 1e-10);
  CHECK((est.bispectrum_est - bispectrum(x.values()).values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("estimate_invariants errors", "[invariants]") {
  ObservationSet empty;
  empty.length = 5;
  CHECK_THROWS_AS(estimate_invariants(empty, 1.0, AtomProfile::delta(5)), ParameterError);

  RealVector g = RealVector::Zero(4);
  g[0] = 1.0;
  g[2] = 1.0;  // transform vanishes at k = 1, 3
  Rng rng(1);
  const auto obs = generate_observations(sample_fixed_sparsity(4, 2, rng), AtomProfile::delta(4), 3, 0.0, Rng(2));
  CHECK_THROWS_AS(estimate_invariants(obs, 0.0, AtomProfile(g)), DegenerateError);
}

TEST_CASE("debiased power spectrum is exactly conjugate symmetric", "[invariants]") {
  Rng rng(5);
  const auto x = sample_fixed_sparsity(11, 3, rng);
  const auto obs = generate_observations(x, AtomProfile::delta(11), 50, 2.0, rng.split(1));
  const auto est = estimate_invariants(obs, 2.0, AtomProfile::delta(11));
  for (int k = 1; k < 11; ++k) CHECK(est.power_spectrum_est[k] == est.power_spectrum_est[11 - k]);
}

TEST_CASE("streaming accumulators merge associatively", "[invariants]") {
  Rng rng(6);
  const auto x = sample_fixed_sparsity(9, 3, rng);
  const auto obs = generate_observations(x, AtomProfile::delta(9), 40, 1.0, rng.split(1));
  InvariantAccumulator whole(9), left(9), right(9);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    whole.add(obs.observations[i]);
    (i < 17 ? left : right).add(obs.observations[i]);
  }
  left.merge(right);
  const auto a = whole.finalize(1.0, AtomProfile::delta(9));
  const auto b = left.finalize(1.0, AtomProfile::delta(9));
  CHECK((a.power_spectrum_est - b.power_spectrum_est).norm() < 1e-9);
  CHECK((a.bispectrum_est - b.bispectrum_est).norm() < 1e-8 * a.bispectrum_est.norm());
}

TEST_CASE("bias formulas: pure-noise estimates are centred at zero", "[invariants][montecarlo]") {
  const int L = 12;
  const double sigma = 1.0;
  SparseSignal zero(RealVector::Zero(L));
  const auto obs = generate_observations(zero, AtomProfile::delta(L), 20000, sigma, Rng(77));
  const auto est = estimate_invariants(obs, sigma, AtomProfile::delta(L));

  // Var |e[k]|^2 = (L sigma^2)^2 for complex bins, 2 (L sigma^2)^2 for real ones.
  for (int k = 0; k < L; ++k) {
    const bool real_bin = k == 0 || 2 * k == L;
    const double se = (real_bin ? std::sqrt(2.0) : 1.0) * L * sigma * sigma / std::sqrt(20000.0);
    CHECK(std::abs(est.power_spectrum_est[k]) < 5.0 * se);
  }
  const auto mc = debiased_bispectrum_terms(obs, sigma);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      CHECK(std::abs(est.bispectrum_est(a, b).real()) <= 5.0 * mc.se_re(a, b) + 1e-9);
      CHECK(std::abs(est.bispectrum_est(a, b).imag()) <= 5.0 * mc.se_im(a, b) + 1e-9);
    }
}

TEST_CASE("bias formulas: nonzero-mean signal is recovered without bias", "[invariants][montecarlo]") {
  // With x = 0 every odd moment vanishes, so the xhat[0]-dependent bispectrum
  // correction is only exercised by a signal with nonzero mean.
  const int L = 8;
  const double sigma = 1.0;
  const int n = 100000;
  const auto x = SparseSignal::from_support(L, {0, 1, 3});
  const auto obs = generate_observations(x, AtomProfile::delta(L), n, sigma, Rng(5150));
  const auto est = estimate_invariants(obs, sigma, AtomProfile::delta(L));
  const auto raw = estimate_invariants(obs, sigma, AtomProfile::delta(L), /*debias=*/false);
  const ComplexMatrix truth = bispectrum(x.values()).values;
  const auto mc = debiased_bispectrum_terms(obs, sigma);

  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      const Complex diff = est.bispectrum_est(a, b) - truth(a, b);
      CHECK(std::abs(diff.real()) <= 5.0 * mc.se_re(a, b) + 1e-9);
      CHECK(std::abs(diff.imag()) <= 5.0 * mc.se_im(a, b) + 1e-9);
    }
  // Without the correction the k1 = 0 row is visibly biased.
  CHECK(std::abs((raw.bispectrum_est(0, 0) - truth(0, 0)).real()) > 10.0 * mc.se_re(0, 0));
  const RealVector ps = power_spectrum(x.values());
  for (int k = 0; k < L; ++k) CHECK(std::abs(est.power_spectrum_est[k] - ps[k]) < 5.0 * 2.0 * (L + 2.0 * std::sqrt(ps[k] * L)) / std::sqrt(double(n)));
}
