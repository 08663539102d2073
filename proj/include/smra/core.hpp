#pragma once

// Shared vocabulary: vector aliases, error types, seeded RNG streams and the
// DFT convention used by every other module.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace smra {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

// Bad argument (out-of-range parameter, size mismatch, empty input).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input is well-formed but carries no usable information (vanishing atom
// transform, all-zero bispectrum, vanished gauge entry).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Measured data inconsistent with the model (e.g. a negative power spectrum).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

// Non-negative modulus for circular indexing.
inline long wrap_index(long i, long n) {
  long r = i % n;
  return r < 0 ? r + n : r;
}

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// A seeded generator that can derive independent child streams by key, so
// work can be split across trials or observations without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng split(std::uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
  }

  Rng split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return normal_(engine_); }

  // Uniform on {0, ..., n-1}.
  long uniform_index(long n) {
    return std::uniform_int_distribution<long>(0, n - 1)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// DFT, unnormalized forward: xhat[k] = sum_l x[l] exp(-2 pi i k l / L).
// The inverse divides by L.

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}
}  // namespace detail

inline ComplexVector dft(const RealVector& x) {
  require(x.size() >= 1, "dft: empty input");
  ComplexVector xc = x.cast<Complex>();
  if (x.size() == 1) return xc;  // kissfft does not handle length 1
  ComplexVector out(x.size());
  detail::fft_engine().fwd(out, xc);
  return out;
}

inline ComplexVector dft(const ComplexVector& x) {
  require(x.size() >= 1, "dft: empty input");
  if (x.size() == 1) return x;
  ComplexVector out(x.size());
  detail::fft_engine().fwd(out, x);
  return out;
}

inline ComplexVector inverse_dft(const ComplexVector& xhat) {
  require(xhat.size() >= 1, "inverse_dft: empty input");
  if (xhat.size() == 1) return xhat;
  ComplexVector out(xhat.size());
  detail::fft_engine().inv(out, xhat);
  return out;
}

// Real part of the inverse transform; the imaginary residue is dropped.
inline RealVector inverse_dft_real(const ComplexVector& xhat) {
  return inverse_dft(xhat).real();
}

}  // namespace smra
