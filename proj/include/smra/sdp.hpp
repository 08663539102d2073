#pragma once

// Lifted convex relaxation for binary phase retrieval.
//
//   minimize trace(R X)  over symmetric X with
//     X PSD,  trace(Re(F_i) X) = ps[i],  X[i,i] = X[0,i],  X[0,0] = 1,  X >= 0
//
// solved by ADMM that alternates a PSD-cone projection with a projection onto
// the affine constraints intersected with the nonnegative orthant (inner
// Dykstra loop, dual variables warm-started between outer iterations).

#include "smra/core.hpp"
#include "smra/invariants.hpp"
#include "smra/signal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace smra {

struct SdpProblem {
  int length = 0;
  RealVector ps;
  RealMatrix objective;  // symmetric, (A + A^T) / 2 with A_ij ~ N(0,1)
  // Row j is the column-major flattening of the j-th (symmetric) constraint
  // matrix; rows are: L trace rows, then L-1 diagonal rows, then X[0,0].
  RealMatrix constraints;
  RealVector rhs;

  int trace_rows() const { return length; }
  int diagonal_rows() const { return length - 1; }
};

struct SdpOptions {
  double tol = 1e-6;
  long max_iter = 50'000;
  int inner_max_iter = 200;
  double rho = 1.0;
};

struct SdpResiduals {
  RealVector affine;     // |<A_j, X> - b_j| per equality
  double negativity = 0.0;  // max(0, -min_ij X_ij)
  double psd = 0.0;         // max(0, -lambda_min(X))
  double consensus = 0.0;   // max |X_psd - X_returned|
  double dual = 0.0;

  double max_violation() const {
    const double a = affine.size() ? affine.maxCoeff() : 0.0;
    return std::max({a, negativity, psd, consensus});
  }
};

struct SdpSolution {
  RealMatrix x_opt;
  double objective = 0.0;
  SdpResiduals residuals;
  RealVector eigenvalues;  // descending
  double rank1_gap = 1.0;
  long iterations = 0;
  bool converged = false;
  bool infeasible = false;
};

struct SdpExtraction {
  RealVector continuous;  // leading eigenvector scaled to entry 0 = 1
  SparseSignal estimate;
  double ps_relative_error = 0.0;
  bool verified = false;
};

namespace detail {

inline RealVector flatten(const RealMatrix& m) { return Eigen::Map<const RealVector>(m.data(), m.size()); }

inline RealMatrix unflatten(const RealVector& v, int L) { return Eigen::Map<const RealMatrix>(v.data(), L, L); }

inline RealVector prepare_power_spectrum(const RealVector& ps_in, double clip_tol) {
  RealVector ps = ps_in;
  symmetrize_spectrum(ps);
  const double scale = std::max(1.0, ps.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < ps.size(); ++k) {
    if (ps[k] < -clip_tol * scale) throw DataError("build_sdp: power spectrum has negative entries");
    ps[k] = std::max(ps[k], 0.0);
  }
  return ps;
}

// Symmetric eigen-decomposition with eigenvalues sorted descending.
inline std::pair<RealVector, RealMatrix> eigen_descending(const RealMatrix& x) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(x);
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

inline RealMatrix project_psd(const RealMatrix& x) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (x + x.transpose()));
  const RealVector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Projection onto {v : A v = b} through the pseudo-inverse of A A^T, which
// tolerates the redundant (consistent) rows.
class AffineProjector {
 public:
  AffineProjector(const RealMatrix& a, const RealVector& b) : a_(a), b_(b) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(a * a.transpose());
    const RealVector lam = es.eigenvalues();
    const double cut = 1e-10 * std::max(1.0, lam.maxCoeff());
    RealVector inv = RealVector::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam[i] > cut) inv[i] = 1.0 / lam[i];
    gram_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }

  RealVector project(const RealVector& v) const { return v - a_.transpose() * (gram_pinv_ * (a_ * v - b_)); }

  RealVector residual(const RealVector& v) const { return a_ * v - b_; }

 private:
  RealMatrix a_;
  RealVector b_;
  RealMatrix gram_pinv_;
};

}  // namespace detail

inline SdpProblem build_sdp(const RealVector& ps_in, Rng& rng, double clip_tol = 1e-9) {
  const int L = static_cast<int>(ps_in.size());
  require(L >= 2, "build_sdp: need L >= 2");
  require(ps_in[0] >= 1.0 - 1e-9, "build_sdp: ps[0] must be at least 1 (M >= 1)");

  SdpProblem p;
  p.length = L;
  p.ps = detail::prepare_power_spectrum(ps_in, clip_tol);

  const int m = 2 * L;
  p.constraints = RealMatrix::Zero(m, L * L);
  p.rhs = RealVector::Zero(m);
  int row = 0;
  for (int i = 0; i < L; ++i, ++row) {
    // Re(f_i f_i^*)[a, b] = cos(2 pi i (a - b) / L)
    RealMatrix c(L, L);
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) c(a, b) = std::cos(2.0 * kPi * i * (a - b) / L);
    p.constraints.row(row) = detail::flatten(c).transpose();
    p.rhs[row] = p.ps[i];
  }
  for (int i = 1; i < L; ++i, ++row) {
    RealMatrix c = RealMatrix::Zero(L, L);
    c(i, i) = 1.0;
    c(0, i) = -0.5;
    c(i, 0) = -0.5;
    p.constraints.row(row) = detail::flatten(c).transpose();
  }
  RealMatrix c00 = RealMatrix::Zero(L, L);
  c00(0, 0) = 1.0;
  p.constraints.row(row) = detail::flatten(c00).transpose();
  p.rhs[row] = 1.0;

  RealMatrix a(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) a(i, j) = rng.normal();
  p.objective = 0.5 * (a + a.transpose());
  return p;
}

// Largest violation of the constraints of Omega at X.
inline SdpResiduals sdp_residuals(const SdpProblem& p, const RealMatrix& x) {
  SdpResiduals r;
  r.affine = (p.constraints * detail::flatten(x) - p.rhs).cwiseAbs();
  r.negativity = std::max(0.0, -x.minCoeff());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
  r.psd = std::max(0.0, -es.eigenvalues().minCoeff());
  return r;
}

inline SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opts = {}) {
  require(p.length >= 2 && p.objective.rows() == p.length, "solve_sdp: malformed problem");
  require(opts.tol > 0.0 && opts.max_iter >= 1 && opts.inner_max_iter >= 1 && opts.rho > 0.0,
          "solve_sdp: invalid options");
  const int L = p.length;
  const detail::AffineProjector affine(p.constraints, p.rhs);

  const RealVector r_obj = detail::flatten(p.objective);
  RealVector z = detail::flatten(RealMatrix::Identity(L, L) / L);
  RealVector u = RealVector::Zero(L * L);
  RealVector x = z;
  // Dykstra corrections for the affine and nonnegative sets.
  RealVector dyk_p = RealVector::Zero(L * L);
  RealVector dyk_q = RealVector::Zero(L * L);
  double rho = opts.rho;

  SdpSolution sol;
  double primal = 0.0, dual = 0.0;
  double plateau_ref = -1.0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    x = detail::flatten(detail::project_psd(detail::unflatten(z - u - r_obj / rho, L)));

    const RealVector w = x + u;
    const RealVector z_prev = z;
    RealVector zn = w - dyk_p - dyk_q;
    for (int k = 0; k < opts.inner_max_iter; ++k) {
      const RealVector ya = affine.project(zn + dyk_p);
      dyk_p = zn + dyk_p - ya;
      const RealVector yn = (ya + dyk_q).cwiseMax(0.0);
      dyk_q = ya + dyk_q - yn;
      const double gap = (ya - yn).cwiseAbs().maxCoeff();
      zn = yn;
      if (gap < 0.1 * opts.tol) break;
    }
    z = zn;
    u += x - z;

    primal = (x - z).cwiseAbs().maxCoeff();
    dual = rho * (z - z_prev).cwiseAbs().maxCoeff();
    sol.iterations = it;

    if (primal < opts.tol && dual < opts.tol) {
      const SdpResiduals res = sdp_residuals(p, detail::unflatten(z, L));
      if (std::max(res.max_violation(), primal) < opts.tol) {
        sol.converged = true;
        break;
      }
    }
    if (it % 100 == 0) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
    // A primal residual stuck far above tol over thousands of steps means the
    // constraint sets do not meet.
    if (it % 2000 == 0) {
      if (plateau_ref > 0.0 && primal > 1e3 * opts.tol && primal > 0.99 * plateau_ref) {
        sol.infeasible = true;
        break;
      }
      plateau_ref = primal;
    }
  }

  sol.x_opt = detail::unflatten(z, L);
  sol.x_opt = 0.5 * (sol.x_opt + sol.x_opt.transpose());
  sol.objective = (p.objective.cwiseProduct(sol.x_opt)).sum();
  sol.residuals = sdp_residuals(p, sol.x_opt);
  sol.residuals.consensus = primal;
  sol.residuals.dual = dual;
  auto [lam, vec] = detail::eigen_descending(sol.x_opt);
  sol.eigenvalues = lam;
  const RealVector pos = lam.cwiseMax(0.0);
  sol.rank1_gap = pos.sum() > 0.0 ? 1.0 - pos[0] / pos.sum() : 1.0;
  return sol;
}

inline SdpExtraction extract_signal(const SdpSolution& sol, const RealVector& ps, double verify_tol = 1e-6) {
  require(sol.x_opt.rows() >= 1 && sol.x_opt.rows() == ps.size(), "extract_signal: size mismatch");
  auto [lam, vec] = detail::eigen_descending(sol.x_opt);
  RealVector v = vec.col(0);
  if (std::abs(v[0]) < 1e-6) throw DegenerateError("extract_signal: leading eigenvector vanishes at entry 0");
  SdpExtraction ex;
  ex.continuous = v / v[0];
  ex.estimate = SparseSignal::binarize(ex.continuous, 0.5);
  const double denom = ps.norm();
  ex.ps_relative_error = denom > 0.0 ? (power_spectrum(ex.estimate.values()) - ps).norm() / denom : 0.0;
  ex.verified = ex.ps_relative_error < verify_tol;
  return ex;
}

}  // namespace smra
