#pragma once
// Dense helpers for the drag/noise matrix algebra: matrix exponential,
// Lyapunov-type solves for stationary second moments, the two-sided
// exponential kernel G, and orthogonal-factor utilities.
//
// Conventions: drag matrices act on the left (column vectors), and the
// Lyapunov equation solved throughout is  gamma*X + X*gamma^T = rhs,
// whose solution equals  X = int_0^inf e^{-y gamma} rhs e^{-y gamma^T} dy
// whenever the spectrum of gamma lies in the open right half-plane.

#include <array>

#include "fbsde/types.hpp"

namespace fbsde {

// exp(A) via scaling-and-squaring Pade approximation.
// Throws std::domain_error on non-finite entries in A or in the result.
Mat matrix_exp(const Mat& a);

// Solves gamma*X + X*gamma^T = rhs through the Kronecker-sum linear system
// (I (x) gamma + gamma (x) I) vec(X) = vec(rhs), n <= kMaxDim.
// Throws std::domain_error unless the spectrum of gamma lies in the open
// right half-plane and the solve residual is small.
Mat lyapunov_solve(const Mat& gamma, const Mat& rhs);

// Four-index kernel G^{nu mu}_{eta xi} = int_0^inf (e^{-y gamma})^nu_eta
// (e^{-y gamma})^mu_xi dy for n <= 3, stored flat.
struct GKernel {
  int n = 0;
  std::array<double, 81> coeff{};

  double operator()(int nu, int mu, int eta, int xi) const {
    return coeff[static_cast<size_t>(((nu * n + mu) * n + eta) * n + xi)];
  }
  double& at(int nu, int mu, int eta, int xi) {
    return coeff[static_cast<size_t>(((nu * n + mu) * n + eta) * n + xi)];
  }

  // result^{nu mu} = sum_{eta,xi} G^{nu mu}_{eta xi} s(eta,xi).
  // With s = Sigma (the noise covariance) this reproduces lyapunov_solve.
  Mat contract(const Mat& s) const;
};

GKernel g_kernel(const Mat& gamma);

// L = gamma^{-1} J gamma^T.
Mat l_matrix(const Mat& gamma, const Mat& j);

// Symmetric positive semi-definite square root via eigendecomposition.
// Unlike a Cholesky factor this commutes with orthogonal conjugation:
// sym_sqrt(g^T M g) = g^T sym_sqrt(M) g for orthogonal g.
Mat sym_sqrt(const Mat& m);

// Nearest orthogonal matrix (polar factor, via SVD).  Requires every
// singular value of h to lie within 0.5 of 1; throws std::domain_error
// otherwise.
Mat polar_orthonormalize(const Mat& h);

// ||h^T h - I||_F, the working measure of frame orthogonality drift.
double orthogonality_defect(const Mat& h);

}  // namespace fbsde
