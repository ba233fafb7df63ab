#include "fbsde/linalg.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace fbsde {

namespace {

// Kronecker-sum workspace: vec() of an n x n matrix has length n^2 <= 36.
using KronMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                              kMaxDim * kMaxDim, kMaxDim * kMaxDim>;
using KronVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim * kMaxDim, 1>;

// (I (x) gamma + gamma (x) I) for column-major vec: vec(gamma X + X gamma^T).
KronMat kronecker_sum(const Mat& gamma) {
  const int n = static_cast<int>(gamma.rows());
  KronMat k = KronMat::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j) k.block(n * j, n * j, n, n) = gamma;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r) k(n * j + r, n * i + r) += gamma(j, i);
  return k;
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw std::domain_error(std::string(what) + ": non-finite entries");
}

void require_right_half_plane_spectrum(const Mat& gamma) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(gamma), false);
  if (es.eigenvalues().real().minCoeff() <= 0.0)
    throw std::domain_error("lyapunov_solve: drag spectrum not in the open right half-plane");
}

}  // namespace

Mat matrix_exp(const Mat& a) {
  require_finite(a, "matrix_exp");
  if (a.rows() != a.cols()) throw std::domain_error("matrix_exp: non-square input");
  Eigen::MatrixXd dense = a;
  Eigen::MatrixXd e = dense.exp();
  if (!e.allFinite()) throw std::domain_error("matrix_exp: overflow in result");
  return Mat(e);
}

Mat lyapunov_solve(const Mat& gamma, const Mat& rhs) {
  require_finite(gamma, "lyapunov_solve");
  require_finite(rhs, "lyapunov_solve");
  const int n = static_cast<int>(gamma.rows());
  if (gamma.cols() != n || rhs.rows() != n || rhs.cols() != n)
    throw std::domain_error("lyapunov_solve: dimension mismatch");
  require_right_half_plane_spectrum(gamma);

  KronMat k = kronecker_sum(gamma);
  KronVec b(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b(n * j + i) = rhs(i, j);

  Eigen::PartialPivLU<KronMat> lu(k);
  KronVec v = lu.solve(b);

  Mat x(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = v(n * j + i);

  const double resid = (gamma * x + x * gamma.transpose() - rhs).norm();
  if (!x.allFinite() || resid > 1e-9 * (1.0 + rhs.norm()))
    throw std::domain_error("lyapunov_solve: ill-conditioned pairing system");
  return x;
}

Mat GKernel::contract(const Mat& s) const {
  Mat r = Mat::Zero(n, n);
  for (int nu = 0; nu < n; ++nu)
    for (int mu = 0; mu < n; ++mu) {
      double acc = 0.0;
      for (int eta = 0; eta < n; ++eta)
        for (int xi = 0; xi < n; ++xi) acc += (*this)(nu, mu, eta, xi) * s(eta, xi);
      r(nu, mu) = acc;
    }
  return r;
}

GKernel g_kernel(const Mat& gamma) {
  const int n = static_cast<int>(gamma.rows());
  if (n > 3) throw std::domain_error("g_kernel: supported only for n <= 3");
  require_finite(gamma, "g_kernel");
  require_right_half_plane_spectrum(gamma);

  // Factor the Kronecker sum once; each lower index pair (eta, xi) is a
  // unit-pairing right-hand side e_eta e_xi^T.
  KronMat k = kronecker_sum(gamma);
  Eigen::PartialPivLU<KronMat> lu(k);

  GKernel gk;
  gk.n = n;
  for (int eta = 0; eta < n; ++eta)
    for (int xi = 0; xi < n; ++xi) {
      KronVec b = KronVec::Zero(n * n);
      b(n * xi + eta) = 1.0;  // vec(e_eta e_xi^T), column-major
      KronVec v = lu.solve(b);
      if (!v.allFinite()) throw std::domain_error("g_kernel: ill-conditioned pairing system");
      for (int nu = 0; nu < n; ++nu)
        for (int mu = 0; mu < n; ++mu) gk.at(nu, mu, eta, xi) = v(n * mu + nu);
    }
  return gk;
}

Mat l_matrix(const Mat& gamma, const Mat& j) {
  return Mat(gamma.inverse() * j * gamma.transpose());
}

Mat sym_sqrt(const Mat& m) {
  require_finite(m, "sym_sqrt");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m + m.transpose())));
  Vec lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) lam(i) = lam(i) > 0.0 ? std::sqrt(lam(i)) : 0.0;
  return Mat(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

Mat polar_orthonormalize(const Mat& h) {
  require_finite(h, "polar_orthonormalize");
  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.minCoeff() < 0.5 || sv.maxCoeff() > 1.5)
    throw std::domain_error("polar_orthonormalize: input too far from the orthogonal group");
  return Mat(svd.matrixU() * svd.matrixV().transpose());
}

double orthogonality_defect(const Mat& h) {
  const int n = static_cast<int>(h.cols());
  return (h.transpose() * h - Mat::Identity(n, n)).norm();
}

}  // namespace fbsde
