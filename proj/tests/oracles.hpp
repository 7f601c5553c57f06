#pragma once

// Reference computations used only by tests. Each one reaches its answer by a
// route that does not share code with the library implementation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "micromotion/latent_model.hpp"

namespace oracles {

using micromotion::Matrix;
using micromotion::Vector;

// Plain scalar loop over the definition sign(x) max(|x| - tau, 0).
inline Matrix shrink_loop(const Matrix& x, double tau) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      double mag = std::fabs(v) - tau;
      if (mag < 0.0) mag = 0.0;
      out(i, j) = v > 0.0 ? mag : (v < 0.0 ? -mag : 0.0);
    }
  }
  return out;
}

// Proximal operator of tau ||.||_* without any SVD. Uses the factored form
// ||Z||_* = min over Z = A B^T of (||A||^2 + ||B||^2) / 2 and minimizes
//   1/2 ||A B^T - X||^2 + tau/2 (||A||^2 + ||B||^2)
// by alternating ridge regressions. Stops when successive iterates agree.
inline Matrix svt_factored(const Matrix& x, double tau, int max_sweeps = 200000) {
  const Eigen::Index r = std::min(x.rows(), x.cols());
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(x.rows(), r), b(x.cols(), r);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = gauss(gen);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = gauss(gen);
  const Eigen::MatrixXd xd = x;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(r, r);
  Eigen::MatrixXd z = a * b.transpose();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    a = (xd * b) * (b.transpose() * b + tau * eye).inverse();
    b = (xd.transpose() * a) * (a.transpose() * a + tau * eye).inverse();
    const Eigen::MatrixXd next = a * b.transpose();
    const double change = (next - z).norm();
    z = next;
    if (change < 1e-15 * std::max(1.0, z.norm())) break;
  }
  return z;
}

struct CovPca {
  Vector spectrum;  // singular values of the centered data, descending
  Matrix basis;     // k x cols
};

// PCA through the eigen-decomposition of the scatter matrix Xc^T Xc.
inline CovPca pca_covariance(const Matrix& d, int k) {
  Eigen::MatrixXd xc = d;
  const Eigen::RowVectorXd mean = xc.colwise().mean();
  xc.rowwise() -= mean;
  const Eigen::MatrixXd scatter = xc.transpose() * xc;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
  const Eigen::Index n = scatter.rows();
  CovPca out;
  const Eigen::Index count = std::min<Eigen::Index>(n, d.rows());
  out.spectrum.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) out.spectrum(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));
  out.basis.resize(k, n);
  for (int i = 0; i < k; ++i) out.basis.row(i) = eig.eigenvectors().col(n - 1 - i).transpose();
  return out;
}

// Largest principal angle between two orthonormal row bases of equal size,
// read from the sine: the norm of the part of a's rows outside span(b).
inline double largest_angle(const Matrix& a, const Matrix& b) {
  const Eigen::MatrixXd ad = a, bd = b;
  const Eigen::MatrixXd outside = ad - (ad * bd.transpose()) * bd;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(outside);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::asin(std::min(1.0, s));
}

// Orthonormal rows spanning `count` Gaussian directions in `dim`, built by
// modified Gram-Schmidt.
inline Matrix random_orthonormal_rows(int count, int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss;
  Matrix q(count, dim);
  for (int i = 0; i < count; ++i) {
    Eigen::RowVectorXd v(dim);
    for (int j = 0; j < dim; ++j) v(j) = gauss(gen);
    for (int pass = 0; pass < 2; ++pass)
      for (int p = 0; p < i; ++p) v -= v.dot(q.row(p)) * q.row(p);
    q.row(i) = v / v.norm();
  }
  return q;
}

inline Matrix gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(gen);
  return m;
}

inline double abs_cos(const Vector& a, const Vector& b) { return std::fabs(a.dot(b)) / (a.norm() * b.norm()); }

}  // namespace oracles
