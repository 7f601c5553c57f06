#include "micromotion/decomp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace micromotion {

namespace {

using ColMatrix = Eigen::MatrixXd;

void require_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorCode::non_finite_entry, std::string(what) + " has NaN/Inf");
}

void require_positive_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error(ErrorCode::invalid_argument, "threshold must be positive and finite");
}

// Largest-magnitude entry of each row positive; first index wins ties.
void fix_signs(Matrix& basis) {
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    Eigen::Index arg = 0;
    basis.row(i).cwiseAbs().maxCoeff(&arg);
    if (basis(i, arg) < 0.0) basis.row(i) *= -1.0;
  }
}

template <class Expr>
Matrix soft_threshold(const Expr& x, double tau) {
  return x.unaryExpr([tau](double v) {
    const double mag = std::abs(v) - tau;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

// Residual balancing: mu moves by kBalanceStep whenever the primal and dual
// residuals differ by more than kBalanceRatio.
constexpr double kBalanceRatio = 10.0;
constexpr double kBalanceStep = 2.0;

}  // namespace

void PcpParams::validate() const {
  if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda)))
    throw Error(ErrorCode::invalid_argument, "lambda must be positive");
  if (mu && !(*mu > 0.0 && std::isfinite(*mu)))
    throw Error(ErrorCode::invalid_argument, "mu must be positive");
  if (!(tol > 0.0 && std::isfinite(tol))) throw Error(ErrorCode::invalid_argument, "tol must be positive");
  if (max_iter < 1) throw Error(ErrorCode::invalid_argument, "max_iter must be >= 1");
}

ResolvedPcpParams resolve(const PcpParams& params, const Matrix& d) {
  params.validate();
  const auto rows = static_cast<double>(d.rows());
  const auto cols = static_cast<double>(d.cols());
  ResolvedPcpParams out{};
  out.lambda = params.lambda.value_or(1.0 / std::sqrt(std::max(rows, cols)));
  if (params.mu) {
    out.mu = *params.mu;
  } else {
    const double l1 = d.cwiseAbs().sum();
    out.mu = l1 > 0.0 ? rows * cols / (4.0 * l1) : 1.0;
  }
  out.tol = params.tol;
  out.max_iter = params.max_iter;
  out.schedule = params.schedule;
  return out;
}

ThinSvd thin_svd(const Matrix& x) {
  Eigen::BDCSVD<ColMatrix> svd(ColMatrix(x), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    std::ostringstream os;
    os << "SVD of " << x.rows() << "x" << x.cols() << " matrix did not converge";
    throw Error(ErrorCode::svd_failure, os.str());
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Matrix shrink(const Matrix& x, double tau) {
  require_positive_tau(tau);
  require_finite(x, "shrink input");
  return soft_threshold(x, tau);
}

namespace {

// Wide or tall inputs go through the eigen-decomposition of the small Gram
// matrix: svt(X) = U f(S) U^T X with f(s) = max(s - tau, 0) / s.
Matrix svt_gram(const Matrix& x, double tau, Vector* spectrum) {
  const bool wide = x.rows() <= x.cols();
  const ColMatrix gram = wide ? ColMatrix(x * x.transpose()) : ColMatrix(x.transpose() * x);
  Eigen::SelfAdjointEigenSolver<ColMatrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::svd_failure, "Gram eigen-decomposition failed");
  // Eigenvalues come back ascending.
  const Vector sigma = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
  const ColMatrix vecs = eig.eigenvectors().rowwise().reverse();
  if (spectrum) *spectrum = (sigma.array() - tau).cwiseMax(0.0).matrix();
  Eigen::Index keep = 0;
  while (keep < sigma.size() && sigma[keep] > tau) ++keep;
  if (keep == 0) return Matrix::Zero(x.rows(), x.cols());
  const Vector gain = (sigma.head(keep).array() - tau) / sigma.head(keep).array();
  const ColMatrix u = vecs.leftCols(keep);
  const ColMatrix filter = u * gain.asDiagonal() * u.transpose();
  if (wide) return filter * x;
  return x * filter;
}

constexpr double kGramAspect = 4.0;

// svt that also reports the thresholded spectrum.
Matrix svt_impl(const Matrix& x, double tau, Vector* spectrum) {
  const auto lo = static_cast<double>(std::min(x.rows(), x.cols()));
  const auto hi = static_cast<double>(std::max(x.rows(), x.cols()));
  if (hi >= kGramAspect * lo) return svt_gram(x, tau, spectrum);
  const ThinSvd svd = thin_svd(x);
  Eigen::Index keep = 0;
  while (keep < svd.s.size() && svd.s[keep] > tau) ++keep;
  if (spectrum) *spectrum = (svd.s.array() - tau).cwiseMax(0.0).matrix();
  if (keep == 0) return Matrix::Zero(x.rows(), x.cols());
  const Vector kept = svd.s.head(keep).array() - tau;
  return svd.u.leftCols(keep) * kept.asDiagonal() * svd.v.leftCols(keep).transpose();
}

}  // namespace

Matrix svt(const Matrix& x, double tau) {
  require_positive_tau(tau);
  require_finite(x, "svt input");
  return svt_impl(x, tau, nullptr);
}

PcpResult pcp(const Matrix& d, const PcpParams& params) {
  if (d.rows() < 2 || d.cols() < 2) throw Error(ErrorCode::dimension_mismatch, "pcp needs at least a 2x2 matrix");
  require_finite(d, "pcp input");
  PcpResult out;
  out.params = resolve(params, d);
  const auto& p = out.params;

  const double norm_d = d.norm();
  if (norm_d == 0.0) {
    out.low_rank = Matrix::Zero(d.rows(), d.cols());
    out.sparse = Matrix::Zero(d.rows(), d.cols());
    out.singular_values = Vector::Zero(std::min(d.rows(), d.cols()));
    out.iterations = 1;
    out.converged = true;
    out.residual_history = {0.0};
    return out;
  }

  Matrix low = Matrix::Zero(d.rows(), d.cols());
  Matrix sparse = Matrix::Zero(d.rows(), d.cols());
  Matrix dual = Matrix::Zero(d.rows(), d.cols());
  Matrix prev_sparse = sparse;
  double mu = p.mu;
  for (int it = 1; it <= p.max_iter; ++it) {
    const double inv_mu = 1.0 / mu;
    low = svt_impl(d - sparse + inv_mu * dual, inv_mu, &out.singular_values);
    sparse = soft_threshold(d - low + inv_mu * dual, p.lambda * inv_mu);
    const Matrix residual = d - low - sparse;
    dual += mu * residual;

    const double primal = residual.norm();
    const double rel = primal / norm_d;
    out.residual_history.push_back(rel);
    out.iterations = it;
    out.final_residual = rel;
    if (!std::isfinite(rel) || !low.allFinite() || !sparse.allFinite()) {
      std::ostringstream os;
      os << "pcp diverged at iteration " << it;
      throw Error(ErrorCode::non_finite_intermediate, os.str());
    }
    if (rel <= p.tol) {
      out.converged = true;
      break;
    }
    if (p.schedule == PenaltySchedule::balanced) {
      const double dual_res = mu * (sparse - prev_sparse).norm();
      if (primal > kBalanceRatio * dual_res)
        mu *= kBalanceStep;
      else if (dual_res > kBalanceRatio * primal)
        mu /= kBalanceStep;
      prev_sparse = sparse;
    }
  }
  if (!out.converged)
    spdlog::warn("pcp stopped after {} iterations, residual {:.3e} > tol {:.1e}", out.iterations,
                 out.final_residual, p.tol);
  else
    spdlog::debug("pcp converged in {} iterations, residual {:.3e}", out.iterations, out.final_residual);

  out.low_rank = std::move(low);
  out.sparse = std::move(sparse);
  return out;
}

PcaResult pca(const Matrix& d, int k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  const auto limit = std::min(d.rows(), d.cols());
  if (k > limit) {
    std::ostringstream os;
    os << "k = " << k << " exceeds min(rows, cols) = " << limit;
    throw Error(ErrorCode::k_too_large, os.str());
  }
  require_finite(d, "pca input");

  PcaResult out;
  out.mean = d.colwise().mean().transpose();
  const Matrix centered = d.rowwise() - out.mean.transpose();
  const double scale = d.norm();
  if (centered.norm() <= 1e-12 * scale || scale == 0.0)
    throw Error(ErrorCode::constant_data, "all rows are identical");

  const ThinSvd svd = thin_svd(centered);
  out.spectrum = svd.s;
  out.basis = svd.v.leftCols(k).transpose();
  fix_signs(out.basis);
  const double total = svd.s.squaredNorm();
  out.explained = std::clamp(svd.s.head(k).squaredNorm() / total, 0.0, 1.0);
  return out;
}

DecompositionResult decompose_anchors(const MicromotionMatrix& m, int k, const PcpParams& params,
                                      DecompositionMode mode) {
  require_valid(m);
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  if (k > std::min(m.anchors(), m.dim())) {
    std::ostringstream os;
    os << "k = " << k << " exceeds min(M, dim) = " << std::min(m.anchors(), m.dim());
    throw Error(ErrorCode::k_too_large, os.str());
  }

  DecompositionResult out;
  out.mode = mode;
  Matrix input = m.rows;
  if (mode == DecompositionMode::pca_then_pcp) {
    const PcaResult first = pca(input, k);
    const Matrix centered = input.rowwise() - first.mean.transpose();
    input = (centered * first.basis.transpose() * first.basis).rowwise() + first.mean.transpose();
  }
  if (mode == DecompositionMode::pca) {
    out.low_rank = input;
    out.sparse = Matrix::Zero(input.rows(), input.cols());
  } else {
    PcpResult robust = pcp(input, params);
    out.low_rank = std::move(robust.low_rank);
    out.sparse = std::move(robust.sparse);
    out.iterations = robust.iterations;
    out.final_residual = robust.final_residual;
    out.converged = robust.converged;
  }
  PcaResult reduced = pca(out.low_rank, k);
  out.mean = std::move(reduced.mean);
  out.singular_values = std::move(reduced.spectrum);
  out.basis = std::move(reduced.basis);
  out.explained = reduced.explained;
  return out;
}

}  // namespace micromotion
