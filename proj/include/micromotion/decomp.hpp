#pragma once

#include <optional>
#include <vector>

#include "micromotion/latent_model.hpp"

namespace micromotion {

enum class PenaltySchedule {
  fixed,     // mu stays at its initial value
  balanced,  // mu doubles/halves when primal and dual residuals differ by 10x
};

/// Principal component pursuit settings. Unset lambda/mu are derived from the
/// data: lambda = 1/sqrt(max(M, N)), mu = M*N / (4 * ||D||_1). With the
/// balanced schedule mu is only the starting penalty.
struct PcpParams {
  std::optional<double> lambda;
  std::optional<double> mu;
  double tol = 1e-7;
  int max_iter = 2000;
  PenaltySchedule schedule = PenaltySchedule::balanced;

  void validate() const;
};

struct ResolvedPcpParams {
  double lambda;
  double mu;
  double tol;
  int max_iter;
  PenaltySchedule schedule;
};

ResolvedPcpParams resolve(const PcpParams& params, const Matrix& d);

/// x = u * diag(s) * v^T with s non-increasing.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

ThinSvd thin_svd(const Matrix& x);

/// Elementwise soft threshold: sign(x) * max(|x| - tau, 0).
Matrix shrink(const Matrix& x, double tau);

/// Singular value thresholding, the proximal operator of tau * ||.||_*.
Matrix svt(const Matrix& x, double tau);

struct PcpResult {
  Matrix low_rank;
  Matrix sparse;
  Vector singular_values;  // spectrum of low_rank
  int iterations = 0;
  double final_residual = 0.0;  // ||D - L - S||_F / ||D||_F
  bool converged = false;
  std::vector<double> residual_history;
  ResolvedPcpParams params{};
};

/// Splits d into low-rank + sparse parts with the alternating-directions
/// iteration
///
///   L <- svt(D - S + Y/mu, 1/mu)
///   S <- shrink(D - L + Y/mu, lambda/mu)
///   Y <- Y + mu (D - L - S)
///
/// started from L = S = Y = 0. Stops once the relative residual drops to tol.
/// Running out of iterations is not an error: the result comes back with
/// converged == false.
PcpResult pcp(const Matrix& d, const PcpParams& params = {});

struct PcaResult {
  Vector mean;
  Matrix basis;     // k x cols, orthonormal rows
  Vector spectrum;  // all singular values of the centered data
  double explained = 0.0;
};

/// Column-centered PCA. Basis rows are sign-fixed so the largest-magnitude
/// entry is positive.
PcaResult pca(const Matrix& d, int k);

enum class DecompositionMode {
  pca,           // plain PCA on the anchors
  pcp_then_pca,  // robust split first, then PCA of the low-rank part
  pca_then_pcp,  // rank-k PCA reconstruction first, then robust split + PCA
};

struct DecompositionResult {
  Matrix low_rank;
  Matrix sparse;
  Vector mean;             // anchor mean of low_rank
  Vector singular_values;  // spectrum of the centered low_rank
  Matrix basis;            // basis_k, k x dim
  double explained = 0.0;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = true;
  DecompositionMode mode = DecompositionMode::pcp_then_pca;
};

DecompositionResult decompose_anchors(const MicromotionMatrix& m, int k, const PcpParams& params,
                                      DecompositionMode mode);

inline DecompositionResult decompose_anchors(const MicromotionMatrix& m, int k,
                                             const PcpParams& params, bool use_robust) {
  return decompose_anchors(m, k, params,
                           use_robust ? DecompositionMode::pcp_then_pca : DecompositionMode::pca);
}

}  // namespace micromotion
