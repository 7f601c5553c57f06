#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "micromotion/latent_model.hpp"

namespace micromotion {

/// Seeded source of portable pseudo-random numbers.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Streams are derived with a SplitMix64 mix of (seed, stream id).
/// Distributions are implemented here rather than through <random>
/// distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent generator for a sub-stream (e.g. one identity).
  Rng split(std::uint64_t stream) const;

  double uniform();                        // [0, 1)
  std::uint64_t below(std::uint64_t n);    // uniform integer in [0, n)
  double normal();                         // standard Gaussian (Box-Muller)
  bool coin() { return (engine_() >> 63) != 0; }

  Vector gaussian_vector(Eigen::Index n);
  Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  Vector unit_vector(Eigen::Index n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

struct LowRankSparse {
  Matrix d;
  Matrix low_rank;
  Matrix sparse;
};

/// D = A*B^T + S with unit-Gaussian factors and exactly floor(rate*rows*cols)
/// entries of S set to +-magnitude at uniformly chosen positions.
LowRankSparse gen_lowrank_sparse(int rows, int cols, int rank, double rate, double magnitude,
                                 std::uint64_t seed);

struct OracleSpec {
  std::uint64_t seed = 0;
  int p = 5;
  int m = kTextAnchorCount;
  int dim = kDefaultLatentDim;
  int rank_k = kDefaultRank;
  double noise_sigma = 0.01;
  double corruption_rate = 0.0;
  double corruption_magnitude = 0.0;
  bool shared_direction = true;
  /// Norm of the full-strength motion vector; <= 0 means sqrt(dim), i.e. a
  /// per-coordinate RMS of one.
  double motion_scale = 0.0;
  /// Number of anchors per identity that receive corruption; 0 means all.
  int corrupted_anchors = 0;
  /// Corrupt with +magnitude only instead of a fair-coin sign.
  bool corruption_positive = false;
  std::string motion_name = "synthetic";

  void validate() const;
  double resolved_motion_scale() const;
};

struct OracleTensor {
  MicromotionTensor tensor;
  Matrix directions;                // P x dim, ground-truth unit directions
  std::vector<Matrix> bases;        // per identity, rank_k x dim orthonormal signal basis
  std::vector<std::vector<int>> corrupted_rows;  // per identity
};

/// Builds P identities of M anchors each:
///
///   row_m = base_p + scale * (s_m * dV_p + sum_j c_mj * W_pj) + N(0, sigma^2) [+ corruption]
///
/// with strengths s_m equally spaced in [0, 1], base_p Gaussian at 10x the
/// motion scale, and (rank_k - 1) distractor directions W_pj orthogonal to dV_p
/// whose coefficient columns c_.j are centered, orthogonal to the centered
/// strengths and 10x smaller. Directions (and distractors) are shared across
/// identities when shared_direction is set.
OracleTensor gen_micromotion_tensor(const OracleSpec& spec);

}  // namespace micromotion
