#pragma once

#include <vector>

#include "micromotion/latent_model.hpp"

namespace micromotion {

enum class TrajectoryMode {
  fixed_step,  // V_t = V_0 + alpha * t * dV,  t = 0 .. T-1
  span_range,  // steps evenly across [p_min, p_max] of the anchor projections
};

struct TrajectorySpec {
  double alpha = 1.0;
  int frames = 10;
  TrajectoryMode mode = TrajectoryMode::fixed_step;

  void validate(const EditDirection& direction) const;
};

/// Latent frame series along an edit direction. Frame 0 of fixed_step is a
/// bitwise copy of v0. In span_range mode frame t sits at projection
/// p_min + t (p_max - p_min) / (T - 1), scaled by alpha, so alpha = 1 retraces
/// the anchored motion extent.
std::vector<LatentCode> synthesize(const LatentCode& v0, const EditDirection& direction,
                                   const TrajectorySpec& spec);

/// One code per alpha: V_0 + alpha * t * dV.
std::vector<LatentCode> alpha_sweep(const LatentCode& v0, const EditDirection& direction,
                                    const std::vector<double>& alphas, int t);

/// Stacks codes as rows.
Matrix to_matrix(const std::vector<LatentCode>& codes);

}  // namespace micromotion
