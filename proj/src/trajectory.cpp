#include "micromotion/trajectory.hpp"

#include <cmath>
#include <sstream>

namespace micromotion {

namespace {

void require_same_dim(const LatentCode& v0, const EditDirection& direction) {
  if (v0.dim() != direction.dim()) {
    std::ostringstream os;
    os << "start code has dim " << v0.dim() << ", direction has dim " << direction.dim();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
}

}  // namespace

void TrajectorySpec::validate(const EditDirection& direction) const {
  if (frames < 1) throw Error(ErrorCode::invalid_argument, "frames must be >= 1");
  if (!std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be finite");
  if (mode == TrajectoryMode::span_range) {
    if (frames < 2) throw Error(ErrorCode::invalid_argument, "span_range needs at least 2 frames");
    if (!(direction.p_max() > direction.p_min()))
      throw Error(ErrorCode::invalid_argument, "span_range needs a non-degenerate projection range");
  }
}

std::vector<LatentCode> synthesize(const LatentCode& v0, const EditDirection& direction,
                                   const TrajectorySpec& spec) {
  require_same_dim(v0, direction);
  spec.validate(direction);

  std::vector<LatentCode> frames;
  frames.reserve(static_cast<std::size_t>(spec.frames));
  const Vector& dv = direction.direction();
  for (int t = 0; t < spec.frames; ++t) {
    if (spec.mode == TrajectoryMode::fixed_step) {
      if (t == 0) {
        frames.push_back(v0);
        continue;
      }
      frames.emplace_back(v0.values() + (spec.alpha * t) * dv);
    } else {
      const double step = (direction.p_max() - direction.p_min()) / (spec.frames - 1);
      const double offset = direction.p_min() + t * step;
      frames.emplace_back(v0.values() + (offset * spec.alpha) * dv);
    }
  }
  return frames;
}

std::vector<LatentCode> alpha_sweep(const LatentCode& v0, const EditDirection& direction,
                                    const std::vector<double>& alphas, int t) {
  require_same_dim(v0, direction);
  if (alphas.empty()) throw Error(ErrorCode::invalid_argument, "alpha sweep needs at least one alpha");
  std::vector<LatentCode> out;
  out.reserve(alphas.size());
  for (const double alpha : alphas) {
    if (!std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be finite");
    out.emplace_back(v0.values() + (alpha * t) * direction.direction());
  }
  return out;
}

Matrix to_matrix(const std::vector<LatentCode>& codes) {
  if (codes.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(codes.size()), codes.front().dim());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].dim() != out.cols()) throw Error(ErrorCode::dimension_mismatch, "codes differ in dimension");
    out.row(static_cast<Eigen::Index>(i)) = codes[i].values().transpose();
  }
  return out;
}

}  // namespace micromotion
