#include "micromotion/subspace.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace micromotion {

namespace {

using ColMatrix = Eigen::MatrixXd;

double pearson(const Vector& x, const Vector& y) {
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double denom = xc.norm() * yc.norm();
  if (denom == 0.0) return 0.0;
  return xc.dot(yc) / denom;
}

void require_orthonormal(const Matrix& basis, const char* name) {
  if (basis.rows() == 0 || basis.cols() == 0)
    throw Error(ErrorCode::empty_basis, std::string(name) + " is empty");
  const Matrix gram = basis * basis.transpose();
  const double off = (gram - Matrix::Identity(basis.rows(), basis.rows())).cwiseAbs().maxCoeff();
  if (!(off <= 1e-8)) {
    std::ostringstream os;
    os << name << " is not orthonormal (max |BB^T - I| = " << off << ")";
    throw Error(ErrorCode::non_orthonormal, os.str());
  }
}

}  // namespace

EditDirection extract_direction(const MicromotionMatrix& m, const DecompositionResult& dec) {
  if (dec.basis.rows() == 0) throw Error(ErrorCode::empty_basis, "decomposition has no basis");
  if (dec.low_rank.rows() != m.anchors() || dec.basis.cols() != m.dim())
    throw Error(ErrorCode::dimension_mismatch, "decomposition does not match the anchor matrix");

  Vector direction = dec.basis.row(0).transpose();
  direction /= direction.norm();
  const Vector projections = (dec.low_rank.rowwise() - dec.mean.transpose()) * direction;
  const double corr = pearson(projections, m.strength_values());
  if (!(std::abs(corr) >= 1e-6)) {
    std::ostringstream os;
    os << "anchor projections do not correlate with strengths (r = " << corr << ")";
    throw Error(ErrorCode::orientation_undefined, os.str());
  }
  EditDirection out(direction, {projections.minCoeff(), projections.maxCoeff()}, m.motion_name,
                    m.identity_id);
  return corr < 0.0 ? out.flipped() : out;
}

EditDirection baseline_two_anchor_direction(const MicromotionMatrix& m, int i, int j) {
  if (i < 0 || j < 0 || i >= m.anchors() || j >= m.anchors()) {
    std::ostringstream os;
    os << "anchor indices (" << i << ", " << j << ") out of range for " << m.anchors() << " anchors";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  if (i == j) throw Error(ErrorCode::identical_anchors, "baseline needs two different anchors");
  Vector diff = (m.rows.row(j) - m.rows.row(i)).transpose();
  const double length = diff.norm();
  if (length == 0.0) throw Error(ErrorCode::identical_anchors, "the two anchors are identical");
  diff /= length;
  if (m.strengths.at(static_cast<std::size_t>(j)).value < m.strengths.at(static_cast<std::size_t>(i)).value)
    diff = -diff;
  return EditDirection(diff, {-0.5 * length, 0.5 * length}, m.motion_name, m.identity_id);
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    std::ostringstream os;
    os << "ambient dimensions differ: " << a.cols() << " vs " << b.cols();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
  require_orthonormal(a, "first basis");
  require_orthonormal(b, "second basis");
  const Matrix& big = a.rows() >= b.rows() ? a : b;
  const Matrix& small = a.rows() >= b.rows() ? b : a;

  // Cosines lose resolution near zero angle, sines near ninety degrees; take
  // each angle from whichever is better conditioned.
  const ColMatrix cross = small * big.transpose();
  const Vector cosines = Eigen::JacobiSVD<ColMatrix>(cross).singularValues();  // descending
  const ColMatrix residual = (small - (small * big.transpose()) * big).transpose();
  Vector sines = Eigen::JacobiSVD<ColMatrix>(residual).singularValues();  // descending
  std::sort(sines.begin(), sines.end());

  std::vector<double> angles;
  angles.reserve(static_cast<std::size_t>(small.rows()));
  for (Eigen::Index i = 0; i < small.rows(); ++i) {
    const double c = std::clamp(cosines[i], 0.0, 1.0);
    const double s = std::clamp(sines[i], 0.0, 1.0);
    angles.push_back(c * c < 0.5 ? std::acos(c) : std::asin(s));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double span_cosine(const Matrix& basis, const Vector& v) {
  if (basis.cols() != v.size()) throw Error(ErrorCode::dimension_mismatch, "vector does not match basis");
  const double norm = v.norm();
  if (norm == 0.0) throw Error(ErrorCode::invalid_argument, "zero vector has no direction");
  return std::min(1.0, (basis * v).norm() / norm);
}

double SimilarityReport::min_offdiag_cosine() const {
  double out = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      if (i != j && !std::isnan(pairwise_cosine(i, j)))
        out = std::isnan(out) ? pairwise_cosine(i, j) : std::min(out, pairwise_cosine(i, j));
  return out;
}

double SimilarityReport::mean_offdiag_cosine() const {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      if (i != j && !std::isnan(pairwise_cosine(i, j))) {
        sum += pairwise_cosine(i, j);
        ++count;
      }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

SimilarityReport similarity_report(const std::vector<SubspaceEntry>& entries,
                                   const std::string& motion_name) {
  const auto n = static_cast<Eigen::Index>(entries.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SimilarityReport out;
  out.motion_name = motion_name;
  out.pairwise_cosine = Matrix::Constant(n, n, nan);
  out.grassmann_distance = Matrix::Constant(n, n, nan);
  out.principal_angles.assign(entries.size(), std::vector<std::vector<double>>(entries.size()));
  for (const auto& e : entries) {
    out.labels.push_back(e.label);
    if (!e.direction) out.missing.push_back(e.label + ": " + e.failure);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ei = entries[static_cast<std::size_t>(i)];
    if (!ei.direction) continue;
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& ej = entries[static_cast<std::size_t>(j)];
      if (!ej.direction) continue;
      if (ei.direction->size() != ej.direction->size())
        throw Error(ErrorCode::dimension_mismatch, "'" + ei.label + "' and '" + ej.label + "' differ in dimension");
      auto angles = i == j ? std::vector<double>(static_cast<std::size_t>(ei.basis.rows()), 0.0)
                           : principal_angles(ei.basis, ej.basis);
      double sq = 0.0;
      for (const double t : angles) sq += t * t;
      const double cosine = i == j ? 1.0 : std::min(1.0, std::abs(ei.direction->dot(*ej.direction)));
      out.pairwise_cosine(i, j) = out.pairwise_cosine(j, i) = cosine;
      out.grassmann_distance(i, j) = out.grassmann_distance(j, i) = i == j ? 0.0 : std::sqrt(sq);
      out.principal_angles[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = angles;
      out.principal_angles[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::move(angles);
    }
  }
  return out;
}

SimilarityReport compare_identities(const MicromotionTensor& t, int k, const PcpParams& params,
                                    DecompositionMode mode, bool parallel) {
  if (t.size() < 2) throw Error(ErrorCode::invalid_argument, "comparison needs at least two identities");

  auto analyze = [&](const MicromotionMatrix& m) {
    SubspaceEntry entry;
    entry.label = m.identity_id;
    try {
      const DecompositionResult dec = decompose_anchors(m, k, params, mode);
      if (!dec.converged)
        spdlog::warn("identity '{}': decomposition did not converge (residual {:.3e})", m.identity_id,
                     dec.final_residual);
      entry.direction = extract_direction(m, dec).direction();
      entry.basis = dec.basis;
    } catch (const Error& e) {
      spdlog::warn("identity '{}' skipped: {}", m.identity_id, e.what());
      entry.failure = e.what();
    }
    return entry;
  };

  std::vector<SubspaceEntry> entries;
  if (parallel) {
    std::vector<std::future<SubspaceEntry>> jobs;
    for (const auto& m : t.identities) jobs.push_back(std::async(std::launch::async, analyze, std::cref(m)));
    for (auto& job : jobs) entries.push_back(job.get());
  } else {
    for (const auto& m : t.identities) entries.push_back(analyze(m));
  }
  return similarity_report(entries, t.motion_name);
}

}  // namespace micromotion
