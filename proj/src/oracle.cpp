#include "micromotion/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace micromotion {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

Rng Rng::split(std::uint64_t stream) const { return Rng(splitmix64(seed_ ^ stream_), stream); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Vector Rng::gaussian_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal();
  return x;
}

Vector Rng::unit_vector(Eigen::Index n) {
  Vector v = gaussian_vector(n);
  return v / v.norm();
}

namespace {

// First `count` entries of a uniformly random permutation of [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

std::size_t floor_count(double rate, std::size_t total) {
  const double exact = rate * static_cast<double>(total);
  const double nearest = std::round(exact);
  // 0.29 * 100 is 28.999999999999996 in binary; treat that as 29.
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(exact));
}

// Gaussian vector orthonormalized against the rows of `against` (twice, for
// numerical safety).
Vector orthogonal_unit(Rng& rng, Eigen::Index n, const std::vector<Vector>& against) {
  Vector v = rng.gaussian_vector(n);
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& a : against) v -= a.dot(v) * a;
  return v / v.norm();
}

}  // namespace

LowRankSparse gen_lowrank_sparse(int rows, int cols, int rank, double rate, double magnitude,
                                 std::uint64_t seed) {
  if (rows < 1 || cols < 1 || rank < 1)
    throw Error(ErrorCode::invalid_argument, "rows, cols and rank must be positive");
  if (rank > std::min(rows, cols)) {
    std::ostringstream os;
    os << "rank " << rank << " exceeds min(rows, cols) = " << std::min(rows, cols);
    throw Error(ErrorCode::r_too_large, os.str());
  }
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::invalid_argument, "rate must be in [0, 1)");
  if (!std::isfinite(magnitude)) throw Error(ErrorCode::invalid_argument, "magnitude must be finite");

  Rng rng(seed);
  Rng factor_rng = rng.split(1);
  Rng sparse_rng = rng.split(2);
  const Matrix a = factor_rng.gaussian_matrix(rows, rank);
  const Matrix b = factor_rng.gaussian_matrix(cols, rank);

  LowRankSparse out;
  out.low_rank = a * b.transpose();
  out.sparse = Matrix::Zero(rows, cols);
  const auto total = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  for (const auto flat : sample_without_replacement(sparse_rng, total, floor_count(rate, total))) {
    const auto r = static_cast<Eigen::Index>(flat / static_cast<std::size_t>(cols));
    const auto c = static_cast<Eigen::Index>(flat % static_cast<std::size_t>(cols));
    out.sparse(r, c) = sparse_rng.coin() ? magnitude : -magnitude;
  }
  out.d = out.low_rank + out.sparse;
  return out;
}

void OracleSpec::validate() const {
  if (p < 1) throw Error(ErrorCode::invalid_argument, "p must be >= 1");
  if (m < 2) throw Error(ErrorCode::too_few_anchors, "m must be >= 2");
  if (rank_k < 1 || dim < rank_k) throw Error(ErrorCode::invalid_argument, "need dim >= rank_k >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(ErrorCode::invalid_argument, "noise_sigma must be >= 0");
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0))
    throw Error(ErrorCode::invalid_argument, "corruption_rate must be in [0, 1)");
  if (!std::isfinite(corruption_magnitude) || !std::isfinite(motion_scale))
    throw Error(ErrorCode::invalid_argument, "corruption_magnitude and motion_scale must be finite");
  if (corrupted_anchors < 0 || corrupted_anchors > m)
    throw Error(ErrorCode::invalid_argument, "corrupted_anchors must be in [0, m]");
}

double OracleSpec::resolved_motion_scale() const {
  return motion_scale > 0.0 ? motion_scale : std::sqrt(static_cast<double>(dim));
}

OracleTensor gen_micromotion_tensor(const OracleSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const double scale = spec.resolved_motion_scale();
  const int distractors = std::min(spec.rank_k - 1, spec.m - 2);

  Vector strengths(spec.m);
  for (int i = 0; i < spec.m; ++i) strengths[i] = static_cast<double>(i) / (spec.m - 1);
  const Vector centered_strengths = strengths.array() - strengths.mean();

  auto make_directions = [&](Rng& rng) {
    std::vector<Vector> dirs;
    dirs.push_back(rng.unit_vector(spec.dim));
    for (int j = 0; j < distractors; ++j) dirs.push_back(orthogonal_unit(rng, spec.dim, dirs));
    return dirs;
  };

  std::vector<Vector> shared;
  if (spec.shared_direction) {
    Rng shared_rng = root.split(0);
    shared = make_directions(shared_rng);
  }

  OracleTensor out;
  out.tensor.motion_name = spec.motion_name;
  out.directions = Matrix(spec.p, spec.dim);
  for (int id = 0; id < spec.p; ++id) {
    Rng rng = root.split(static_cast<std::uint64_t>(id) + 1);
    const std::vector<Vector> dirs = spec.shared_direction ? shared : make_directions(rng);

    // Distractor coefficient columns: centered, orthogonal to the strengths
    // and to each other, 10x smaller.
    std::vector<Vector> coeff_basis{centered_strengths / centered_strengths.norm()};
    const double coeff_norm = 0.1 * centered_strengths.norm();
    Matrix rows = (scale * strengths) * dirs[0].transpose();
    for (int j = 0; j < distractors; ++j) {
      Vector c = rng.gaussian_vector(spec.m);
      c.array() -= c.mean();
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : coeff_basis) c -= b.dot(c) * b;
      c /= c.norm();
      coeff_basis.push_back(c);
      rows += (scale * coeff_norm * c) * dirs[static_cast<std::size_t>(j) + 1].transpose();
    }

    const Vector base = rng.gaussian_vector(spec.dim) * (10.0 * scale / std::sqrt(static_cast<double>(spec.dim)));
    rows.rowwise() += base.transpose();
    if (spec.noise_sigma > 0.0) rows += spec.noise_sigma * rng.gaussian_matrix(spec.m, spec.dim);

    std::vector<int> corrupted;
    if (spec.corruption_rate > 0.0 && spec.corruption_magnitude != 0.0) {
      const auto count = spec.corrupted_anchors == 0 ? static_cast<std::size_t>(spec.m)
                                                      : static_cast<std::size_t>(spec.corrupted_anchors);
      auto picked = sample_without_replacement(rng, static_cast<std::size_t>(spec.m), count);
      std::sort(picked.begin(), picked.end());
      const auto per_row = floor_count(spec.corruption_rate, static_cast<std::size_t>(spec.dim));
      for (const auto r : picked) {
        corrupted.push_back(static_cast<int>(r));
        for (const auto c : sample_without_replacement(rng, static_cast<std::size_t>(spec.dim), per_row)) {
          const bool positive = spec.corruption_positive || rng.coin();
          rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
              positive ? spec.corruption_magnitude : -spec.corruption_magnitude;
        }
      }
    }

    MicromotionMatrix mat;
    mat.rows = std::move(rows);
    mat.identity_id = "id" + std::to_string(id);
    mat.motion_name = spec.motion_name;
    for (int i = 0; i < spec.m; ++i) mat.strengths.push_back({strengths[i], StrengthKind::fraction});

    out.directions.row(id) = dirs[0].transpose();
    Matrix basis(static_cast<Eigen::Index>(dirs.size()), spec.dim);
    for (std::size_t j = 0; j < dirs.size(); ++j) basis.row(static_cast<Eigen::Index>(j)) = dirs[j].transpose();
    out.bases.push_back(std::move(basis));
    out.corrupted_rows.push_back(std::move(corrupted));
    out.tensor.identities.push_back(std::move(mat));
  }
  return out;
}

}  // namespace micromotion
