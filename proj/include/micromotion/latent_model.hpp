#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "micromotion/error.hpp"

namespace micromotion {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Default flattened W+ dimension: 18 style layers of 512 channels.
inline constexpr int kDefaultLatentDim = 18 * 512;
inline constexpr int kTextAnchorCount = 16;
inline constexpr int kVideoAnchorCount = 7;
inline constexpr int kDefaultRank = 4;
inline constexpr double kAlphaGuidanceMin = 0.1;
inline constexpr double kAlphaGuidanceMax = 10.0;

/// One point in the latent space. Always finite, never empty.
class LatentCode {
 public:
  explicit LatentCode(Vector values);

  int dim() const noexcept { return static_cast<int>(values_.size()); }
  const Vector& values() const noexcept { return values_; }

 private:
  Vector values_;
};

enum class StrengthKind { fraction, degrees, ordinal };

std::string_view to_string(StrengthKind kind);
std::optional<StrengthKind> parse_strength_kind(std::string_view text);

struct StrengthLabel {
  double value = 0.0;
  StrengthKind kind = StrengthKind::fraction;

  bool operator==(const StrengthLabel&) const = default;
};

/// Anchors of one identity, one latent code per row.
///
/// The row layout is M x dim, i.e. the transpose of the column-per-anchor
/// convention. Construction does not validate; call validate_matrix (or
/// require_valid) before handing a matrix to the decomposition routines.
struct MicromotionMatrix {
  Matrix rows;
  std::vector<StrengthLabel> strengths;
  std::string identity_id;
  std::string motion_name;

  int anchors() const noexcept { return static_cast<int>(rows.rows()); }
  int dim() const noexcept { return static_cast<int>(rows.cols()); }
  LatentCode row(int i) const { return LatentCode(rows.row(i).transpose()); }
  Vector strength_values() const;
};

struct MicromotionTensor {
  std::vector<MicromotionMatrix> identities;
  std::string motion_name;

  int size() const noexcept { return static_cast<int>(identities.size()); }
};

/// Unit-norm edit direction with the range of anchor projections onto it.
class EditDirection {
 public:
  /// Normalizes nothing: `direction` must already have unit norm (1e-9).
  EditDirection(Vector direction, std::pair<double, double> projection_range,
                std::string motion_name, std::string source_identity);

  const Vector& direction() const noexcept { return direction_; }
  int dim() const noexcept { return static_cast<int>(direction_.size()); }
  double p_min() const noexcept { return range_.first; }
  double p_max() const noexcept { return range_.second; }
  const std::string& motion_name() const noexcept { return motion_; }
  const std::string& source_identity() const noexcept { return source_; }

  /// Same geometry, opposite orientation; the projection range is mirrored.
  EditDirection flipped() const;

 private:
  Vector direction_;
  std::pair<double, double> range_;
  std::string motion_;
  std::string source_;
};

/// Returns the first violated invariant, or nullopt when the matrix is valid.
std::optional<Error> validate_matrix(const MicromotionMatrix& m);

/// Throws the error validate_matrix would return.
void require_valid(const MicromotionMatrix& m);

/// Throws when a tensor is empty or its members disagree on dim or motion.
void require_valid(const MicromotionTensor& t);

}  // namespace micromotion
