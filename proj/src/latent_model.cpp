#include "micromotion/latent_model.hpp"

#include <cmath>
#include <sstream>

namespace micromotion {

LatentCode::LatentCode(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw Error(ErrorCode::dimension_mismatch, "latent code is empty");
  if (!values_.allFinite()) throw Error(ErrorCode::non_finite_entry, "latent code has NaN/Inf");
}

std::string_view to_string(StrengthKind kind) {
  switch (kind) {
    case StrengthKind::fraction: return "fraction";
    case StrengthKind::degrees: return "degrees";
    case StrengthKind::ordinal: return "ordinal";
  }
  return "fraction";
}

std::optional<StrengthKind> parse_strength_kind(std::string_view text) {
  if (text == "fraction") return StrengthKind::fraction;
  if (text == "degrees") return StrengthKind::degrees;
  if (text == "ordinal") return StrengthKind::ordinal;
  return std::nullopt;
}

Vector MicromotionMatrix::strength_values() const {
  Vector s(static_cast<Eigen::Index>(strengths.size()));
  for (std::size_t i = 0; i < strengths.size(); ++i) s[static_cast<Eigen::Index>(i)] = strengths[i].value;
  return s;
}

EditDirection::EditDirection(Vector direction, std::pair<double, double> projection_range,
                             std::string motion_name, std::string source_identity)
    : direction_(std::move(direction)),
      range_(projection_range),
      motion_(std::move(motion_name)),
      source_(std::move(source_identity)) {
  if (direction_.size() == 0) throw Error(ErrorCode::empty_basis, "edit direction is empty");
  if (!direction_.allFinite()) throw Error(ErrorCode::non_finite_entry, "edit direction has NaN/Inf");
  const double norm = direction_.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "edit direction norm " << norm << " is not 1";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  if (!std::isfinite(range_.first) || !std::isfinite(range_.second) || range_.first > range_.second)
    throw Error(ErrorCode::invalid_argument, "projection range must satisfy p_min <= p_max");
}

EditDirection EditDirection::flipped() const {
  return EditDirection(-direction_, {-range_.second, -range_.first}, motion_, source_);
}

std::optional<Error> validate_matrix(const MicromotionMatrix& m) {
  const auto rows = m.anchors();
  if (static_cast<std::size_t>(rows) != m.strengths.size()) {
    std::ostringstream os;
    os << rows << " rows but " << m.strengths.size() << " strength labels";
    return Error(ErrorCode::dimension_mismatch, os.str());
  }
  if (rows < 2) {
    std::ostringstream os;
    os << "need at least 2 anchors, got " << rows;
    return Error(ErrorCode::too_few_anchors, os.str());
  }
  if (m.dim() < 1) return Error(ErrorCode::dimension_mismatch, "latent dimension is zero");
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
    if (!m.rows.row(i).allFinite()) {
      std::ostringstream os;
      os << "row " << i << " has NaN/Inf";
      return Error(ErrorCode::non_finite_entry, os.str());
    }
  }
  const auto kind = m.strengths.front().kind;
  for (std::size_t i = 0; i < m.strengths.size(); ++i) {
    if (!std::isfinite(m.strengths[i].value)) {
      std::ostringstream os;
      os << "strength " << i << " is not finite";
      return Error(ErrorCode::non_finite_entry, os.str());
    }
    if (m.strengths[i].kind != kind) {
      std::ostringstream os;
      os << "strength " << i << " is " << to_string(m.strengths[i].kind) << ", expected "
         << to_string(kind);
      return Error(ErrorCode::mixed_strength_kinds, os.str());
    }
  }
  bool distinct = false;
  for (const auto& s : m.strengths) distinct = distinct || s.value != m.strengths.front().value;
  if (!distinct) return Error(ErrorCode::constant_strengths, "all strength labels are equal");
  return std::nullopt;
}

void require_valid(const MicromotionMatrix& m) {
  if (auto err = validate_matrix(m)) throw *err;
}

void require_valid(const MicromotionTensor& t) {
  if (t.identities.empty()) throw Error(ErrorCode::invalid_argument, "tensor has no identities");
  const auto dim = t.identities.front().dim();
  for (const auto& m : t.identities) {
    require_valid(m);
    if (m.dim() != dim) throw Error(ErrorCode::dimension_mismatch, "identities disagree on latent dim");
    if (m.motion_name != t.motion_name)
      throw Error(ErrorCode::invalid_argument, "identity '" + m.identity_id + "' has motion '" +
                                                   m.motion_name + "', tensor is '" + t.motion_name + "'");
  }
}

}  // namespace micromotion
