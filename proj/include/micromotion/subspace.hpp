#pragma once

#include <optional>
#include <string>
#include <vector>

#include "micromotion/decomp.hpp"

namespace micromotion {

/// Oriented top principal direction of a decomposition.
///
/// Projections are taken from the denoised anchors (rows of dec.low_rank minus
/// dec.mean). The sign is chosen so the projections correlate non-negatively
/// (Pearson) with the strength labels.
EditDirection extract_direction(const MicromotionMatrix& m, const DecompositionResult& dec);

/// Normalized difference of two anchors, oriented from the lower to the higher
/// strength. Projections are measured from the midpoint of the two anchors.
EditDirection baseline_two_anchor_direction(const MicromotionMatrix& m, int i, int j);

/// Principal angles (radians, ascending) between the row spans of two
/// orthonormal bases. Returns min(rows(a), rows(b)) angles.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// |cos| of the angle between a unit vector and the row span of a basis.
double span_cosine(const Matrix& basis, const Vector& v);

struct SimilarityReport {
  std::string motion_name;
  std::vector<std::string> labels;
  Matrix pairwise_cosine;     // NaN where an entry is missing
  Matrix grassmann_distance;  // NaN where an entry is missing
  /// principal_angles[i][j]; empty when either side is missing.
  std::vector<std::vector<std::vector<double>>> principal_angles;
  std::vector<std::string> missing;  // "label: reason"

  int size() const noexcept { return static_cast<int>(labels.size()); }
  double min_offdiag_cosine() const;
  double mean_offdiag_cosine() const;
};

/// One member of a similarity comparison. A missing direction marks an
/// identity whose extraction failed.
struct SubspaceEntry {
  std::string label;
  std::optional<Vector> direction;
  Matrix basis;  // orthonormal rows; may be just the direction
  std::string failure;
};

SimilarityReport similarity_report(const std::vector<SubspaceEntry>& entries,
                                   const std::string& motion_name);

/// Decomposes and extracts a direction per identity, then compares them.
/// Identities are processed concurrently when `parallel` is set; the report is
/// identical either way.
SimilarityReport compare_identities(const MicromotionTensor& t, int k, const PcpParams& params,
                                    DecompositionMode mode = DecompositionMode::pcp_then_pca,
                                    bool parallel = true);

}  // namespace micromotion
