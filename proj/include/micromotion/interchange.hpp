#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "micromotion/latent_model.hpp"

namespace micromotion {

enum class ArrayFormat { npy, csv };

/// Picks the format from the file extension (.npy or .csv).
ArrayFormat format_for(const std::filesystem::path& path);

/// Reads an NPY v1.0 (little-endian <f4/<f8, C order, rank 1 or 2) or CSV
/// file. Rank-1 arrays come back as a 1 x N matrix.
Matrix read_array(const std::filesystem::path& path);

/// NPY output is float64 and round-trips bitwise; CSV uses shortest
/// round-trip decimals. When `as_vector` is set a single-row matrix is
/// written as a rank-1 NPY array.
void write_array(const std::filesystem::path& path, const Matrix& m, ArrayFormat format,
                 bool as_vector = false);

inline void write_array(const std::filesystem::path& path, const Matrix& m) {
  write_array(path, m, format_for(path));
}

/// Low-level NPY codec, exposed for fixtures.
std::string encode_npy(const Matrix& m, bool as_vector = false);
Matrix decode_npy(const std::string& bytes);

struct AnchorEntry {
  std::string file;  // relative to the manifest directory
  std::optional<int> row;
  double strength = 0.0;
  StrengthKind kind = StrengthKind::fraction;
};

struct AnchorManifest {
  int format_version = 1;
  std::string motion;
  std::string identity;
  int dim = 0;
  std::vector<AnchorEntry> anchors;
};

struct ManifestLoad {
  MicromotionMatrix matrix;
  std::vector<std::string> warnings;
};

AnchorManifest parse_manifest(const std::string& json_text, std::vector<std::string>* warnings = nullptr);
std::string dump_manifest(const AnchorManifest& manifest);

/// Loads a manifest plus the arrays it references, preserving anchor order.
/// Unknown keys are collected as warnings (and logged).
ManifestLoad load_manifest_checked(const std::filesystem::path& path);

inline MicromotionMatrix load_manifest(const std::filesystem::path& path) {
  return load_manifest_checked(path).matrix;
}

void write_manifest(const std::filesystem::path& path, const AnchorManifest& manifest);

/// Direction file: rank-1 NPY vector plus a sidecar JSON
/// {"motion", "p_min", "p_max", "source_identity"} at the same stem.
std::filesystem::path direction_sidecar(const std::filesystem::path& npy_path);
void write_direction(const std::filesystem::path& npy_path, const EditDirection& direction);
EditDirection read_direction(const std::filesystem::path& npy_path);

}  // namespace micromotion
