#include "micromotion/interchange.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace micromotion {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr char kNpyMagic[] = "\x93NUMPY";
constexpr std::size_t kNpyMagicLen = 6;
constexpr std::size_t kNpyPreamble = 10;  // magic + version + header length
constexpr std::size_t kNpyAlign = 64;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_failure, "failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

template <class T>
T load_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  return value;
}

template <class T>
void store_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.append(bytes, sizeof(T));
}

struct NpyHeader {
  std::string descr;
  bool fortran_order = false;
  std::vector<long long> shape;
};

NpyHeader parse_npy_header(const std::string& header) {
  static const std::regex descr_re(R"(['"]descr['"]\s*:\s*['"]([^'"]*)['"])");
  static const std::regex order_re(R"(['"]fortran_order['"]\s*:\s*(True|False))");
  static const std::regex shape_re(R"(['"]shape['"]\s*:\s*\(([^)]*)\))");
  std::smatch match;
  NpyHeader out;
  if (!std::regex_search(header, match, descr_re)) throw Error(ErrorCode::malformed_header, "missing 'descr'");
  out.descr = match[1];
  if (!std::regex_search(header, match, order_re))
    throw Error(ErrorCode::malformed_header, "missing 'fortran_order'");
  out.fortran_order = match[1] == "True";
  if (!std::regex_search(header, match, shape_re)) throw Error(ErrorCode::malformed_header, "missing 'shape'");
  std::stringstream dims(match[1].str());
  std::string item;
  while (std::getline(dims, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \tL");
    long long value = -1;
    const auto* begin = item.data() + first;
    const auto* end = item.data() + last + 1;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || value < 0)
      throw Error(ErrorCode::malformed_header, "bad shape entry '" + item + "'");
    out.shape.push_back(value);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCode::io_failure, "cannot format number");
  return std::string(buf, ptr);
}

Matrix parse_csv(const std::string& text, const fs::path& path) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      double value = 0.0;
      const char* begin = first == std::string::npos ? cell.data() : cell.data() + first;
      const char* end = first == std::string::npos ? cell.data() : cell.data() + last + 1;
      if (begin != end && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end || begin == end) {
        std::ostringstream os;
        os << path.string() << ":" << line_no << ": cannot parse '" << cell << "'";
        throw Error(ErrorCode::schema_violation, os.str());
      }
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": " << row.size() << " values, expected " << rows.front().size();
      throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::schema_violation, path.string() + ": empty CSV");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

void require_finite_array(const Matrix& m, const std::string& source) {
  if (!m.allFinite()) throw Error(ErrorCode::non_finite_entry, source + " contains NaN/Inf values");
}

}  // namespace

ArrayFormat format_for(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".npy") return ArrayFormat::npy;
  if (ext == ".csv") return ArrayFormat::csv;
  throw Error(ErrorCode::invalid_argument, "unknown array extension '" + ext + "' (want .npy or .csv)");
}

std::string encode_npy(const Matrix& m, bool as_vector) {
  if (as_vector && m.rows() != 1) throw Error(ErrorCode::unsupported_rank, "only a single row can be written as a vector");
  std::ostringstream dict;
  dict << "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  if (as_vector)
    dict << m.cols() << ",";
  else
    dict << m.rows() << ", " << m.cols();
  dict << "), }";
  std::string header = dict.str();
  const std::size_t unpadded = kNpyPreamble + header.size() + 1;
  header.append((kNpyAlign - unpadded % kNpyAlign) % kNpyAlign, ' ');
  header.push_back('\n');

  std::string out(kNpyMagic, kNpyMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  store_le<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  out += header;
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * sizeof(double));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) store_le<double>(out, m(i, j));
  return out;
}

Matrix decode_npy(const std::string& bytes) {
  if (bytes.size() < kNpyPreamble || bytes.compare(0, kNpyMagicLen, kNpyMagic, kNpyMagicLen) != 0)
    throw Error(ErrorCode::bad_magic, "not an NPY file");
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    std::ostringstream os;
    os << "NPY version " << int(major) << "." << int(minor) << " is not supported (want 1.0)";
    throw Error(ErrorCode::malformed_header, os.str());
  }
  const auto header_len = load_le<std::uint16_t>(bytes.data() + 8);
  if (bytes.size() < kNpyPreamble + header_len) throw Error(ErrorCode::malformed_header, "truncated header");
  const NpyHeader header = parse_npy_header(bytes.substr(kNpyPreamble, header_len));

  std::size_t item = 0;
  if (header.descr == "<f8")
    item = 8;
  else if (header.descr == "<f4")
    item = 4;
  else
    throw Error(ErrorCode::unsupported_dtype, "dtype '" + header.descr + "' (want '<f4' or '<f8')");
  if (header.fortran_order) throw Error(ErrorCode::malformed_header, "Fortran-order arrays are not supported");
  if (header.shape.empty() || header.shape.size() > 2) {
    std::ostringstream os;
    os << "rank " << header.shape.size() << " arrays are not supported (want 1 or 2)";
    throw Error(ErrorCode::unsupported_rank, os.str());
  }
  const auto rows = header.shape.size() == 1 ? 1LL : header.shape[0];
  const auto cols = header.shape.back();
  const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const std::size_t offset = kNpyPreamble + header_len;
  if (bytes.size() - offset < count * item) throw Error(ErrorCode::malformed_header, "data section is truncated");

  Matrix out(rows, cols);
  const char* data = bytes.data() + offset;
  double* dst = out.data();  // row-major, same order as C-order data
  for (std::size_t i = 0; i < count; ++i)
    dst[i] = item == 8 ? load_le<double>(data + i * 8) : static_cast<double>(load_le<float>(data + i * 4));
  return out;
}

Matrix read_array(const fs::path& path) {
  const std::string bytes = read_file(path);
  Matrix out;
  if (path.extension() == ".csv")
    out = parse_csv(bytes, path);
  else
    out = decode_npy(bytes);
  require_finite_array(out, path.string());
  return out;
}

void write_array(const fs::path& path, const Matrix& m, ArrayFormat format, bool as_vector) {
  require_finite_array(m, "array for '" + path.string() + "'");
  if (format == ArrayFormat::npy) {
    write_file(path, encode_npy(m, as_vector));
    return;
  }
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text.push_back(',');
      text += format_double(m(i, j));
    }
    text.push_back('\n');
  }
  write_file(path, text);
}

AnchorManifest parse_manifest(const std::string& json_text, std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_violation, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::schema_violation, "manifest must be a JSON object");

  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  auto require = [&](const json& obj, const char* key, const char* where) -> const json& {
    if (!obj.contains(key)) throw Error(ErrorCode::schema_violation, std::string(where) + " is missing '" + key + "'");
    return obj.at(key);
  };

  static const std::set<std::string> top_keys{"format_version", "motion", "identity", "dim", "anchors"};
  static const std::set<std::string> entry_keys{"file", "row", "strength", "kind"};
  for (const auto& [key, value] : doc.items())
    if (!top_keys.count(key)) warn("unknown manifest key '" + key + "' ignored");

  AnchorManifest out;
  const auto& version = require(doc, "format_version", "manifest");
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw Error(ErrorCode::schema_violation, "unsupported format_version " + version.dump() + " (want 1)");
  out.format_version = 1;
  const auto& motion = require(doc, "motion", "manifest");
  const auto& identity = require(doc, "identity", "manifest");
  if (!motion.is_string() || !identity.is_string())
    throw Error(ErrorCode::schema_violation, "'motion' and 'identity' must be strings");
  out.motion = motion.get<std::string>();
  out.identity = identity.get<std::string>();
  const auto& dim = require(doc, "dim", "manifest");
  if (!dim.is_number_integer() || dim.get<long long>() < 1)
    throw Error(ErrorCode::schema_violation, "'dim' must be a positive integer");
  out.dim = dim.get<int>();

  const auto& anchors = require(doc, "anchors", "manifest");
  if (!anchors.is_array()) throw Error(ErrorCode::schema_violation, "'anchors' must be an array");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& e = anchors[i];
    const std::string where = "anchor " + std::to_string(i);
    if (!e.is_object()) throw Error(ErrorCode::schema_violation, where + " must be an object");
    for (const auto& [key, value] : e.items())
      if (!entry_keys.count(key)) warn(where + ": unknown key '" + key + "' ignored");
    AnchorEntry entry;
    const auto& file = require(e, "file", where.c_str());
    if (!file.is_string()) throw Error(ErrorCode::schema_violation, where + ": 'file' must be a string");
    entry.file = file.get<std::string>();
    if (e.contains("row") && !e.at("row").is_null()) {
      const auto& row = e.at("row");
      if (!row.is_number_integer() || row.get<long long>() < 0)
        throw Error(ErrorCode::schema_violation, where + ": 'row' must be a non-negative integer");
      entry.row = row.get<int>();
    }
    const auto& strength = require(e, "strength", where.c_str());
    if (!strength.is_number()) throw Error(ErrorCode::schema_violation, where + ": 'strength' must be a number");
    entry.strength = strength.get<double>();
    const auto& kind = require(e, "kind", where.c_str());
    const auto parsed = kind.is_string() ? parse_strength_kind(kind.get<std::string>()) : std::nullopt;
    if (!parsed)
      throw Error(ErrorCode::schema_violation, where + ": 'kind' must be fraction, degrees or ordinal");
    entry.kind = *parsed;
    out.anchors.push_back(std::move(entry));
  }
  return out;
}

std::string dump_manifest(const AnchorManifest& manifest) {
  json anchors = json::array();
  for (const auto& a : manifest.anchors) {
    json e;
    e["file"] = a.file;
    if (a.row) e["row"] = *a.row;
    e["strength"] = a.strength;
    e["kind"] = std::string(to_string(a.kind));
    anchors.push_back(std::move(e));
  }
  json doc;
  doc["format_version"] = manifest.format_version;
  doc["motion"] = manifest.motion;
  doc["identity"] = manifest.identity;
  doc["dim"] = manifest.dim;
  doc["anchors"] = std::move(anchors);
  return doc.dump(2) + "\n";
}

ManifestLoad load_manifest_checked(const fs::path& path) {
  ManifestLoad out;
  const AnchorManifest manifest = parse_manifest(read_file(path), &out.warnings);
  for (const auto& w : out.warnings) spdlog::warn("{}: {}", path.string(), w);

  const fs::path base = path.parent_path();
  std::map<fs::path, Matrix> arrays;
  auto& m = out.matrix;
  m.identity_id = manifest.identity;
  m.motion_name = manifest.motion;
  m.rows = Matrix(static_cast<Eigen::Index>(manifest.anchors.size()), manifest.dim);
  for (std::size_t i = 0; i < manifest.anchors.size(); ++i) {
    const auto& entry = manifest.anchors[i];
    const fs::path file = fs::path(entry.file).is_absolute() ? fs::path(entry.file) : base / entry.file;
    auto it = arrays.find(file);
    if (it == arrays.end()) {
      if (!fs::exists(file))
        throw Error(ErrorCode::dangling_file, "anchor " + std::to_string(i) + " references missing file '" +
                                                  file.string() + "'");
      it = arrays.emplace(file, read_array(file)).first;
    }
    const Matrix& array = it->second;
    Eigen::Index row = 0;
    if (entry.row) {
      row = *entry.row;
      if (row >= array.rows()) {
        std::ostringstream os;
        os << "anchor " << i << " references row " << row << " of '" << file.string() << "', which has "
           << array.rows() << " rows";
        throw Error(ErrorCode::dangling_file, os.str());
      }
    } else if (array.rows() != 1) {
      throw Error(ErrorCode::schema_violation, "anchor " + std::to_string(i) + " needs a 'row' index: '" +
                                                   file.string() + "' holds " + std::to_string(array.rows()) +
                                                   " rows");
    }
    if (array.cols() != manifest.dim) {
      std::ostringstream os;
      os << "'" << file.string() << "' has rows of length " << array.cols() << ", manifest dim is " << manifest.dim;
      throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    m.rows.row(static_cast<Eigen::Index>(i)) = array.row(row);
    m.strengths.push_back({entry.strength, entry.kind});
  }
  require_valid(m);
  return out;
}

void write_manifest(const fs::path& path, const AnchorManifest& manifest) {
  write_file(path, dump_manifest(manifest));
}

fs::path direction_sidecar(const fs::path& npy_path) {
  fs::path out = npy_path;
  out.replace_extension(".json");
  return out;
}

void write_direction(const fs::path& npy_path, const EditDirection& direction) {
  write_array(npy_path, direction.direction().transpose(), ArrayFormat::npy, /*as_vector=*/true);
  json side;
  side["motion"] = direction.motion_name();
  side["p_min"] = direction.p_min();
  side["p_max"] = direction.p_max();
  side["source_identity"] = direction.source_identity();
  write_file(direction_sidecar(npy_path), side.dump(2) + "\n");
}

EditDirection read_direction(const fs::path& npy_path) {
  const Matrix array = read_array(npy_path);
  if (array.rows() != 1)
    throw Error(ErrorCode::unsupported_rank, "direction file '" + npy_path.string() + "' must hold a single vector");
  const fs::path side_path = direction_sidecar(npy_path);
  if (!fs::exists(side_path))
    throw Error(ErrorCode::dangling_file, "direction sidecar '" + side_path.string() + "' is missing");
  json side;
  try {
    side = json::parse(read_file(side_path));
    Vector v = array.row(0).transpose();
    const double norm = v.norm();
    // float32 files cannot hold a unit vector to 1e-9; renormalize those.
    if (std::abs(norm - 1.0) > 1e-9 && std::abs(norm - 1.0) <= 1e-5) v /= norm;
    return EditDirection(std::move(v), {side.at("p_min").get<double>(), side.at("p_max").get<double>()},
                         side.at("motion").get<std::string>(), side.at("source_identity").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_violation, "direction sidecar '" + side_path.string() + "': " + e.what());
  }
}

}  // namespace micromotion
