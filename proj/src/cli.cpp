#include "micromotion/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "micromotion/decomp.hpp"
#include "micromotion/interchange.hpp"
#include "micromotion/oracle.hpp"
#include "micromotion/subspace.hpp"
#include "micromotion/trajectory.hpp"

namespace micromotion::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

ExitCode exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_failure:
    case ErrorCode::dangling_file:
      return kIo;
    case ErrorCode::max_iter_exceeded:
    case ErrorCode::svd_failure:
    case ErrorCode::non_finite_intermediate:
      return kNonConvergence;
    case ErrorCode::orientation_undefined:
    case ErrorCode::empty_basis:
    case ErrorCode::identical_anchors:
    case ErrorCode::constant_data:
    case ErrorCode::non_orthonormal:
      return kDegenerate;
    default:
      return kUsage;
  }
}

namespace {

// Raised inside a command to finish with a given exit code after the summary
// line has been printed.
struct ExitWith {
  int code;
};

class LoggerScope {
 public:
  LoggerScope(std::ostream& err, spdlog::level::level_enum level) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, /*force_flush=*/true);
    auto logger = std::make_shared<spdlog::logger>("micromotion", std::move(sink));
    logger->set_pattern("[%l] %v");
    logger->set_level(level);
    spdlog::set_default_logger(std::move(logger));
  }
  ~LoggerScope() { spdlog::set_default_logger(previous_); }
  LoggerScope(const LoggerScope&) = delete;
  LoggerScope& operator=(const LoggerScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

std::optional<spdlog::level::level_enum> parse_level(const std::string& text) {
  if (text == "error") return spdlog::level::err;
  if (text == "warn") return spdlog::level::warn;
  if (text == "info") return spdlog::level::info;
  if (text == "debug") return spdlog::level::debug;
  return std::nullopt;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::isnan(m(i, j)))
        row.push_back(nullptr);
      else
        row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::vector<double> parse_number_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    const char* begin = item.data();
    const char* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || item.empty() || !std::isfinite(v))
      throw Error(ErrorCode::invalid_argument, std::string(flag) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, std::string(flag) + " needs at least one value");
  return out;
}

// Decomposition flags shared by decompose, direction and compare.
struct DecompFlags {
  int k = kDefaultRank;
  double lambda = 0.0;
  double mu = 0.0;
  double tol = PcpParams{}.tol;
  int max_iter = PcpParams{}.max_iter;
  std::string schedule = "balanced";
  std::string order = "pcp-first";
  bool no_robust = false;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* mu_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "Principal dimensions kept")->capture_default_str();
    lambda_opt = cmd->add_option("--lambda", lambda, "Sparsity weight (default 1/sqrt(max(M, N)))");
    mu_opt = cmd->add_option("--mu", mu, "Initial penalty (default M*N / (4 ||D||_1))");
    cmd->add_option("--tol", tol, "Relative residual tolerance")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
    cmd->add_option("--schedule", schedule, "Penalty schedule")
        ->check(CLI::IsMember({"balanced", "fixed"}))
        ->capture_default_str();
    cmd->add_option("--order", order, "pcp-first: PCA of the robust low-rank part; pca-first: rank-k PCA, then PCP")
        ->check(CLI::IsMember({"pcp-first", "pca-first"}))
        ->capture_default_str();
    cmd->add_flag("--no-robust", no_robust, "Plain PCA, no robust split");
  }

  PcpParams params() const {
    PcpParams p;
    if (*lambda_opt) p.lambda = lambda;
    if (*mu_opt) p.mu = mu;
    p.tol = tol;
    p.max_iter = max_iter;
    p.schedule = schedule == "fixed" ? PenaltySchedule::fixed : PenaltySchedule::balanced;
    p.validate();
    return p;
  }

  DecompositionMode mode() const {
    if (no_robust) return DecompositionMode::pca;
    return order == "pca-first" ? DecompositionMode::pca_then_pcp : DecompositionMode::pcp_then_pca;
  }
};

const char* mode_name(DecompositionMode mode) {
  switch (mode) {
    case DecompositionMode::pca: return "pca";
    case DecompositionMode::pcp_then_pca: return "pcp_then_pca";
    case DecompositionMode::pca_then_pcp: return "pca_then_pcp";
  }
  return "pca";
}

fs::path stem_path(const fs::path& manifest, const std::string& suffix) {
  return manifest.parent_path() / (manifest.stem().string() + suffix);
}

// Explicit --ground-truth wins; otherwise <stem>.truth.npy next to the manifest.
std::optional<Vector> ground_truth_for(const fs::path& manifest, const std::string& explicit_path) {
  fs::path path = explicit_path.empty() ? stem_path(manifest, ".truth.npy") : fs::path(explicit_path);
  if (!fs::exists(path)) {
    if (!explicit_path.empty()) throw Error(ErrorCode::dangling_file, "ground truth '" + path.string() + "' not found");
    return std::nullopt;
  }
  const Matrix truth = read_array(path);
  if (truth.rows() != 1) throw Error(ErrorCode::unsupported_rank, "ground truth must be a single vector");
  Vector v = truth.row(0).transpose();
  return v / v.norm();
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  OracleSpec spec;
  bool independent = false;
  std::string out_dir = ".";
};

json cmd_synth(const SynthFlags& flags) {
  OracleSpec spec = flags.spec;
  spec.shared_direction = !flags.independent;
  const OracleTensor oracle = gen_micromotion_tensor(spec);

  const fs::path dir(flags.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create '" + dir.string() + "': " + ec.message());

  json manifests = json::array();
  json identities = json::array();
  for (int id = 0; id < oracle.tensor.size(); ++id) {
    const auto& m = oracle.tensor.identities[static_cast<std::size_t>(id)];
    const std::string stem = "identity_" + std::to_string(id);
    write_array(dir / (stem + ".npy"), m.rows, ArrayFormat::npy);
    write_array(dir / (stem + ".truth.npy"), oracle.directions.row(id), ArrayFormat::npy, /*as_vector=*/true);

    AnchorManifest manifest;
    manifest.motion = m.motion_name;
    manifest.identity = m.identity_id;
    manifest.dim = m.dim();
    for (int r = 0; r < m.anchors(); ++r)
      manifest.anchors.push_back({stem + ".npy", r, m.strengths[static_cast<std::size_t>(r)].value,
                                  m.strengths[static_cast<std::size_t>(r)].kind});
    write_manifest(dir / (stem + ".json"), manifest);
    manifests.push_back(stem + ".json");
    identities.push_back({{"identity", m.identity_id},
                          {"manifest", stem + ".json"},
                          {"truth", stem + ".truth.npy"},
                          {"corrupted_rows", oracle.corrupted_rows[static_cast<std::size_t>(id)]}});
  }
  write_array(dir / "ground_truth.npy", oracle.directions, ArrayFormat::npy);
  json truth = {{"motion", spec.motion_name},
                {"p", spec.p},
                {"m", spec.m},
                {"dim", spec.dim},
                {"rank_k", spec.rank_k},
                {"seed", spec.seed},
                {"noise_sigma", spec.noise_sigma},
                {"corruption_rate", spec.corruption_rate},
                {"corruption_magnitude", spec.corruption_magnitude},
                {"corrupted_anchors", spec.corrupted_anchors},
                {"shared_direction", spec.shared_direction},
                {"motion_scale", spec.resolved_motion_scale()},
                {"directions", "ground_truth.npy"},
                {"identities", identities}};
  std::ofstream side(dir / "ground_truth.json", std::ios::binary | std::ios::trunc);
  side << truth.dump(2) << "\n";
  if (!side) throw Error(ErrorCode::io_failure, "cannot write ground_truth.json");

  return {{"command", "synth"},         {"out", dir.string()},        {"identities", spec.p},
          {"anchors", spec.m},          {"dim", spec.dim},            {"rank_k", spec.rank_k},
          {"noise_sigma", spec.noise_sigma}, {"shared", spec.shared_direction}, {"seed", spec.seed},
          {"manifests", manifests},     {"ground_truth", "ground_truth.npy"}};
}

// ---------------------------------------------------------------------------

struct DecomposeFlags {
  std::string manifest;
  std::string out_dir;
  std::string ground_truth;
  DecompFlags decomp;
};

json cmd_decompose(const DecomposeFlags& flags) {
  const fs::path manifest(flags.manifest);
  const MicromotionMatrix m = load_manifest(manifest);
  const DecompositionResult dec = decompose_anchors(m, flags.decomp.k, flags.decomp.params(), flags.decomp.mode());

  const fs::path dir = flags.out_dir.empty() ? stem_path(manifest, ".decomp") : fs::path(flags.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create '" + dir.string() + "': " + ec.message());
  write_array(dir / "low_rank.npy", dec.low_rank, ArrayFormat::npy);
  write_array(dir / "sparse.npy", dec.sparse, ArrayFormat::npy);
  write_array(dir / "spectrum.npy", dec.singular_values.transpose(), ArrayFormat::npy, true);
  write_array(dir / "mean.npy", dec.mean.transpose(), ArrayFormat::npy, true);
  write_array(dir / "basis.npy", dec.basis, ArrayFormat::npy);

  json summary = {{"command", "decompose"},
                  {"identity", m.identity_id},
                  {"motion", m.motion_name},
                  {"mode", mode_name(dec.mode)},
                  {"k", flags.decomp.k},
                  {"explained", dec.explained},
                  {"iterations", dec.iterations},
                  {"residual", dec.final_residual},
                  {"converged", dec.converged},
                  {"spectrum", to_json(dec.singular_values)},
                  {"out", dir.string()}};
  if (const auto truth = ground_truth_for(manifest, flags.ground_truth)) {
    const double lead = std::min(1.0, std::abs(dec.basis.row(0).dot(*truth)));
    summary["leading_angle"] = std::acos(lead);
    summary["span_angle"] = std::acos(span_cosine(dec.basis, *truth));
  }
  if (!dec.converged) {
    spdlog::error("decomposition did not converge: residual {:.3e} after {} iterations", dec.final_residual,
                  dec.iterations);
    summary["exit"] = static_cast<int>(kNonConvergence);
  }
  return summary;
}

// ---------------------------------------------------------------------------

struct DirectionFlags {
  std::string manifest;
  std::string out;
  std::string ground_truth;
  DecompFlags decomp;
};

json cmd_direction(const DirectionFlags& flags) {
  const fs::path manifest(flags.manifest);
  const MicromotionMatrix m = load_manifest(manifest);
  const DecompositionResult dec = decompose_anchors(m, flags.decomp.k, flags.decomp.params(), flags.decomp.mode());
  const EditDirection direction = extract_direction(m, dec);

  const fs::path out = flags.out.empty() ? stem_path(manifest, ".direction.npy") : fs::path(flags.out);
  write_direction(out, direction);

  json summary = {{"command", "direction"},
                  {"identity", m.identity_id},
                  {"motion", m.motion_name},
                  {"mode", mode_name(dec.mode)},
                  {"file", out.string()},
                  {"sidecar", direction_sidecar(out).string()},
                  {"p_min", direction.p_min()},
                  {"p_max", direction.p_max()},
                  {"iterations", dec.iterations},
                  {"converged", dec.converged}};
  if (const auto truth = ground_truth_for(manifest, flags.ground_truth))
    summary["cos_to_truth"] = direction.direction().dot(*truth);
  if (!dec.converged) {
    spdlog::error("decomposition did not converge: residual {:.3e} after {} iterations", dec.final_residual,
                  dec.iterations);
    summary["exit"] = static_cast<int>(kNonConvergence);
  }
  return summary;
}

// ---------------------------------------------------------------------------

struct ApplyFlags {
  std::string v0;
  int v0_row = 0;
  std::string direction;
  double alpha = 1.0;
  int frames = 10;
  std::string mode = "fixed";
  std::string alpha_sweep;
  int t = 1;
  std::string out = "trajectory.npy";
};

json cmd_apply(const ApplyFlags& flags) {
  const Matrix start = read_array(flags.v0);
  if (flags.v0_row < 0 || flags.v0_row >= start.rows()) {
    std::ostringstream os;
    os << "--v0-row " << flags.v0_row << " out of range for " << start.rows() << " rows";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  const LatentCode v0(start.row(flags.v0_row).transpose());
  const EditDirection direction = read_direction(flags.direction);

  std::vector<LatentCode> codes;
  json summary = {{"command", "apply"}, {"out", flags.out}};
  if (!flags.alpha_sweep.empty()) {
    const auto alphas = parse_number_list(flags.alpha_sweep, "--alpha-sweep");
    for (const double a : alphas)
      if (a < kAlphaGuidanceMin || a > kAlphaGuidanceMax)
        spdlog::info("alpha {} is outside the usual search interval [{}, {}]", a, kAlphaGuidanceMin, kAlphaGuidanceMax);
    codes = alpha_sweep(v0, direction, alphas, flags.t);
    summary["alphas"] = alphas;
    summary["t"] = flags.t;
    summary["mode"] = "alpha_sweep";
  } else {
    if (flags.alpha != 0.0 && (std::abs(flags.alpha) < kAlphaGuidanceMin || std::abs(flags.alpha) > kAlphaGuidanceMax))
      spdlog::info("alpha {} is outside the usual search interval [{}, {}]", flags.alpha, kAlphaGuidanceMin,
                   kAlphaGuidanceMax);
    TrajectorySpec spec;
    spec.alpha = flags.alpha;
    spec.frames = flags.frames;
    spec.mode = flags.mode == "span" ? TrajectoryMode::span_range : TrajectoryMode::fixed_step;
    codes = synthesize(v0, direction, spec);
    summary["alpha"] = flags.alpha;
    summary["mode"] = flags.mode == "span" ? "span_range" : "fixed_step";
  }
  const Matrix frames = to_matrix(codes);
  write_array(flags.out, frames);
  summary["rows"] = frames.rows();
  summary["dim"] = frames.cols();
  return summary;
}

// ---------------------------------------------------------------------------

struct CompareFlags {
  std::vector<std::string> inputs;
  DecompFlags decomp;
};

json cmd_compare(const CompareFlags& flags) {
  if (flags.inputs.size() < 2) throw Error(ErrorCode::invalid_argument, "compare needs at least two inputs");
  std::vector<SubspaceEntry> entries;
  std::string motion;
  for (const auto& input : flags.inputs) {
    const fs::path path(input);
    SubspaceEntry entry;
    entry.label = path.stem().string();
    if (path.extension() == ".json") {
      const MicromotionMatrix m = load_manifest(path);
      entry.label = m.identity_id;
      if (motion.empty()) motion = m.motion_name;
      try {
        const DecompositionResult dec =
            decompose_anchors(m, flags.decomp.k, flags.decomp.params(), flags.decomp.mode());
        if (!dec.converged) spdlog::warn("'{}': decomposition did not converge", input);
        entry.direction = extract_direction(m, dec).direction();
        entry.basis = dec.basis;
      } catch (const Error& e) {
        if (exit_code_for(e.code()) != kDegenerate && exit_code_for(e.code()) != kNonConvergence) throw;
        spdlog::warn("'{}' skipped: {}", input, e.what());
        entry.failure = e.what();
      }
    } else {
      const Matrix array = read_array(path);
      if (array.rows() == 1 && fs::exists(direction_sidecar(path))) {
        const EditDirection d = read_direction(path);
        entry.label = d.source_identity().empty() ? entry.label : d.source_identity();
        if (motion.empty()) motion = d.motion_name();
        entry.direction = d.direction();
      } else {
        // Bare vector or basis rows; the first row stands for the direction.
        Vector first = array.row(0).transpose();
        entry.direction = first / first.norm();
      }
      entry.basis = array.rows() == 1 ? Matrix(entry.direction->transpose()) : array;
    }
    entries.push_back(std::move(entry));
  }

  const SimilarityReport report = similarity_report(entries, motion);
  json angles = json::array();
  for (int i = 0; i < report.size(); ++i) {
    json row = json::array();
    for (int j = 0; j < report.size(); ++j) {
      const auto& a = report.principal_angles[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      row.push_back(a.empty() && (std::isnan(report.pairwise_cosine(i, j))) ? json(nullptr) : json(a));
    }
    angles.push_back(std::move(row));
  }
  json summary = {{"command", "compare"},
                  {"motion", report.motion_name},
                  {"inputs", flags.inputs},
                  {"labels", report.labels},
                  {"pairwise_cosine", to_json(report.pairwise_cosine)},
                  {"min_offdiag_cosine", nullable(report.min_offdiag_cosine())},
                  {"mean_offdiag_cosine", nullable(report.mean_offdiag_cosine())},
                  {"grassmann_distance", to_json(report.grassmann_distance)},
                  {"principal_angles", angles},
                  {"missing", report.missing}};
  if (report.size() - static_cast<int>(report.missing.size()) < 2) {
    spdlog::error("fewer than two inputs produced a direction");
    summary["exit"] = static_cast<int>(kDegenerate);
  }
  return summary;
}

// ---------------------------------------------------------------------------

struct BenchCell {
  int rows;
  int cols;
  int rank;
  double rate;
};

struct BenchFlags {
  std::string grid = "60x40x1,60x40x4,200x100x1,200x100x4,400x200x1,400x200x4";
  int rank = 4;
  double rate = 0.05;
  double magnitude = 10.0;
  std::uint64_t seed = 1;
  DecompFlags decomp;
};

std::vector<BenchCell> parse_grid(const BenchFlags& flags) {
  std::vector<BenchCell> cells;
  std::stringstream in(flags.grid);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::vector<std::string> parts;
    std::stringstream fields(item);
    std::string part;
    while (std::getline(fields, part, 'x')) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 4)
      throw Error(ErrorCode::invalid_argument, "grid cell '" + item + "' is not ROWSxCOLS[xRANK[xRATE]]");
    auto to_int = [&](const std::string& s) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v < 1)
        throw Error(ErrorCode::invalid_argument, "grid cell '" + item + "': '" + s + "' is not a positive integer");
      return v;
    };
    BenchCell cell{to_int(parts[0]), to_int(parts[1]), flags.rank, flags.rate};
    if (parts.size() >= 3) cell.rank = to_int(parts[2]);
    if (parts.size() == 4) cell.rate = parse_number_list(parts[3], "--grid")[0];
    cells.push_back(cell);
  }
  if (cells.empty()) throw Error(ErrorCode::invalid_argument, "empty --grid");
  return cells;
}

json cmd_bench(const BenchFlags& flags, std::ostream& out) {
  const auto cells = parse_grid(flags);
  const PcpParams params = flags.decomp.params();
  out << "rows,cols,rank,rate,iterations,converged,seconds,recovery_error\n";
  double total = 0.0;
  double worst = 0.0;
  for (const auto& cell : cells) {
    const LowRankSparse data = gen_lowrank_sparse(cell.rows, cell.cols, cell.rank, cell.rate, flags.magnitude, flags.seed);
    const auto start = std::chrono::steady_clock::now();
    const PcpResult result = pcp(data.d, params);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double error = (result.low_rank - data.low_rank).norm() / data.low_rank.norm();
    total += seconds;
    worst = std::max(worst, error);
    out << cell.rows << "," << cell.cols << "," << cell.rank << "," << cell.rate << "," << result.iterations << ","
        << (result.converged ? 1 : 0) << "," << seconds << "," << error << "\n";
  }
  return {{"command", "bench"}, {"cells", cells.size()}, {"total_seconds", total}, {"worst_recovery_error", worst}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent micromotion toolkit: robust anchor decomposition, edit directions, trajectories"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "error, warn, info or debug (env MICROMOTION_LOG)")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic anchor tensor with ground truth");
  synth_cmd->add_option("--p", synth.spec.p, "Identities")->capture_default_str();
  synth_cmd->add_option("--m", synth.spec.m, "Anchors per identity")->capture_default_str();
  synth_cmd->add_option("--dim", synth.spec.dim, "Latent dimension")->capture_default_str();
  synth_cmd->add_option("--rank", synth.spec.rank_k, "Signal rank (1 motion + distractors)")->capture_default_str();
  synth_cmd->add_option("--noise", synth.spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  synth_cmd->add_option("--corruption-rate", synth.spec.corruption_rate, "Fraction of entries corrupted per affected anchor");
  synth_cmd->add_option("--corruption-magnitude", synth.spec.corruption_magnitude, "Corruption magnitude");
  synth_cmd->add_option("--corrupt-anchors", synth.spec.corrupted_anchors, "Anchors corrupted per identity (0 = all)");
  synth_cmd->add_flag("--positive-corruption", synth.spec.corruption_positive, "Corrupt with +magnitude only");
  synth_cmd->add_option("--motion-scale", synth.spec.motion_scale, "Norm of the full-strength motion (default sqrt(dim))");
  synth_cmd->add_option("--motion", synth.spec.motion_name, "Motion name")->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.seed, "Seed")->capture_default_str();
  auto* shared_flag = synth_cmd->add_flag("--shared", "One direction shared by all identities (default)");
  synth_cmd->add_flag("--independent", synth.independent, "Independent direction per identity")->excludes(shared_flag);
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->capture_default_str();

  DecomposeFlags decompose;
  auto* decompose_cmd = app.add_subcommand("decompose", "Robust decomposition of one anchor manifest");
  decompose_cmd->add_option("manifest", decompose.manifest, "Anchor manifest (JSON)")->required();
  decompose_cmd->add_option("--out", decompose.out_dir, "Output directory (default <stem>.decomp)");
  decompose_cmd->add_option("--ground-truth", decompose.ground_truth, "Ground-truth direction (default <stem>.truth.npy)");
  decompose.decomp.attach(decompose_cmd);

  DirectionFlags direction;
  auto* direction_cmd = app.add_subcommand("direction", "Extract the oriented edit direction of a manifest");
  direction_cmd->add_option("manifest", direction.manifest, "Anchor manifest (JSON)")->required();
  direction_cmd->add_option("--out", direction.out, "Direction file (default <stem>.direction.npy)");
  direction_cmd->add_option("--ground-truth", direction.ground_truth, "Ground-truth direction (default <stem>.truth.npy)");
  direction.decomp.attach(direction_cmd);

  ApplyFlags apply;
  auto* apply_cmd = app.add_subcommand("apply", "Emit latent frames V_t = V_0 + alpha t dV");
  apply_cmd->add_option("--v0", apply.v0, "Start code (NPY/CSV)")->required();
  apply_cmd->add_option("--v0-row", apply.v0_row, "Row of --v0 to use")->capture_default_str();
  apply_cmd->add_option("--direction", apply.direction, "Direction file (NPY + sidecar)")->required();
  apply_cmd->add_option("--alpha", apply.alpha, "Step scale; typical values lie in [0.1, 10]")->capture_default_str();
  apply_cmd->add_option("--frames", apply.frames, "Number of frames")->capture_default_str();
  apply_cmd->add_option("--mode", apply.mode, "fixed or span")->check(CLI::IsMember({"fixed", "span"}))->capture_default_str();
  apply_cmd->add_option("--alpha-sweep", apply.alpha_sweep, "Comma-separated alphas; emits one code per alpha");
  apply_cmd->add_option("--t", apply.t, "Frame index used by --alpha-sweep")->capture_default_str();
  apply_cmd->add_option("--out", apply.out, "Output array (.npy or .csv)")->capture_default_str();

  CompareFlags compare;
  auto* compare_cmd = app.add_subcommand("compare", "Cross-identity similarity of directions, bases or manifests");
  compare_cmd->add_option("inputs", compare.inputs, "Direction .npy files, basis .npy files or manifests")->required();
  compare.decomp.attach(compare_cmd);

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time PCP on synthetic low-rank + sparse problems (CSV)");
  bench_cmd->add_option("--grid", bench.grid, "Cells ROWSxCOLS[xRANK[xRATE]], comma separated")->capture_default_str();
  bench_cmd->add_option("--rank", bench.rank, "Rank for cells without one")->capture_default_str();
  bench_cmd->add_option("--rate", bench.rate, "Corruption rate for cells without one")->capture_default_str();
  bench_cmd->add_option("--magnitude", bench.magnitude, "Corruption magnitude")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed")->capture_default_str();
  bench.decomp.attach(bench_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (log_level.empty())
    if (const char* env = std::getenv("MICROMOTION_LOG")) log_level = env;
  auto level = spdlog::level::warn;
  if (!log_level.empty()) {
    const auto parsed = parse_level(log_level);
    if (!parsed) {
      err << "MICROMOTION_LOG: unknown level '" << log_level << "'\n";
      return kUsage;
    }
    level = *parsed;
  }
  LoggerScope logger(err, level);

  try {
    json summary;
    if (*synth_cmd)
      summary = cmd_synth(synth);
    else if (*decompose_cmd)
      summary = cmd_decompose(decompose);
    else if (*direction_cmd)
      summary = cmd_direction(direction);
    else if (*apply_cmd)
      summary = cmd_apply(apply);
    else if (*compare_cmd)
      summary = cmd_compare(compare);
    else if (*bench_cmd)
      summary = cmd_bench(bench, out);

    int code = kOk;
    if (summary.contains("exit")) {
      code = summary["exit"].get<int>();
      summary["status"] = code == kNonConvergence ? "non-convergence" : "degenerate";
    } else {
      summary["status"] = "ok";
    }
    out << summary.dump() << "\n";
    return code;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    const ExitCode code = exit_code_for(e.code());
    out << json{{"status", "error"}, {"error", std::string(to_string(e.code()))}, {"exit", static_cast<int>(code)},
                {"message", e.what()}}
               .dump()
        << "\n";
    return code;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    out << json{{"status", "error"}, {"error", "internal"}, {"exit", static_cast<int>(kIo)}, {"message", e.what()}}
               .dump()
        << "\n";
    return kIo;
  }
}

}  // namespace micromotion::cli
