// Acceptance run: one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>

#include "micromotion/cli.hpp"
#include "micromotion/decomp.hpp"
#include "micromotion/interchange.hpp"
#include "micromotion/oracle.hpp"
#include "micromotion/subspace.hpp"
#include "micromotion/trajectory.hpp"
#include "oracles.hpp"

using namespace micromotion;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("%s %s:%s (%.1f s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.str().c_str(), secs);
  std::fflush(stdout);
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

void pcp_recovery(Verdict& v) {
  PcpParams params;
  params.max_iter = 500;
  double worst_err = 0.0, worst_time = 0.0;
  int worst_iter = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LowRankSparse data = gen_lowrank_sparse(400, 200, 4, 0.05, 10.0, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const PcpResult r = pcp(data.d, params);
    const double secs = elapsed(t0);
    const double err = (r.low_rank - data.low_rank).norm() / data.low_rank.norm();
    worst_err = std::max(worst_err, err);
    worst_time = std::max(worst_time, secs);
    worst_iter = std::max(worst_iter, r.iterations);
    v.require(err <= 1e-3, "seed " + std::to_string(seed) + " error");
    v.require(secs <= 10.0, "seed " + std::to_string(seed) + " time");
    v.require(r.iterations <= 500, "seed " + std::to_string(seed) + " iterations");
  }
  v.detail << " worst rel error " << worst_err << ", worst time " << worst_time << " s, max iterations "
           << worst_iter;
}

void proximal_oracles(Verdict& v) {
  bool shrink_exact = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracles::gaussian(8, 6, 10 + seed);
    for (double tau : {0.05, 0.3, 1.0, 5.0}) shrink_exact &= shrink(x, tau) == oracles::shrink_loop(x, tau);
  }
  v.require(shrink_exact, "shrink differs from scalar loop");

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 5.0, 1.0, 0.2;
  Matrix expected = Matrix::Zero(3, 3);
  expected.diagonal() << 4.5, 0.5, 0.0;
  const double diag_err = (svt(d, 0.5) - expected).cwiseAbs().maxCoeff();
  v.require(diag_err <= 1e-14, "diagonal svt");

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracles::gaussian(8, 6, 200 + seed);
    worst = std::max(worst, (svt(x, 0.7) - oracles::svt_factored(x, 0.7)).cwiseAbs().maxCoeff());
  }
  v.require(worst <= 1e-4, "svt vs proximal oracle");
  v.detail << " shrink exact=" << (shrink_exact ? "yes" : "no") << ", diagonal svt max dev " << diag_err
           << ", svt vs factored oracle max dev " << worst << " over 10 8x6 matrices";
}

void pca_oracle(Verdict& v) {
  double worst_angle = 0.0, worst_spec = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix d = oracles::gaussian(10, 6, 3000 + seed);
    for (int k = 1; k <= 6; ++k) {
      const PcaResult mine = pca(d, k);
      const oracles::CovPca ref = oracles::pca_covariance(d, k);
      worst_angle = std::max(worst_angle, oracles::largest_angle(mine.basis, ref.basis));
      worst_spec = std::max(worst_spec, (mine.spectrum.head(6) - ref.spectrum.head(6)).cwiseAbs().maxCoeff());
    }
  }
  v.require(worst_angle <= 1e-8, "basis angle");
  v.require(worst_spec <= 1e-8, "spectrum");
  v.detail << " worst principal angle " << worst_angle << ", worst spectrum dev " << worst_spec
           << " (20 matrices, k=1..6)";
}

void lowrank_harness(Verdict& v) {
  OracleSpec spec;
  spec.seed = 2024;
  const OracleTensor shared = gen_micromotion_tensor(spec);
  double min_explained = 1.0, min_cos = 1.0;
  for (int p = 0; p < spec.p; ++p) {
    const auto& m = shared.tensor.identities[static_cast<std::size_t>(p)];
    const DecompositionResult dec = decompose_anchors(m, kDefaultRank, PcpParams{}, true);
    v.require(dec.converged, "identity " + std::to_string(p) + " converged");
    const EditDirection dir = extract_direction(m, dec);
    min_explained = std::min(min_explained, dec.explained);
    min_cos = std::min(min_cos, dir.direction().dot(shared.directions.row(p).transpose()));
  }
  const SimilarityReport report = compare_identities(shared.tensor, kDefaultRank, PcpParams{});
  v.require(report.missing.empty(), "no missing identities");
  v.require(min_explained >= 0.99, "explained variance");
  v.require(min_cos >= 0.99, "direction cos");
  v.require(report.min_offdiag_cosine() >= 0.98, "cross-identity cos");

  spec.shared_direction = false;
  const OracleTensor independent = gen_micromotion_tensor(spec);
  const SimilarityReport null_report = compare_identities(independent.tensor, kDefaultRank, PcpParams{});
  v.require(null_report.mean_offdiag_cosine() <= 0.05, "independent null");
  v.detail << " min explained " << min_explained << ", min cos to truth " << min_cos << ", min off-diagonal |cos| "
           << report.min_offdiag_cosine() << ", independent mean |cos| " << null_report.mean_offdiag_cosine();
}

void ablation(Verdict& v) {
  double min_margin_pca = 1.0, min_margin_base = 1.0, min_robust = 1.0, max_pca = 0.0, max_base = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    OracleSpec spec;
    spec.p = 1;
    spec.seed = seed;
    spec.corrupted_anchors = 3;
    spec.corruption_rate = 0.1;
    spec.corruption_magnitude = 50.0;
    spec.corruption_positive = true;
    const OracleTensor t = gen_micromotion_tensor(spec);
    const auto& m = t.tensor.identities[0];
    const Vector truth = t.directions.row(0).transpose();

    const double robust =
        std::abs(extract_direction(m, decompose_anchors(m, kDefaultRank, PcpParams{}, true)).direction().dot(truth));
    const double plain =
        std::abs(extract_direction(m, decompose_anchors(m, kDefaultRank, PcpParams{}, false)).direction().dot(truth));
    // Pair the first corrupted anchor with the clean anchor farthest from it in
    // strength, the most favourable partner for the baseline.
    const int bad = t.corrupted_rows[0].front();
    int partner = -1;
    double gap = -1.0;
    for (int i = 0; i < m.anchors(); ++i) {
      const auto& rows = t.corrupted_rows[0];
      if (std::find(rows.begin(), rows.end(), i) != rows.end()) continue;
      const double g = std::abs(m.strengths[static_cast<std::size_t>(i)].value - m.strengths[static_cast<std::size_t>(bad)].value);
      if (g > gap) gap = g, partner = i;
    }
    const double base = std::abs(baseline_two_anchor_direction(m, partner, bad).direction().dot(truth));
    v.require(robust > plain, "seed " + std::to_string(seed) + " robust > no-robust");
    v.require(robust > base, "seed " + std::to_string(seed) + " robust > baseline");
    min_margin_pca = std::min(min_margin_pca, robust - plain);
    min_margin_base = std::min(min_margin_base, robust - base);
    min_robust = std::min(min_robust, robust);
    max_pca = std::max(max_pca, plain);
    max_base = std::max(max_base, base);
  }
  v.detail << " min robust cos " << min_robust << ", max no-robust cos " << max_pca << ", max baseline cos "
           << max_base << ", min margins " << min_margin_pca << " / " << min_margin_base << " over 10 seeds";
}

void trajectory_exactness(Verdict& v) {
  const fs::path dir = fs::temp_directory_path() / "mm_accept_traj";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Vector u = oracles::gaussian(kDefaultLatentDim, 1, 5).col(0);
  u /= u.norm();
  const EditDirection direction(u, {-1.0, 1.0}, "smile", "id0");
  const LatentCode v0(oracles::gaussian(kDefaultLatentDim, 1, 6).col(0) * 3.0);

  TrajectorySpec spec;
  spec.alpha = 0.7;
  spec.frames = 12;
  const auto frames = synthesize(v0, direction, spec);
  v.require(std::memcmp(frames[0].values().data(), v0.values().data(),
                        sizeof(double) * static_cast<std::size_t>(v0.dim())) == 0,
            "t=0 bitwise");

  double worst = 0.0;
  for (const char* name : {"traj.npy", "traj.csv"}) {
    write_array(dir / name, to_matrix(frames));
    const Matrix back = read_array(dir / name);
    for (Eigen::Index t = 1; t < back.rows(); ++t)
      worst = std::max(worst, (back.row(t) - back.row(t - 1) - spec.alpha * u.transpose()).cwiseAbs().maxCoeff());
  }
  v.require(worst <= 1e-6, "constant differences after round trip");

  spec.alpha = 0.0;
  bool still = true;
  for (const auto& f : synthesize(v0, direction, spec)) still &= f.values() == v0.values();
  v.require(still, "alpha 0 frames identical");

  const TrajectorySpec defaults;
  v.require(kDefaultRank == 4 && defaults.alpha == 1.0 && kAlphaGuidanceMin == 0.1 && kAlphaGuidanceMax == 10.0,
            "defaults");

  write_direction(dir / "d.npy", direction);
  write_array(dir / "v0.npy", Matrix(v0.values().transpose()), ArrayFormat::npy, true);
  bool flags_ok = true;
  for (const char* a : {"0.1", "10"})
    flags_ok &= cli_run({"apply", "--v0", (dir / "v0.npy").string(), "--direction", (dir / "d.npy").string(),
                         "--alpha", a, "--frames", "3", "--out", (dir / "o.npy").string()})
                    .code == 0;
  flags_ok &= cli_run({"apply", "--v0", (dir / "v0.npy").string(), "--direction", (dir / "d.npy").string(),
                       "--alpha-sweep", "0.1,1,10", "--out", (dir / "s.npy").string()})
                  .code == 0;
  const std::string help = cli_run({"apply", "--help"}).out;
  v.require(flags_ok, "alpha guidance accepted by flags");
  v.require(help.find("[0.1, 10]") != std::string::npos, "alpha guidance documented");
  fs::remove_all(dir);
  v.detail << " max frame-difference deviation after NPY/CSV round trip " << worst;
}

void interchange(Verdict& v) {
  const fs::path dir = fs::temp_directory_path() / "mm_accept_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  int bitwise = 0;
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto rows = static_cast<int>(1 + rng.below(20));
    const auto cols = static_cast<int>(1 + rng.below(300));
    Matrix m = rng.gaussian_matrix(rows, cols) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    write_array(dir / "r.npy", m);
    const Matrix back = read_array(dir / "r.npy");
    if (back.rows() == m.rows() && back.cols() == m.cols() &&
        std::memcmp(back.data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())) == 0)
      ++bitwise;
  }
  v.require(bitwise == 100, "bitwise round trip");

  auto code_of = [](const std::string& bytes) {
    try {
      decode_npy(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::invalid_argument;
  };
  std::string good = encode_npy(Matrix::Ones(2, 2));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::string bad_dtype = good;
  bad_dtype.replace(bad_dtype.find("<f8"), 3, "<i8");
  std::string bad_rank = good;
  bad_rank.replace(bad_rank.find("(2, 2)"), 6, "(1,2,2)");
  v.require(code_of(bad_magic) == ErrorCode::bad_magic, "bad-magic");
  v.require(code_of(bad_dtype) == ErrorCode::unsupported_dtype, "unsupported-dtype");
  v.require(code_of(bad_rank) == ErrorCode::unsupported_rank, "unsupported-rank");

  // 16 fraction anchors in one row-indexed file; 7 degree anchors in separate files.
  write_array(dir / "smile.npy", oracles::gaussian(16, kDefaultLatentDim, 1));
  AnchorManifest smile{1, "smile", "id0", kDefaultLatentDim, {}};
  for (int i = 0; i < kTextAnchorCount; ++i)
    smile.anchors.push_back({"smile.npy", i, (i + 1) / 16.0, StrengthKind::fraction});
  write_manifest(dir / "smile.json", smile);
  AnchorManifest pose{1, "head_pose", "clip0", kDefaultLatentDim, {}};
  for (int i = 0; i < kVideoAnchorCount; ++i) {
    const std::string f = "pose_" + std::to_string(i) + ".npy";
    write_array(dir / f, oracles::gaussian(1, kDefaultLatentDim, 50 + i), ArrayFormat::npy, true);
    pose.anchors.push_back({f, std::nullopt, -45.0 + 15.0 * i, StrengthKind::degrees});
  }
  write_manifest(dir / "pose.json", pose);
  const auto s = load_manifest_checked(dir / "smile.json");
  const auto p = load_manifest_checked(dir / "pose.json");
  v.require(s.matrix.anchors() == 16 && s.warnings.empty(), "16-anchor manifest");
  v.require(p.matrix.anchors() == 7 && p.matrix.strengths.front().value == -45.0 && p.warnings.empty(),
            "7-anchor manifest");
  fs::remove_all(dir);
  v.detail << " " << bitwise << "/100 bitwise round trips; magic/dtype/rank fixtures raise named errors; "
           << "16- and 7-anchor manifests load";
}

void cli_end_to_end(Verdict& v) {
  const fs::path dir = fs::temp_directory_path() / "mm_accept_cli";
  auto pipeline = [&](std::string& transcript) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    std::vector<std::vector<std::string>> steps = {
        {"synth", "--p", "5", "--m", "16", "--dim", "512", "--shared", "--seed", "7", "--out", d}};
    for (int i = 0; i < 5; ++i) {
      const std::string m = d + "/identity_" + std::to_string(i) + ".json";
      steps.push_back({"decompose", m});
      steps.push_back({"direction", m});
    }
    std::vector<std::string> compare = {"compare"};
    for (int i = 0; i < 5; ++i) compare.push_back(d + "/identity_" + std::to_string(i) + ".direction.npy");
    steps.push_back(compare);
    steps.push_back({"apply", "--v0", d + "/identity_1.npy", "--v0-row", "0", "--direction",
                     d + "/identity_0.direction.npy", "--alpha", "1", "--frames", "10", "--out", d + "/trajectory.npy"});
    bool all_ok = true;
    double min_cos = 0.0;
    for (const auto& step : steps) {
      const CliRun r = cli_run(step);
      all_ok &= r.code == 0;
      all_ok &= std::count(r.out.begin(), r.out.end(), '\n') == 1;
      transcript += r.out;
      if (step.front() == "compare" && r.code == 0) min_cos = json::parse(r.out)["min_offdiag_cosine"].get<double>();
    }
    return std::make_pair(all_ok, min_cos);
  };
  std::string first_out, second_out;
  const auto [ok1, cos1] = pipeline(first_out);
  const auto files1 = snapshot(dir);
  const auto [ok2, cos2] = pipeline(second_out);
  const auto files2 = snapshot(dir);
  fs::remove_all(dir);
  v.require(ok1 && ok2, "every step exits 0 with one summary line");
  v.require(cos1 >= 0.98, "compare min |cos|");
  v.require(files1 == files2 && first_out == second_out, "byte-identical rerun");
  v.detail << " all steps exit 0: " << (ok1 && ok2 ? "yes" : "no") << ", compare min |cos| " << cos1 << ", "
           << files1.size() << " output files byte-identical on rerun: " << (files1 == files2 ? "yes" : "no");
}

}  // namespace

int main() {
  criterion("pcp-recovery", pcp_recovery);
  criterion("proximal-operator-oracles", proximal_oracles);
  criterion("pca-oracle-equivalence", pca_oracle);
  criterion("low-rank-hypothesis-harness", lowrank_harness);
  criterion("robust-vs-baseline-ablation", ablation);
  criterion("trajectory-exactness", trajectory_exactness);
  criterion("interchange", interchange);
  criterion("cli-end-to-end", cli_end_to_end);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
