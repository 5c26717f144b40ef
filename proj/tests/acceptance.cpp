// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
//
//   layerpano_acceptance [--work DIR] [criterion ...]
//
// With no criterion names every criterion runs. Builds are written under DIR
// (default: <tmp>/layerpano_acceptance).
#include "layerpano/erp.hpp"
#include "layerpano/image_io.hpp"
#include "layerpano/layering.hpp"
#include "layerpano/loss.hpp"
#include "layerpano/metrics.hpp"
#include "layerpano/pipeline.hpp"
#include "layerpano/pointcloud.hpp"
#include "layerpano/render.hpp"
#include "layerpano/scene_io.hpp"
#include "layerpano/selector.hpp"
#include "layerpano/synth.hpp"
#include "layerpano/trajectory.hpp"

#include "cloud_cases.hpp"
#include "oracles.hpp"
#include "selector_cases.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace layerpano;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances and sizes.
constexpr int kGeometrySamples = 100000;
constexpr double kPixelRoundTripTol = 1e-9;
constexpr double kCartesianRoundTripTol = 1e-6;
constexpr double kPoleRoundingTol = 1e-15;  // cos(pi/2) is 6.1e-17 in double precision
constexpr int kPercentileMasks = 1000;
constexpr int kKMeansSeeds = 200;
constexpr int kKMeansMaxAssets = 10;
constexpr int kKMeansMaxLayers = 4;
constexpr double kKMeansSseTol = 1e-9;
constexpr int kFilterClouds = 100;
constexpr int kFilterMaxPoints = 2000;
constexpr int kSelectorSeeds = 20;
constexpr int kSelectorMaxSize = 5000;
constexpr int kGradientScenes = 20;
constexpr int kGradientMaxGaussians = 10;
constexpr int kGradientImageSize = 16;
constexpr double kGradientLambda = 0.2;
constexpr double kGradientRelTol = 1e-3;
constexpr double kGradientStep = 1e-6;
constexpr double kGradientFloor = 1e-6;
constexpr int kDeskWidth = 512, kDeskHeight = 256;
constexpr std::uint64_t kDeskSeed = 1;
constexpr double kDeskMinPsnr = 25.0;
constexpr double kHoleMax = 0.01;
constexpr double kHemisphereRadiusFraction = 0.1;
constexpr int kBlockWidth = 256, kBlockHeight = 128;
constexpr std::uint64_t kBlockSeed = 7;
constexpr double kBlockPatchDepth = 5.0;
constexpr double kBlockOccluderDepth = 3.0;
constexpr double kAblationMinDrop = 1.0;

// Runtime limits in seconds.
constexpr double kGeometrySeconds = 1.0;
constexpr double kDecompositionSeconds = 10.0;
constexpr double kFilterSeconds = 30.0;
constexpr double kSelectorSeconds = 60.0;
constexpr double kGradientSeconds = 120.0;
constexpr double kDeskSeconds = 1200.0;
constexpr double kOcclusionSeconds = 600.0;
constexpr double kAblationSeconds = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

/// Records every frozen gaussian after each stage and checks that the next
/// stage leaves it byte-identical unless the selector reopened it.
struct FrozenWatch {
  std::map<std::uint64_t, std::vector<std::uint8_t>> frozen;
  std::int64_t checked = 0, violations = 0, reopened = 0;

  void operator()(int, const GaussianScene& scene, const StageReport& report) {
    const std::set<std::uint64_t> opened(report.activated_uids.begin(), report.activated_uids.end());
    reopened += static_cast<std::int64_t>(opened.size());
    std::map<std::uint64_t, Eigen::Index> index;
    for (Eigen::Index i = 0; i < scene.size(); ++i) index[scene.uid(i)] = i;
    for (const auto& [uid, record] : frozen) {
      if (opened.count(uid)) continue;
      ++checked;
      const auto it = index.find(uid);
      if (it == index.end() || encode_record(scene, it->second) != record) ++violations;
    }
    frozen.clear();
    for (Eigen::Index i = 0; i < scene.size(); ++i) {
      if (scene.frozen(i)) frozen[scene.uid(i)] = encode_record(scene, i);
    }
  }
};

struct Build {
  PipelineConfig config;
  BuildResult result;
  double seconds = 0.0;
};

class Suite {
 public:
  explicit Suite(fs::path work) : work_(std::move(work)) {}

  Outcome geometry() {
    std::mt19937_64 rng(101);
    double pixel_err = 0.0, cart_err = 0.0;
    for (int k = 0; k < kGeometrySamples; ++k) {
      const int h = 1 + static_cast<int>(rng() % 4096), w = 2 * h;
      const double u = oracle::uniform(rng, 0.0, w), v = oracle::uniform(rng, 0.0, h);
      const auto a = pixel_to_angles(u, v, w, h);
      const Eigen::Vector2d p = angles_to_pixel(a.theta, a.phi, w, h);
      pixel_err = std::max({pixel_err, std::abs(p.x() - u), std::abs(p.y() - v)});

      const double d = std::pow(10.0, oracle::uniform(rng, -3.0, 6.0));
      const SphericalCoord s{oracle::uniform(rng, -kPi, kPi), oracle::uniform(rng, -kPi / 2, kPi / 2), d};
      const Eigen::Vector3d x = spherical_to_cartesian(s);
      const Eigen::Vector3d y = spherical_to_cartesian(cartesian_to_spherical(x));
      cart_err = std::max(cart_err, (y - x).norm() / x.norm());
    }

    bool exact = true;
    const int w = 1024, h = 512;
    auto c = pixel_to_angles(512.0, 256.0, w, h);
    exact &= c.theta == 0.0 && c.phi == 0.0;
    c = pixel_to_angles(0.0, 0.0, w, h);
    exact &= c.theta == -kPi && c.phi == -kPi / 2;
    c = pixel_to_angles(256.0, 256.0, w, h);
    exact &= c.theta == -kPi / 2 && c.phi == 0.0;
    Eigen::Vector2d px = angles_to_pixel(0.0, 0.0, w, h);
    exact &= px == Eigen::Vector2d(512.0, 256.0);
    px = angles_to_pixel(-kPi, -kPi / 2, w, h);
    exact &= px == Eigen::Vector2d(0.0, 0.0);
    px = angles_to_pixel(kPi / 2, kPi / 4, w, h);
    exact &= px == Eigen::Vector2d(768.0, 384.0);
    exact &= spherical_to_cartesian(SphericalCoord{0.0, 0.0, 2.5}) == Eigen::Vector3d(2.5, 0.0, 0.0);
    exact &= spherical_to_cartesian(SphericalCoord{kPi, 0.0, 1.0}) .y() == 0.0;
    for (const double pole : {kPi / 2, -kPi / 2}) {
      for (const double theta : {0.0, 1.0, -2.5}) {
        const Eigen::Vector3d p = spherical_to_cartesian(SphericalCoord{theta, pole, 3.0});
        exact &= p.y() == std::copysign(3.0, pole);
        exact &= std::abs(p.x()) <= kPoleRoundingTol * 3.0 && std::abs(p.z()) <= kPoleRoundingTol * 3.0;
      }
      const auto s = cartesian_to_spherical(Eigen::Vector3d(0.0, std::copysign(4.0, pole), 0.0));
      exact &= s.theta == 0.0 && s.phi == pole && s.depth == 4.0;
    }
    const Eigen::Vector3d eq = spherical_to_cartesian(SphericalCoord{kPi / 2, 0.0, 2.0});
    exact &= eq.y() == 0.0 && eq.z() == 2.0 && std::abs(eq.x()) <= kPoleRoundingTol * 2.0;
    const auto s = cartesian_to_spherical(Eigen::Vector3d(0.0, 0.0, 7.0));
    exact &= s.theta == kPi / 2 && s.phi == 0.0 && s.depth == 7.0;

    return {pixel_err <= kPixelRoundTripTol && cart_err <= kCartesianRoundTripTol && exact,
            fmt("pixel round trip max err %.2e, cartesian %.2e, analytic cases %s", pixel_err, cart_err,
                exact ? "exact" : "MISMATCH")};
  }

  Outcome decomposition() {
    std::mt19937_64 rng(202);
    int percentile_mismatch = 0;
    for (int k = 0; k < kPercentileMasks; ++k) {
      const int h = 1 + static_cast<int>(rng() % 64), w = 2 * h;
      DepthMap depth(h, w);
      Mask mask(h, w);
      const double density = oracle::uniform(rng, 0.01, 1.0);
      const bool ties = k % 2 == 0;
      for (Eigen::Index i = 0; i < depth.size(); ++i) {
        const double d = oracle::uniform(rng, 0.5, 20.0);
        depth.data()[i] = ties ? std::round(d) : d;
        mask.data()[i] = oracle::uniform(rng, 0, 1) < density;
      }
      mask(rng() % h, rng() % w) = true;
      std::vector<double> masked;
      for (Eigen::Index i = 0; i < depth.size(); ++i) {
        if (mask.data()[i]) masked.push_back(depth.data()[i]);
      }
      if (asset_depth_statistic(mask, depth) != oracle::sorted_percentile(masked, 0.75)) ++percentile_mismatch;
    }
    int kmeans_mismatch = 0;
    double worst = 0.0;
    for (int seed = 0; seed < kKMeansSeeds; ++seed) {
      std::mt19937_64 r(static_cast<std::uint64_t>(seed));
      std::vector<double> v(1 + r() % kKMeansMaxAssets);
      for (double& x : v) x = oracle::uniform(r, 0.5, 12.0);
      const int k = 1 + static_cast<int>(r() % kKMeansMaxLayers);
      const auto result = kmeans_cluster_assets(v, k);
      const double best = oracle::exhaustive_kmeans_sse(v, k);
      const double got = oracle::labelling_sse(v, result.labels, result.cluster_count);
      const double err = std::abs(got - best) / (1.0 + best);
      worst = std::max(worst, err);
      if (err > kKMeansSseTol) ++kmeans_mismatch;
    }
    return {percentile_mismatch == 0 && kmeans_mismatch == 0,
            fmt("percentile mismatches %d/%d, k-means mismatches %d/%d (worst rel SSE gap %.1e)",
                percentile_mismatch, kPercentileMasks, kmeans_mismatch, kKMeansSeeds, worst)};
  }

  Outcome filter() {
    std::mt19937_64 rng(303);
    std::int64_t sym_diff = 0, kept = 0, total = 0;
    for (int k = 0; k < kFilterClouds; ++k) {
      const int n = k == 0 ? kFilterMaxPoints : 1 + static_cast<int>(rng() % kFilterMaxPoints);
      const Eigen::Matrix3Xd p = oracle::clustered_cloud(rng, n);
      const OutlierParams params{oracle::uniform(rng, 0.005, 0.08), 1 + static_cast<int>(rng() % 6),
                                 oracle::uniform(rng, 0.02, 0.3)};
      const PointCloud out = remove_stretched_outliers(oracle::cloud_from(p), params);
      const auto ref = oracle::brute_force_outliers(p, params.beta1, params.beta2, params.radius);
      std::set<Eigen::Index> a(ref.begin(), ref.end()), b;
      for (Eigen::Index i = 0; i < out.size(); ++i) b.insert(out.source_pixels(0, i));
      std::vector<Eigen::Index> diff;
      std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
      sym_diff += static_cast<std::int64_t>(diff.size());
      kept += out.size();
      total += n;
    }
    return {sym_diff == 0, fmt("symmetric difference %lld over %d clouds (%lld of %lld points kept)",
                               static_cast<long long>(sym_diff), kFilterClouds, static_cast<long long>(kept),
                               static_cast<long long>(total))};
  }

  Outcome selector() {
    std::int64_t sym_diff = 0, activated = 0;
    for (int seed = 0; seed < kSelectorSeeds; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(4000 + seed));
      const bool full = seed < 2;
      const int n = full ? kSelectorMaxSize : 1 + static_cast<int>(rng() % kSelectorMaxSize);
      const int m = full ? kSelectorMaxSize : 1 + static_cast<int>(rng() % kSelectorMaxSize);
      const double tol = seed % 5 == 0 ? kDefaultSelectorToleranceDeg : oracle::uniform(rng, 0.0, 3.0);
      const auto c = oracle::random_selector_case(rng, n, m, tol);
      const auto fast = gaussian_selector(c.scene, c.points, {}, tol);
      const auto ref = oracle::brute_force_selector(c.scene, c.points.positions, tol);
      std::vector<Eigen::Index> diff;
      std::set_symmetric_difference(fast.begin(), fast.end(), ref.begin(), ref.end(), std::back_inserter(diff));
      sym_diff += static_cast<std::int64_t>(diff.size());
      activated += static_cast<std::int64_t>(ref.size());
    }
    auto one = [](const Eigen::Vector3d& g, const Eigen::Vector3d& p) {
      GaussianScene scene;
      Gaussian gauss;
      gauss.mean = g;
      gauss.frozen = true;
      scene.append({gauss});
      PointCloud pc;
      pc.resize(1);
      pc.positions.col(0) = p;
      pc.colors.col(0).setZero();
      pc.layer_ids[0] = 1;
      pc.source_pixels.col(0).setConstant(-1);
      return gaussian_selector(scene, pc).size();
    };
    const bool analytic = one({1, 0, 0}, {2, 0, 0}) == 1 && one({3, 0, 0}, {2, 0, 0}) == 0 &&
                          one({0, 1, 0}, {2, 0, 0}) == 0;
    return {sym_diff == 0 && analytic,
            fmt("symmetric difference %lld over %d seeds (%lld activations), analytic cases %s",
                static_cast<long long>(sym_diff), kSelectorSeeds, static_cast<long long>(activated),
                analytic ? "exact" : "MISMATCH")};
  }

  Outcome gradient() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int k = 0; k < kGradientScenes; ++k) {
      GaussianScene scene = oracle::random_front_scene(rng, 1 + static_cast<int>(rng() % kGradientMaxGaussians));
      PinholeCamera cam;
      cam.width = cam.height = kGradientImageSize;
      cam.fov_deg = 70.0;
      const Image target = oracle::random_image(rng, kGradientImageSize, kGradientImageSize);
      const RenderSettings settings = RenderSettings::exact();
      auto loss = [&](const GaussianScene& s) {
        return compute_loss(render_pinhole(s, cam, settings).color, target, nullptr, kGradientLambda).value;
      };
      const SplatRasterizer raster(scene, cam, settings);
      const LossResult l = compute_loss(raster.output().color, target, nullptr, kGradientLambda);
      ParamMatrix grad = ParamMatrix::Zero(param::kRows, scene.size());
      raster.backward(l.gradient, grad);
      worst = std::max(worst, oracle::check_gradient(scene, grad, loss, kGradientStep, kGradientFloor).max_rel_err);
    }
    return {worst <= kGradientRelTol, fmt("max relative error %.2e over %d scenes", worst, kGradientScenes)};
  }

  Outcome desk() {
    const Build& b = layered_build();
    const int n = b.result.stack.layer_count;
    const Image& reference = b.result.stack.panoramas[static_cast<std::size_t>(n)];
    const RenderOutput out = render_equirect(b.result.scene, reference.width(), reference.height());
    const double p = psnr(out.color, reference);
    return {p >= kDeskMinPsnr && b.seconds <= kDeskSeconds,
            fmt("PSNR %.2f dB vs layer-%d supervision, %lld gaussians, build %.0f s", p, n,
                static_cast<long long>(b.result.scene.size()), b.seconds)};
  }

  Outcome occlusion() {
    const Build& multi = layered_build();
    const auto start = Clock::now();
    Build single;
    single.config = desk_config("single");
    single.config.layers = 0;
    run(single);
    TrajectoryParams tp;
    tp.radius = kHemisphereRadiusFraction * median_scene_depth(multi.result.scene);
    const Trajectory t = generate_trajectory(TrajectoryKind::hemisphere, tp);
    int not_better = 0, over = 0;
    double worst_b = 0.0, mean_a = 0.0, mean_b = 0.0;
    for (const auto& cam : t.poses) {
      const double a = hole_fraction(render_pinhole(single.result.scene, cam).alpha);
      const double b = hole_fraction(render_pinhole(multi.result.scene, cam).alpha);
      not_better += b < a ? 0 : 1;
      over += b <= kHoleMax ? 0 : 1;
      worst_b = std::max(worst_b, b);
      mean_a += a / static_cast<double>(t.poses.size());
      mean_b += b / static_cast<double>(t.poses.size());
    }
    const double seconds = multi.seconds + seconds_since(start);
    return {not_better == 0 && over == 0 && seconds <= kOcclusionSeconds,
            fmt("%zu views: hole(b) >= hole(a) on %d, hole(b) > %.0f%% on %d; mean hole a %.4f b %.4f, worst b %.4f; "
                "both builds and renders %.0f s",
                t.poses.size(), not_better, 100 * kHoleMax, over, mean_a, mean_b, worst_b, seconds)};
  }

  Outcome ablation() {
    const auto start = Clock::now();
    const fs::path fx = work_ / "blocking_fx";
    SynthSpec spec;
    spec.seed = kBlockSeed;
    spec.asset_count = 1;
    spec.width = kBlockWidth;
    spec.height = kBlockHeight;
    spec.patch_depth = kBlockPatchDepth;
    const SynthScene scene = synth_scene(spec);
    save_synth_scene(fx, spec, scene);

    // Layer 0 completion: a differently coloured surface in front of the patch.
    const Mask patch = scene.labels == static_cast<std::uint16_t>(scene.assets[0].label);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) mean[k] = patch.select(scene.rgb.channel[k], 0.0).sum() / patch.count();
    const Eigen::Vector3d occluder = (Eigen::Vector3d::Ones() - mean).cwiseMax(0.05).cwiseMin(0.95);
    Image completion = scene.rgb;
    for (int k = 0; k < 3; ++k) completion.channel[k] = patch.select(occluder[k], completion.channel[k]);
    DepthMap depth = patch.select(kBlockOccluderDepth, scene.depth);
    save_png(fx / "completion_0.png", completion);
    save_depth_pfm(fx / "completion_depth_0.pfm", depth);

    double masked[2] = {0.0, 0.0};
    std::int64_t reopened[2] = {0, 0};
    for (int on = 0; on < 2; ++on) {
      Build b;
      b.config = load_pipeline_config(fx / "config.json");
      b.config.layers = 1;
      b.config.completions[0] = fx / "completion_0.png";
      b.config.completion_depths[0] = fx / "completion_depth_0.pfm";
      b.config.training.use_selector = on == 1;
      b.config.out = work_ / (on ? "blocking_selector" : "blocking_no_selector");
      run(b);
      const Image& supervision = b.result.stack.panoramas[1];
      const RenderOutput out = render_equirect(b.result.scene, supervision.width(), supervision.height());
      masked[on] = psnr(out.color, supervision, &b.result.stack.masks[0]);
      for (const auto& layer : b.result.layers) reopened[on] += layer.stage.activated;
    }
    const double drop = masked[1] - masked[0];
    const double seconds = seconds_since(start);
    return {drop >= kAblationMinDrop && seconds <= kAblationSeconds,
            fmt("masked PSNR selector on %.2f dB, off %.2f dB, drop %.2f dB (%lld gaussians reopened), %.0f s",
                masked[1], masked[0], drop, static_cast<long long>(reopened[1]), seconds)};
  }

  Outcome determinism() {
    const Build& first = layered_build();
    Build second;
    second.config = desk_config("layered_rerun");
    run(second);
    const auto a = read_bytes(first.config.out / "scene.lpsl");
    const auto b = read_bytes(second.config.out / "scene.lpsl");
    const bool same = !a.empty() && a == b;
    return {same, fmt("scene.lpsl %s (%zu and %zu bytes, sha256 %.12s / %.12s)", same ? "identical" : "DIFFERS",
                      a.size(), b.size(), sha256_hex(a).c_str(), sha256_hex(b).c_str())};
  }

  Outcome immutability() {
    if (!ran_layered_) layered_build();
    return {watch_.violations == 0 && watch_.checked > 0,
            fmt("%lld frozen records checked across %d builds, %lld changed, %lld reopened by the selector",
                static_cast<long long>(watch_.checked), builds_, static_cast<long long>(watch_.violations),
                static_cast<long long>(watch_.reopened))};
  }

 private:
  PipelineConfig desk_config(const std::string& name) {
    const fs::path fx = work_ / "desk_fx";
    if (!fs::exists(fx / "config.json")) {
      SynthSpec spec;
      spec.seed = kDeskSeed;
      spec.asset_count = 2;
      spec.width = kDeskWidth;
      spec.height = kDeskHeight;
      save_synth_scene(fx, spec, synth_scene(spec));
    }
    PipelineConfig c = load_pipeline_config(fx / "config.json");
    c.out = work_ / name;
    return c;
  }

  const Build& layered_build() {
    if (!ran_layered_) {
      layered_.config = desk_config("layered");
      run(layered_);
      ran_layered_ = true;
    }
    return layered_;
  }

  void run(Build& b) {
    fs::remove_all(b.config.out);
    FrozenWatch watch;
    watch.frozen.clear();
    const auto start = Clock::now();
    b.result = run_build(b.config, std::ref(watch));
    b.seconds = seconds_since(start);
    watch_.checked += watch.checked;
    watch_.violations += watch.violations;
    watch_.reopened += watch.reopened;
    ++builds_;
    std::cerr << "  build " << b.config.out.filename().string() << ": " << b.result.scene.size() << " gaussians, "
              << fmt("%.0f s", b.seconds) << "\n";
  }

  static std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path work_;
  Build layered_;
  bool ran_layered_ = false;
  FrozenWatch watch_;
  int builds_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "layerpano_acceptance";
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      only.insert(arg);
    }
  }
  fs::create_directories(work);
  Suite suite(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"geometry", [&] { return suite.geometry(); }},
      {"decomposition", [&] { return suite.decomposition(); }},
      {"filter", [&] { return suite.filter(); }},
      {"selector", [&] { return suite.selector(); }},
      {"gradient", [&] { return suite.gradient(); }},
      {"desk", [&] { return suite.desk(); }},
      {"occlusion", [&] { return suite.occlusion(); }},
      {"ablation", [&] { return suite.ablation(); }},
      {"determinism", [&] { return suite.determinism(); }},
      {"immutability", [&] { return suite.immutability(); }},
  };
  const std::map<std::string, double> limits = {{"geometry", kGeometrySeconds}, {"decomposition", kDecompositionSeconds},
                                                {"filter", kFilterSeconds},     {"selector", kSelectorSeconds},
                                                {"gradient", kGradientSeconds}};

  int failed = 0, ran = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    ++ran;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = seconds_since(start);
    const auto limit = limits.find(name);
    if (limit != limits.end() && seconds > limit->second) {
      o.pass = false;
      o.detail += fmt(" [runtime %.2f s over the %.0f s limit]", seconds, limit->second);
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << fmt(" (%.2f s)", seconds) << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched\n";
    return 2;
  }
  std::cout << (failed == 0 ? "ALL PASS" : fmt("%d FAILED", failed)) << std::endl;
  return failed == 0 ? 0 : 1;
}
