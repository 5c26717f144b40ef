// SPDX-License-Identifier: Apache-2.0
#include "layerpano/synth.hpp"

#include "layerpano/erp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace layerpano {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng()); }

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  const double z = uniform(rng, -1.0, 1.0);
  const double a = uniform(rng, -kPi, kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(a), z, r * std::sin(a)};
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  int label = 0;
};

struct Patch {
  double theta, phi, half_theta, half_phi, depth;
  Eigen::Vector3d color;
};

struct Cage {
  double depth, period, max_phi;
  Eigen::Vector3d tint;
};

struct Ball {
  Eigen::Vector3d center;
  double radius;
  Eigen::Vector3d color;
};

struct Model {
  std::uint64_t seed;
  double background_depth;
  std::vector<std::pair<int, Patch>> patches;
  std::optional<std::pair<int, Cage>> cage;
  std::vector<std::pair<int, Ball>> balls;

  Hit trace(const Eigen::Vector3d& dir, double theta, double phi) const {
    Hit best;
    best.t = background_depth;
    best.color = synth_background_color(dir, seed);
    best.label = kWallLabel;
    for (const auto& [label, p] : patches) {
      const double dt = wrap_angle(theta - p.theta);
      const double dp = phi - p.phi;
      if (std::abs(dt) <= p.half_theta && std::abs(dp) <= p.half_phi && p.depth < best.t) {
        const double shade = 0.9 + 0.1 * std::cos(kPi * dt / p.half_theta) * std::cos(kPi * dp / p.half_phi);
        best = {p.depth, p.color * shade, label};
      }
    }
    if (cage) {
      const auto& [label, c] = *cage;
      const auto a = static_cast<long>(std::floor(theta / c.period));
      const auto b = static_cast<long>(std::floor(phi / c.period));
      if (std::abs(phi) <= c.max_phi && (a + b) % 2 == 0 && c.depth < best.t) {
        best = {c.depth, (0.75 * synth_background_color(dir, seed) + c.tint).cwiseMin(1.0), label};
      }
    }
    for (const auto& [label, ball] : balls) {
      const double b = dir.dot(ball.center);
      const double disc = b * b - (ball.center.squaredNorm() - ball.radius * ball.radius);
      if (disc < 0.0) continue;
      const double t = b - std::sqrt(disc);
      if (t > 0.0 && t < best.t) {
        const Eigen::Vector3d normal = (t * dir - ball.center) / ball.radius;
        const double light = std::max(0.0, normal.dot(Eigen::Vector3d(-0.3, -0.8, 0.5).normalized()));
        best = {t, ball.color * (0.6 + 0.4 * light), label};
      }
    }
    return best;
  }
};

}  // namespace

Eigen::Vector3d synth_background_color(const Eigen::Vector3d& dir, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eedbac6c0105ull);
  Eigen::Vector3d c;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d a = random_unit(rng);
    const Eigen::Vector3d b = random_unit(rng);
    const double pa = uniform(rng, -kPi, kPi);
    const double pb = uniform(rng, -kPi, kPi);
    c[k] = 0.55 + 0.15 * std::sin(2.5 * a.dot(dir) + pa) + 0.15 * std::sin(1.5 * b.dot(dir) + pb);
  }
  return c;
}

SynthScene synth_scene(const SynthSpec& spec) {
  require(spec.asset_count >= 0, "synth_scene: asset count must be non-negative");
  require(spec.width > 0 && spec.width == 2 * spec.height, "synth_scene: width must be twice the height");
  require(spec.background_depth > 0.0, "synth_scene: background depth must be positive");
  require(spec.supersample >= 1, "synth_scene: supersample must be at least 1");

  std::mt19937_64 rng(spec.seed);
  Model model{spec.seed, spec.background_depth, {}, std::nullopt, {}};
  SynthScene out;
  nlohmann::json labels = nlohmann::json::array();
  labels.push_back({{"id", kWallLabel}, {"category", "wall"}, {"background", true}});

  auto saturated = [&rng]() {
    Eigen::Vector3d c(uniform(rng, 0.1, 0.3), uniform(rng, 0.35, 0.6), uniform(rng, 0.75, 0.95));
    const auto shift = static_cast<int>(rng() % 3);
    return Eigen::Vector3d(c[shift], c[(shift + 1) % 3], c[(shift + 2) % 3]);
  };

  for (int i = 0; i < spec.asset_count; ++i) {
    const int label = i + 2;
    SynthAsset asset;
    asset.label = label;
    const bool is_cage = i == 1;
    const bool is_ball = i >= 2 && i % 2 == 0;
    if (is_cage) {
      const Cage c{spec.cage_depth, 45.0 * kDeg, 60.0 * kDeg, Eigen::Vector3d::Constant(0.08)};
      model.cage = std::make_pair(label, c);
      asset.kind = "cage";
      asset.depth = c.depth;
      asset.params = {{"period_deg", 45.0}, {"max_elevation_deg", 60.0}};
    } else if (is_ball) {
      Ball b;
      const double dist = uniform(rng, 3.5, 5.0);
      b.center = dist * direction_from_angles(uniform(rng, -kPi, kPi), uniform(rng, -30.0, 30.0) * kDeg);
      b.radius = uniform(rng, 0.5, 0.8);
      b.color = saturated();
      model.balls.emplace_back(label, b);
      asset.kind = "ball";
      asset.depth = dist;
      asset.params = {{"center", {b.center.x(), b.center.y(), b.center.z()}}, {"radius", b.radius}};
    } else {
      Patch p;
      p.theta = uniform(rng, -kPi, kPi);
      p.phi = uniform(rng, -20.0, 20.0) * kDeg;
      p.half_theta = uniform(rng, 15.0, 25.0) * kDeg;
      p.half_phi = uniform(rng, 10.0, 20.0) * kDeg;
      p.depth = uniform(rng, 2.5, 4.0);
      if (i == 0 && spec.patch_depth > 0.0) p.depth = spec.patch_depth;
      p.color = saturated();
      model.patches.emplace_back(label, p);
      asset.kind = "patch";
      asset.depth = p.depth;
      asset.params = {{"theta_deg", p.theta / kDeg}, {"phi_deg", p.phi / kDeg},
                      {"half_theta_deg", p.half_theta / kDeg}, {"half_phi_deg", p.half_phi / kDeg}};
    }
    labels.push_back({{"id", label}, {"category", asset.kind}, {"background", false}});
    out.assets.push_back(asset);
  }
  out.sidecar = {{"labels", labels}};

  const int w = spec.width, h = spec.height, ss = spec.supersample;
  out.rgb = Image(w, h);
  out.depth = DepthMap(h, w);
  out.labels = LabelMap(h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const SphericalCoord center = pixel_to_angles<double>(u, v, w, h);
      const Hit c = model.trace(spherical_to_cartesian(center), center.theta, center.phi);
      out.depth(v, u) = c.t;
      out.labels(v, u) = static_cast<std::uint16_t>(c.label);
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      for (int j = 0; j < ss; ++j) {
        for (int i = 0; i < ss; ++i) {
          const double su = u + (i + 0.5) / ss - 0.5;
          const double sv = v + (j + 0.5) / ss - 0.5;
          const double theta = wrap_angle((2.0 * su / w - 1.0) * kPi);
          const double phi = std::clamp((2.0 * sv / h - 1.0) * 0.5 * kPi, -0.5 * kPi, 0.5 * kPi);
          color += model.trace(direction_from_angles(theta, phi), theta, phi).color;
        }
      }
      out.rgb.set_pixel(u, v, (color / (ss * ss)).cwiseMax(0.0).cwiseMin(1.0));
    }
  }
  return out;
}

void save_synth_scene(const std::filesystem::path& dir, const SynthSpec& spec, const SynthScene& scene) {
  std::filesystem::create_directories(dir);
  save_png(dir / "pano.png", scene.rgb);
  save_depth_pfm(dir / "depth.pfm", scene.depth);
  save_png16(dir / "labels.png", scene.labels);
  std::ofstream(dir / "labels.json") << scene.sidecar.dump(2) << "\n";

  nlohmann::json assets = nlohmann::json::array();
  for (const auto& a : scene.assets) {
    assets.push_back({{"label", a.label}, {"kind", a.kind}, {"depth", a.depth}, {"params", a.params}});
  }
  const nlohmann::json fixture = {{"seed", spec.seed},
                                  {"width", spec.width},
                                  {"height", spec.height},
                                  {"background_depth", spec.background_depth},
                                  {"assets", assets}};
  std::ofstream(dir / "fixture.json") << fixture.dump(2) << "\n";

  // Pixel pitch on the far shell sets the scale of the outlier filter.
  const double pitch = 2.0 * kPi / spec.width * spec.background_depth;
  const nlohmann::json config = {
      {"inputs", {{"pano", "pano.png"}, {"depth", "depth.pfm"}, {"labels", "labels.png"}, {"labels_json", "labels.json"}}},
      {"outlier", {{"beta1", 3.0 * pitch}, {"beta2", 4}, {"radius", 5.0 * pitch}}},
      {"seed", spec.seed}};
  std::ofstream(dir / "config.json") << config.dump(2) << "\n";
}

}  // namespace layerpano
