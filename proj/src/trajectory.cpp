// SPDX-License-Identifier: Apache-2.0
#include "layerpano/trajectory.hpp"

#include <cmath>
#include <numbers>

namespace layerpano {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PinholeCamera make_camera(const TrajectoryParams& p, const Eigen::Vector3d& position, double azimuth_deg,
                          double elevation_deg) {
  PinholeCamera cam;
  cam.position = position;
  cam.orientation = look_orientation(azimuth_deg, elevation_deg);
  cam.fov_deg = p.fov_deg;
  cam.width = p.width;
  cam.height = p.height;
  cam.validate();
  return cam;
}

void push(Trajectory& t, PinholeCamera cam, double azimuth, double elevation, int group) {
  t.poses.push_back(std::move(cam));
  t.azimuth_deg.push_back(azimuth);
  t.elevation_deg.push_back(elevation);
  t.group.push_back(group);
}

}  // namespace

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "sweep") return TrajectoryKind::sweep;
  if (name == "zigzag") return TrajectoryKind::zigzag;
  if (name == "hemisphere") return TrajectoryKind::hemisphere;
  throw UsageError("unknown trajectory kind '" + name + "' (expected sweep, zigzag or hemisphere)");
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::sweep: return "sweep";
    case TrajectoryKind::zigzag: return "zigzag";
    case TrajectoryKind::hemisphere: return "hemisphere";
  }
  return "sweep";
}

Eigen::Quaterniond look_orientation(double azimuth_deg, double elevation_deg) {
  return orientation_from_angles(azimuth_deg * kDeg, -elevation_deg * kDeg);
}

Trajectory generate_trajectory(TrajectoryKind kind, const TrajectoryParams& p) {
  if (p.width < 1 || p.height < 1) throw UsageError("trajectory: image size must be positive");
  Trajectory t;
  t.kind = kind;
  switch (kind) {
    case TrajectoryKind::sweep: {
      if (p.frames < 1) throw UsageError("sweep: frame count must be at least 1");
      if (p.elevations_deg.empty()) throw UsageError("sweep: at least one elevation is required");
      for (std::size_t e = 0; e < p.elevations_deg.size(); ++e) {
        for (int k = 0; k < p.frames; ++k) {
          const double azimuth = 360.0 * k / p.frames;
          push(t, make_camera(p, Eigen::Vector3d::Zero(), azimuth, p.elevations_deg[e]), azimuth,
               p.elevations_deg[e], static_cast<int>(e));
        }
      }
      break;
    }
    case TrajectoryKind::zigzag: {
      if (p.frames < 1) throw UsageError("zigzag: frame count must be at least 1");
      if (p.segments < 1) throw UsageError("zigzag: segment count must be at least 1");
      if (!(p.length > 0.0) || !(p.amplitude >= 0.0)) {
        throw UsageError("zigzag: length must be positive and amplitude non-negative");
      }
      const Eigen::Vector3d forward = direction_from_angles(p.heading_deg * kDeg, 0.0);
      const Eigen::Vector3d lateral = direction_from_angles((p.heading_deg + 90.0) * kDeg, 0.0);
      auto vertex = [&](int k) -> Eigen::Vector3d {
        const double side = k == 0 ? 0.0 : (k % 2 == 1 ? 1.0 : -1.0);
        return forward * (p.length * k / p.segments) + lateral * (p.amplitude * side);
      };
      for (int f = 0; f < p.frames; ++f) {
        const double s = p.frames == 1 ? 0.0 : static_cast<double>(f) * p.segments / (p.frames - 1);
        const int seg = std::min(static_cast<int>(std::floor(s)), p.segments - 1);
        const double u = s - seg;
        const Eigen::Vector3d a = vertex(seg), b = vertex(seg + 1);
        const Eigen::Vector3d position = a + u * (b - a);
        const Eigen::Vector3d ahead = b - a;
        const double azimuth = std::atan2(ahead.z(), ahead.x()) / kDeg;
        push(t, make_camera(p, position, azimuth, 0.0), azimuth, 0.0, 0);
      }
      break;
    }
    case TrajectoryKind::hemisphere: {
      if (p.positions < 1 || p.view_azimuths < 1 || p.view_elevations_deg.empty()) {
        throw UsageError("hemisphere: positions, azimuths and elevations must be non-empty");
      }
      if (!(p.radius >= 0.0)) throw UsageError("hemisphere: radius must be non-negative");
      for (int k = 0; k < p.positions; ++k) {
        const double around = 360.0 * k / p.positions;
        // Positive lift raises the camera, i.e. moves it toward world -Y.
        const Eigen::Vector3d position = p.radius * direction_from_angles(around * kDeg, -p.lift_deg * kDeg);
        for (double elevation : p.view_elevations_deg) {
          for (int a = 0; a < p.view_azimuths; ++a) {
            const double azimuth = 360.0 * a / p.view_azimuths;
            push(t, make_camera(p, position, azimuth, elevation), azimuth, elevation, k);
          }
        }
      }
      break;
    }
  }
  return t;
}

}  // namespace layerpano
