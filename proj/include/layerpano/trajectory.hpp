// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/erp.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace layerpano {

/// Bad command-line or configuration usage (unknown names, missing values).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class TrajectoryKind { sweep, zigzag, hemisphere };

TrajectoryKind parse_trajectory_kind(const std::string& name);
std::string to_string(TrajectoryKind kind);

struct TrajectoryParams {
  int width = 256;
  int height = 256;
  double fov_deg = 90.0;
  // sweep
  int frames = 60;
  std::vector<double> elevations_deg = {0.0, 45.0};  ///< positive looks up
  // zigzag
  int segments = 6;
  double amplitude = 0.3;  ///< lateral offset; the pipeline scales it by the median scene depth
  double length = 0.3;     ///< forward travel
  double heading_deg = 0.0;
  // hemisphere
  double radius = 1.0;
  double lift_deg = 30.0;
  int positions = 4;
  int view_azimuths = 8;
  std::vector<double> view_elevations_deg = {-45.0, 0.0, 45.0};
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::sweep;
  std::vector<PinholeCamera> poses;
  std::vector<double> azimuth_deg;    ///< view azimuth per pose
  std::vector<double> elevation_deg;  ///< view elevation per pose, positive up
  std::vector<int> group;             ///< sweep elevation index or hemisphere position index
};

/// Orientation looking along azimuth / elevation given in degrees, positive elevation up.
Eigen::Quaterniond look_orientation(double azimuth_deg, double elevation_deg);

Trajectory generate_trajectory(TrajectoryKind kind, const TrajectoryParams& params);
inline Trajectory generate_trajectory(const std::string& kind, const TrajectoryParams& params) {
  return generate_trajectory(parse_trajectory_kind(kind), params);
}

}  // namespace layerpano
