#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "risv2x/rng.hpp"

namespace risv2x {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

enum class Heading { kUp, kDown, kLeft, kRight };

bool is_vertical(Heading h);

/// Manhattan grid. Vertical roads run along y at the listed x centers,
/// horizontal roads run along x at the listed y centers. Each road carries
/// `lanes_per_direction` lanes per direction with right-hand traffic.
class RoadNetwork {
 public:
  RoadNetwork(double width_m, double height_m, int lanes_per_direction, double lane_width_m,
              std::vector<double> vertical_road_x, std::vector<double> horizontal_road_y);

  /// 450 m x 650 m grid, three double lanes, 3.5 m lanes.
  static RoadNetwork urban_default();

  double width() const { return width_; }
  double height() const { return height_; }
  int lanes_per_direction() const { return lanes_; }
  double lane_width() const { return lane_width_; }
  const std::vector<double>& vertical_roads() const { return vertical_x_; }
  const std::vector<double>& horizontal_roads() const { return horizontal_y_; }

  /// Cross-axis coordinate of lane `lane` on road `road` for traffic moving
  /// in `heading` (x for vertical headings, y for horizontal ones).
  double lane_coordinate(Heading heading, int road, int lane) const;

  /// All lane centers for one heading, ordered by (road, lane).
  std::vector<double> lane_centers(Heading heading) const;

  std::size_t lane_count() const;

  /// Along-axis extent for a heading (height for vertical headings).
  double extent(Heading heading) const;

 private:
  double width_;
  double height_;
  int lanes_;
  double lane_width_;
  std::vector<double> vertical_x_;
  std::vector<double> horizontal_y_;
};

struct VehicleState {
  Vec3 position;
  double speed_mps = 0.0;
  Heading heading = Heading::kUp;
  double turn_probability = 0.4;
  int road = 0;  // index into the road list matching the heading's axis
  int lane = 0;  // 0 = lane nearest the road center
  int ignore_road = -1;  // perpendicular road whose center was already handled by a turn
};

enum class TurnChoice { kStraight, kLeft, kRight };

/// Returns the manoeuvre taken at an intersection.
using TurnDecider = std::function<TurnChoice(const VehicleState&)>;

struct MobilityConfig {
  double speed_min_mps = 10.0;
  double speed_max_mps = 15.0;
  double turn_probability = 0.4;
  double antenna_height_m = 1.5;
};

struct Placement {
  std::vector<VehicleState> vehicles;
  /// pair k transmits from vehicles[tx[k]] to vehicles[rx[k]]
  std::vector<std::size_t> tx;
  std::vector<std::size_t> rx;
};

/// Places max(M, K, 2) vehicles uniformly on random lanes and pairs the
/// first K with their nearest neighbours. Vehicle m doubles as CUE m.
Placement spawn_vehicles(const RoadNetwork& network, const MobilityConfig& config, int cues,
                         int pairs, std::uint64_t seed);

/// Receiver index for each of the first `pairs` vehicles: its nearest other vehicle.
void pair_nearest(Placement& placement, int pairs);

/// Advances one vehicle by speed * dt along its path, turning at road
/// centers per `decide`, and wrapping toroidally at the grid edges.
VehicleState step_mobility(const VehicleState& v, const RoadNetwork& network, double dt,
                           const TurnDecider& decide);

/// Draws the turn decision from `rng`: left and right each with half the
/// vehicle's turn probability.
VehicleState step_mobility(const VehicleState& v, const RoadNetwork& network, double dt, Rng& rng);

/// True when the cross-axis coordinate equals a lane center for the heading.
bool on_lane_center(const VehicleState& v, const RoadNetwork& network, double tol = 1e-9);

}  // namespace risv2x
