#include "risv2x/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "risv2x/errors.hpp"

namespace risv2x {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool is_vertical(Heading h) { return h == Heading::kUp || h == Heading::kDown; }

namespace {

double direction_sign(Heading h) {
  return (h == Heading::kUp || h == Heading::kRight) ? 1.0 : -1.0;
}

Heading turned(Heading h, TurnChoice turn) {
  if (turn == TurnChoice::kStraight) return h;
  const bool left = turn == TurnChoice::kLeft;
  switch (h) {
    case Heading::kUp:
      return left ? Heading::kLeft : Heading::kRight;
    case Heading::kDown:
      return left ? Heading::kRight : Heading::kLeft;
    case Heading::kLeft:
      return left ? Heading::kDown : Heading::kUp;
    case Heading::kRight:
      return left ? Heading::kUp : Heading::kDown;
  }
  return h;
}

double& along(Vec3& p, Heading h) { return is_vertical(h) ? p.y : p.x; }
double& cross(Vec3& p, Heading h) { return is_vertical(h) ? p.x : p.y; }

}  // namespace

RoadNetwork::RoadNetwork(double width_m, double height_m, int lanes_per_direction,
                         double lane_width_m, std::vector<double> vertical_road_x,
                         std::vector<double> horizontal_road_y)
    : width_(width_m),
      height_(height_m),
      lanes_(lanes_per_direction),
      lane_width_(lane_width_m),
      vertical_x_(std::move(vertical_road_x)),
      horizontal_y_(std::move(horizontal_road_y)) {
  if (!(width_ > 0.0) || !(height_ > 0.0)) throw ConfigError("road network: non-positive size");
  if (lanes_ < 1) throw ConfigError("road network: zero lanes per direction");
  if (!(lane_width_ > 0.0)) throw ConfigError("road network: non-positive lane width");
  if (vertical_x_.empty() || horizontal_y_.empty())
    throw ConfigError("road network: need at least one road per axis");
  std::sort(vertical_x_.begin(), vertical_x_.end());
  std::sort(horizontal_y_.begin(), horizontal_y_.end());
  const double half = lanes_ * lane_width_;
  for (double x : vertical_x_)
    if (x - half < 0.0 || x + half > width_) throw ConfigError("road network: vertical road off grid");
  for (double y : horizontal_y_)
    if (y - half < 0.0 || y + half > height_)
      throw ConfigError("road network: horizontal road off grid");
  for (std::size_t i = 1; i < vertical_x_.size(); ++i)
    if (vertical_x_[i] - vertical_x_[i - 1] < 2.0 * half)
      throw ConfigError("road network: overlapping vertical roads");
  for (std::size_t i = 1; i < horizontal_y_.size(); ++i)
    if (horizontal_y_[i] - horizontal_y_[i - 1] < 2.0 * half)
      throw ConfigError("road network: overlapping horizontal roads");
}

RoadNetwork RoadNetwork::urban_default() {
  return RoadNetwork(450.0, 650.0, 3, 3.5, {25.0, 225.0, 425.0}, {25.0, 225.0, 425.0, 625.0});
}

double RoadNetwork::lane_coordinate(Heading heading, int road, int lane) const {
  const double offset = lane_width_ * (lane + 0.5);
  switch (heading) {
    case Heading::kUp:
      return vertical_x_.at(road) + offset;
    case Heading::kDown:
      return vertical_x_.at(road) - offset;
    case Heading::kRight:
      return horizontal_y_.at(road) - offset;
    case Heading::kLeft:
      return horizontal_y_.at(road) + offset;
  }
  return 0.0;
}

std::vector<double> RoadNetwork::lane_centers(Heading heading) const {
  const auto& roads = is_vertical(heading) ? vertical_x_ : horizontal_y_;
  std::vector<double> out;
  for (int r = 0; r < static_cast<int>(roads.size()); ++r)
    for (int l = 0; l < lanes_; ++l) out.push_back(lane_coordinate(heading, r, l));
  return out;
}

std::size_t RoadNetwork::lane_count() const {
  return 2 * static_cast<std::size_t>(lanes_) * (vertical_x_.size() + horizontal_y_.size());
}

double RoadNetwork::extent(Heading heading) const {
  return is_vertical(heading) ? height_ : width_;
}

Placement spawn_vehicles(const RoadNetwork& network, const MobilityConfig& config, int cues,
                         int pairs, std::uint64_t seed) {
  if (cues < 1) throw ConfigError("spawn_vehicles: need at least one CUE");
  if (pairs < 1) throw ConfigError("spawn_vehicles: need at least one V2V pair");
  if (config.speed_min_mps < 0.0 || config.speed_max_mps < config.speed_min_mps)
    throw ConfigError("spawn_vehicles: bad speed range");

  Rng rng = make_rng(seed, Stream::kPlacement);
  const int count = std::max({cues, pairs, 2});
  const int lanes = network.lanes_per_direction();
  const int nv = static_cast<int>(network.vertical_roads().size());
  const int nh = static_cast<int>(network.horizontal_roads().size());
  std::uniform_int_distribution<int> pick_lane(0, static_cast<int>(network.lane_count()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Placement out;
  out.vehicles.reserve(count);
  for (int i = 0; i < count; ++i) {
    int id = pick_lane(rng);
    VehicleState v;
    // lane ids: [up | down] over vertical roads, then [right | left] over horizontal roads
    const int vertical_lanes = 2 * lanes * nv;
    if (id < vertical_lanes) {
      v.heading = (id < lanes * nv) ? Heading::kUp : Heading::kDown;
      id %= lanes * nv;
      v.road = id / lanes;
    } else {
      id -= vertical_lanes;
      v.heading = (id < lanes * nh) ? Heading::kRight : Heading::kLeft;
      id %= lanes * nh;
      v.road = id / lanes;
    }
    v.lane = id % lanes;
    cross(v.position, v.heading) = network.lane_coordinate(v.heading, v.road, v.lane);
    along(v.position, v.heading) = unit(rng) * network.extent(v.heading);
    v.position.z = config.antenna_height_m;
    v.speed_mps = config.speed_min_mps + unit(rng) * (config.speed_max_mps - config.speed_min_mps);
    v.turn_probability = config.turn_probability;
    out.vehicles.push_back(v);
  }
  pair_nearest(out, pairs);
  return out;
}

void pair_nearest(Placement& placement, int pairs) {
  const auto& vs = placement.vehicles;
  if (pairs < 1 || static_cast<std::size_t>(pairs) > vs.size() || vs.size() < 2)
    throw ConfigError("pair_nearest: not enough vehicles for the requested pairs");
  placement.tx.assign(pairs, 0);
  placement.rx.assign(pairs, 0);
  for (int k = 0; k < pairs; ++k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      if (j == static_cast<std::size_t>(k)) continue;
      const double d = distance(vs[k].position, vs[j].position);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    placement.tx[k] = static_cast<std::size_t>(k);
    placement.rx[k] = best_j;
  }
}

VehicleState step_mobility(const VehicleState& v, const RoadNetwork& network, double dt,
                           const TurnDecider& decide) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_mobility: dt must be positive");
  if (!on_lane_center(v, network, 1e-6))
    throw std::logic_error("step_mobility: vehicle is not on a lane center");

  VehicleState out = v;
  double remaining = v.speed_mps * dt;
  while (remaining > 0.0) {
    const double sign = direction_sign(out.heading);
    const double extent = network.extent(out.heading);
    double& pos = along(out.position, out.heading);
    const auto& crossing =
        is_vertical(out.heading) ? network.horizontal_roads() : network.vertical_roads();

    double to_boundary = sign > 0.0 ? extent - pos : pos;
    double to_road = std::numeric_limits<double>::infinity();
    int road = -1;
    for (int j = 0; j < static_cast<int>(crossing.size()); ++j) {
      const double d = (crossing[j] - pos) * sign;
      if (d > 0.0 && d < to_road) {
        to_road = d;
        road = j;
      }
    }

    if (remaining < std::min(to_boundary, to_road)) {
      pos += sign * remaining;
      break;
    }
    if (to_boundary <= to_road) {
      remaining -= to_boundary;
      pos = sign > 0.0 ? 0.0 : extent;
      continue;
    }

    remaining -= to_road;
    pos = crossing[road];
    if (road == out.ignore_road) {
      out.ignore_road = -1;
      continue;
    }
    const TurnChoice choice = decide(out);
    if (choice == TurnChoice::kStraight) continue;

    // Residual distance continues along the new heading; the
    // cross coordinate snaps onto the turning road's lane.
    const Heading next = turned(out.heading, choice);
    const int old_road = out.road;
    const double old_center = is_vertical(out.heading) ? network.vertical_roads()[old_road]
                                                       : network.horizontal_roads()[old_road];
    out.heading = next;
    out.road = road;
    cross(out.position, next) = network.lane_coordinate(next, road, out.lane);
    const double new_pos = along(out.position, next);
    out.ignore_road = ((old_center - new_pos) * direction_sign(next) > 0.0) ? old_road : -1;
  }
  return out;
}

VehicleState step_mobility(const VehicleState& v, const RoadNetwork& network, double dt, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return step_mobility(v, network, dt, [&rng, &unit](const VehicleState& s) {
    const double u = unit(rng);
    if (u < 0.5 * s.turn_probability) return TurnChoice::kLeft;
    if (u < s.turn_probability) return TurnChoice::kRight;
    return TurnChoice::kStraight;
  });
}

bool on_lane_center(const VehicleState& v, const RoadNetwork& network, double tol) {
  const auto& roads = is_vertical(v.heading) ? network.vertical_roads() : network.horizontal_roads();
  if (v.road < 0 || v.road >= static_cast<int>(roads.size())) return false;
  if (v.lane < 0 || v.lane >= network.lanes_per_direction()) return false;
  const double c = is_vertical(v.heading) ? v.position.x : v.position.y;
  return std::abs(c - network.lane_coordinate(v.heading, v.road, v.lane)) <= tol;
}

}  // namespace risv2x
