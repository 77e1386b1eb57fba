#pragma once

// Fixed-timestep kinematic world: one robot, labeled rigid tokens, and a
// radius-based grasp rule. No physics and no collisions.

#include "hat/kinematics.hpp"
#include "hat/world_object.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hat {

/// Axis-aligned box in the horizontal plane.
struct Region {
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max = Eigen::Vector2d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }

  static Region around(double cx, double cy, double half_x, double half_y) {
    return {{cx - half_x, cy - half_y}, {cx + half_x, cy + half_y}};
  }

  bool operator==(const Region& o) const { return min == o.min && max == o.max; }
};

struct WorldState {
  RobotState robot;
  std::vector<WorldObject> objects;
  std::optional<int> attached;
  long long tick = 0;
  double sim_time = 0.0;
  Region workspace = Region::around(0.0, 0.0, 10.0, 10.0);  ///< clamps the base position

  const WorldObject* find(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }

  bool operator==(const WorldState&) const = default;
};

/// Task completes once every listed object rests, released, inside its region.
struct PlacementGoal {
  int object_id = 0;
  Region region;

  bool operator==(const PlacementGoal&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  WorldState initial;
  std::vector<std::string> default_queries;
  std::vector<PlacementGoal> placements;
  std::string completion;  ///< human-readable completion criterion

  void validate(const RobotGeometry& geom) const {
    if (!is_valid(initial.robot, geom)) throw std::invalid_argument("scenario '" + name + "': invalid initial robot state");
    for (const auto& o : initial.objects)
      if (!(o.grasp_radius > 0.0)) throw std::invalid_argument("scenario '" + name + "': grasp_radius must be positive");
    for (const auto& p : placements)
      if (!initial.find(p.object_id))
        throw std::invalid_argument("scenario '" + name + "': placement names unknown object " + std::to_string(p.object_id));
  }
};

inline WorldState step(const WorldState& world, const JointVelocityCommand& cmd, double dt, const RobotGeometry& geom) {
  WorldState next = world;
  const Eigen::Vector3d ee_before = forward_kinematics(world.robot, geom).position;

  next.robot = integrate(world.robot, cmd, dt, geom);
  next.robot.x = std::clamp(next.robot.x, world.workspace.min.x(), world.workspace.max.x());
  next.robot.y = std::clamp(next.robot.y, world.workspace.min.y(), world.workspace.max.y());
  const Eigen::Vector3d ee = forward_kinematics(next.robot, geom).position;

  if (next.attached) {
    for (auto& o : next.objects)
      if (o.id == *next.attached) o.position += ee - ee_before;
  }

  if (cmd.gripper < 0.0 && !next.attached) {
    const WorldObject* nearest = nullptr;
    double nearest_d = 0.0;
    for (const auto& o : next.objects) {
      if (!o.graspable) continue;
      const double d = (o.position - ee).norm();
      if (d > o.grasp_radius) continue;
      if (!nearest || d < nearest_d || (d == nearest_d && o.id < nearest->id)) {
        nearest = &o;
        nearest_d = d;
      }
    }
    if (nearest) next.attached = nearest->id;
  } else if (cmd.gripper > 0.0 && next.attached) {
    next.attached.reset();
  }

  next.tick = world.tick + 1;
  next.sim_time = static_cast<double>(next.tick) * dt;
  return next;
}

inline bool check_completion(const Scenario& scenario, const WorldState& world) {
  if (scenario.placements.empty()) return false;
  for (const auto& goal : scenario.placements) {
    if (world.attached == goal.object_id) return false;
    const WorldObject* o = world.find(goal.object_id);
    if (!o || !goal.region.contains(o->position)) return false;
  }
  return true;
}

namespace detail {
inline WorldObject object(int id, std::string label, double x, double y, double z, bool graspable = true) {
  return {id, std::move(label), {x, y, z}, 0.05, graspable};
}

inline WorldState start_world() {
  WorldState w;
  w.robot = RobotState{0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 1.0};
  w.workspace = Region{{-2.0, -3.0}, {6.0, 3.0}};
  return w;
}
}  // namespace detail

inline std::vector<std::string> scenario_names() {
  return {"fetch_redbull", "two_cups", "soiled_towel", "blanket_tissue_trash_lite"};
}

inline Scenario load_scenario(std::string_view name) {
  using detail::object;
  Scenario s;
  s.name = std::string(name);
  s.initial = detail::start_world();

  if (name == "fetch_redbull") {
    s.description = "Fetch a Red Bull can from a side table about 3 m away and bring it to the bedside table.";
    s.initial.objects = {object(1, "red bull can", 3.0, -0.75, 0.72), object(2, "tv remote", 3.35, -0.95, 0.72),
                         object(3, "paperback book", 2.6, -0.95, 0.72), object(4, "water glass", 3.5, -0.65, 0.72),
                         object(5, "side table", 3.0, -0.9, 0.7, false), object(6, "bedside table", 0.1, -0.75, 0.5, false)};
    s.default_queries = {"Red Bull", "can"};
    s.placements = {{1, Region::around(0.1, -0.75, 0.4, 0.35)}};
    s.completion = "red bull can released inside the bedside-table drop zone";
  } else if (name == "two_cups") {
    s.description = "Clear two cups, 1.2 m apart on a long table, into the tray.";
    s.initial.objects = {object(1, "blue cup", 1.5, -0.7, 0.75), object(2, "red cup", 2.7, -0.7, 0.75),
                         object(3, "long table", 2.1, -0.9, 0.72, false), object(4, "tray", 0.1, -0.7, 0.5, false)};
    s.default_queries = {"cup", "tumbler"};
    s.placements = {{1, Region::around(0.1, -0.7, 0.35, 0.35)}, {2, Region::around(0.1, -0.7, 0.35, 0.35)}};
    s.completion = "both cups released inside the tray region";
  } else if (name == "soiled_towel") {
    s.description = "Pick a soiled towel off a chair and drop it into the laundry basket.";
    s.initial.objects = {object(1, "soiled towel", 2.0, -0.7, 0.45), object(2, "chair", 2.0, -0.85, 0.4, false),
                         object(3, "laundry basket", 0.8, -0.75, 0.3, false)};
    s.default_queries = {"cloth", "towel"};
    s.placements = {{1, Region::around(0.8, -0.75, 0.25, 0.25)}};
    s.completion = "towel released inside the basket footprint";
  } else if (name == "blanket_tissue_trash_lite") {
    s.description =
        "Staged stand-in for the blanket, tissue and trash routine: cloth is a rigid token, each stage moves "
        "one object to its waypoint region.";
    s.initial.objects = {object(1, "blanket corner", 1.0, -0.7, 0.6), object(2, "tissue box", 2.5, -0.7, 0.7),
                         object(3, "used tissue", 3.2, -0.75, 0.7), object(4, "trash bin", 4.2, -0.75, 0.3, false)};
    s.default_queries = {"blanket", "tissue"};
    s.placements = {{1, Region::around(1.8, -0.7, 0.25, 0.3)},
                    {2, Region::around(0.1, -0.7, 0.3, 0.3)},
                    {3, Region::around(4.2, -0.75, 0.25, 0.25)}};
    s.completion = "blanket pulled to the bed edge, tissue box at the bedside, used tissue in the trash bin";
  } else {
    std::string all;
    for (const auto& n : scenario_names()) all += (all.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "'; available: " + all);
  }
  return s;
}

}  // namespace hat
