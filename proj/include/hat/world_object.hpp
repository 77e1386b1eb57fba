#pragma once

#include <Eigen/Core>

#include <string>

namespace hat {

struct WorldObject {
  int id = 0;
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double grasp_radius = 0.05;  ///< m
  bool graspable = true;

  bool operator==(const WorldObject& o) const {
    return id == o.id && label == o.label && position == o.position && grasp_radius == o.grasp_radius &&
           graspable == o.graspable;
  }
};

}  // namespace hat
