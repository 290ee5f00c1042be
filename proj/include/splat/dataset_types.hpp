#pragma once

#include <vector>

#include "splat/errors.hpp"
#include "splat/geometry.hpp"
#include "splat/image.hpp"

namespace splat {

// One RGBD input. Depth of 0 marks an invalid sensor reading.
struct FrameObservation {
  ImageD rgb;    // H x W x 3 in [0,1]
  ImageD depth;  // H x W meters
  double timestamp = 0.0;
  int index = 0;
};

struct Trajectory {
  std::vector<double> timestamps;
  std::vector<CameraPose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  void push(double timestamp, const CameraPose& pose) {
    if (!timestamps.empty() && !(timestamp > timestamps.back()))
      throw InvalidInputError("trajectory: timestamps must be strictly increasing");
    timestamps.push_back(timestamp);
    poses.push_back(pose);
  }
};

}  // namespace splat
