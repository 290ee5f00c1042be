#include "splat/tracker.hpp"

#include <cmath>

#include "splat/errors.hpp"

namespace splat {

CameraPose predict_pose(const TrackerState& state) {
  if (!state.prev) return CameraPose::identity();
  if (!state.prev_prev) return *state.prev;
  const CameraPose velocity = compose(state.prev_prev->inverse(), *state.prev);
  CameraPose pred = compose(*state.prev, velocity);
  pred.q = pred.q.normalized();
  return pred;
}

CameraPose track_frame(const GaussianMap& map, const FrameObservation& frame, TrackerState& state,
                       const CameraIntrinsics& K, const TrackingConfig& config,
                       const RenderSettings& render_settings, TrackReport* report) {
  if (map.empty()) throw InvalidInputError("track_frame: cannot track against an empty map");

  CameraPose pose = predict_pose(state);
  TrackReport rep;

  if (config.iterations <= 0) {
    state.push(pose);
    if (report) *report = rep;
    return pose;
  }

  PoseOptimizer optimizer(config.learning_rates);
  CameraPose best_pose = pose;
  double best_loss = std::numeric_limits<double>::infinity();
  // Stall detection compares the best loss of consecutive early_stop_window
  // sized iteration blocks; the raw per-iteration loss is too noisy to gate on,
  // and a single stalled block can be an optimizer-warmup artifact.
  constexpr int kStalledBlocksToStop = 3;
  double prev_block_best = std::numeric_limits<double>::infinity();
  double block_best = std::numeric_limits<double>::infinity();
  int block_fill = 0;
  int stalled_blocks = 0;

  for (int it = 0; it < config.iterations; ++it) {
    const RenderOutput out = render(map, pose, K, render_settings);
    const ImageLossResult loss = tracking_loss(out, frame, config.loss_weights);
    rep.iterations_used = it + 1;
    if (it == 0) rep.initial_loss = loss.value;

    if (!std::isfinite(loss.value)) {
      rep.aborted_nonfinite = true;
      break;
    }
    if (loss.value < best_loss) {
      best_loss = loss.value;
      best_pose = pose;
    }

    block_best = std::min(block_best, loss.value);
    if (++block_fill == config.early_stop_window) {
      if (block_best > prev_block_best - config.early_stop_delta) {
        if (++stalled_blocks >= kStalledBlocksToStop) {
          rep.converged = true;
          break;
        }
      } else {
        stalled_blocks = 0;
      }
      prev_block_best = std::min(prev_block_best, block_best);
      block_best = std::numeric_limits<double>::infinity();
      block_fill = 0;
    }

    const RenderGradients grads =
        render_backward(map, pose, K, out, loss.d_color, loss.d_depth, true);
    optimizer.apply(pose, grads.d_translation, grads.d_rotation,
                    std::pow(config.lr_decay, it));
  }

  rep.final_loss = best_loss;
  state.push(best_pose);
  if (report) *report = rep;
  return best_pose;
}

}  // namespace splat
