#pragma once

#include <span>

#include "splat/dataset_types.hpp"
#include "splat/image.hpp"

namespace splat {

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(1 / MSE) for [0,1] images, capped at kPsnrCapDb.
double psnr_db(const ImageD& a, const ImageD& b);

struct AteResult {
  double rmse_cm = 0.0;
  Trajectory aligned_estimate;
  std::size_t pairs = 0;
};

// Pairs poses by nearest timestamp (within 0.02 s), optionally applies the
// closed-form rigid alignment (scale fixed to 1), and reports the translation
// RMSE in centimeters.
AteResult ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth, bool align);

struct ImageSetMetrics {
  double psnr_db = 0.0;  // mean of per-frame PSNR
  double ssim = 0.0;     // mean of per-frame SSIM
  std::size_t frames = 0;
};

ImageSetMetrics image_metrics(std::span<const ImageD> rendered, std::span<const ImageD> reference);

// Mean |a-b| in centimeters over pixels where both depths are valid (> 0).
double depth_l1_cm(std::span<const ImageD> rendered, std::span<const ImageD> reference);

}  // namespace splat
