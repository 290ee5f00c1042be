#include "splat/losses.hpp"

#include <array>
#include <cmath>

namespace splat {

namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

L1Result l1_image(const ImageD& a, const ImageD& b, const MaskImage& mask) {
  require_same_shape(a, b, "l1_image");
  if (mask.width != a.width || mask.height != a.height)
    throw InvalidInputError("l1_image: mask shape mismatch");

  L1Result res;
  res.grad_a = ImageD::zeros(a.width, a.height, a.channels);
  std::size_t n_masked = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      if (mask.at(y, x)) ++n_masked;
  if (n_masked == 0) return res;

  const double n = static_cast<double>(n_masked) * a.channels;
  double sum = 0.0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (!mask.at(y, x)) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        sum += std::abs(d);
        res.grad_a.at(y, x, c) = sign(d) / n;
      }
    }
  }
  res.value = sum / n;
  return res;
}

// ---------------------------------------------------------------------------
// SSIM

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

const std::array<double, kSsimWindow>& ssim_kernel() {
  static const std::array<double, kSsimWindow> k = [] {
    std::array<double, kSsimWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - (kSsimWindow - 1) / 2.0;
      g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
  }();
  return k;
}

// Valid-mode separable filtering of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, int& wv, int& hv) {
  const auto& g = ssim_kernel();
  wv = w - kSsimWindow + 1;
  hv = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * wv, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * in[y * w + x + k];
      tmp[y * wv + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(hv) * wv, 0.0);
  for (int y = 0; y < hv; ++y)
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * tmp[(y + k) * wv + x];
      out[y * wv + x] = s;
    }
  return out;
}

// Adjoint of filter_valid: full-mode convolution back to the input grid.
std::vector<double> filter_adjoint(const std::vector<double>& grad, int wv, int hv, int w, int h) {
  const auto& g = ssim_kernel();
  std::vector<double> tmp(static_cast<std::size_t>(h) * wv, 0.0);
  for (int y = 0; y < hv; ++y)
    for (int x = 0; x < wv; ++x) {
      const double v = grad[y * wv + x];
      if (v == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) tmp[(y + k) * wv + x] += g[k] * v;
    }
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wv; ++x) {
      const double v = tmp[y * wv + x];
      if (v == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) out[y * w + x + k] += g[k] * v;
    }
  return out;
}

}  // namespace

SsimResult ssim(const ImageD& a, const ImageD& b) {
  require_same_shape(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw InvalidInputError("ssim: image smaller than the filter window");

  SsimResult res;
  res.grad_a = ImageD::zeros(a.width, a.height, a.channels);
  const int w = a.width, h = a.height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;

  std::vector<double> pa(plane), pb(plane), pa2(plane), pb2(plane), pab(plane);
  int wv = 0, hv = 0;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double va = a.at(y, x, c), vb = b.at(y, x, c);
        pa[y * w + x] = va;
        pb[y * w + x] = vb;
        pa2[y * w + x] = va * va;
        pb2[y * w + x] = vb * vb;
        pab[y * w + x] = va * vb;
      }
    const auto ux = filter_valid(pa, w, h, wv, hv);
    const auto uy = filter_valid(pb, w, h, wv, hv);
    const auto vxx = filter_valid(pa2, w, h, wv, hv);
    const auto vyy = filter_valid(pb2, w, h, wv, hv);
    const auto vxy = filter_valid(pab, w, h, wv, hv);

    const double n_windows = static_cast<double>(wv) * hv * a.channels;
    std::vector<double> d_ux(ux.size()), d_vxx(ux.size()), d_vxy(ux.size());
    for (std::size_t i = 0; i < ux.size(); ++i) {
      const double mx = ux[i], my = uy[i];
      const double sx = vxx[i] - mx * mx;
      const double sy = vyy[i] - my * my;
      const double sxy = vxy[i] - mx * my;
      const double a1 = 2.0 * mx * my + kSsimC1;
      const double a2 = 2.0 * sxy + kSsimC2;
      const double b1 = mx * mx + my * my + kSsimC1;
      const double b2 = sx + sy + kSsimC2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;

      const double up = 1.0 / n_windows;  // d mean / d s
      const double d_a1 = up * a2 / (b1 * b2);
      const double d_a2 = up * a1 / (b1 * b2);
      const double d_b1 = -up * s / b1;
      const double d_b2 = -up * s / b2;
      d_ux[i] = d_a1 * 2.0 * my + d_a2 * (-2.0 * my) + d_b1 * 2.0 * mx + d_b2 * (-2.0 * mx);
      d_vxx[i] = d_b2;
      d_vxy[i] = d_a2 * 2.0;
    }

    const auto g_ux = filter_adjoint(d_ux, wv, hv, w, h);
    const auto g_vxx = filter_adjoint(d_vxx, wv, hv, w, h);
    const auto g_vxy = filter_adjoint(d_vxy, wv, hv, w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        res.grad_a.at(y, x, c) = g_ux[i] + 2.0 * pa[i] * g_vxx[i] + pb[i] * g_vxy[i];
      }
  }
  res.value = total / (static_cast<double>(wv) * hv * a.channels);
  return res;
}

// ---------------------------------------------------------------------------
// sRGB -> CIE-LAB chroma

namespace {

// sRGB D65 linear-RGB -> XYZ.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
constexpr double kWhite[3] = {0.95047, 1.0, 1.08883};
constexpr double kLabDelta = 6.0 / 29.0;

inline double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}
inline double srgb_linearize_grad(double c) {
  return c <= 0.04045 ? 1.0 / 12.92 : (2.4 / 1.055) * std::pow((c + 0.055) / 1.055, 1.4);
}
inline double lab_f(double t) {
  const double d3 = kLabDelta * kLabDelta * kLabDelta;
  return t > d3 ? std::cbrt(t) : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}
inline double lab_f_grad(double t) {
  const double d3 = kLabDelta * kLabDelta * kLabDelta;
  return t > d3 ? 1.0 / (3.0 * std::cbrt(t) * std::cbrt(t)) : 1.0 / (3.0 * kLabDelta * kLabDelta);
}

}  // namespace

ImageD rgb_to_ab(const ImageD& rgb) {
  if (rgb.channels != 3) throw InvalidInputError("rgb_to_ab: expected 3 channels");
  ImageD ab = ImageD::zeros(rgb.width, rgb.height, 2);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      double lin[3];
      for (int c = 0; c < 3; ++c) lin[c] = srgb_linearize(rgb.at(y, x, c));
      double f[3];
      for (int r = 0; r < 3; ++r) {
        const double t = (kM[r][0] * lin[0] + kM[r][1] * lin[1] + kM[r][2] * lin[2]) / kWhite[r];
        f[r] = lab_f(t);
      }
      ab.at(y, x, 0) = 500.0 * (f[0] - f[1]);
      ab.at(y, x, 1) = 200.0 * (f[1] - f[2]);
    }
  }
  return ab;
}

ImageD rgb_to_ab_backward(const ImageD& rgb, const ImageD& d_ab) {
  if (rgb.channels != 3 || d_ab.channels != 2 || rgb.width != d_ab.width ||
      rgb.height != d_ab.height)
    throw InvalidInputError("rgb_to_ab_backward: shape mismatch");
  ImageD d_rgb = ImageD::zeros(rgb.width, rgb.height, 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      double lin[3], dlin[3];
      for (int c = 0; c < 3; ++c) {
        lin[c] = srgb_linearize(rgb.at(y, x, c));
        dlin[c] = srgb_linearize_grad(rgb.at(y, x, c));
      }
      double df[3];
      for (int r = 0; r < 3; ++r) {
        const double t = (kM[r][0] * lin[0] + kM[r][1] * lin[1] + kM[r][2] * lin[2]) / kWhite[r];
        df[r] = lab_f_grad(t);
      }
      const double ga = d_ab.at(y, x, 0), gb = d_ab.at(y, x, 1);
      // a = 500 (f0 - f1), b = 200 (f1 - f2)
      const double gf0 = 500.0 * ga;
      const double gf1 = -500.0 * ga + 200.0 * gb;
      const double gf2 = -200.0 * gb;
      const double gt[3] = {gf0 * df[0], gf1 * df[1], gf2 * df[2]};
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int r = 0; r < 3; ++r) acc += gt[r] * kM[r][c] / kWhite[r];
        d_rgb.at(y, x, c) = acc * dlin[c];
      }
    }
  }
  return d_rgb;
}

// ---------------------------------------------------------------------------
// Composite losses

MaskImage depth_loss_mask(const ImageD& rendered_opacity, const ImageD& sensor_depth) {
  require_same_shape(rendered_opacity, sensor_depth, "depth_loss_mask");
  MaskImage mask = MaskImage::zeros(sensor_depth.width, sensor_depth.height, 1);
  for (int y = 0; y < sensor_depth.height; ++y)
    for (int x = 0; x < sensor_depth.width; ++x)
      mask.at(y, x) = (sensor_depth.at(y, x) > 0.0 && rendered_opacity.at(y, x) > 0.5) ? 1 : 0;
  return mask;
}

ImageLossResult mapping_loss(const RenderOutput& render, const FrameObservation& frame,
                             const LossWeights& weights) {
  require_same_shape(render.color, frame.rgb, "mapping_loss");
  require_same_shape(render.depth, frame.depth, "mapping_loss");

  ImageLossResult res;
  MaskImage full = MaskImage(frame.rgb.width, frame.rgb.height, 1, 1);

  auto color_l1 = l1_image(render.color, frame.rgb, full);
  res.value = weights.lambda_color * color_l1.value;
  res.d_color = std::move(color_l1.grad_a);
  for (auto& v : res.d_color.data) v *= weights.lambda_color;

  const MaskImage dmask = depth_loss_mask(render.opacity, frame.depth);
  auto depth_l1 = l1_image(render.depth, frame.depth, dmask);
  res.value += weights.lambda_depth * depth_l1.value;
  res.d_depth = std::move(depth_l1.grad_a);
  for (auto& v : res.d_depth.data) v *= weights.lambda_depth;

  if (weights.lambda_ssim > 0.0) {
    auto s = ssim(render.color, frame.rgb);
    res.value += weights.lambda_ssim * (1.0 - s.value);
    for (std::size_t i = 0; i < res.d_color.data.size(); ++i)
      res.d_color.data[i] -= weights.lambda_ssim * s.grad_a.data[i];
  }
  return res;
}

ImageLossResult tracking_loss(const RenderOutput& render, const FrameObservation& frame,
                              const LossWeights& weights) {
  require_same_shape(render.color, frame.rgb, "tracking_loss");
  require_same_shape(render.depth, frame.depth, "tracking_loss");

  ImageLossResult res;
  const ImageD ab_hat = rgb_to_ab(render.color);
  const ImageD ab_ref = rgb_to_ab(frame.rgb);
  MaskImage full = MaskImage(frame.rgb.width, frame.rgb.height, 1, 1);
  auto chroma_l1 = l1_image(ab_hat, ab_ref, full);
  res.value = weights.lambda_color_track * chroma_l1.value;
  for (auto& v : chroma_l1.grad_a.data) v *= weights.lambda_color_track;
  res.d_color = rgb_to_ab_backward(render.color, chroma_l1.grad_a);

  const MaskImage dmask = depth_loss_mask(render.opacity, frame.depth);
  auto depth_l1 = l1_image(render.depth, frame.depth, dmask);
  res.value += weights.lambda_depth_track * depth_l1.value;
  res.d_depth = std::move(depth_l1.grad_a);
  for (auto& v : res.d_depth.data) v *= weights.lambda_depth_track;
  return res;
}

RegularizationResult regularization_loss(const GaussianMap& map,
                                         std::span<const std::size_t> touched,
                                         const CameraPose& pose) {
  RegularizationResult res;
  const Eigen::Matrix3d w_rot = pose.rotation().transpose();
  const Eigen::Vector3d depth_row = w_rot.row(2).transpose();

  for (const std::size_t i : touched) {
    const ImportanceWeights w = map.importance_weights(i);
    if (w.scale.isZero(0.0) && w.color.isZero(0.0) && w.depth == 0.0) continue;

    const Gaussian& g = map.gaussian(i);
    const RegularizationAnchor& ref = map.anchor(i);

    const Eigen::Vector3d s = g.scale();
    const Eigen::Vector3d ds = s - ref.scale_ref;
    const Eigen::Vector3d dc = g.color - ref.color_ref;
    const double z = (w_rot * (g.position - pose.t)).z();
    const double dz = z - ref.depth_ref;

    res.value += w.scale.dot(ds.cwiseAbs()) + w.color.dot(dc.cwiseAbs()) + w.depth * std::abs(dz);

    Eigen::Vector3d gs, gc;
    for (int k = 0; k < 3; ++k) {
      gs[k] = w.scale[k] * sign(ds[k]);
      gc[k] = w.color[k] * sign(dc[k]);
    }
    res.indices.push_back(i);
    res.d_scale.push_back(gs);
    res.d_color.push_back(gc);
    res.d_position.push_back(w.depth * sign(dz) * depth_row);
  }
  return res;
}

}  // namespace splat
