#include "splat/optimizer.hpp"

#include <cmath>

#include "splat/errors.hpp"

namespace splat {

void AdamState::ensure_size(std::size_t n) {
  if (m_.size() < n) {
    m_.resize(n, 0.0);
    v_.resize(n, 0.0);
  }
}

int AdamState::step(std::span<double> params, std::span<const double> grads,
                    const AdamParams& p) {
  if (params.size() != grads.size()) throw InternalError("adam: size mismatch");
  ensure_size(params.size());
  ++step_;
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(step_));
  int skipped = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) {
      ++skipped;
      continue;
    }
    m_[i] = p.beta1 * m_[i] + (1.0 - p.beta1) * g;
    v_[i] = p.beta2 * v_[i] + (1.0 - p.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= p.lr * m_hat / (std::sqrt(v_hat) + p.eps);
  }
  return skipped;
}

void MapGradients::resize(std::size_t n) {
  position.assign(n, Eigen::Vector3d::Zero());
  scale.assign(n, Eigen::Vector3d::Zero());
  rotation.assign(n, Eigen::Vector4d::Zero());
  color.assign(n, Eigen::Vector3d::Zero());
  opacity.assign(n, 0.0);
}

MapGradients MapGradients::from_render(RenderGradients&& g) {
  MapGradients m;
  m.position = std::move(g.position);
  m.scale = std::move(g.scale);
  m.rotation = std::move(g.rotation);
  m.color = std::move(g.color);
  m.opacity = std::move(g.opacity);
  return m;
}

void MapGradients::add_regularization(const RegularizationResult& reg) {
  for (std::size_t k = 0; k < reg.indices.size(); ++k) {
    const std::size_t i = reg.indices[k];
    if (i >= position.size()) throw InternalError("map gradients: regularization index out of range");
    position[i] += reg.d_position[k];
    scale[i] += reg.d_scale[k];
    color[i] += reg.d_color[k];
  }
}

int MapOptimizer::apply(GaussianMap& map, const MapGradients& grads, double scene_extent) {
  const std::size_t n = map.size();
  if (grads.position.size() != n) throw InternalError("map optimizer: gradient size mismatch");

  // Gather into flat internal-parametrization buffers, step, scatter back.
  std::vector<double> p_pos(3 * n), g_pos(3 * n);
  std::vector<double> p_lsc(3 * n), g_lsc(3 * n);
  std::vector<double> p_rot(4 * n), g_rot(4 * n);
  std::vector<double> p_col(3 * n), g_col(3 * n);
  std::vector<double> p_opa(n), g_opa(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Gaussian& g = map.gaussian(i);
    const Eigen::Vector3d s = g.scale();
    const double o = g.opacity();
    for (int k = 0; k < 3; ++k) {
      p_pos[3 * i + k] = g.position[k];
      g_pos[3 * i + k] = grads.position[i][k];
      p_lsc[3 * i + k] = g.log_scale[k];
      // d/d log s = d/d s * s
      g_lsc[3 * i + k] = grads.scale[i][k] * s[k];
      p_col[3 * i + k] = g.color[k];
      g_col[3 * i + k] = grads.color[i][k];
    }
    p_rot[4 * i + 0] = g.rotation.w;
    p_rot[4 * i + 1] = g.rotation.x;
    p_rot[4 * i + 2] = g.rotation.y;
    p_rot[4 * i + 3] = g.rotation.z;
    for (int k = 0; k < 4; ++k) g_rot[4 * i + k] = grads.rotation[i][k];
    p_opa[i] = g.opacity_logit;
    // d/d logit = d/d o * o (1 - o)
    g_opa[i] = grads.opacity[i] * o * (1.0 - o);
  }

  int skipped = 0;
  skipped += position_.step(p_pos, g_pos, {rates_.position * scene_extent});
  skipped += scale_.step(p_lsc, g_lsc, {rates_.scale});
  skipped += rotation_.step(p_rot, g_rot, {rates_.rotation});
  skipped += color_.step(p_col, g_col, {rates_.color});
  skipped += opacity_.step(p_opa, g_opa, {rates_.opacity});

  for (std::size_t i = 0; i < n; ++i) {
    Gaussian& g = map.gaussian(i);
    for (int k = 0; k < 3; ++k) {
      g.position[k] = p_pos[3 * i + k];
      g.log_scale[k] = p_lsc[3 * i + k];
      g.color[k] = std::clamp(p_col[3 * i + k], 0.0, 1.0);
    }
    g.rotation = Quat{p_rot[4 * i + 0], p_rot[4 * i + 1], p_rot[4 * i + 2], p_rot[4 * i + 3]}
                     .normalized();
    g.opacity_logit = p_opa[i];
  }
  return skipped;
}

int PoseOptimizer::apply(CameraPose& pose, const Eigen::Vector3d& d_t,
                         const Eigen::Vector4d& d_q, double lr_scale) {
  double t_buf[3] = {pose.t.x(), pose.t.y(), pose.t.z()};
  const double g_t[3] = {d_t.x(), d_t.y(), d_t.z()};
  int skipped = t_state_.step(std::span<double>(t_buf, 3), std::span<const double>(g_t, 3),
                              {rates_.translation * lr_scale});
  pose.t = {t_buf[0], t_buf[1], t_buf[2]};

  // Project the gradient onto the tangent space of the unit sphere at q.
  Eigen::Vector4d q_vec = pose.q.coeffs();
  const Eigen::Vector4d q_hat = q_vec.normalized();
  const Eigen::Vector4d g_proj = d_q - q_hat.dot(d_q) * q_hat;

  double q_buf[4] = {q_vec[0], q_vec[1], q_vec[2], q_vec[3]};
  const double g_q[4] = {g_proj[0], g_proj[1], g_proj[2], g_proj[3]};
  skipped += q_state_.step(std::span<double>(q_buf, 4), std::span<const double>(g_q, 4),
                           {rates_.rotation * lr_scale});
  pose.q = Quat{q_buf[0], q_buf[1], q_buf[2], q_buf[3]}.normalized();
  return skipped;
}

}  // namespace splat
