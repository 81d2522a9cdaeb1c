#pragma once

#include <Eigen/Dense>

#include "mcmot/core.hpp"

namespace mcmot {

using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;

/// Constant-velocity box filter. State is (u, v, s, r, du, dv, ds):
/// center, area, aspect ratio, and the velocities of the first three.
/// Aspect ratio is modelled as constant.
struct KalmanState {
  Vector7d mean = Vector7d::Zero();
  Matrix7d covariance = Matrix7d::Identity();
};

namespace kalman_detail {

constexpr double kAreaFloor = 1e-4;
constexpr double kAspectFloor = 1e-6;

inline const Matrix7d& transition() {
  static const Matrix7d f = [] {
    Matrix7d m = Matrix7d::Identity();
    m(0, 4) = 1.0;
    m(1, 5) = 1.0;
    m(2, 6) = 1.0;
    return m;
  }();
  return f;
}

inline const Eigen::Matrix<double, 4, 7>& observation() {
  static const Eigen::Matrix<double, 4, 7> h = [] {
    Eigen::Matrix<double, 4, 7> m = Eigen::Matrix<double, 4, 7>::Zero();
    m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = 1.0;
    return m;
  }();
  return h;
}

inline const Matrix7d& process_noise() {
  static const Matrix7d q = [] {
    Vector7d d;
    d << 1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 0.0001;
    return Matrix7d(d.asDiagonal());
  }();
  return q;
}

inline const Eigen::Matrix4d& measurement_noise() {
  static const Eigen::Matrix4d r = [] {
    Eigen::Vector4d d;
    d << 1.0, 1.0, 10.0, 10.0;
    return Eigen::Matrix4d(d.asDiagonal());
  }();
  return r;
}

inline Matrix7d symmetrized(const Matrix7d& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace kalman_detail

inline Eigen::Vector4d box_to_measurement(const BoundingBox& b) {
  Eigen::Vector4d z;
  z << b.center_x(), b.center_y(), b.area(), b.w / b.h;
  return z;
}

inline BoundingBox box_from_state(const KalmanState& st) {
  const double s = std::max(st.mean(2), kalman_detail::kAreaFloor);
  const double r = std::max(st.mean(3), kalman_detail::kAspectFloor);
  const double w = std::sqrt(s * r);
  const double h = std::sqrt(s / r);
  return BoundingBox{st.mean(0) - 0.5 * w, st.mean(1) - 0.5 * h, w, h};
}

inline KalmanState kalman_init(const BoundingBox& box) {
  if (!box_is_valid(box)) throw std::invalid_argument("kalman_init: invalid box");
  KalmanState st;
  st.mean.head<4>() = box_to_measurement(box);
  Vector7d p0;
  p0 << 10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4;
  st.covariance = p0.asDiagonal();
  return st;
}

inline KalmanState kalman_predict(const KalmanState& st) {
  using namespace kalman_detail;
  KalmanState out;
  Vector7d m = st.mean;
  // Keep the area positive: freeze area velocity when it would go negative.
  if (m(2) + m(6) <= kAreaFloor) m(6) = 0.0;
  out.mean = transition() * m;
  out.mean(2) = std::max(out.mean(2), kAreaFloor);
  out.covariance =
      symmetrized(transition() * st.covariance * transition().transpose() + process_noise());
  return out;
}

inline KalmanState kalman_update(const KalmanState& st, const BoundingBox& box) {
  using namespace kalman_detail;
  if (!box_is_valid(box)) {
    throw std::invalid_argument("kalman_update: measurement box is invalid or non-finite");
  }
  const auto& h = observation();
  const Eigen::Vector4d z = box_to_measurement(box);
  const Eigen::Vector4d innovation = z - h * st.mean;
  const Eigen::Matrix4d s = h * st.covariance * h.transpose() + measurement_noise();
  // Gain via a solve instead of an explicit inverse.
  const Eigen::Matrix<double, 7, 4> gain =
      s.ldlt().solve(h * st.covariance).transpose();
  KalmanState out;
  out.mean = st.mean + gain * innovation;
  const Matrix7d ikh = Matrix7d::Identity() - gain * h;
  // Joseph form keeps the covariance positive semi-definite.
  out.covariance = symmetrized(ikh * st.covariance * ikh.transpose() +
                               gain * measurement_noise() * gain.transpose());
  out.mean(2) = std::max(out.mean(2), kAreaFloor);
  out.mean(3) = std::max(out.mean(3), kAspectFloor);
  return out;
}

}  // namespace mcmot
