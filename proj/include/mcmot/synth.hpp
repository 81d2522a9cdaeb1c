#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "mcmot/core.hpp"
#include "mcmot/metrics.hpp"

namespace mcmot {

/// Deterministic generator independent of the standard library's
/// distribution implementations, so equal seeds give equal scenes on any
/// platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    const double u1 = std::max(uniform01(), 1e-300);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

struct ScenarioConfig {
  int camera_count = 3;
  int identity_count = 5;
  int frame_count = 200;
  int feature_dim = 32;
  double intra_identity_cos_min = 0.95;  // lower bound for same-identity features
  double inter_identity_cos_max = 0.2;   // upper bound for cross-identity features
  double position_noise = 0.01;          // metres, per axis
  double bbox_noise = 1.0;               // pixels
  double walk_step = 0.004;              // metres per frame per axis
  double dropout_prob = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (camera_count < 2) throw std::invalid_argument("scenario: camera_count must be >= 2");
    if (identity_count < 1) throw std::invalid_argument("scenario: identity_count must be >= 1");
    if (frame_count < 1) throw std::invalid_argument("scenario: frame_count must be >= 1");
    if (feature_dim < 1) throw std::invalid_argument("scenario: feature_dim must be >= 1");
    if (feature_dim < identity_count) {
      throw std::invalid_argument(
          "scenario: feature_dim must be at least identity_count; the requested "
          "separability is infeasible otherwise");
    }
    if (!(intra_identity_cos_min > 0.0 && intra_identity_cos_min <= 1.0)) {
      throw std::invalid_argument("scenario: intra_identity_cos_min must be in (0, 1]");
    }
    if (!(inter_identity_cos_max >= 0.0 && inter_identity_cos_max < 1.0)) {
      throw std::invalid_argument("scenario: inter_identity_cos_max must be in [0, 1)");
    }
    if (!(inter_identity_cos_max < intra_identity_cos_min)) {
      throw std::invalid_argument(
          "scenario: inter_identity_cos_max must be below intra_identity_cos_min");
    }
    if (position_noise < 0.0 || bbox_noise < 0.0 || walk_step < 0.0) {
      throw std::invalid_argument("scenario: noise magnitudes must be non-negative");
    }
    if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
      throw std::invalid_argument("scenario: dropout_prob must be in [0, 1)");
    }
  }
};

/// Periodic removal of one identity's detections per camera.
struct OcclusionSpec {
  std::vector<int> cameras;  // empty disables occlusion
  int period = 20;           // frames between window starts
  int duration = 20;         // frames removed per window
  std::uint64_t seed = 1;

  void validate() const {
    if (period < 1) throw std::invalid_argument("occlusion: period must be positive");
    if (duration < 1) throw std::invalid_argument("occlusion: duration must be positive");
    for (int c : cameras) {
      if (c < 0) throw std::invalid_argument("occlusion: negative camera id");
    }
  }
};

struct SyntheticScene {
  std::vector<LabelRecord> gt;        // noiseless boxes, every camera, every frame
  std::vector<Detection> detections;  // noisy boxes; detection_id equals the identity
};

namespace synth_detail {

inline std::vector<double> gaussian_vector(SplitMix64& rng, int dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

inline void subtract_projection(std::vector<double>& v, const std::vector<double>& unit) {
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * unit[i];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * unit[i];
}

inline double norm(const std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  return std::sqrt(n2);
}

/// Mutually orthonormal identity anchors via Gram-Schmidt on random draws.
inline std::vector<std::vector<double>> orthonormal_basis(SplitMix64& rng, int count, int dim) {
  std::vector<std::vector<double>> basis;
  basis.reserve(count);
  for (int i = 0; i < count; ++i) {
    int attempts = 0;
    while (true) {
      if (++attempts > 100) {
        throw std::logic_error("scenario: failed to build an orthonormal feature basis");
      }
      std::vector<double> v = gaussian_vector(rng, dim);
      for (const auto& b : basis) subtract_projection(v, b);
      const double n = norm(v);
      if (n > 1e-6) {
        for (double& x : v) x /= n;
        basis.push_back(std::move(v));
        break;
      }
    }
  }
  return basis;
}

/// Rotate `base` by an angle drawn in [0, half_angle] toward a random
/// orthogonal direction. Any two draws from the same cone stay within
/// 2 * half_angle of each other; draws from orthogonal cones stay at least
/// 90 degrees - 2 * half_angle apart.
inline FeatureVector perturb_in_cone(SplitMix64& rng, const std::vector<double>& base,
                                     double half_angle) {
  const int dim = static_cast<int>(base.size());
  const double angle = half_angle * rng.uniform01();
  // A 1-d space has no orthogonal direction; a zero angle needs none.
  if (angle <= 0.0 || dim == 1) return FeatureVector(base);
  int attempts = 0;
  while (true) {
    if (++attempts > 100) {
      throw std::logic_error("scenario: failed to draw a perturbation direction");
    }
    std::vector<double> u = gaussian_vector(rng, dim);
    subtract_projection(u, base);
    const double n = norm(u);
    if (n <= 1e-6) continue;
    FeatureVector v(dim);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int i = 0; i < dim; ++i) v[i] = c * base[i] + s * u[i] / n;
    return v;
  }
}

struct CameraModel {
  double angle;
  double scale;
  double off_x;
  double off_y;
  double base_box;
};

inline CameraModel camera_model(int c) {
  return CameraModel{0.25 * c - 0.15, 840.0 + 61.0 * c, 240.0 + 37.0 * c, 190.0 + 29.0 * c,
                     34.0 + 5.0 * c};
}

}  // namespace synth_detail

/// Generate a multi-camera scene: identities walk inside small discs placed
/// on distinct bearings from the origin, each camera observes all of them
/// through its own similarity transform, and appearance features are drawn
/// from per-identity cones whose half-angle enforces the configured
/// intra/inter cosine bounds.
inline SyntheticScene generate_scene(const ScenarioConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  const int n = cfg.identity_count;
  const int cams = cfg.camera_count;

  const auto basis = synth_detail::orthonormal_basis(rng, n, cfg.feature_dim);
  const double half_angle =
      0.5 * std::min(std::acos(std::clamp(cfg.intra_identity_cos_min, -1.0, 1.0)),
                     std::asin(std::clamp(cfg.inter_identity_cos_max, 0.0, 1.0)));

  // Home positions on distinct bearings in the first quadrant.
  std::vector<double> home_x(n), home_y(n), shape_w(n), shape_h(n);
  std::vector<double> pos_x(n), pos_y(n);
  for (int i = 0; i < n; ++i) {
    const double theta = 1.5707963267948966 * (i + 0.5) / n;
    const double golden = 0.6180339887498949 * (i + 1);
    const double radius = 0.55 + 0.35 * (golden - std::floor(golden));
    home_x[i] = radius * std::cos(theta);
    home_y[i] = radius * std::sin(theta);
    pos_x[i] = home_x[i];
    pos_y[i] = home_y[i];
    shape_w[i] = 1.0 + 0.15 * (rng.uniform01() - 0.5);
    shape_h[i] = 1.1 + 0.12 * (rng.uniform01() - 0.5);
  }
  const double walk_radius = 0.05;

  SyntheticScene scene;
  scene.gt.reserve(static_cast<std::size_t>(n) * cams * cfg.frame_count);
  scene.detections.reserve(scene.gt.capacity());

  for (std::int64_t t = 0; t < cfg.frame_count; ++t) {
    for (int i = 0; i < n; ++i) {
      pos_x[i] += rng.uniform(-cfg.walk_step, cfg.walk_step);
      pos_y[i] += rng.uniform(-cfg.walk_step, cfg.walk_step);
      const double dx = pos_x[i] - home_x[i];
      const double dy = pos_y[i] - home_y[i];
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist > walk_radius) {
        pos_x[i] = home_x[i] + dx * walk_radius / dist;
        pos_y[i] = home_y[i] + dy * walk_radius / dist;
      }

      for (int c = 0; c < cams; ++c) {
        const auto cam = synth_detail::camera_model(c);
        const double ca = std::cos(cam.angle);
        const double sa = std::sin(cam.angle);
        const double px = cam.off_x + cam.scale * (ca * pos_x[i] - sa * pos_y[i]);
        const double py = cam.off_y + cam.scale * (sa * pos_x[i] + ca * pos_y[i]);
        const double w = cam.base_box * shape_w[i];
        const double h = cam.base_box * shape_h[i];
        const BoundingBox gt_box{px - 0.5 * w, py - 0.5 * h, w, h};
        scene.gt.push_back(LabelRecord{t, c, i + 1, gt_box});

        FeatureVector feature = synth_detail::perturb_in_cone(rng, basis[i], half_angle);
        BoundingBox det_box = gt_box;
        det_box.x += rng.normal() * cfg.bbox_noise;
        det_box.y += rng.normal() * cfg.bbox_noise;
        det_box.w = std::max(1.0, det_box.w + rng.normal() * 0.5 * cfg.bbox_noise);
        det_box.h = std::max(1.0, det_box.h + rng.normal() * 0.5 * cfg.bbox_noise);
        PositionEstimate pos{pos_x[i] + rng.normal() * cfg.position_noise,
                             pos_y[i] + rng.normal() * cfg.position_noise};
        const double drop = rng.uniform01();
        if (drop < cfg.dropout_prob) continue;

        Detection d;
        d.frame = t;
        d.camera_id = c;
        d.detection_id = i + 1;  // the generator's identity tag
        d.bbox = det_box;
        d.confidence = 1.0;
        d.feature = std::move(feature);
        d.position = pos;
        scene.detections.push_back(std::move(d));
      }
    }
  }

  auto det_key = [](const Detection& d) {
    return std::tuple<std::int64_t, int, int>(d.frame, d.camera_id, d.detection_id);
  };
  std::sort(scene.detections.begin(), scene.detections.end(),
            [&](const Detection& a, const Detection& b) { return det_key(a) < det_key(b); });
  std::sort(scene.gt.begin(), scene.gt.end(), [](const LabelRecord& a, const LabelRecord& b) {
    return std::tuple<std::int64_t, int, int>(a.frame, a.camera_id, a.identity) <
           std::tuple<std::int64_t, int, int>(b.frame, b.camera_id, b.identity);
  });
  return scene;
}

/// Remove one identity's detections per camera per window. Windows start
/// every `period` frames from the first detection frame and cover the
/// window's first `duration` frames. In generated scenes the detection id
/// is the identity tag, so selection happens by detection id.
inline std::vector<Detection> inject_occlusions(std::vector<Detection> detections,
                                                const OcclusionSpec& spec) {
  spec.validate();
  if (spec.cameras.empty() || detections.empty()) return detections;

  std::int64_t min_f = detections.front().frame;
  std::int64_t max_f = detections.front().frame;
  for (const Detection& d : detections) {
    min_f = std::min(min_f, d.frame);
    max_f = std::max(max_f, d.frame);
  }

  std::vector<int> cameras = spec.cameras;
  std::sort(cameras.begin(), cameras.end());
  cameras.erase(std::unique(cameras.begin(), cameras.end()), cameras.end());

  SplitMix64 rng(spec.seed);
  // (camera, detection id) -> removal windows [from, to)
  std::set<std::tuple<int, int, std::int64_t, std::int64_t>> removals;
  for (int cam : cameras) {
    for (std::int64_t start = min_f; start <= max_f; start += spec.period) {
      const std::int64_t stop = start + spec.duration;
      std::set<int> present;
      for (const Detection& d : detections) {
        if (d.camera_id == cam && d.frame >= start && d.frame < stop) {
          present.insert(d.detection_id);
        }
      }
      if (present.empty()) continue;
      std::vector<int> ids(present.begin(), present.end());
      const int victim = ids[rng.below(static_cast<int>(ids.size()))];
      removals.emplace(cam, victim, start, stop);
    }
  }

  std::vector<Detection> kept;
  kept.reserve(detections.size());
  for (Detection& d : detections) {
    bool removed = false;
    for (const auto& [cam, id, from, to] : removals) {
      if (d.camera_id == cam && d.detection_id == id && d.frame >= from && d.frame < to) {
        removed = true;
        break;
      }
    }
    if (!removed) kept.push_back(std::move(d));
  }
  return kept;
}

}  // namespace mcmot
