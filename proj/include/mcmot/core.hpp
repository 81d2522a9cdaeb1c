#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcmot {

/// Axis-aligned box in pixel units; (x, y) is the top-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  double area() const { return w * h; }
};

inline bool box_is_valid(const BoundingBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
         std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

/// Appearance embedding. Every vector in a run shares one dimension,
/// validated at ingestion.
using FeatureVector = std::vector<double>;

/// Scene-plane position estimate in metres.
struct PositionEstimate {
  double px = 0.0;
  double py = 0.0;
};

/// One camera-frame observation.
struct Detection {
  std::int64_t frame = 0;
  int camera_id = 0;
  int detection_id = 0;  // unique within (frame, camera_id)
  BoundingBox bbox;
  double confidence = 1.0;
  FeatureVector feature;
  std::optional<PositionEstimate> position;
};

enum class TrackStatus { tentative, confirmed, lost };

/// Per-camera identity hypothesis. The tracker owns the motion state;
/// this is the view every downstream consumer sees.
struct Tracklet {
  int local_id = 0;  // unique within camera for the whole run
  int camera_id = 0;
  FeatureVector feature;  // aggregated, unit norm
  std::optional<PositionEstimate> position;
  BoundingBox bbox;
  int hits = 0;
  int age = 0;
  int time_since_update = 0;
  TrackStatus status = TrackStatus::tentative;
};

/// Cross-camera identity label emitted per tracklet per frame.
struct LabelledRecord {
  std::int64_t frame = 0;
  int camera_id = 0;
  int local_track_id = 0;
  int global_id = 0;
  BoundingBox bbox;
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: length mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw std::invalid_argument("cosine_similarity: empty operands");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0.0) throw std::domain_error("cosine_similarity: first operand has zero norm");
  if (bb <= 0.0) throw std::domain_error("cosine_similarity: second operand has zero norm");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

/// How a cosine similarity is turned into the per-edge score in (0, 1).
/// `as_written` is 1 - sigmoid(cos), which grows as vectors diverge;
/// `sigma_of_cos` is plain sigmoid(cos), which grows with similarity.
enum class ScoreMode { as_written, sigma_of_cos };

inline double sigmoid_score(double cos_sim, ScoreMode mode = ScoreMode::as_written) {
  if (!std::isfinite(cos_sim)) {
    throw std::invalid_argument("sigmoid_score: cosine similarity must be finite");
  }
  const double sig = 1.0 / (1.0 + std::exp(-cos_sim));
  return mode == ScoreMode::as_written ? 1.0 - sig : sig;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x, b.x);
  const double iy1 = std::max(a.y, b.y);
  const double ix2 = std::min(a.x + a.w, b.x + b.w);
  const double iy2 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Rescale to unit Euclidean norm; a zero-norm input is a domain error.
inline FeatureVector normalized(FeatureVector v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw std::domain_error("normalized: vector has zero or non-finite norm");
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

/// Fold one more observation into a running mean, then re-normalize.
/// `count` is the number of observations already folded into `old_mean`.
inline FeatureVector aggregate_feature(const FeatureVector& old_mean,
                                       const FeatureVector& incoming,
                                       long count) {
  if (old_mean.size() != incoming.size()) {
    throw std::invalid_argument("aggregate_feature: dimension mismatch (" +
                                std::to_string(old_mean.size()) + " vs " +
                                std::to_string(incoming.size()) + ")");
  }
  if (old_mean.empty()) throw std::invalid_argument("aggregate_feature: empty vectors");
  if (count < 1) throw std::invalid_argument("aggregate_feature: count must be positive");
  FeatureVector mean(old_mean.size());
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    mean[i] = (old_mean[i] * n + incoming[i]) / (n + 1.0);
  }
  return normalized(std::move(mean));
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, p);
}

}  // namespace mcmot
