#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcmot/core.hpp"
#include "mcmot/hungarian.hpp"
#include "mcmot/kalman.hpp"

namespace mcmot {

enum class TrackerMode { sort, deepsort };

struct TrackerConfig {
  TrackerMode mode = TrackerMode::sort;
  double iou_gate = 0.3;           // minimum overlap for a track/detection pair
  double appearance_weight = 0.5;  // weight of the overlap term in deepsort cost
  int max_age = 30;                // frames a track may go unmatched before deletion
  int min_hits = 3;                // matches needed before a track is emitted
  int coast_output_frames = 0;     // also emit confirmed tracks missed up to this many frames

  void validate() const {
    if (!(iou_gate > 0.0 && iou_gate <= 1.0)) {
      throw std::invalid_argument("tracker config: iou_gate must be in (0, 1]");
    }
    if (!(appearance_weight >= 0.0 && appearance_weight <= 1.0)) {
      throw std::invalid_argument("tracker config: appearance_weight must be in [0, 1]");
    }
    if (max_age < 1) throw std::invalid_argument("tracker config: max_age must be positive");
    if (min_hits < 1) throw std::invalid_argument("tracker config: min_hits must be positive");
    if (coast_output_frames < 0) {
      throw std::invalid_argument("tracker config: coast_output_frames must be non-negative");
    }
  }
};

namespace tracker_detail {
// Pairs failing the overlap gate get a sentinel cost far above the solver
// gate, so they can never survive as matches.
constexpr double kForbiddenCost = 1e6;
constexpr double kSolverGate = 1e5;
}  // namespace tracker_detail

/// Cost-based matching of existing tracks against one frame's detections.
/// sort mode: cost = 1 - IoU. deepsort mode additionally blends the
/// appearance term (1 - cos)/2. Pairs with IoU below cfg.iou_gate are
/// excluded in both modes.
inline Assignment associate(std::span<const Tracklet> tracks,
                            std::span<const Detection> detections,
                            const TrackerConfig& cfg) {
  cfg.validate();
  if (tracks.empty() || detections.empty()) {
    // An empty side leaves the cost matrix shapeless; report everything
    // unmatched directly.
    Assignment out;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      out.unmatched_tracks.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < detections.size(); ++j) {
      out.unmatched_detections.push_back(static_cast<int>(j));
    }
    return out;
  }
  std::vector<std::vector<double>> cost(tracks.size(),
                                        std::vector<double>(detections.size(), 0.0));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const double ov = iou(tracks[i].bbox, detections[j].bbox);
      if (ov < cfg.iou_gate) {
        cost[i][j] = tracker_detail::kForbiddenCost;
        continue;
      }
      if (cfg.mode == TrackerMode::sort) {
        cost[i][j] = 1.0 - ov;
      } else {
        const double cs = cosine_similarity(tracks[i].feature, detections[j].feature);
        cost[i][j] = cfg.appearance_weight * (1.0 - ov) +
                     (1.0 - cfg.appearance_weight) * 0.5 * (1.0 - cs);
      }
    }
  }
  return hungarian_assign(cost, tracker_detail::kSolverGate);
}

/// Online per-camera tracker: predict, associate, update, manage lifecycle.
/// Emits confirmed tracks; with coast_output_frames > 0 a confirmed track
/// missed for at most that many frames is also emitted at its predicted box.
class CameraTracker {
 public:
  explicit CameraTracker(int camera_id, TrackerConfig cfg = {})
      : camera_id_(camera_id), cfg_(cfg) {
    cfg_.validate();
  }

  int camera_id() const { return camera_id_; }
  const TrackerConfig& config() const { return cfg_; }

  /// All live tracks including tentative ones, sorted by local id.
  std::vector<Tracklet> live_tracks() const {
    std::vector<Tracklet> out;
    out.reserve(tracks_.size());
    for (const auto& t : tracks_) out.push_back(t.info);
    return out;
  }

  std::vector<Tracklet> step(std::int64_t frame, std::span<const Detection> detections) {
    if (started_ && frame <= last_frame_) {
      throw std::invalid_argument("tracker: camera " + std::to_string(camera_id_) +
                                  " got frame " + std::to_string(frame) +
                                  " after frame " + std::to_string(last_frame_));
    }
    for (const Detection& d : detections) {
      if (d.camera_id != camera_id_) {
        throw std::invalid_argument("tracker: camera " + std::to_string(camera_id_) +
                                    " got a detection for camera " +
                                    std::to_string(d.camera_id));
      }
      if (d.frame != frame) {
        throw std::invalid_argument("tracker: camera " + std::to_string(camera_id_) +
                                    " got a detection for frame " + std::to_string(d.frame) +
                                    " while stepping frame " + std::to_string(frame));
      }
      if (!box_is_valid(d.bbox)) {
        throw std::invalid_argument("tracker: invalid detection box (camera " +
                                    std::to_string(camera_id_) + ", frame " +
                                    std::to_string(frame) + ", detection " +
                                    std::to_string(d.detection_id) + ")");
      }
    }

    for (Track& t : tracks_) {
      t.kalman = kalman_predict(t.kalman);
      t.info.bbox = box_from_state(t.kalman);
      t.info.age += 1;
      t.info.time_since_update += 1;
    }

    std::vector<Tracklet> views;
    views.reserve(tracks_.size());
    for (const Track& t : tracks_) views.push_back(t.info);
    const Assignment asg = associate(views, detections, cfg_);

    for (const auto& [ti, di] : asg.matches) {
      Track& t = tracks_[ti];
      const Detection& d = detections[di];
      t.kalman = kalman_update(t.kalman, d.bbox);
      t.info.bbox = box_from_state(t.kalman);
      t.info.feature = aggregate_feature(t.info.feature, normalized(d.feature), t.info.hits);
      if (d.position) t.info.position = d.position;
      t.info.hits += 1;
      t.info.time_since_update = 0;
      if (t.info.status == TrackStatus::tentative && t.info.hits >= cfg_.min_hits) {
        t.info.status = TrackStatus::confirmed;
      }
    }

    for (int di : asg.unmatched_detections) {
      const Detection& d = detections[di];
      Track t;
      t.kalman = kalman_init(d.bbox);
      t.info.local_id = next_local_id_++;
      t.info.camera_id = camera_id_;
      t.info.feature = normalized(d.feature);
      t.info.position = d.position;
      t.info.bbox = d.bbox;
      t.info.hits = 1;
      t.info.age = 0;
      t.info.time_since_update = 0;
      t.info.status =
          cfg_.min_hits <= 1 ? TrackStatus::confirmed : TrackStatus::tentative;
      tracks_.push_back(std::move(t));
    }

    std::erase_if(tracks_, [this](Track& t) {
      if (t.info.time_since_update >= cfg_.max_age) {
        t.info.status = TrackStatus::lost;
        return true;
      }
      return false;
    });

    last_frame_ = frame;
    started_ = true;

    std::vector<Tracklet> emitted;
    for (const Track& t : tracks_) {
      if (t.info.status == TrackStatus::confirmed &&
          t.info.time_since_update <= cfg_.coast_output_frames) {
        emitted.push_back(t.info);
      }
    }
    std::sort(emitted.begin(), emitted.end(),
              [](const Tracklet& a, const Tracklet& b) { return a.local_id < b.local_id; });
    return emitted;
  }

 private:
  struct Track {
    Tracklet info;
    KalmanState kalman;
  };

  int camera_id_;
  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  int next_local_id_ = 1;
  std::int64_t last_frame_ = 0;
  bool started_ = false;
};

}  // namespace mcmot
