#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "mcmot/kalman.hpp"
#include "mcmot/synth.hpp"
#include "mcmot/tracker.hpp"

using Catch::Matchers::WithinAbs;
using namespace mcmot;

namespace {

Detection make_det(std::int64_t frame, int camera, int id, const BoundingBox& box,
                   FeatureVector feature = {1.0, 0.0},
                   std::optional<PositionEstimate> pos = {}) {
  Detection d;
  d.frame = frame;
  d.camera_id = camera;
  d.detection_id = id;
  d.bbox = box;
  d.feature = std::move(feature);
  d.position = pos;
  return d;
}

}  // namespace

TEST_CASE("filter init places the box measurement with preset uncertainty", "[kalman]") {
  const BoundingBox box{10, 20, 30, 40};
  const KalmanState st = kalman_init(box);
  REQUIRE_THAT(st.mean(0), WithinAbs(25.0, 1e-12));
  REQUIRE_THAT(st.mean(1), WithinAbs(40.0, 1e-12));
  REQUIRE_THAT(st.mean(2), WithinAbs(1200.0, 1e-12));
  REQUIRE_THAT(st.mean(3), WithinAbs(0.75, 1e-12));
  for (int i = 4; i < 7; ++i) REQUIRE(st.mean(i) == 0.0);
  const double expected[7] = {10, 10, 10, 10, 1e4, 1e4, 1e4};
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      REQUIRE(st.covariance(i, j) == (i == j ? expected[i] : 0.0));
    }
  }
  REQUIRE_THROWS_AS(kalman_init({0, 0, -1, 1}), std::invalid_argument);
}

TEST_CASE("state to box round trip recovers the box", "[kalman]") {
  const BoundingBox box{-3.5, 7.25, 12.0, 22.5};
  const BoundingBox back = box_from_state(kalman_init(box));
  REQUIRE_THAT(back.x, WithinAbs(box.x, 1e-9));
  REQUIRE_THAT(back.y, WithinAbs(box.y, 1e-9));
  REQUIRE_THAT(back.w, WithinAbs(box.w, 1e-9));
  REQUIRE_THAT(back.h, WithinAbs(box.h, 1e-9));
}

TEST_CASE("predict integrates velocities and inflates uncertainty", "[kalman]") {
  KalmanState st = kalman_init({0, 0, 10, 10});
  st.mean(4) = 2.0;
  st.mean(5) = 3.0;
  st.mean(6) = 5.0;
  const KalmanState out = kalman_predict(st);
  REQUIRE_THAT(out.mean(0), WithinAbs(7.0, 1e-12));
  REQUIRE_THAT(out.mean(1), WithinAbs(8.0, 1e-12));
  REQUIRE_THAT(out.mean(2), WithinAbs(105.0, 1e-12));
  REQUIRE_THAT(out.mean(3), WithinAbs(1.0, 1e-12));
  REQUIRE(out.covariance(0, 0) > st.covariance(0, 0));
  REQUIRE(out.covariance(2, 2) > st.covariance(2, 2));
  const Matrix7d diff = out.covariance - out.covariance.transpose();
  REQUIRE(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predict freezes area velocity instead of collapsing the box", "[kalman]") {
  KalmanState st = kalman_init({0, 0, 10, 10});
  st.mean(2) = 0.005;
  st.mean(6) = -0.01;
  const KalmanState out = kalman_predict(st);
  REQUIRE_THAT(out.mean(2), WithinAbs(0.005, 1e-15));
  REQUIRE(out.mean(6) == 0.0);
  REQUIRE(box_is_valid(box_from_state(out)));
}

TEST_CASE("update pulls the state toward the measurement", "[kalman]") {
  const KalmanState st = kalman_init({0, 0, 10, 10});
  const KalmanState out = kalman_update(st, {4, 0, 10, 10});
  // center x moves from 5 toward 9 with gain 10/11
  REQUIRE(out.mean(0) > 5.0);
  REQUIRE(out.mean(0) < 9.0);
  REQUIRE_THAT(out.mean(0), WithinAbs(5.0 + 4.0 * 10.0 / 11.0, 1e-9));
  REQUIRE(out.covariance(0, 0) < st.covariance(0, 0));
  const Matrix7d diff = out.covariance - out.covariance.transpose();
  REQUIRE(diff.cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 7; ++i) REQUIRE(out.covariance(i, i) > 0.0);
  REQUIRE_THROWS_AS(kalman_update(st, {0, 0, 0, 10}), std::invalid_argument);
}

TEST_CASE("repeated updates on a static box converge to it", "[kalman]") {
  const BoundingBox box{50, 60, 20, 30};
  KalmanState st = kalman_init(box);
  for (int i = 0; i < 20; ++i) {
    st = kalman_predict(st);
    st = kalman_update(st, box);
  }
  const BoundingBox out = box_from_state(st);
  REQUIRE_THAT(out.x, WithinAbs(box.x, 0.3));
  REQUIRE_THAT(out.y, WithinAbs(box.y, 0.3));
  REQUIRE_THAT(out.w, WithinAbs(box.w, 0.5));
  REQUIRE_THAT(out.h, WithinAbs(box.h, 0.5));
}

TEST_CASE("overlap association picks the nearest boxes", "[tracker]") {
  std::vector<Tracklet> tracks(2);
  tracks[0].bbox = {0, 0, 10, 10};
  tracks[0].feature = {1.0, 0.0};
  tracks[1].bbox = {5, 0, 10, 10};
  tracks[1].feature = {0.0, 1.0};
  std::vector<Detection> dets{make_det(0, 0, 1, {1, 0, 10, 10}, {0.0, 1.0}),
                              make_det(0, 0, 2, {4, 0, 10, 10}, {1.0, 0.0})};
  TrackerConfig cfg;
  cfg.mode = TrackerMode::sort;
  const Assignment by_overlap = associate(tracks, dets, cfg);
  REQUIRE(by_overlap.matches == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

  cfg.mode = TrackerMode::deepsort;
  cfg.appearance_weight = 0.0;  // appearance term only, overlap still gates
  const Assignment by_appearance = associate(tracks, dets, cfg);
  REQUIRE(by_appearance.matches == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("association refuses pairs below the overlap gate", "[tracker]") {
  std::vector<Tracklet> tracks(1);
  tracks[0].bbox = {0, 0, 10, 10};
  tracks[0].feature = {1.0, 0.0};
  std::vector<Detection> dets{make_det(0, 0, 1, {100, 100, 10, 10}, {1.0, 0.0})};
  const Assignment asg = associate(tracks, dets, TrackerConfig{});
  REQUIRE(asg.matches.empty());
  REQUIRE(asg.unmatched_tracks == std::vector<int>{0});
  REQUIRE(asg.unmatched_detections == std::vector<int>{0});
}

TEST_CASE("tracks confirm only after enough hits", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 3;
  CameraTracker tracker(0, cfg);
  const BoundingBox box{10, 10, 20, 20};

  auto emitted = tracker.step(0, std::vector<Detection>{make_det(0, 0, 1, box)});
  REQUIRE(emitted.empty());
  emitted = tracker.step(1, std::vector<Detection>{make_det(1, 0, 1, box)});
  REQUIRE(emitted.empty());
  emitted = tracker.step(2, std::vector<Detection>{make_det(2, 0, 1, box)});
  REQUIRE(emitted.size() == 1);
  REQUIRE(emitted[0].local_id == 1);
  REQUIRE(emitted[0].camera_id == 0);
  REQUIRE(emitted[0].hits == 3);
  REQUIRE(emitted[0].time_since_update == 0);
  REQUIRE(emitted[0].status == TrackStatus::confirmed);
}

TEST_CASE("tracks die after max_age consecutive misses", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 1;
  cfg.max_age = 2;
  CameraTracker tracker(0, cfg);
  const BoundingBox box{10, 10, 20, 20};
  REQUIRE(tracker.step(0, std::vector<Detection>{make_det(0, 0, 1, box)}).size() == 1);

  REQUIRE(tracker.step(1, {}).empty());
  REQUIRE(tracker.live_tracks().size() == 1);
  REQUIRE(tracker.step(2, {}).empty());
  REQUIRE(tracker.live_tracks().empty());
}

TEST_CASE("coasting keeps emitting briefly missed confirmed tracks", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 1;
  cfg.max_age = 10;
  cfg.coast_output_frames = 2;
  CameraTracker tracker(0, cfg);
  const BoundingBox box{10, 10, 20, 20};
  REQUIRE(tracker.step(0, std::vector<Detection>{make_det(0, 0, 1, box)}).size() == 1);

  auto emitted = tracker.step(1, {});
  REQUIRE(emitted.size() == 1);
  REQUIRE(emitted[0].time_since_update == 1);
  REQUIRE(box_is_valid(emitted[0].bbox));
  emitted = tracker.step(2, {});
  REQUIRE(emitted.size() == 1);
  REQUIRE(emitted[0].time_since_update == 2);
  REQUIRE(tracker.step(3, {}).empty());
  REQUIRE(tracker.live_tracks().size() == 1);

  CameraTracker strict(0, [] {
    TrackerConfig c;
    c.min_hits = 1;
    c.max_age = 10;
    return c;
  }());
  REQUIRE(strict.step(0, std::vector<Detection>{make_det(0, 0, 1, box)}).size() == 1);
  REQUIRE(strict.step(1, {}).empty());
}

TEST_CASE("parallel detections get distinct local ids in sorted order", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 1;
  CameraTracker tracker(2, cfg);
  std::vector<Detection> dets{make_det(0, 2, 1, {0, 0, 10, 10}),
                              make_det(0, 2, 2, {50, 0, 10, 10})};
  const auto emitted = tracker.step(0, dets);
  REQUIRE(emitted.size() == 2);
  REQUIRE(emitted[0].local_id == 1);
  REQUIRE(emitted[1].local_id == 2);
  REQUIRE(emitted[0].camera_id == 2);
}

TEST_CASE("matched tracks fold in features and refresh positions", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 1;
  CameraTracker tracker(0, cfg);
  const BoundingBox box{10, 10, 20, 20};
  auto emitted = tracker.step(
      0, std::vector<Detection>{make_det(0, 0, 1, box, {1.0, 0.0},
                                         PositionEstimate{1.0, 2.0})});
  REQUIRE(emitted.size() == 1);
  REQUIRE(emitted[0].position);

  // Second detection has no position: the stored one must survive.
  emitted = tracker.step(1, std::vector<Detection>{make_det(1, 0, 1, box, {0.0, 1.0})});
  REQUIRE(emitted.size() == 1);
  REQUIRE(emitted[0].hits == 2);
  REQUIRE(emitted[0].position);
  REQUIRE(emitted[0].position->px == 1.0);
  REQUIRE(emitted[0].position->py == 2.0);
  REQUIRE_THAT(emitted[0].feature[0], WithinAbs(0.7071067811865475, 1e-12));
  REQUIRE_THAT(emitted[0].feature[1], WithinAbs(0.7071067811865475, 1e-12));
}

TEST_CASE("tracker rejects inconsistent step input", "[tracker]") {
  CameraTracker tracker(0);
  const BoundingBox box{0, 0, 10, 10};
  tracker.step(5, std::vector<Detection>{make_det(5, 0, 1, box)});
  REQUIRE_THROWS_AS(tracker.step(5, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(tracker.step(4, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(tracker.step(6, std::vector<Detection>{make_det(6, 1, 1, box)}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(tracker.step(6, std::vector<Detection>{make_det(7, 0, 1, box)}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      tracker.step(6, std::vector<Detection>{make_det(6, 0, 1, {0, 0, -1, 1})}),
      std::invalid_argument);
}

TEST_CASE("tracker config validation catches bad knobs", "[tracker]") {
  TrackerConfig cfg;
  cfg.iou_gate = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.appearance_weight = 1.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_age = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.min_hits = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.coast_output_frames = -1;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("identical inputs give identical tracker outputs", "[tracker]") {
  SplitMix64 rng(5);
  std::vector<std::vector<Detection>> frames;
  for (std::int64_t t = 0; t < 60; ++t) {
    std::vector<Detection> dets;
    for (int id = 0; id < 3; ++id) {
      if (rng.uniform01() < 0.1) continue;  // occasional miss
      BoundingBox box{40.0 * id + rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 20, 20};
      FeatureVector f{1.0 + 0.01 * rng.normal(), 0.1 * id + 0.01 * rng.normal(), 0.5};
      dets.push_back(make_det(t, 0, id + 1, box, std::move(f),
                              PositionEstimate{1.0 + id, 2.0 + rng.uniform01()}));
    }
    frames.push_back(std::move(dets));
  }

  CameraTracker a(0), b(0);
  for (std::int64_t t = 0; t < 60; ++t) {
    const auto ea = a.step(t, frames[static_cast<std::size_t>(t)]);
    const auto eb = b.step(t, frames[static_cast<std::size_t>(t)]);
    REQUIRE(ea.size() == eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
      REQUIRE(ea[i].local_id == eb[i].local_id);
      REQUIRE(ea[i].hits == eb[i].hits);
      REQUIRE(ea[i].bbox.x == eb[i].bbox.x);
      REQUIRE(ea[i].bbox.y == eb[i].bbox.y);
      REQUIRE(ea[i].bbox.w == eb[i].bbox.w);
      REQUIRE(ea[i].bbox.h == eb[i].bbox.h);
      REQUIRE(ea[i].feature == eb[i].feature);
    }
  }
}

TEST_CASE("a steady stream keeps one identity per object", "[tracker]") {
  TrackerConfig cfg;
  cfg.min_hits = 2;
  CameraTracker tracker(0, cfg);
  std::set<int> seen_ids;
  for (std::int64_t t = 0; t < 40; ++t) {
    std::vector<Detection> dets{
        make_det(t, 0, 1, {0.5 * static_cast<double>(t), 0, 20, 20}),
        make_det(t, 0, 2, {60 + 0.5 * static_cast<double>(t), 0, 20, 20})};
    for (const Tracklet& tr : tracker.step(t, dets)) seen_ids.insert(tr.local_id);
  }
  REQUIRE(seen_ids == std::set<int>{1, 2});
}
