#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmot/core.hpp"
#include "mcmot/hungarian.hpp"

namespace mcmot {

/// One identity-labelled box: ground truth or hypothesis.
struct LabelRecord {
  std::int64_t frame = 0;
  int camera_id = 0;
  int identity = 0;
  BoundingBox bbox;
};

/// Multi-camera streams are folded into one evaluation timeline by
/// spreading each frame over a camera slot.
inline std::int64_t encode_frame_key(std::int64_t frame, int camera_id) {
  if (frame < 0) throw std::invalid_argument("encode_frame_key: negative frame");
  if (camera_id < 0 || camera_id >= 1000) {
    throw std::invalid_argument("encode_frame_key: camera_id must be in [0, 1000), got " +
                                std::to_string(camera_id));
  }
  return frame * 1000 + camera_id;
}

struct MetricsReport {
  double mota = 0.0;
  double idf1 = 0.0;
  long idsw = 0;
  long fp = 0;
  long fn = 0;
  long gt_total = 0;
  long hyp_total = 0;
};

namespace metrics_detail {
constexpr double kForbiddenCost = 1e6;
constexpr double kSolverGate = 1e5;
}  // namespace metrics_detail

/// Event-counting tracker-evaluation accumulator. Matching prefers the
/// previous frame's correspondence where it is still valid, resolves the
/// rest with a minimum-cost assignment on 1 - IoU, and counts misses,
/// false positives and identity switches per encoded frame.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(double iou_threshold = 0.5) : iou_threshold_(iou_threshold) {
    if (!(iou_threshold_ > 0.0 && iou_threshold_ <= 1.0)) {
      throw std::invalid_argument("metrics: iou_threshold must be in (0, 1]");
    }
  }

  double iou_threshold() const { return iou_threshold_; }
  long false_positives() const { return fp_; }
  long misses() const { return fn_; }
  long switches() const { return idsw_; }
  long gt_total() const { return gt_total_; }
  long hyp_total() const { return hyp_total_; }
  long matches_total() const { return matches_; }
  const std::map<std::pair<int, int>, long>& cooccurrence() const { return cooc_; }

  void accumulate_frame(std::int64_t frame, int camera_id, std::span<const LabelRecord> gt,
                        std::span<const LabelRecord> hyp) {
    const std::int64_t key = encode_frame_key(frame, camera_id);
    if (last_key_ && key <= *last_key_) {
      throw std::invalid_argument("metrics: encoded frame keys must strictly increase (" +
                                  std::to_string(key) + " after " +
                                  std::to_string(*last_key_) + ")");
    }
    check_records("ground truth", frame, camera_id, gt);
    check_records("hypothesis", frame, camera_id, hyp);

    gt_total_ += static_cast<long>(gt.size());
    hyp_total_ += static_cast<long>(hyp.size());

    std::vector<std::vector<bool>> valid(gt.size(), std::vector<bool>(hyp.size(), false));
    std::vector<std::vector<double>> overlap(gt.size(), std::vector<double>(hyp.size(), 0.0));
    for (std::size_t g = 0; g < gt.size(); ++g) {
      for (std::size_t h = 0; h < hyp.size(); ++h) {
        overlap[g][h] = iou(gt[g].bbox, hyp[h].bbox);
        valid[g][h] = overlap[g][h] >= iou_threshold_;
        if (valid[g][h]) ++cooc_[{gt[g].identity, hyp[h].identity}];
      }
    }

    // Keep still-valid correspondences from earlier frames.
    std::vector<int> gt_match(gt.size(), -1);
    std::vector<bool> hyp_used(hyp.size(), false);
    for (std::size_t g = 0; g < gt.size(); ++g) {
      auto lm = last_match_.find(gt[g].identity);
      if (lm == last_match_.end()) continue;
      for (std::size_t h = 0; h < hyp.size(); ++h) {
        if (!hyp_used[h] && hyp[h].identity == lm->second && valid[g][h]) {
          gt_match[g] = static_cast<int>(h);
          hyp_used[h] = true;
          break;
        }
      }
    }

    // Optimal assignment over the remainder.
    std::vector<int> free_g, free_h;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_match[g] < 0) free_g.push_back(static_cast<int>(g));
    }
    for (std::size_t h = 0; h < hyp.size(); ++h) {
      if (!hyp_used[h]) free_h.push_back(static_cast<int>(h));
    }
    std::vector<std::vector<double>> cost(free_g.size(),
                                          std::vector<double>(free_h.size(), 0.0));
    for (std::size_t i = 0; i < free_g.size(); ++i) {
      for (std::size_t j = 0; j < free_h.size(); ++j) {
        cost[i][j] = valid[free_g[i]][free_h[j]] ? 1.0 - overlap[free_g[i]][free_h[j]]
                                                 : metrics_detail::kForbiddenCost;
      }
    }
    const Assignment asg = hungarian_assign(cost, metrics_detail::kSolverGate);
    for (const auto& [i, j] : asg.matches) {
      gt_match[free_g[i]] = free_h[j];
      hyp_used[free_h[j]] = true;
    }

    long matched = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_match[g] < 0) continue;
      ++matched;
      const int gid = gt[g].identity;
      const int hid = hyp[gt_match[g]].identity;
      auto lm = last_match_.find(gid);
      if (lm != last_match_.end() && lm->second != hid) ++idsw_;
      last_match_[gid] = hid;
    }
    fn_ += static_cast<long>(gt.size()) - matched;
    fp_ += static_cast<long>(hyp.size()) - matched;
    matches_ += matched;
    last_key_ = key;
  }

 private:
  static void check_records(const char* what, std::int64_t frame, int camera_id,
                            std::span<const LabelRecord> records) {
    std::vector<int> ids;
    for (const LabelRecord& r : records) {
      if (r.frame != frame || r.camera_id != camera_id) {
        throw std::invalid_argument(std::string("metrics: ") + what + " record for (frame " +
                                    std::to_string(r.frame) + ", camera " +
                                    std::to_string(r.camera_id) +
                                    ") passed while accumulating (frame " +
                                    std::to_string(frame) + ", camera " +
                                    std::to_string(camera_id) + ")");
      }
      if (!box_is_valid(r.bbox)) {
        throw std::invalid_argument(std::string("metrics: ") + what + " record with invalid box "
                                    "(frame " + std::to_string(frame) + ", camera " +
                                    std::to_string(camera_id) + ", identity " +
                                    std::to_string(r.identity) + ")");
      }
      ids.push_back(r.identity);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw std::invalid_argument(std::string("metrics: duplicate ") + what +
                                  " identity in (frame " + std::to_string(frame) +
                                  ", camera " + std::to_string(camera_id) + ")");
    }
  }

  double iou_threshold_;
  long fp_ = 0;
  long fn_ = 0;
  long idsw_ = 0;
  long gt_total_ = 0;
  long hyp_total_ = 0;
  long matches_ = 0;
  std::map<int, int> last_match_;               // gt identity -> hypothesis identity
  std::map<std::pair<int, int>, long> cooc_;    // (gt id, hyp id) -> valid-overlap frames
  std::optional<std::int64_t> last_key_;
};

inline double compute_mota(const MetricsAccumulator& acc) {
  if (acc.gt_total() == 0) {
    throw std::domain_error("compute_mota: no ground-truth objects, metric undefined");
  }
  const double errors =
      static_cast<double>(acc.misses() + acc.false_positives() + acc.switches());
  return 100.0 * (1.0 - errors / static_cast<double>(acc.gt_total()));
}

/// Identity F1: the best one-to-one identity mapping between ground-truth
/// and hypothesis ids, scored by how many box-frames it explains.
inline double compute_idf1(const MetricsAccumulator& acc) {
  if (acc.gt_total() == 0) {
    throw std::domain_error("compute_idf1: no ground-truth objects, metric undefined");
  }
  std::vector<int> gt_ids, hyp_ids;
  for (const auto& [key, n] : acc.cooccurrence()) {
    gt_ids.push_back(key.first);
    hyp_ids.push_back(key.second);
  }
  std::sort(gt_ids.begin(), gt_ids.end());
  gt_ids.erase(std::unique(gt_ids.begin(), gt_ids.end()), gt_ids.end());
  std::sort(hyp_ids.begin(), hyp_ids.end());
  hyp_ids.erase(std::unique(hyp_ids.begin(), hyp_ids.end()), hyp_ids.end());

  double idtp = 0.0;
  if (!gt_ids.empty() && !hyp_ids.empty()) {
    std::vector<std::vector<double>> cost(gt_ids.size(),
                                          std::vector<double>(hyp_ids.size(), 0.0));
    for (std::size_t i = 0; i < gt_ids.size(); ++i) {
      for (std::size_t j = 0; j < hyp_ids.size(); ++j) {
        auto it = acc.cooccurrence().find({gt_ids[i], hyp_ids[j]});
        if (it != acc.cooccurrence().end()) cost[i][j] = -static_cast<double>(it->second);
      }
    }
    const Assignment asg = hungarian_assign(cost, 1e18);
    for (const auto& [i, j] : asg.matches) idtp += -cost[i][j];
  }
  return 200.0 * idtp / static_cast<double>(acc.gt_total() + acc.hyp_total());
}

inline MetricsReport compute_report(const MetricsAccumulator& acc) {
  MetricsReport r;
  r.mota = compute_mota(acc);
  r.idf1 = compute_idf1(acc);
  r.idsw = acc.switches();
  r.fp = acc.false_positives();
  r.fn = acc.misses();
  r.gt_total = acc.gt_total();
  r.hyp_total = acc.hyp_total();
  return r;
}

/// Group two record streams by encoded frame key and run the accumulator
/// over the union of keys in order.
inline MetricsReport evaluate_sequences(std::span<const LabelRecord> gt,
                                        std::span<const LabelRecord> hyp,
                                        double iou_threshold = 0.5) {
  std::map<std::int64_t, std::pair<std::vector<LabelRecord>, std::vector<LabelRecord>>> frames;
  for (const LabelRecord& r : gt) {
    frames[encode_frame_key(r.frame, r.camera_id)].first.push_back(r);
  }
  for (const LabelRecord& r : hyp) {
    frames[encode_frame_key(r.frame, r.camera_id)].second.push_back(r);
  }
  MetricsAccumulator acc(iou_threshold);
  for (const auto& [key, lists] : frames) {
    acc.accumulate_frame(key / 1000, static_cast<int>(key % 1000), lists.first, lists.second);
  }
  return compute_report(acc);
}

}  // namespace mcmot
