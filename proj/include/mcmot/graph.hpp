#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mcmot/core.hpp"

namespace mcmot {

struct GraphConfig {
  double occurrence_alpha = 50.0;  // smoothing scale for co-occurrence counts
  int vertex_ttl = 60;             // frames a vertex survives without a refresh
  ScoreMode score_mode = ScoreMode::as_written;

  void validate() const {
    if (!(occurrence_alpha > 0.0)) {
      throw std::invalid_argument("graph config: occurrence_alpha must be positive");
    }
    if (vertex_ttl < 1) throw std::invalid_argument("graph config: vertex_ttl must be positive");
  }
};

struct GraphVertex {
  int vertex_id = 0;
  Tracklet tracklet;
  std::int64_t last_seen_frame = 0;
  std::optional<int> global_id;
};

struct GraphEdge {
  int a = 0;  // vertex ids, a < b
  int b = 0;
  double importance = 0.0;
  std::int64_t occurrences = 0;  // frames the endpoints shared a global id
  double relation = 0.0;         // box-neighbourhood agreement, in [0, 1]
  std::optional<double> feature_score;   // latest appearance score
  std::optional<double> position_score;  // latest position score
};

/// Diagnostics from one importance update pass.
struct ImportanceStats {
  double min_increment = std::numeric_limits<double>::infinity();
  double max_increment = -std::numeric_limits<double>::infinity();
  double share_sum = 0.0;         // sum of occurrence shares (position mode)
  std::int64_t occurrence_total = 0;
  long updated_edges = 0;
};

/// Saturating co-occurrence weight in [0, 1).
inline double smoothed_occurrence(std::int64_t occurrences, double alpha) {
  if (occurrences < 0) throw std::invalid_argument("smoothed_occurrence: negative count");
  if (!(alpha > 0.0)) throw std::invalid_argument("smoothed_occurrence: alpha must be positive");
  return 1.0 - std::exp(-static_cast<double>(occurrences) / alpha);
}

/// Cross-camera tracklet graph. Vertices are per-camera tracklets; an edge
/// exists for every pair of vertices on different cameras and accumulates
/// evidence that the two tracklets are the same person.
class AssocGraph {
 public:
  explicit AssocGraph(int camera_count, GraphConfig cfg = {})
      : camera_count_(camera_count), cfg_(cfg) {
    if (camera_count_ < 2) {
      throw std::invalid_argument("graph: camera_count must be at least 2");
    }
    cfg_.validate();
  }

  int camera_count() const { return camera_count_; }
  const GraphConfig& config() const { return cfg_; }
  const std::map<int, GraphVertex>& vertices() const { return vertices_; }
  const std::map<std::pair<int, int>, GraphEdge>& edges() const { return edges_; }

  const GraphEdge* edge(int a, int b) const {
    auto it = edges_.find(ordered(a, b));
    return it == edges_.end() ? nullptr : &it->second;
  }

  GraphEdge& edge_ref(int a, int b) {
    auto it = edges_.find(ordered(a, b));
    if (it == edges_.end()) {
      throw std::invalid_argument("graph: no edge between vertices " + std::to_string(a) +
                                  " and " + std::to_string(b));
    }
    return it->second;
  }

  std::optional<int> vertex_id_of(int camera_id, int local_id) const {
    auto it = track_to_vertex_.find({camera_id, local_id});
    if (it == track_to_vertex_.end()) return std::nullopt;
    return it->second;
  }

  /// Insert new vertices or refresh existing ones with this frame's
  /// tracklet states. New vertices get zeroed edges to every vertex on a
  /// different camera; same-camera pairs never get an edge.
  void upsert_vertices(std::span<const Tracklet> tracklets, std::int64_t frame) {
    std::set<std::pair<int, int>> seen;
    for (const Tracklet& t : tracklets) {
      if (t.camera_id < 0 || t.camera_id >= camera_count_) {
        throw std::invalid_argument("graph: tracklet camera " + std::to_string(t.camera_id) +
                                    " outside [0, " + std::to_string(camera_count_) + ")");
      }
      const std::pair<int, int> key{t.camera_id, t.local_id};
      if (!seen.insert(key).second) {
        throw std::invalid_argument("graph: duplicate tracklet (camera " +
                                    std::to_string(t.camera_id) + ", local " +
                                    std::to_string(t.local_id) + ") at frame " +
                                    std::to_string(frame));
      }
      auto it = track_to_vertex_.find(key);
      if (it != track_to_vertex_.end()) {
        GraphVertex& v = vertices_.at(it->second);
        v.tracklet = t;
        v.last_seen_frame = frame;
        continue;
      }
      const int vid = next_vertex_id_++;
      for (const auto& [ovid, other] : vertices_) {
        if (other.tracklet.camera_id == t.camera_id) continue;
        GraphEdge e;
        e.a = std::min(vid, ovid);
        e.b = std::max(vid, ovid);
        edges_.emplace(std::pair<int, int>{e.a, e.b}, e);
      }
      GraphVertex v;
      v.vertex_id = vid;
      v.tracklet = t;
      v.last_seen_frame = frame;
      vertices_.emplace(vid, std::move(v));
      track_to_vertex_.emplace(key, vid);
    }
  }

  /// Drop vertices unseen for more than vertex_ttl frames, with their edges.
  int prune_stale(std::int64_t frame) {
    std::vector<int> doomed;
    for (const auto& [vid, v] : vertices_) {
      if (frame - v.last_seen_frame > cfg_.vertex_ttl) doomed.push_back(vid);
    }
    for (int vid : doomed) {
      const GraphVertex& v = vertices_.at(vid);
      track_to_vertex_.erase({v.tracklet.camera_id, v.tracklet.local_id});
      vertices_.erase(vid);
      for (auto it = edges_.begin(); it != edges_.end();) {
        if (it->second.a == vid || it->second.b == vid) {
          it = edges_.erase(it);
        } else {
          ++it;
        }
      }
    }
    return static_cast<int>(doomed.size());
  }

  /// Refresh per-edge appearance and position scores from current
  /// tracklet states. The position score is left empty when either
  /// endpoint has no position estimate.
  void compute_similarities() {
    for (auto& [key, e] : edges_) {
      const Tracklet& ta = vertices_.at(e.a).tracklet;
      const Tracklet& tb = vertices_.at(e.b).tracklet;
      e.feature_score =
          sigmoid_score(cosine_similarity(ta.feature, tb.feature), cfg_.score_mode);
      if (ta.position && tb.position) {
        const double pa[2] = {ta.position->px, ta.position->py};
        const double pb[2] = {tb.position->px, tb.position->py};
        double cs;
        try {
          cs = cosine_similarity(std::span<const double>(pa, 2),
                                 std::span<const double>(pb, 2));
        } catch (const std::domain_error&) {
          throw std::domain_error(
              "graph: position estimate at the origin has no direction (vertices " +
              std::to_string(e.a) + ", " + std::to_string(e.b) + ")");
        }
        e.position_score = sigmoid_score(cs, cfg_.score_mode);
      } else {
        e.position_score.reset();
      }
    }
  }

  /// Importance update used when position estimates are available:
  /// each edge gains the mean of its position score, appearance score and
  /// its share of all co-occurrence counts.
  ImportanceStats update_importance_with_position() {
    ImportanceStats stats;
    double occurrence_sum = 0.0;
    for (const auto& [key, e] : edges_) {
      occurrence_sum += static_cast<double>(e.occurrences);
      stats.occurrence_total += e.occurrences;
    }
    for (auto& [key, e] : edges_) {
      if (!e.feature_score || !e.position_score) {
        throw std::logic_error("graph: importance update requires fresh similarity scores "
                               "on every edge");
      }
      const double share =
          occurrence_sum > 0.0 ? static_cast<double>(e.occurrences) / occurrence_sum : 0.0;
      const double inc = (*e.position_score + *e.feature_score + share) / 3.0;
      e.importance += inc;
      stats.share_sum += share;
      stats.min_increment = std::min(stats.min_increment, inc);
      stats.max_increment = std::max(stats.max_increment, inc);
      ++stats.updated_edges;
    }
    return stats;
  }

  /// Descending cosine similarities between this vertex's box 4-tuple and
  /// every other same-camera vertex's box. Captures where the tracklet sits
  /// relative to its in-camera neighbours.
  std::vector<double> neighbour_vector(int vertex_id) const {
    auto it = vertices_.find(vertex_id);
    if (it == vertices_.end()) {
      throw std::invalid_argument("graph: unknown vertex " + std::to_string(vertex_id));
    }
    const Tracklet& self = it->second.tracklet;
    std::vector<double> out;
    for (const auto& [ovid, other] : vertices_) {
      if (ovid == vertex_id || other.tracklet.camera_id != self.camera_id) continue;
      out.push_back(box_cosine(self.bbox, other.tracklet.bbox));
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  }

  /// Relation update used when positions are unavailable. Each edge's
  /// relation is folded toward the agreement of the two endpoints'
  /// neighbour vectors, truncated to their common length.
  void update_relation() {
    std::map<int, std::vector<double>> inv;
    for (const auto& [vid, v] : vertices_) inv.emplace(vid, neighbour_vector(vid));
    for (auto& [key, e] : edges_) {
      const std::vector<double>& a = inv.at(e.a);
      const std::vector<double>& b = inv.at(e.b);
      const std::size_t n = std::min(a.size(), b.size());
      double score = 0.0;
      if (n > 0) {
        for (std::size_t i = 0; i < n; ++i) {
          const double d = 1.0 - std::abs(a[i] - b[i]);
          score += d * d;
        }
        score /= static_cast<double>(n);
      }
      e.relation = std::clamp(0.5 * (e.relation + score), 0.0, 1.0);
    }
  }

  /// Importance update used when positions are unavailable: relation and
  /// appearance evidence, damped as the pair accumulates co-occurrences.
  ImportanceStats update_importance_without_position() {
    ImportanceStats stats;
    for (auto& [key, e] : edges_) {
      if (!e.feature_score) {
        throw std::logic_error("graph: importance update requires fresh similarity scores "
                               "on every edge");
      }
      const double q = smoothed_occurrence(e.occurrences, cfg_.occurrence_alpha);
      const double inc =
          (e.relation * q + *e.feature_score) / (1.0 + static_cast<double>(e.occurrences));
      e.importance += inc;
      stats.min_increment = std::min(stats.min_increment, inc);
      stats.max_increment = std::max(stats.max_increment, inc);
      ++stats.updated_edges;
    }
    return stats;
  }

  /// Bump occurrence counts on edges whose endpoints currently share a
  /// global id. Returns the number of edges bumped.
  long record_cooccurrence(const std::map<int, int>& labels) {
    long bumped = 0;
    for (auto& [key, e] : edges_) {
      auto ia = labels.find(e.a);
      auto ib = labels.find(e.b);
      if (ia != labels.end() && ib != labels.end() && ia->second == ib->second) {
        ++e.occurrences;
        ++bumped;
      }
    }
    return bumped;
  }

  void apply_labels(const std::map<int, int>& labels) {
    for (auto& [vid, v] : vertices_) {
      auto it = labels.find(vid);
      if (it != labels.end()) {
        v.global_id = it->second;
      } else {
        v.global_id.reset();
      }
    }
  }

  /// Edges whose endpoints share a camera. Always zero by construction;
  /// exposed so integration checks can prove it.
  long intra_camera_edge_count() const {
    long n = 0;
    for (const auto& [key, e] : edges_) {
      if (vertices_.at(e.a).tracklet.camera_id == vertices_.at(e.b).tracklet.camera_id) ++n;
    }
    return n;
  }

  void dump(std::ostream& os, std::int64_t frame) const {
    os << "graph frame=" << frame << " cameras=" << camera_count_
       << " vertices=" << vertices_.size() << " edges=" << edges_.size() << "\n";
    for (const auto& [vid, v] : vertices_) {
      os << "vertex id=" << vid << " camera=" << v.tracklet.camera_id
         << " local=" << v.tracklet.local_id << " last_seen=" << v.last_seen_frame
         << " global=" << (v.global_id ? std::to_string(*v.global_id) : "-")
         << " box=" << format_double(v.tracklet.bbox.x) << "," << format_double(v.tracklet.bbox.y)
         << "," << format_double(v.tracklet.bbox.w) << "," << format_double(v.tracklet.bbox.h);
      if (v.tracklet.position) {
        os << " position=" << format_double(v.tracklet.position->px) << ","
           << format_double(v.tracklet.position->py);
      } else {
        os << " position=-";
      }
      os << " hits=" << v.tracklet.hits << "\n";
    }
    for (const auto& [key, e] : edges_) {
      os << "edge a=" << e.a << " b=" << e.b << " importance=" << format_double(e.importance)
         << " occurrences=" << e.occurrences << " relation=" << format_double(e.relation)
         << " feature_score=" << (e.feature_score ? format_double(*e.feature_score) : "-")
         << " position_score=" << (e.position_score ? format_double(*e.position_score) : "-")
         << "\n";
    }
  }

 private:
  static std::pair<int, int> ordered(int a, int b) {
    return {std::min(a, b), std::max(a, b)};
  }

  static double box_cosine(const BoundingBox& a, const BoundingBox& b) {
    const double va[4] = {a.x, a.y, a.w, a.h};
    const double vb[4] = {b.x, b.y, b.w, b.h};
    return cosine_similarity(std::span<const double>(va, 4), std::span<const double>(vb, 4));
  }

  int camera_count_;
  GraphConfig cfg_;
  std::map<int, GraphVertex> vertices_;
  std::map<std::pair<int, int>, GraphEdge> edges_;
  std::map<std::pair<int, int>, int> track_to_vertex_;  // (camera, local) -> vertex
  int next_vertex_id_ = 1;
};

}  // namespace mcmot
