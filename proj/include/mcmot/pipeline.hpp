#pragma once

#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcmot/community.hpp"
#include "mcmot/core.hpp"
#include "mcmot/graph.hpp"
#include "mcmot/io.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot {

struct PipelineConfig {
  int camera_count = 0;
  int feature_dim = 0;
  bool use_position = true;
  TrackerConfig tracker;
  double alpha = 50.0;   // co-occurrence smoothing scale
  double gamma = 1.0;    // modularity resolution
  int vertex_ttl = 60;   // frames a graph vertex outlives its tracklet
  ScoreMode score_mode = ScoreMode::as_written;
  double iou_match_threshold = 0.5;  // evaluation overlap threshold
  std::uint64_t seed = 0;            // reserved for stochastic extensions

  void validate() const {
    if (camera_count < 2) {
      throw std::invalid_argument("pipeline config: camera_count must be at least 2");
    }
    if (feature_dim < 1) {
      throw std::invalid_argument("pipeline config: feature_dim must be positive");
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("pipeline config: alpha must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("pipeline config: gamma must be positive");
    if (vertex_ttl < 1) {
      throw std::invalid_argument("pipeline config: vertex_ttl must be positive");
    }
    if (!(iou_match_threshold > 0.0 && iou_match_threshold <= 1.0)) {
      throw std::invalid_argument("pipeline config: iou_match_threshold must be in (0, 1]");
    }
    tracker.validate();
  }
};

/// Detections grouped per camera and frame, plus optional ground truth.
struct InputStreams {
  int camera_count = 0;
  std::vector<std::map<std::int64_t, std::vector<Detection>>> per_camera;
  std::vector<LabelRecord> gt;
  bool have_gt = false;
  bool positions_available = false;

  std::size_t detection_count() const {
    std::size_t n = 0;
    for (const auto& cam : per_camera) {
      for (const auto& [frame, dets] : cam) n += dets.size();
    }
    return n;
  }
};

/// Per-run integration diagnostics; every violation counter stays zero in a
/// correct run.
struct StructuralStats {
  long frames_processed = 0;
  long intra_camera_edge_violations = 0;
  long community_camera_violations = 0;
  long duplicate_global_id_violations = 0;
  long evicted_vertices = 0;
  long pruned_vertices = 0;
  double importance_increment_min = std::numeric_limits<double>::infinity();
  double importance_increment_max = -std::numeric_limits<double>::infinity();
  double max_share_sum_error = 0.0;
  long importance_updates = 0;
};

struct RunOutput {
  std::vector<LabelledRecord> labelled;
  std::optional<MetricsReport> report;
  std::optional<std::string> graph_dump;
  StructuralStats structural;
};

inline InputStreams make_streams(std::span<const Detection> detections, int camera_count) {
  if (camera_count < 2) {
    throw std::invalid_argument("make_streams: camera_count must be at least 2");
  }
  InputStreams s;
  s.camera_count = camera_count;
  s.per_camera.resize(camera_count);
  bool all_positions = true;
  for (const Detection& d : detections) {
    if (d.camera_id < 0 || d.camera_id >= camera_count) {
      throw std::invalid_argument("make_streams: detection camera " +
                                  std::to_string(d.camera_id) + " outside [0, " +
                                  std::to_string(camera_count) + ")");
    }
    if (!d.position) all_positions = false;
    s.per_camera[d.camera_id][d.frame].push_back(d);
  }
  s.positions_available = !detections.empty() && all_positions;
  return s;
}

/// Load detection, feature and optional ground-truth files. When any
/// detection lacks a position estimate, position use is switched off on the
/// config with a warning.
inline InputStreams read_inputs(const std::string& detections_path,
                                const std::string& features_path,
                                const std::string& gt_path, PipelineConfig& cfg) {
  cfg.validate();
  std::vector<Detection> dets = read_detections_csv(detections_path, cfg.camera_count);
  attach_features_csv(features_path, cfg.feature_dim, dets);
  InputStreams streams = make_streams(dets, cfg.camera_count);
  if (!gt_path.empty()) {
    streams.gt = read_labels_csv(gt_path, cfg.camera_count);
    if (streams.gt.empty()) {
      throw input_error(gt_path + ": ground truth is empty; metrics would be undefined");
    }
    streams.have_gt = true;
  }
  if (cfg.use_position && !streams.positions_available && !dets.empty()) {
    cfg.use_position = false;
    log_message(LogLevel::warn,
                "warning: not every detection carries a position estimate; "
                "continuing without positions");
  }
  if (cfg.use_position) {
    for (const Detection& d : dets) {
      if (d.position && d.position->px == 0.0 && d.position->py == 0.0) {
        throw input_error(detections_path + ": position estimate at the origin has no "
                          "direction (frame " + std::to_string(d.frame) + ", camera " +
                          std::to_string(d.camera_id) + ", id " +
                          std::to_string(d.detection_id) +
                          "); rerun without positions or fix the estimate");
      }
    }
  }
  return streams;
}

/// Run the full engine over grouped streams: per-camera tracking, graph
/// refresh, importance update, capped community detection, validation,
/// global id assignment, co-occurrence bookkeeping and pruning, in that
/// order every frame.
inline RunOutput run_pipeline(const InputStreams& streams, const PipelineConfig& cfg,
                              std::ostream* trace = nullptr,
                              bool capture_graph_dump = false) {
  cfg.validate();
  if (static_cast<int>(streams.per_camera.size()) != cfg.camera_count ||
      streams.camera_count != cfg.camera_count) {
    throw std::invalid_argument("run_pipeline: stream camera count " +
                                std::to_string(streams.camera_count) +
                                " does not match configured " +
                                std::to_string(cfg.camera_count));
  }

  RunOutput out;
  if (streams.detection_count() == 0) {
    if (capture_graph_dump) out.graph_dump = std::string();
    return out;
  }
  if (cfg.use_position && !streams.positions_available) {
    throw std::invalid_argument(
        "run_pipeline: position mode requires a position estimate on every detection");
  }

  std::int64_t min_frame = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_frame = std::numeric_limits<std::int64_t>::min();
  for (const auto& cam : streams.per_camera) {
    if (!cam.empty()) {
      min_frame = std::min(min_frame, cam.begin()->first);
      max_frame = std::max(max_frame, cam.rbegin()->first);
    }
  }

  std::vector<CameraTracker> trackers;
  trackers.reserve(cfg.camera_count);
  for (int c = 0; c < cfg.camera_count; ++c) trackers.emplace_back(c, cfg.tracker);

  GraphConfig gcfg;
  gcfg.occurrence_alpha = cfg.alpha;
  gcfg.vertex_ttl = cfg.vertex_ttl;
  gcfg.score_mode = cfg.score_mode;
  AssocGraph graph(cfg.camera_count, gcfg);
  GlobalIdMap idmap;
  StructuralStats& st = out.structural;
  const std::vector<Detection> no_detections;

  for (std::int64_t frame = min_frame; frame <= max_frame; ++frame) {
    std::vector<Tracklet> frame_tracklets;
    for (int c = 0; c < cfg.camera_count; ++c) {
      const auto& cam = streams.per_camera[c];
      auto it = cam.find(frame);
      const std::vector<Detection>& dets = it == cam.end() ? no_detections : it->second;
      std::vector<Tracklet> emitted = trackers[c].step(frame, dets);
      if (trace) {
        *trace << "frame=" << frame << " step=tracker camera=" << c
               << " detections=" << dets.size() << " emitted=" << emitted.size() << "\n";
      }
      frame_tracklets.insert(frame_tracklets.end(), emitted.begin(), emitted.end());
    }

    graph.upsert_vertices(frame_tracklets, frame);
    if (trace) {
      *trace << "frame=" << frame << " step=graph vertices=" << graph.vertices().size()
             << " edges=" << graph.edges().size() << "\n";
    }
    graph.compute_similarities();

    ImportanceStats istats;
    if (cfg.use_position) {
      istats = graph.update_importance_with_position();
      if (istats.occurrence_total > 0) {
        st.max_share_sum_error =
            std::max(st.max_share_sum_error, std::abs(istats.share_sum - 1.0));
      } else {
        st.max_share_sum_error = std::max(st.max_share_sum_error, std::abs(istats.share_sum));
      }
    } else {
      graph.update_relation();
      istats = graph.update_importance_without_position();
    }
    if (istats.updated_edges > 0) {
      st.importance_increment_min =
          std::min(st.importance_increment_min, istats.min_increment);
      st.importance_increment_max =
          std::max(st.importance_increment_max, istats.max_increment);
      st.importance_updates += istats.updated_edges;
    }
    if (trace) {
      *trace << "frame=" << frame << " step=importance mode="
             << (cfg.use_position ? "position" : "relation")
             << " edges=" << istats.updated_edges << "\n";
    }

    const Partition raw = greedy_modularity_capped(graph, cfg.camera_count, cfg.gamma);
    const ValidationResult vres = validate_and_repulse(graph, raw);
    st.evicted_vertices += vres.evicted_vertices;
    if (trace) {
      *trace << "frame=" << frame << " step=communities count=" << vres.partition.communities.size()
             << " conflicted=" << vres.conflicted_communities
             << " evicted=" << vres.evicted_vertices << "\n";
    }

    for (const auto& community : vres.partition.communities) {
      std::map<int, int> per_camera;
      for (int v : community) {
        ++per_camera[graph.vertices().at(v).tracklet.camera_id];
      }
      for (const auto& [cam, n] : per_camera) {
        if (n > 1) ++st.community_camera_violations;
      }
    }
    st.intra_camera_edge_violations += graph.intra_camera_edge_count();

    assign_global_ids(vres.partition, idmap);
    graph.apply_labels(idmap.labels());
    const long cooc = graph.record_cooccurrence(idmap.labels());
    const int pruned = graph.prune_stale(frame);
    st.pruned_vertices += pruned;
    if (pruned > 0) {
      std::set<int> live;
      for (const auto& [vid, v] : graph.vertices()) live.insert(vid);
      idmap.retain(live);
    }
    if (trace) {
      *trace << "frame=" << frame << " step=labels cooccurrences=" << cooc
             << " pruned=" << pruned << "\n";
    }

    std::map<int, std::set<int>> emitted_ids;  // camera -> global ids this frame
    for (const Tracklet& t : frame_tracklets) {
      const auto vid = graph.vertex_id_of(t.camera_id, t.local_id);
      if (!vid) throw std::logic_error("run_pipeline: emitted tracklet lost its vertex");
      const auto gid = idmap.label_of(*vid);
      if (!gid) throw std::logic_error("run_pipeline: emitted tracklet has no global id");
      if (!emitted_ids[t.camera_id].insert(*gid).second) {
        ++st.duplicate_global_id_violations;
      }
      out.labelled.push_back(LabelledRecord{frame, t.camera_id, t.local_id, *gid, t.bbox});
    }
    if (trace) {
      *trace << "frame=" << frame << " step=emit records=" << frame_tracklets.size() << "\n";
    }
    ++st.frames_processed;
  }

  if (streams.have_gt) {
    std::vector<LabelRecord> hyp;
    hyp.reserve(out.labelled.size());
    for (const LabelledRecord& r : out.labelled) {
      hyp.push_back(LabelRecord{r.frame, r.camera_id, r.global_id, r.bbox});
    }
    out.report = evaluate_sequences(streams.gt, hyp, cfg.iou_match_threshold);
  }
  if (capture_graph_dump) {
    std::ostringstream ss;
    graph.dump(ss, max_frame);
    out.graph_dump = ss.str();
  }
  return out;
}

inline std::string render_report_block(const MetricsReport& r) {
  std::string s;
  s += "mota=" + format_double(r.mota) + "\n";
  s += "idf1=" + format_double(r.idf1) + "\n";
  s += "idsw=" + std::to_string(r.idsw) + "\n";
  s += "fp=" + std::to_string(r.fp) + "\n";
  s += "fn=" + std::to_string(r.fn) + "\n";
  s += "gt_total=" + std::to_string(r.gt_total) + "\n";
  s += "hyp_total=" + std::to_string(r.hyp_total) + "\n";
  return s;
}

inline std::string render_report_line(const MetricsReport& r) {
  return "result mota=" + format_double(r.mota) + " idf1=" + format_double(r.idf1) +
         " idsw=" + std::to_string(r.idsw) + " fp=" + std::to_string(r.fp) +
         " fn=" + std::to_string(r.fn) + " gt=" + std::to_string(r.gt_total) +
         " hyp=" + std::to_string(r.hyp_total);
}

inline void write_outputs(const RunOutput& out, const std::string& labelled_path,
                          const std::string& report_path) {
  write_labelled_csv(labelled_path, out.labelled);
  if (!report_path.empty()) {
    if (!out.report) {
      throw input_error("a report was requested but no ground truth was provided");
    }
    auto f = io_detail::open_for_write(report_path);
    f << render_report_block(*out.report);
    if (!f) throw input_error("failed writing '" + report_path + "'");
  }
}

namespace config_detail {

inline int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size() || value.empty()) {
    throw input_error("configuration key '" + key + "': cannot parse integer from '" +
                      value + "'");
  }
  return v;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size() || value.empty()) {
    throw input_error("configuration key '" + key + "': cannot parse unsigned integer from '" +
                      value + "'");
  }
  return v;
}

inline double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size() || value.empty()) {
    throw input_error("configuration key '" + key + "': cannot parse number from '" + value +
                      "'");
  }
  return v;
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw input_error("configuration key '" + key + "': expected true/false, got '" + value +
                    "'");
}

}  // namespace config_detail

/// Apply key=value entries onto a config. Later entries override earlier
/// ones; unknown keys are an error.
inline void apply_config_entries(
    PipelineConfig& cfg, const std::vector<std::pair<std::string, std::string>>& entries) {
  using namespace config_detail;
  for (const auto& [key, value] : entries) {
    if (key == "camera_count") {
      cfg.camera_count = to_int(key, value);
    } else if (key == "feature_dim") {
      cfg.feature_dim = to_int(key, value);
    } else if (key == "use_position") {
      cfg.use_position = to_bool(key, value);
    } else if (key == "tracker_mode") {
      if (value == "sort") {
        cfg.tracker.mode = TrackerMode::sort;
      } else if (value == "deepsort") {
        cfg.tracker.mode = TrackerMode::deepsort;
      } else {
        throw input_error("configuration key 'tracker_mode': expected sort or deepsort, got '" +
                          value + "'");
      }
    } else if (key == "iou_gate") {
      cfg.tracker.iou_gate = to_double(key, value);
    } else if (key == "appearance_weight") {
      cfg.tracker.appearance_weight = to_double(key, value);
    } else if (key == "max_age") {
      cfg.tracker.max_age = to_int(key, value);
    } else if (key == "min_hits") {
      cfg.tracker.min_hits = to_int(key, value);
    } else if (key == "coast_output_frames") {
      cfg.tracker.coast_output_frames = to_int(key, value);
    } else if (key == "alpha") {
      cfg.alpha = to_double(key, value);
    } else if (key == "gamma") {
      cfg.gamma = to_double(key, value);
    } else if (key == "vertex_ttl") {
      cfg.vertex_ttl = to_int(key, value);
    } else if (key == "score_mode") {
      if (value == "as_written") {
        cfg.score_mode = ScoreMode::as_written;
      } else if (value == "sigma_of_cos") {
        cfg.score_mode = ScoreMode::sigma_of_cos;
      } else {
        throw input_error(
            "configuration key 'score_mode': expected as_written or sigma_of_cos, got '" +
            value + "'");
      }
    } else if (key == "iou_match_threshold") {
      cfg.iou_match_threshold = to_double(key, value);
    } else if (key == "seed") {
      cfg.seed = to_u64(key, value);
    } else {
      throw input_error("unknown configuration key '" + key + "'");
    }
  }
}

}  // namespace mcmot
