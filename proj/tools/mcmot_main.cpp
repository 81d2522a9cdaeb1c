#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mcmot/mcmot.hpp"

namespace {

struct TrackArgs {
  std::string detections;
  std::string features;
  std::string gt;
  std::string config_path;
  std::string out;
  std::string report;
  std::string trace;
  std::string cameras, feature_dim, tracker_mode, iou_gate, appearance_weight;
  std::string max_age, min_hits, coast, alpha, gamma, vertex_ttl, score_mode;
  std::string iou_match, seed;
  bool no_position = false;
};

void add_common_inputs(CLI::App* sub, TrackArgs& a) {
  sub->add_option("--detections", a.detections, "Detections CSV")->required();
  sub->add_option("--features", a.features, "Appearance features CSV")->required();
  sub->add_option("--gt", a.gt, "Ground-truth CSV; enables the metrics report");
  sub->add_option("--config", a.config_path, "key=value configuration file");
  sub->add_option("--trace", a.trace, "Write per-frame trace lines to this file");
}

void add_override_flags(CLI::App* sub, TrackArgs& a) {
  sub->add_option("--cameras", a.cameras, "Number of cameras");
  sub->add_option("--feature-dim", a.feature_dim, "Appearance feature dimension");
  sub->add_option("--tracker-mode", a.tracker_mode, "sort or deepsort");
  sub->add_option("--iou-gate", a.iou_gate, "Association overlap gate");
  sub->add_option("--appearance-weight", a.appearance_weight,
                  "Overlap weight in the deepsort cost");
  sub->add_option("--max-age", a.max_age, "Frames before an unmatched track is dropped");
  sub->add_option("--min-hits", a.min_hits, "Matches before a track is emitted");
  sub->add_option("--coast-output-frames", a.coast,
                  "Also emit confirmed tracks missed up to this many frames");
  sub->add_option("--alpha", a.alpha, "Co-occurrence smoothing scale");
  sub->add_option("--gamma", a.gamma, "Modularity resolution");
  sub->add_option("--vertex-ttl", a.vertex_ttl, "Graph vertex time-to-live in frames");
  sub->add_option("--score-mode", a.score_mode, "as_written or sigma_of_cos");
  sub->add_option("--iou-match-threshold", a.iou_match, "Evaluation overlap threshold");
  sub->add_option("--seed", a.seed, "Run seed");
  sub->add_flag("--no-position", a.no_position, "Ignore position estimates");
}

mcmot::PipelineConfig build_config(const CLI::App* sub, const TrackArgs& a) {
  std::vector<std::pair<std::string, std::string>> entries;
  if (!a.config_path.empty()) entries = mcmot::parse_config_file(a.config_path);
  auto add = [&](const char* flag, const char* key, const std::string& v) {
    if (sub->count(flag) > 0) entries.emplace_back(key, v);
  };
  add("--cameras", "camera_count", a.cameras);
  add("--feature-dim", "feature_dim", a.feature_dim);
  add("--tracker-mode", "tracker_mode", a.tracker_mode);
  add("--iou-gate", "iou_gate", a.iou_gate);
  add("--appearance-weight", "appearance_weight", a.appearance_weight);
  add("--max-age", "max_age", a.max_age);
  add("--min-hits", "min_hits", a.min_hits);
  add("--coast-output-frames", "coast_output_frames", a.coast);
  add("--alpha", "alpha", a.alpha);
  add("--gamma", "gamma", a.gamma);
  add("--vertex-ttl", "vertex_ttl", a.vertex_ttl);
  add("--score-mode", "score_mode", a.score_mode);
  add("--iou-match-threshold", "iou_match_threshold", a.iou_match);
  add("--seed", "seed", a.seed);
  if (a.no_position) entries.emplace_back("use_position", "false");

  mcmot::PipelineConfig cfg;
  mcmot::apply_config_entries(cfg, entries);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw mcmot::input_error(e.what());
  }
  return cfg;
}

void run_track(const CLI::App* sub, const TrackArgs& a, bool dump_graph) {
  mcmot::PipelineConfig cfg = build_config(sub, a);
  mcmot::InputStreams streams = mcmot::read_inputs(a.detections, a.features, a.gt, cfg);

  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (!a.trace.empty()) {
    trace_file.open(a.trace);
    if (!trace_file) throw mcmot::input_error("cannot open '" + a.trace + "' for writing");
    trace = &trace_file;
  }

  const mcmot::RunOutput out = mcmot::run_pipeline(streams, cfg, trace, dump_graph);
  if (dump_graph) {
    std::ofstream f(a.out);
    if (!f) throw mcmot::input_error("cannot open '" + a.out + "' for writing");
    f << *out.graph_dump;
    return;
  }
  mcmot::write_outputs(out, a.out, a.report);
  if (out.report) std::cout << mcmot::render_report_line(*out.report) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online multi-camera multi-object tracking"};
  app.require_subcommand(1);

  TrackArgs track_args;
  CLI::App* track = app.add_subcommand("track", "Track and assign global ids");
  add_common_inputs(track, track_args);
  add_override_flags(track, track_args);
  track->add_option("--out", track_args.out, "Labelled output CSV")->required();
  track->add_option("--report", track_args.report, "Write the metrics report here");
  track->callback([&] { run_track(track, track_args, false); });

  TrackArgs dump_args;
  CLI::App* dump = app.add_subcommand("dump-graph", "Run and dump the final graph state");
  add_common_inputs(dump, dump_args);
  add_override_flags(dump, dump_args);
  dump->add_option("--out", dump_args.out, "Graph dump output file")->required();
  dump->callback([&] { run_track(dump, dump_args, true); });

  std::string eval_gt, eval_hyp, eval_report;
  double eval_thr = 0.5;
  int eval_cameras = 1000;
  CLI::App* eval = app.add_subcommand("eval", "Score a labelled output against ground truth");
  eval->add_option("--gt", eval_gt, "Ground-truth CSV")->required();
  eval->add_option("--hypothesis", eval_hyp, "Labelled output CSV")->required();
  eval->add_option("--iou-threshold", eval_thr, "Overlap threshold for a valid match");
  eval->add_option("--cameras", eval_cameras, "Camera id upper bound");
  eval->add_option("--report", eval_report, "Write the metrics report here");
  eval->callback([&] {
    if (!(eval_thr > 0.0 && eval_thr <= 1.0)) {
      throw mcmot::input_error("--iou-threshold must be in (0, 1]");
    }
    if (eval_cameras < 1 || eval_cameras > 1000) {
      throw mcmot::input_error("--cameras must be in [1, 1000]");
    }
    const auto gt = mcmot::read_labels_csv(eval_gt, eval_cameras);
    if (gt.empty()) {
      throw mcmot::input_error(eval_gt + ": ground truth is empty; metrics are undefined");
    }
    const auto hyp = mcmot::read_hypothesis_csv(eval_hyp, eval_cameras);
    const mcmot::MetricsReport report = mcmot::evaluate_sequences(gt, hyp, eval_thr);
    if (!eval_report.empty()) {
      std::ofstream f(eval_report);
      if (!f) throw mcmot::input_error("cannot open '" + eval_report + "' for writing");
      f << mcmot::render_report_block(report);
    }
    std::cout << mcmot::render_report_line(report) << "\n";
  });

  mcmot::ScenarioConfig scfg;
  std::string synth_dets, synth_feats, synth_gt;
  std::vector<int> occ_cameras;
  int occ_period = 20, occ_duration = 20;
  std::uint64_t occ_seed = 1;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labelled scene");
  synth->add_option("--out-detections", synth_dets, "Detections CSV to write")->required();
  synth->add_option("--out-features", synth_feats, "Features CSV to write")->required();
  synth->add_option("--out-gt", synth_gt, "Ground-truth CSV to write")->required();
  synth->add_option("--cameras", scfg.camera_count, "Number of cameras");
  synth->add_option("--identities", scfg.identity_count, "Number of identities");
  synth->add_option("--frames", scfg.frame_count, "Number of frames");
  synth->add_option("--feature-dim", scfg.feature_dim, "Appearance feature dimension");
  synth->add_option("--intra-cos-min", scfg.intra_identity_cos_min,
                    "Lower bound on same-identity feature cosines");
  synth->add_option("--inter-cos-max", scfg.inter_identity_cos_max,
                    "Upper bound on cross-identity feature cosines");
  synth->add_option("--position-noise", scfg.position_noise, "Position noise, metres");
  synth->add_option("--bbox-noise", scfg.bbox_noise, "Box noise, pixels");
  synth->add_option("--walk-step", scfg.walk_step, "Per-frame walk step, metres");
  synth->add_option("--dropout", scfg.dropout_prob, "Detection dropout probability");
  synth->add_option("--seed", scfg.seed, "Scene seed");
  synth->add_option("--occlude-cameras", occ_cameras,
                    "Cameras to occlude periodically (repeat or comma-separate)")
      ->delimiter(',');
  synth->add_option("--occlude-period", occ_period, "Frames between occlusion windows");
  synth->add_option("--occlude-duration", occ_duration, "Frames removed per window");
  synth->add_option("--occlude-seed", occ_seed, "Occlusion selection seed");
  synth->callback([&] {
    try {
      scfg.validate();
    } catch (const std::exception& e) {
      throw mcmot::input_error(e.what());
    }
    mcmot::SyntheticScene scene = mcmot::generate_scene(scfg);
    if (!occ_cameras.empty()) {
      mcmot::OcclusionSpec spec;
      spec.cameras = occ_cameras;
      spec.period = occ_period;
      spec.duration = occ_duration;
      spec.seed = occ_seed;
      for (int c : spec.cameras) {
        if (c < 0 || c >= scfg.camera_count) {
          throw mcmot::input_error("--occlude-cameras: camera " + std::to_string(c) +
                                   " outside [0, " + std::to_string(scfg.camera_count) + ")");
        }
      }
      try {
        spec.validate();
      } catch (const std::exception& e) {
        throw mcmot::input_error(e.what());
      }
      scene.detections = mcmot::inject_occlusions(std::move(scene.detections), spec);
    }
    mcmot::write_detections_csv(synth_dets, scene.detections);
    mcmot::write_features_csv(synth_feats, scene.detections);
    mcmot::write_labels_csv(synth_gt, scene.gt);
    std::cout << "synth detections=" << scene.detections.size()
              << " gt=" << scene.gt.size() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const mcmot::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
