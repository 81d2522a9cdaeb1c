#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mcmot/core.hpp"
#include "mcmot/metrics.hpp"

namespace mcmot {

/// Malformed or inconsistent user input. The CLI maps this to exit code 1;
/// everything else is an internal failure and maps to 2.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { quiet = 0, warn = 1, info = 2, debug = 3 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MCMOT_LOG");
    if (!env) return LogLevel::warn;
    const std::string v(env);
    if (v == "quiet") return LogLevel::quiet;
    if (v == "warn") return LogLevel::warn;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

inline void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << msg << "\n";
}

namespace io_detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

inline double parse_double(std::string_view field, const std::string& path,
                           std::size_t line_no, const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [p, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || p != last || field.empty()) {
    throw input_error(where(path, line_no) + ": cannot parse " + what + " from '" +
                      std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw input_error(where(path, line_no) + ": " + what + " must be finite");
  }
  return value;
}

inline std::int64_t parse_int(std::string_view field, const std::string& path,
                              std::size_t line_no, const char* what) {
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [p, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || p != last || field.empty()) {
    throw input_error(where(path, line_no) + ": cannot parse " + what + " from '" +
                      std::string(field) + "'");
  }
  return value;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace io_detail

/// Detections CSV: frame,camera_id,detection_id,x,y,w,h,confidence[,pos_x,pos_y]
/// Headerless. The two position fields are either both present or both
/// empty; a file mixes rows freely.
inline std::vector<Detection> read_detections_csv(const std::string& path, int camera_count) {
  auto in = io_detail::open_for_read(path);
  std::vector<Detection> out;
  std::set<std::tuple<std::int64_t, int, int>> keys;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = io_detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto f = io_detail::split_csv(line);
    if (f.size() != 8 && f.size() != 10) {
      throw input_error(io_detail::where(path, line_no) +
                        ": expected 8 or 10 fields, got " + std::to_string(f.size()));
    }
    Detection d;
    d.frame = io_detail::parse_int(f[0], path, line_no, "frame");
    d.camera_id = static_cast<int>(io_detail::parse_int(f[1], path, line_no, "camera_id"));
    d.detection_id =
        static_cast<int>(io_detail::parse_int(f[2], path, line_no, "detection_id"));
    d.bbox.x = io_detail::parse_double(f[3], path, line_no, "x");
    d.bbox.y = io_detail::parse_double(f[4], path, line_no, "y");
    d.bbox.w = io_detail::parse_double(f[5], path, line_no, "w");
    d.bbox.h = io_detail::parse_double(f[6], path, line_no, "h");
    d.confidence = io_detail::parse_double(f[7], path, line_no, "confidence");
    if (f.size() == 10) {
      const bool px_empty = f[8].empty();
      const bool py_empty = f[9].empty();
      if (px_empty != py_empty) {
        throw input_error(io_detail::where(path, line_no) +
                          ": position fields must be both present or both empty");
      }
      if (!px_empty) {
        d.position = PositionEstimate{io_detail::parse_double(f[8], path, line_no, "pos_x"),
                                      io_detail::parse_double(f[9], path, line_no, "pos_y")};
      }
    }
    if (d.frame < 0) {
      throw input_error(io_detail::where(path, line_no) + ": frame must be non-negative");
    }
    if (d.camera_id < 0 || d.camera_id >= camera_count) {
      throw input_error(io_detail::where(path, line_no) + ": camera_id " +
                        std::to_string(d.camera_id) + " outside [0, " +
                        std::to_string(camera_count) + ")");
    }
    if (!box_is_valid(d.bbox)) {
      throw input_error(io_detail::where(path, line_no) + ": box must have positive size");
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw input_error(io_detail::where(path, line_no) + ": confidence outside [0, 1]");
    }
    if (!keys.emplace(d.frame, d.camera_id, d.detection_id).second) {
      throw input_error(io_detail::where(path, line_no) + ": duplicate detection (frame " +
                        std::to_string(d.frame) + ", camera " + std::to_string(d.camera_id) +
                        ", id " + std::to_string(d.detection_id) + ")");
    }
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tuple(a.frame, a.camera_id, a.detection_id) <
           std::tuple(b.frame, b.camera_id, b.detection_id);
  });
  return out;
}

/// Features CSV: frame,camera_id,detection_id,f0,...,f{dim-1}
/// Rows must match the detections one-to-one.
inline void attach_features_csv(const std::string& path, int feature_dim,
                                std::vector<Detection>& detections) {
  auto in = io_detail::open_for_read(path);
  std::map<std::tuple<std::int64_t, int, int>, FeatureVector> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = io_detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto f = io_detail::split_csv(line);
    if (static_cast<int>(f.size()) != 3 + feature_dim) {
      throw input_error(io_detail::where(path, line_no) + ": expected " +
                        std::to_string(3 + feature_dim) + " fields, got " +
                        std::to_string(f.size()));
    }
    const std::int64_t frame = io_detail::parse_int(f[0], path, line_no, "frame");
    const int camera = static_cast<int>(io_detail::parse_int(f[1], path, line_no, "camera_id"));
    const int det = static_cast<int>(io_detail::parse_int(f[2], path, line_no, "detection_id"));
    FeatureVector v(feature_dim);
    double n2 = 0.0;
    for (int i = 0; i < feature_dim; ++i) {
      v[i] = io_detail::parse_double(f[3 + i], path, line_no, "feature component");
      n2 += v[i] * v[i];
    }
    if (!(n2 > 0.0)) {
      throw input_error(io_detail::where(path, line_no) + ": feature vector has zero norm");
    }
    if (!rows.emplace(std::tuple(frame, camera, det), std::move(v)).second) {
      throw input_error(io_detail::where(path, line_no) + ": duplicate feature row (frame " +
                        std::to_string(frame) + ", camera " + std::to_string(camera) +
                        ", id " + std::to_string(det) + ")");
    }
  }
  for (Detection& d : detections) {
    auto it = rows.find(std::tuple(d.frame, d.camera_id, d.detection_id));
    if (it == rows.end()) {
      throw input_error(path + ": missing feature row for detection (frame " +
                        std::to_string(d.frame) + ", camera " + std::to_string(d.camera_id) +
                        ", id " + std::to_string(d.detection_id) + ")");
    }
    d.feature = std::move(it->second);
    rows.erase(it);
  }
  if (!rows.empty()) {
    const auto& [frame, camera, det] = rows.begin()->first;
    throw input_error(path + ": feature row without a matching detection (frame " +
                      std::to_string(frame) + ", camera " + std::to_string(camera) + ", id " +
                      std::to_string(det) + ")");
  }
}

/// Ground truth CSV: frame,camera_id,global_id,x,y,w,h
inline std::vector<LabelRecord> read_labels_csv(const std::string& path, int camera_count) {
  auto in = io_detail::open_for_read(path);
  std::vector<LabelRecord> out;
  std::set<std::tuple<std::int64_t, int, int>> keys;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = io_detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto f = io_detail::split_csv(line);
    if (f.size() != 7) {
      throw input_error(io_detail::where(path, line_no) + ": expected 7 fields, got " +
                        std::to_string(f.size()));
    }
    LabelRecord r;
    r.frame = io_detail::parse_int(f[0], path, line_no, "frame");
    r.camera_id = static_cast<int>(io_detail::parse_int(f[1], path, line_no, "camera_id"));
    r.identity = static_cast<int>(io_detail::parse_int(f[2], path, line_no, "global_id"));
    r.bbox.x = io_detail::parse_double(f[3], path, line_no, "x");
    r.bbox.y = io_detail::parse_double(f[4], path, line_no, "y");
    r.bbox.w = io_detail::parse_double(f[5], path, line_no, "w");
    r.bbox.h = io_detail::parse_double(f[6], path, line_no, "h");
    if (r.frame < 0) {
      throw input_error(io_detail::where(path, line_no) + ": frame must be non-negative");
    }
    if (r.camera_id < 0 || r.camera_id >= camera_count) {
      throw input_error(io_detail::where(path, line_no) + ": camera_id " +
                        std::to_string(r.camera_id) + " outside [0, " +
                        std::to_string(camera_count) + ")");
    }
    if (!box_is_valid(r.bbox)) {
      throw input_error(io_detail::where(path, line_no) + ": box must have positive size");
    }
    if (!keys.emplace(r.frame, r.camera_id, r.identity).second) {
      throw input_error(io_detail::where(path, line_no) + ": duplicate record (frame " +
                        std::to_string(r.frame) + ", camera " + std::to_string(r.camera_id) +
                        ", id " + std::to_string(r.identity) + ")");
    }
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const LabelRecord& a, const LabelRecord& b) {
    return std::tuple(a.frame, a.camera_id, a.identity) <
           std::tuple(b.frame, b.camera_id, b.identity);
  });
  return out;
}

/// Labelled tracking output CSV: frame,camera_id,local_track_id,global_id,x,y,w,h
/// Read back as LabelRecords keyed by the global id.
inline std::vector<LabelRecord> read_hypothesis_csv(const std::string& path, int camera_count) {
  auto in = io_detail::open_for_read(path);
  std::vector<LabelRecord> out;
  std::set<std::tuple<std::int64_t, int, int>> keys;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = io_detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto f = io_detail::split_csv(line);
    if (f.size() != 8) {
      throw input_error(io_detail::where(path, line_no) + ": expected 8 fields, got " +
                        std::to_string(f.size()));
    }
    LabelRecord r;
    r.frame = io_detail::parse_int(f[0], path, line_no, "frame");
    r.camera_id = static_cast<int>(io_detail::parse_int(f[1], path, line_no, "camera_id"));
    r.identity = static_cast<int>(io_detail::parse_int(f[3], path, line_no, "global_id"));
    r.bbox.x = io_detail::parse_double(f[4], path, line_no, "x");
    r.bbox.y = io_detail::parse_double(f[5], path, line_no, "y");
    r.bbox.w = io_detail::parse_double(f[6], path, line_no, "w");
    r.bbox.h = io_detail::parse_double(f[7], path, line_no, "h");
    if (r.frame < 0) {
      throw input_error(io_detail::where(path, line_no) + ": frame must be non-negative");
    }
    if (r.camera_id < 0 || r.camera_id >= camera_count) {
      throw input_error(io_detail::where(path, line_no) + ": camera_id " +
                        std::to_string(r.camera_id) + " outside [0, " +
                        std::to_string(camera_count) + ")");
    }
    if (!box_is_valid(r.bbox)) {
      throw input_error(io_detail::where(path, line_no) + ": box must have positive size");
    }
    if (!keys.emplace(r.frame, r.camera_id, r.identity).second) {
      throw input_error(io_detail::where(path, line_no) +
                        ": duplicate global id in one camera frame (frame " +
                        std::to_string(r.frame) + ", camera " + std::to_string(r.camera_id) +
                        ", global " + std::to_string(r.identity) + ")");
    }
    out.push_back(r);
  }
  return out;
}

inline void write_detections_csv(const std::string& path, std::span<const Detection> dets) {
  auto out = io_detail::open_for_write(path);
  for (const Detection& d : dets) {
    out << d.frame << ',' << d.camera_id << ',' << d.detection_id << ','
        << format_double(d.bbox.x) << ',' << format_double(d.bbox.y) << ','
        << format_double(d.bbox.w) << ',' << format_double(d.bbox.h) << ','
        << format_double(d.confidence);
    if (d.position) {
      out << ',' << format_double(d.position->px) << ',' << format_double(d.position->py);
    }
    out << '\n';
  }
  if (!out) throw input_error("failed writing '" + path + "'");
}

inline void write_features_csv(const std::string& path, std::span<const Detection> dets) {
  auto out = io_detail::open_for_write(path);
  for (const Detection& d : dets) {
    out << d.frame << ',' << d.camera_id << ',' << d.detection_id;
    for (double x : d.feature) out << ',' << format_double(x);
    out << '\n';
  }
  if (!out) throw input_error("failed writing '" + path + "'");
}

inline void write_labels_csv(const std::string& path, std::span<const LabelRecord> records) {
  auto out = io_detail::open_for_write(path);
  for (const LabelRecord& r : records) {
    out << r.frame << ',' << r.camera_id << ',' << r.identity << ','
        << format_double(r.bbox.x) << ',' << format_double(r.bbox.y) << ','
        << format_double(r.bbox.w) << ',' << format_double(r.bbox.h) << '\n';
  }
  if (!out) throw input_error("failed writing '" + path + "'");
}

inline void write_labelled_csv(const std::string& path,
                               std::span<const LabelledRecord> records) {
  auto out = io_detail::open_for_write(path);
  for (const LabelledRecord& r : records) {
    out << r.frame << ',' << r.camera_id << ',' << r.local_track_id << ',' << r.global_id
        << ',' << format_double(r.bbox.x) << ',' << format_double(r.bbox.y) << ','
        << format_double(r.bbox.w) << ',' << format_double(r.bbox.h) << '\n';
  }
  if (!out) throw input_error("failed writing '" + path + "'");
}

/// Flat key=value configuration. '#' starts a comment; blank lines are
/// skipped. Returns entries in file order for later override layering.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::string& path) {
  auto in = io_detail::open_for_read(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string raw;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line(io_detail::strip_cr(raw));
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw input_error(io_detail::where(path, line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw input_error(io_detail::where(path, line_no) + ": empty configuration key");
    }
    out.emplace_back(key, value);
  }
  return out;
}

}  // namespace mcmot
