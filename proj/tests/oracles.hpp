#pragma once

// Independent reference implementations used to pin expected values in the
// test suite. Everything here favours directness over speed: brute-force
// enumeration and literal formula translations only.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "mcmot/community.hpp"
#include "mcmot/graph.hpp"
#include "mcmot/hungarian.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/synth.hpp"

namespace oracles {

/// Modularity straight from the pairwise definition: sum over all ordered
/// same-community vertex pairs of (A_ij - gamma k_i k_j / 2m) / 2m.
inline double brute_modularity(const mcmot::AssocGraph& g,
                               const std::vector<std::vector<int>>& communities,
                               double gamma) {
  std::map<std::pair<int, int>, double> w;
  std::map<int, double> k;
  double m = 0.0;
  for (const auto& [vid, v] : g.vertices()) k[vid] = 0.0;
  for (const auto& [key, e] : g.edges()) {
    const double x = std::max(e.importance, 0.0);
    w[{e.a, e.b}] = x;
    w[{e.b, e.a}] = x;
    m += x;
    k[e.a] += x;
    k[e.b] += x;
  }
  if (m <= 0.0) return 0.0;
  std::map<int, int> cid;
  for (std::size_t c = 0; c < communities.size(); ++c) {
    for (int v : communities[c]) cid[v] = static_cast<int>(c);
  }
  double q = 0.0;
  for (const auto& [va, ka] : k) {
    for (const auto& [vb, kb] : k) {
      if (cid.at(va) != cid.at(vb)) continue;
      double a = 0.0;
      auto it = w.find({va, vb});
      if (it != w.end()) a = it->second;
      q += a - gamma * ka * kb / (2.0 * m);
    }
  }
  return q / (2.0 * m);
}

/// Best modularity over every partition whose blocks have at most `cap`
/// members, found by exhaustive enumeration.
inline double exhaustive_best_modularity(const mcmot::AssocGraph& g, int cap, double gamma) {
  std::vector<int> vids;
  for (const auto& [vid, v] : g.vertices()) vids.push_back(vid);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == vids.size()) {
      best = std::max(best, brute_modularity(g, cur, gamma));
      return;
    }
    // index loop: deeper calls grow and shrink cur, so references into it
    // would dangle
    const std::size_t blocks = cur.size();
    for (std::size_t b = 0; b < blocks; ++b) {
      if (static_cast<int>(cur[b].size()) < cap) {
        cur[b].push_back(vids[pos]);
        rec(pos + 1);
        cur[b].pop_back();
      }
    }
    cur.push_back({vids[pos]});
    rec(pos + 1);
    cur.pop_back();
  };
  if (vids.empty()) return 0.0;
  rec(0);
  return best;
}

/// Exhaustive minimum-cost assignment of min(R, C) pairs over a
/// non-negative cost matrix. A first pass finds the exact optimum; a second
/// lex-ordered pass (columns ascending before leaving a row out) returns the
/// lexicographically smallest assignment whose total lies within the same
/// relative tolerance the production solver uses for its tie window.
struct OracleAssignment {
  std::vector<int> row_to_col;
  double total = 0.0;
};

inline OracleAssignment oracle_assignment(const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  const int want = std::min(rows, cols);
  OracleAssignment best;
  best.row_to_col.assign(rows, -1);
  if (want == 0) return best;

  std::vector<int> cur(rows, -1);
  std::vector<char> used(cols, 0);

  double optimum = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> value_pass = [&](int row, int matched, double acc) {
    if (acc >= optimum) return;
    if (row == rows) {
      if (matched == want) optimum = acc;
      return;
    }
    for (int c = 0; c < cols; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      value_pass(row + 1, matched + 1, acc + cost[row][c]);
      used[c] = 0;
    }
    if (matched + (rows - row - 1) >= want) value_pass(row + 1, matched, acc);
  };
  value_pass(0, 0, 0.0);

  const double budget = optimum + 1e-9 * (1.0 + std::abs(optimum));
  bool found = false;
  std::function<void(int, int, double)> lex_pass = [&](int row, int matched, double acc) {
    if (found || acc > budget) return;
    if (row == rows) {
      if (matched == want) {
        best.total = acc;
        best.row_to_col = cur;
        found = true;
      }
      return;
    }
    for (int c = 0; c < cols && !found; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cur[row] = c;
      lex_pass(row + 1, matched + 1, acc + cost[row][c]);
      used[c] = 0;
      cur[row] = -1;
    }
    if (!found && matched + (rows - row - 1) >= want) lex_pass(row + 1, matched, acc);
  };
  lex_pass(0, 0, 0.0);
  return best;
}

/// Same gate-demotion convention as the production solver, on top of the
/// enumerated optimum.
inline mcmot::Assignment oracle_assign_gated(const std::vector<std::vector<double>>& cost,
                                             double gate) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  OracleAssignment oa = oracle_assignment(cost);
  mcmot::Assignment out;
  std::vector<char> col_used(cols, 0);
  for (int i = 0; i < rows; ++i) {
    int j = oa.row_to_col[i];
    if (j >= 0 && cost[i][j] > gate) j = -1;
    if (j >= 0) {
      out.matches.emplace_back(i, j);
      col_used[j] = 1;
    } else {
      out.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < cols; ++j) {
    if (!col_used[j]) out.unmatched_detections.push_back(j);
  }
  return out;
}

/// Best identity bijection score by exhaustive injective mapping search.
inline double oracle_idtp(const std::map<std::pair<int, int>, long>& cooc) {
  std::vector<int> gt_ids, hyp_ids;
  for (const auto& [key, n] : cooc) {
    gt_ids.push_back(key.first);
    hyp_ids.push_back(key.second);
  }
  std::sort(gt_ids.begin(), gt_ids.end());
  gt_ids.erase(std::unique(gt_ids.begin(), gt_ids.end()), gt_ids.end());
  std::sort(hyp_ids.begin(), hyp_ids.end());
  hyp_ids.erase(std::unique(hyp_ids.begin(), hyp_ids.end()), hyp_ids.end());

  double best = 0.0;
  std::vector<char> used(hyp_ids.size(), 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t gi, double acc) {
    if (gi == gt_ids.size()) {
      best = std::max(best, acc);
      return;
    }
    rec(gi + 1, acc);
    for (std::size_t hi = 0; hi < hyp_ids.size(); ++hi) {
      if (used[hi]) continue;
      auto it = cooc.find({gt_ids[gi], hyp_ids[hi]});
      const double add = it == cooc.end() ? 0.0 : static_cast<double>(it->second);
      used[hi] = 1;
      rec(gi + 1, acc + add);
      used[hi] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

struct OracleReport {
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long gt_total = 0;
  long hyp_total = 0;
  double mota = 0.0;
  double idf1 = 0.0;
};

/// Reference tracker evaluation: identical event semantics, but per-frame
/// matching by exhaustive enumeration and the identity mapping by
/// exhaustive search. Tractable for small identity counts only.
inline OracleReport oracle_evaluate(const std::vector<mcmot::LabelRecord>& gt,
                                    const std::vector<mcmot::LabelRecord>& hyp,
                                    double thr) {
  std::map<std::int64_t,
           std::pair<std::vector<mcmot::LabelRecord>, std::vector<mcmot::LabelRecord>>>
      frames;
  for (const auto& r : gt) {
    frames[mcmot::encode_frame_key(r.frame, r.camera_id)].first.push_back(r);
  }
  for (const auto& r : hyp) {
    frames[mcmot::encode_frame_key(r.frame, r.camera_id)].second.push_back(r);
  }

  OracleReport rep;
  std::map<int, int> last;
  std::map<std::pair<int, int>, long> cooc;
  for (const auto& [key, lists] : frames) {
    const auto& g = lists.first;
    const auto& h = lists.second;
    rep.gt_total += static_cast<long>(g.size());
    rep.hyp_total += static_cast<long>(h.size());

    std::vector<std::vector<bool>> valid(g.size(), std::vector<bool>(h.size(), false));
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < h.size(); ++j) {
        valid[i][j] = mcmot::iou(g[i].bbox, h[j].bbox) >= thr;
        if (valid[i][j]) ++cooc[{g[i].identity, h[j].identity}];
      }
    }

    std::vector<int> match(g.size(), -1);
    std::vector<char> used(h.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto lm = last.find(g[i].identity);
      if (lm == last.end()) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (!used[j] && h[j].identity == lm->second && valid[i][j]) {
          match[i] = static_cast<int>(j);
          used[j] = 1;
          break;
        }
      }
    }

    std::vector<int> fg, fh;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (match[i] < 0) fg.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!used[j]) fh.push_back(static_cast<int>(j));
    }
    std::vector<std::vector<double>> cost(fg.size(), std::vector<double>(fh.size(), 0.0));
    for (std::size_t i = 0; i < fg.size(); ++i) {
      for (std::size_t j = 0; j < fh.size(); ++j) {
        cost[i][j] = valid[fg[i]][fh[j]] ? 1.0 - mcmot::iou(g[fg[i]].bbox, h[fh[j]].bbox)
                                         : 1e6;
      }
    }
    const mcmot::Assignment asg = oracle_assign_gated(cost, 1e5);
    for (const auto& [i, j] : asg.matches) match[fg[i]] = fh[j];

    long matched = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (match[i] < 0) continue;
      ++matched;
      auto lm = last.find(g[i].identity);
      if (lm != last.end() && lm->second != h[match[i]].identity) ++rep.idsw;
      last[g[i].identity] = h[match[i]].identity;
    }
    rep.fn += static_cast<long>(g.size()) - matched;
    rep.fp += static_cast<long>(h.size()) - matched;
  }

  rep.mota = 100.0 * (1.0 - static_cast<double>(rep.fn + rep.fp + rep.idsw) /
                                static_cast<double>(rep.gt_total));
  rep.idf1 = 200.0 * oracle_idtp(cooc) / static_cast<double>(rep.gt_total + rep.hyp_total);
  return rep;
}

// ---- random instance builders ----

inline mcmot::Tracklet make_tracklet(int camera, int local, const mcmot::BoundingBox& box,
                                     mcmot::FeatureVector feature,
                                     std::optional<mcmot::PositionEstimate> pos = {}) {
  mcmot::Tracklet t;
  t.local_id = local;
  t.camera_id = camera;
  t.feature = std::move(feature);
  t.position = pos;
  t.bbox = box;
  t.hits = 3;
  t.status = mcmot::TrackStatus::confirmed;
  return t;
}

/// Random cross-camera graph with importances (some negative) and
/// occurrence counts set directly on the edges.
inline mcmot::AssocGraph random_graph(mcmot::SplitMix64& rng, int min_vertices,
                                      int max_vertices, int cameras) {
  const int n = min_vertices + rng.below(max_vertices - min_vertices + 1);
  mcmot::AssocGraph g(cameras);
  std::vector<mcmot::Tracklet> ts;
  std::vector<int> next_local(cameras, 1);
  for (int i = 0; i < n; ++i) {
    const int cam = rng.below(cameras);
    const mcmot::BoundingBox box{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0),
                                 rng.uniform(5.0, 30.0), rng.uniform(5.0, 30.0)};
    ts.push_back(make_tracklet(cam, next_local[cam]++, box, {1.0, 0.5}));
  }
  g.upsert_vertices(ts, 0);
  for (const auto& [key, e] : g.edges()) {
    auto& edge = g.edge_ref(e.a, e.b);
    edge.importance =
        rng.uniform01() < 0.25 ? rng.uniform(-1.0, 0.0) : rng.uniform(0.0, 1.5);
    edge.occurrences = rng.below(9);
  }
  return g;
}

/// Separable instance: planted communities with at most one vertex per
/// camera, heavy in-community edges and light (sometimes clamped-to-zero)
/// cross-community edges. Total vertex count stays at or below 6 so the
/// exhaustive search remains cheap.
inline mcmot::AssocGraph planted_graph(mcmot::SplitMix64& rng, int cameras) {
  const int communities = 2 + rng.below(2);
  const int max_size = std::min(communities == 2 ? 3 : 2, cameras);

  std::vector<mcmot::Tracklet> ts;
  std::vector<int> owner;  // vertex insertion index -> planted community
  std::vector<int> next_local(cameras, 1);
  for (int c = 0; c < communities; ++c) {
    const int size = max_size == 2 ? 2 : 2 + rng.below(2);
    std::vector<int> cams(cameras);
    for (int i = 0; i < cameras; ++i) cams[i] = i;
    for (int i = cameras - 1; i > 0; --i) std::swap(cams[i], cams[rng.below(i + 1)]);
    for (int i = 0; i < size; ++i) {
      const int cam = cams[i];
      const mcmot::BoundingBox box{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0),
                                   rng.uniform(5.0, 30.0), rng.uniform(5.0, 30.0)};
      ts.push_back(make_tracklet(cam, next_local[cam]++, box, {1.0, 0.5}));
      owner.push_back(c);
    }
  }
  mcmot::AssocGraph g(cameras);
  g.upsert_vertices(ts, 0);
  for (const auto& [key, e] : g.edges()) {
    auto& edge = g.edge_ref(e.a, e.b);
    if (owner[e.a - 1] == owner[e.b - 1]) {
      edge.importance = rng.uniform(1.0, 1.5);
    } else {
      edge.importance = rng.uniform01() < 0.25 ? rng.uniform(-1.0, 0.0)
                                               : rng.uniform(0.0, 0.3);
    }
  }
  return g;
}

inline mcmot::Partition random_partition(mcmot::SplitMix64& rng, const mcmot::AssocGraph& g) {
  std::vector<int> vids;
  for (const auto& [vid, v] : g.vertices()) vids.push_back(vid);
  const int groups = 1 + rng.below(static_cast<int>(vids.size()));
  std::map<int, std::vector<int>> blocks;
  for (int vid : vids) blocks[rng.below(groups)].push_back(vid);
  mcmot::Partition p;
  for (auto& [gi, members] : blocks) p.communities.push_back(std::move(members));
  p.canonicalize();
  return p;
}

/// Random evaluation scenario: hypothesis boxes shadow the ground truth with
/// jitter, dropped detections, occasional identity swaps and pure clutter,
/// so matches, misses, false alarms and switches all occur.
inline std::pair<std::vector<mcmot::LabelRecord>, std::vector<mcmot::LabelRecord>>
random_metrics_scenario(mcmot::SplitMix64& rng, int frames, int cameras, int max_ids) {
  std::vector<mcmot::LabelRecord> gt, hyp;
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int c = 0; c < cameras; ++c) {
      std::set<int> used_hyp;
      auto push_hyp = [&](int id, const mcmot::BoundingBox& box) {
        if (used_hyp.insert(id).second) hyp.push_back({t, c, id, box});
      };
      for (int id = 1; id <= max_ids; ++id) {
        if (rng.uniform01() < 0.30) continue;
        const mcmot::BoundingBox box{rng.uniform(0.0, 160.0), rng.uniform(0.0, 160.0),
                                     rng.uniform(12.0, 30.0), rng.uniform(12.0, 30.0)};
        gt.push_back({t, c, id, box});
        const double drop = rng.uniform01();
        const double swap = rng.uniform01();
        const int swapped = 101 + rng.below(max_ids);
        const mcmot::BoundingBox jit{box.x + rng.uniform(-4.0, 4.0),
                                     box.y + rng.uniform(-4.0, 4.0),
                                     std::max(1.0, box.w + rng.uniform(-3.0, 3.0)),
                                     std::max(1.0, box.h + rng.uniform(-3.0, 3.0))};
        if (drop < 0.20) continue;
        push_hyp(swap < 0.75 ? id + 100 : swapped, jit);
      }
      if (rng.uniform01() < 0.35) {
        push_hyp(101 + rng.below(max_ids),
                 {rng.uniform(0.0, 160.0), rng.uniform(0.0, 160.0),
                  rng.uniform(12.0, 30.0), rng.uniform(12.0, 30.0)});
      }
    }
  }
  return {gt, hyp};
}

}  // namespace oracles
