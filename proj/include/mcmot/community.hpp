#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "mcmot/graph.hpp"

namespace mcmot {

/// Disjoint cover of the live vertex set. Members are sorted ascending and
/// communities are ordered by their first member, so equal partitions
/// compare equal.
struct Partition {
  std::vector<std::vector<int>> communities;

  void canonicalize() {
    for (auto& c : communities) std::sort(c.begin(), c.end());
    std::sort(communities.begin(), communities.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
  }
};

/// Persistent vertex -> global id mapping across frames.
class GlobalIdMap {
 public:
  const std::map<int, int>& labels() const { return labels_; }
  int next_id() const { return next_id_; }

  std::optional<int> label_of(int vertex_id) const {
    auto it = labels_.find(vertex_id);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  int allocate() { return next_id_++; }

  void replace_labels(std::map<int, int> labels) { labels_ = std::move(labels); }

  /// Drop labels for vertices no longer in the graph.
  void retain(const std::set<int>& live) {
    for (auto it = labels_.begin(); it != labels_.end();) {
      if (live.count(it->first)) {
        ++it;
      } else {
        it = labels_.erase(it);
      }
    }
  }

 private:
  std::map<int, int> labels_;
  int next_id_ = 1;
};

namespace community_detail {

inline double clamped_weight(const GraphEdge& e) { return std::max(e.importance, 0.0); }

inline std::map<int, int> community_index(const AssocGraph& graph, const Partition& p) {
  std::map<int, int> idx;
  for (std::size_t c = 0; c < p.communities.size(); ++c) {
    for (int v : p.communities[c]) {
      if (!graph.vertices().count(v)) {
        throw std::invalid_argument("partition references unknown vertex " + std::to_string(v));
      }
      if (!idx.emplace(v, static_cast<int>(c)).second) {
        throw std::invalid_argument("partition lists vertex " + std::to_string(v) + " twice");
      }
    }
  }
  if (idx.size() != graph.vertices().size()) {
    throw std::invalid_argument("partition does not cover every live vertex");
  }
  return idx;
}

}  // namespace community_detail

/// Weighted modularity of a partition, with negative importances clamped
/// to zero. Returns 0 when the graph has no positive weight.
inline double modularity_q(const AssocGraph& graph, const Partition& partition, double gamma) {
  const std::map<int, int> comm = community_detail::community_index(graph, partition);
  double m = 0.0;
  std::map<int, double> degree;
  for (const auto& [vid, v] : graph.vertices()) degree[vid] = 0.0;
  for (const auto& [key, e] : graph.edges()) {
    const double w = community_detail::clamped_weight(e);
    m += w;
    degree[e.a] += w;
    degree[e.b] += w;
  }
  if (m <= 0.0) return 0.0;

  std::vector<double> sum_in(partition.communities.size(), 0.0);
  std::vector<double> sum_tot(partition.communities.size(), 0.0);
  for (const auto& [key, e] : graph.edges()) {
    if (comm.at(e.a) == comm.at(e.b)) {
      sum_in[comm.at(e.a)] += 2.0 * community_detail::clamped_weight(e);
    }
  }
  for (const auto& [vid, d] : degree) sum_tot[comm.at(vid)] += d;

  double q = 0.0;
  for (std::size_t c = 0; c < partition.communities.size(); ++c) {
    const double tot = sum_tot[c] / (2.0 * m);
    q += sum_in[c] / (2.0 * m) - gamma * tot * tot;
  }
  return q;
}

/// Agglomerative modularity maximization with a hard community size cap.
/// Starts from singletons and repeatedly applies the feasible merge with
/// the largest strictly positive modularity gain. Ties go to the pair with
/// the smallest involved vertex ids.
inline Partition greedy_modularity_capped(const AssocGraph& graph, int cap, double gamma) {
  if (cap < 1) throw std::invalid_argument("greedy_modularity_capped: cap must be positive");

  std::vector<int> vids;
  for (const auto& [vid, v] : graph.vertices()) vids.push_back(vid);
  const int n = static_cast<int>(vids.size());

  Partition out;
  for (int vid : vids) out.communities.push_back({vid});
  if (n == 0 || cap == 1) return out;

  std::map<int, int> pos;
  for (int i = 0; i < n; ++i) pos[vids[i]] = i;

  double m = 0.0;
  std::vector<double> tot(n, 0.0);
  std::vector<std::vector<double>> between(n, std::vector<double>(n, 0.0));
  for (const auto& [key, e] : graph.edges()) {
    const double w = community_detail::clamped_weight(e);
    m += w;
    const int a = pos.at(e.a);
    const int b = pos.at(e.b);
    between[a][b] += w;
    between[b][a] += w;
    tot[a] += w;
    tot[b] += w;
  }
  if (m <= 0.0) return out;

  std::vector<std::vector<int>> members(n);
  std::vector<int> min_vid(n);
  std::vector<bool> alive(n, true);
  for (int i = 0; i < n; ++i) {
    members[i] = {vids[i]};
    min_vid[i] = vids[i];
  }

  // Scan order over alive communities sorted by smallest vertex id keeps
  // tie-breaking deterministic: the first best pair found wins.
  while (true) {
    std::vector<int> order;
    for (int i = 0; i < n; ++i)
      if (alive[i]) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return min_vid[a] < min_vid[b]; });

    double best_gain = 0.0;
    int best_a = -1, best_b = -1;
    for (std::size_t x = 0; x < order.size(); ++x) {
      for (std::size_t y = x + 1; y < order.size(); ++y) {
        const int a = order[x];
        const int b = order[y];
        if (static_cast<int>(members[a].size() + members[b].size()) > cap) continue;
        const double gain = between[a][b] / m - gamma * tot[a] * tot[b] / (2.0 * m * m);
        if (gain > best_gain) {
          best_gain = gain;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0 || !(best_gain > 0.0)) break;

    members[best_a].insert(members[best_a].end(), members[best_b].begin(),
                           members[best_b].end());
    min_vid[best_a] = std::min(min_vid[best_a], min_vid[best_b]);
    tot[best_a] += tot[best_b];
    for (int i = 0; i < n; ++i) {
      if (!alive[i] || i == best_a || i == best_b) continue;
      between[best_a][i] += between[best_b][i];
      between[i][best_a] = between[best_a][i];
    }
    alive[best_b] = false;
  }

  out.communities.clear();
  for (int i = 0; i < n; ++i) {
    if (alive[i]) out.communities.push_back(members[i]);
  }
  out.canonicalize();
  return out;
}

/// Mean co-occurrence count over a vertex's live edges; 0 with no edges.
inline double repulsion_value(const AssocGraph& graph, int vertex_id) {
  if (!graph.vertices().count(vertex_id)) {
    throw std::invalid_argument("repulsion_value: unknown vertex " + std::to_string(vertex_id));
  }
  double sum = 0.0;
  long n = 0;
  for (const auto& [key, e] : graph.edges()) {
    if (e.a == vertex_id || e.b == vertex_id) {
      sum += static_cast<double>(e.occurrences);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

struct ValidationResult {
  Partition partition;
  int conflicted_communities = 0;
  int evicted_vertices = 0;
};

/// Enforce the one-tracklet-per-camera rule inside every community.
/// A conflicted community first has all its internal edges repelled by the
/// mean of the endpoints' repulsion values; then, per over-represented
/// camera, only the member with the largest internal importance sum stays
/// (smallest vertex id on ties) and the rest leave as singletons.
inline ValidationResult validate_and_repulse(AssocGraph& graph, const Partition& partition) {
  community_detail::community_index(graph, partition);  // validates the cover

  ValidationResult res;
  std::vector<std::vector<int>> repaired;
  std::vector<int> evicted_all;

  for (const auto& community : partition.communities) {
    std::map<int, std::vector<int>> by_camera;
    for (int v : community) {
      by_camera[graph.vertices().at(v).tracklet.camera_id].push_back(v);
    }
    bool conflicted = false;
    for (const auto& [cam, vs] : by_camera) {
      if (vs.size() > 1) conflicted = true;
    }
    if (!conflicted) {
      repaired.push_back(community);
      continue;
    }
    ++res.conflicted_communities;

    std::map<int, double> repulse;
    for (int v : community) repulse[v] = repulsion_value(graph, v);
    for (std::size_t i = 0; i < community.size(); ++i) {
      for (std::size_t j = i + 1; j < community.size(); ++j) {
        const GraphEdge* e = graph.edge(community[i], community[j]);
        if (!e) continue;
        graph.edge_ref(community[i], community[j]).importance -=
            0.5 * (repulse.at(community[i]) + repulse.at(community[j]));
      }
    }

    // Internal importance sums over the full (pre-eviction) community.
    std::map<int, double> internal;
    for (int v : community) internal[v] = 0.0;
    for (std::size_t i = 0; i < community.size(); ++i) {
      for (std::size_t j = i + 1; j < community.size(); ++j) {
        const GraphEdge* e = graph.edge(community[i], community[j]);
        if (!e) continue;
        internal[community[i]] += e->importance;
        internal[community[j]] += e->importance;
      }
    }

    std::set<int> evicted;
    for (const auto& [cam, vs] : by_camera) {
      if (vs.size() < 2) continue;
      int keep = vs.front();
      for (int v : vs) {
        if (internal.at(v) > internal.at(keep) ||
            (internal.at(v) == internal.at(keep) && v < keep)) {
          keep = v;
        }
      }
      for (int v : vs) {
        if (v != keep) evicted.insert(v);
      }
    }

    std::vector<int> rest;
    for (int v : community) {
      if (!evicted.count(v)) rest.push_back(v);
    }
    repaired.push_back(rest);
    for (int v : evicted) evicted_all.push_back(v);
    res.evicted_vertices += static_cast<int>(evicted.size());
  }

  for (int v : evicted_all) repaired.push_back({v});
  res.partition.communities = std::move(repaired);
  res.partition.canonicalize();
  return res;
}

/// Carry global ids across frames: every community inherits the id held by
/// a plurality of its members on the previous frame (smallest id on ties).
/// When two communities claim the same id, the stronger claim (more votes,
/// then smaller first vertex) wins and the loser falls back to its next
/// preference or a fresh id. Communities with no labelled member get fresh
/// ids in partition order.
inline void assign_global_ids(const Partition& partition, GlobalIdMap& idmap) {
  const std::map<int, int> prev = idmap.labels();

  struct Claim {
    std::vector<std::pair<int, int>> prefs;  // (global id, votes), strongest first
    int best_votes = 0;
    int min_vid = 0;
    std::size_t index = 0;
  };

  std::vector<Claim> claims(partition.communities.size());
  for (std::size_t c = 0; c < partition.communities.size(); ++c) {
    const auto& community = partition.communities[c];
    if (community.empty()) {
      throw std::invalid_argument("assign_global_ids: empty community");
    }
    Claim& cl = claims[c];
    cl.index = c;
    cl.min_vid = *std::min_element(community.begin(), community.end());
    std::map<int, int> votes;
    for (int v : community) {
      auto it = prev.find(v);
      if (it != prev.end()) ++votes[it->second];
    }
    for (const auto& [gid, n] : votes) cl.prefs.emplace_back(gid, n);
    std::sort(cl.prefs.begin(), cl.prefs.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    cl.best_votes = cl.prefs.empty() ? 0 : cl.prefs.front().second;
  }

  std::vector<std::size_t> claim_order;
  for (std::size_t c = 0; c < claims.size(); ++c) {
    if (claims[c].best_votes > 0) claim_order.push_back(c);
  }
  std::sort(claim_order.begin(), claim_order.end(), [&](std::size_t a, std::size_t b) {
    if (claims[a].best_votes != claims[b].best_votes) {
      return claims[a].best_votes > claims[b].best_votes;
    }
    return claims[a].min_vid < claims[b].min_vid;
  });

  std::vector<std::optional<int>> assigned(partition.communities.size());
  std::set<int> taken;
  for (std::size_t c : claim_order) {
    for (const auto& [gid, votes] : claims[c].prefs) {
      if (taken.insert(gid).second) {
        assigned[c] = gid;
        break;
      }
    }
  }
  for (std::size_t c = 0; c < partition.communities.size(); ++c) {
    if (!assigned[c]) {
      int gid = idmap.allocate();
      while (taken.count(gid)) gid = idmap.allocate();
      taken.insert(gid);
      assigned[c] = gid;
    }
  }

  std::map<int, int> labels;
  for (std::size_t c = 0; c < partition.communities.size(); ++c) {
    for (int v : partition.communities[c]) labels[v] = *assigned[c];
  }
  idmap.replace_labels(std::move(labels));
}

}  // namespace mcmot
