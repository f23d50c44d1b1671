// Copyright 2026 The hybsem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYBSEM_ROADMAP_HPP
#define HYBSEM_ROADMAP_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hybsem/random.hpp"
#include "hybsem/scenario.hpp"

namespace hybsem {

struct RoadmapEdge {
  int from{0};
  int to{0};
  double length{0.0};
};

/// Undirected probabilistic roadmap in the plane.
class Roadmap {
 public:
  Roadmap() = default;
  explicit Roadmap(std::vector<Vec2> nodes) : nodes_{std::move(nodes)}, adjacency_(nodes_.size()) {}

  [[nodiscard]] const std::vector<Vec2>& nodes() const { return nodes_; }
  [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] int source() const { return source_; }
  [[nodiscard]] int goal() const { return goal_; }
  void set_endpoints(int source, int goal) {
    check(source);
    check(goal);
    source_ = source;
    goal_ = goal;
  }

  /// Adds i-j once, with Euclidean length; returns false when already present.
  bool add_edge(int i, int j) {
    check(i);
    check(j);
    if (i == j || has_edge(i, j)) {
      return false;
    }
    const double len = (nodes_[static_cast<std::size_t>(i)] - nodes_[static_cast<std::size_t>(j)]).norm();
    adjacency_[static_cast<std::size_t>(i)].push_back({i, j, len});
    adjacency_[static_cast<std::size_t>(j)].push_back({j, i, len});
    return true;
  }

  [[nodiscard]] bool has_edge(int i, int j) const {
    const auto& adj = adjacency_[static_cast<std::size_t>(i)];
    return std::any_of(adj.begin(), adj.end(), [j](const RoadmapEdge& e) { return e.to == j; });
  }

  [[nodiscard]] const std::vector<RoadmapEdge>& neighbors(int i) const {
    return adjacency_[static_cast<std::size_t>(i)];
  }

  /// Every edge once, with from < to.
  [[nodiscard]] std::vector<RoadmapEdge> edges() const {
    std::vector<RoadmapEdge> out;
    for (const auto& adj : adjacency_) {
      for (const auto& e : adj) {
        if (e.from < e.to) {
          out.push_back(e);
        }
      }
    }
    return out;
  }

  [[nodiscard]] bool connected(int a, int b) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<int> stack{a};
    seen[static_cast<std::size_t>(a)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v == b) {
        return true;
      }
      for (const auto& e : neighbors(v)) {
        if (!seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = 1;
          stack.push_back(e.to);
        }
      }
    }
    return false;
  }

 private:
  void check(int i) const {
    if (i < 0 || i >= size()) {
      throw std::out_of_range("Roadmap: node index out of range");
    }
  }

  std::vector<Vec2> nodes_;
  std::vector<std::vector<RoadmapEdge>> adjacency_;
  int source_{0};
  int goal_{0};
};

struct RoadmapConfig {
  Vec2 lower{-2.0, -2.0};
  Vec2 upper{12.0, 12.0};
  int node_count{150};
  int k_nearest{8};
  int candidate_paths{10};
  double max_step{1.0};
  /// Also link source and goal directly; the workspace has no static obstacles.
  bool direct_edge{true};
};

/// Connects every node to its k nearest neighbours (symmetric, deduplicated).
inline void connect_k_nearest(Roadmap& map, int k) {
  const int n = map.size();
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) {
        dist.emplace_back((map.nodes()[static_cast<std::size_t>(i)] - map.nodes()[static_cast<std::size_t>(j)]).squaredNorm(), j);
      }
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    for (std::size_t m = 0; m < take; ++m) {
      map.add_edge(i, dist[m].second);
    }
  }
}

/// Uniform samples in the bounds plus source (index 0) and goal (index 1), k-nearest edges.
inline Roadmap build_roadmap(const RoadmapConfig& config, const Vec2& source, const Vec2& goal, Rng& rng) {
  if (!(config.upper.x() > config.lower.x()) || !(config.upper.y() > config.lower.y())) {
    throw std::invalid_argument("build_roadmap: workspace bounds are empty");
  }
  if (config.node_count < 0 || config.k_nearest < 1) {
    throw std::invalid_argument("build_roadmap: need node_count >= 0 and k_nearest >= 1");
  }
  std::vector<Vec2> nodes{source, goal};
  std::uniform_real_distribution<double> ux{config.lower.x(), config.upper.x()};
  std::uniform_real_distribution<double> uy{config.lower.y(), config.upper.y()};
  for (int i = 0; i < config.node_count; ++i) {
    const double x = ux(rng);
    nodes.emplace_back(x, uy(rng));
  }
  Roadmap map{std::move(nodes)};
  map.set_endpoints(0, 1);
  connect_k_nearest(map, config.k_nearest);
  if (config.direct_edge) {
    map.add_edge(0, 1);
  }
  return map;
}

struct RoadmapPath {
  std::vector<int> nodes;
  double length{0.0};

  bool operator==(const RoadmapPath& other) const { return nodes == other.nodes; }
};

namespace detail {

/// Dijkstra from `from` to `to` avoiding banned nodes and banned directed edges.
inline std::optional<RoadmapPath> dijkstra(const Roadmap& map, int from, int to, const std::vector<char>& banned_nodes,
                                           const std::set<std::pair<int, int>>& banned_edges) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(map.size());
  std::vector<double> dist(n, kInf);
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(from)] = 0.0;
  queue.emplace(0.0, from);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(v)]) {
      continue;
    }
    if (v == to) {
      break;
    }
    for (const auto& e : map.neighbors(v)) {
      if (banned_nodes[static_cast<std::size_t>(e.to)] || banned_edges.count({v, e.to}) > 0) {
        continue;
      }
      const double nd = d + e.length;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        prev[static_cast<std::size_t>(e.to)] = v;
        queue.emplace(nd, e.to);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(to)])) {
    return std::nullopt;
  }
  RoadmapPath path;
  for (int v = to; v != -1; v = prev[static_cast<std::size_t>(v)]) {
    path.nodes.push_back(v);
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  path.length = dist[static_cast<std::size_t>(to)];
  return path;
}

inline double path_length(const Roadmap& map, const std::vector<int>& nodes) {
  double len = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    len += (map.nodes()[static_cast<std::size_t>(nodes[i])] - map.nodes()[static_cast<std::size_t>(nodes[i - 1])]).norm();
  }
  return len;
}

}  // namespace detail

/// Up to `count` loopless source-goal paths in nondecreasing length (Yen's algorithm).
inline std::vector<RoadmapPath> k_shortest_paths(const Roadmap& map, int count) {
  std::vector<RoadmapPath> found;
  if (count < 1 || map.size() == 0) {
    return found;
  }
  const std::vector<char> none(static_cast<std::size_t>(map.size()), 0);
  auto first = detail::dijkstra(map, map.source(), map.goal(), none, {});
  if (!first) {
    return found;
  }
  found.push_back(std::move(*first));
  std::vector<RoadmapPath> pool;
  while (static_cast<int>(found.size()) < count) {
    const auto& last = found.back();
    for (std::size_t i = 0; i + 1 < last.nodes.size(); ++i) {
      const int spur = last.nodes[i];
      const std::vector<int> root(last.nodes.begin(), last.nodes.begin() + static_cast<std::ptrdiff_t>(i + 1));
      std::set<std::pair<int, int>> banned_edges;
      for (const auto& p : found) {
        if (p.nodes.size() > i + 1 && std::equal(root.begin(), root.end(), p.nodes.begin())) {
          banned_edges.insert({p.nodes[i], p.nodes[i + 1]});
          banned_edges.insert({p.nodes[i + 1], p.nodes[i]});
        }
      }
      std::vector<char> banned_nodes(static_cast<std::size_t>(map.size()), 0);
      for (std::size_t r = 0; r < i; ++r) {
        banned_nodes[static_cast<std::size_t>(root[r])] = 1;
      }
      auto spur_path = detail::dijkstra(map, spur, map.goal(), banned_nodes, banned_edges);
      if (!spur_path) {
        continue;
      }
      RoadmapPath candidate;
      candidate.nodes = root;
      candidate.nodes.insert(candidate.nodes.end(), spur_path->nodes.begin() + 1, spur_path->nodes.end());
      candidate.length = detail::path_length(map, candidate.nodes);
      const bool known = std::find(found.begin(), found.end(), candidate) != found.end() ||
                         std::find(pool.begin(), pool.end(), candidate) != pool.end();
      if (!known) {
        pool.push_back(std::move(candidate));
      }
    }
    if (pool.empty()) {
      break;
    }
    const auto best = std::min_element(pool.begin(), pool.end(), [](const RoadmapPath& a, const RoadmapPath& b) {
      if (a.length != b.length) {
        return a.length < b.length;
      }
      return a.nodes < b.nodes;
    });
    found.push_back(*best);
    pool.erase(best);
  }
  return found;
}

/// Waypoints of a roadmap path.
inline std::vector<Vec2> waypoints(const Roadmap& map, const RoadmapPath& path) {
  std::vector<Vec2> out;
  out.reserve(path.nodes.size());
  for (const int v : path.nodes) {
    out.push_back(map.nodes()[static_cast<std::size_t>(v)]);
  }
  return out;
}

/// Splits each polyline segment into equal steps no longer than `max_step`.
inline std::vector<Vec2> discretize(const std::vector<Vec2>& polyline, double max_step) {
  if (!(max_step > 0.0)) {
    throw std::invalid_argument("discretize: max_step must be > 0");
  }
  std::vector<Vec2> actions;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 seg = polyline[i] - polyline[i - 1];
    const double len = seg.norm();
    if (len == 0.0) {
      continue;
    }
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_step - 1e-9)));
    const Vec2 step = seg / pieces;
    for (int p = 0; p < pieces; ++p) {
      actions.push_back(step);
    }
  }
  return actions;
}

}  // namespace hybsem

#endif  // HYBSEM_ROADMAP_HPP
