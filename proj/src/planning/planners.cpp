#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <utility>

#include "common/error.hpp"
#include "planning/planning.hpp"

namespace twinarm::plan {

namespace {

using Rng = std::mt19937_64;

JointVector uniform_sample(const ArmModel& arm, Rng& rng) {
  JointVector q;
  for (std::size_t i = 0; i < kin::kDof; ++i) {
    std::uniform_real_distribution<double> u(arm.joints[i].lower_limit,
                                             arm.joints[i].upper_limit);
    q[i] = u(rng);
  }
  return q;
}

void check_endpoints(const ArmModel& arm, const JointVector& start,
                     const JointVector& goal, const ObstacleSet& obstacles,
                     double clearance) {
  for (const JointVector* q : {&start, &goal}) {
    if (!q->finite() || !arm.within_limits(*q)) {
      throw Error(ErrorCode::invalid_endpoint, "endpoint outside joint limits");
    }
    if (!collision_free(arm, *q, obstacles, clearance)) {
      throw Error(ErrorCode::invalid_endpoint, "endpoint in collision");
    }
  }
}

std::size_t nearest(const std::vector<JointVector>& nodes, const JointVector& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < kin::kDof && d < best_d; ++j) {
      const double e = nodes[i][j] - q[j];
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

void validate(const PlannerParams& p) {
  if (!(p.step_size > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "planner: step_size must be > 0");
  }
  if (!(p.goal_bias >= 0.0 && p.goal_bias <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "planner: goal_bias must be in [0, 1]");
  }
  if (p.max_iterations < 1 || p.prm_samples < 1 || p.prm_k < 1) {
    throw Error(ErrorCode::invalid_argument, "planner: counts must be >= 1");
  }
  if (!(p.edge_resolution > 0.0) || !(p.clearance >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "planner: bad resolution or clearance");
  }
}

Path plan_rrt(const ArmModel& arm, const JointVector& start,
              const JointVector& goal, const ObstacleSet& obstacles,
              const PlannerParams& params) {
  validate(params);
  check_endpoints(arm, start, goal, obstacles, params.clearance);
  if (start == goal) return Path{{start}};

  auto edge_ok = [&](const JointVector& a, const JointVector& b) {
    return edge_collision_free(arm, a, b, obstacles, params.clearance,
                               params.edge_resolution);
  };
  if (edge_ok(start, goal)) return Path{{start, goal}};

  // Bidirectional: one tree grows a step toward a sample, the other then
  // extends greedily toward the new node.
  struct Tree {
    std::vector<JointVector> nodes;
    std::vector<std::size_t> parent;
    std::size_t add(const JointVector& q, std::size_t p) {
      nodes.push_back(q);
      parent.push_back(p);
      return nodes.size() - 1;
    }
    std::vector<JointVector> branch(std::size_t i) const {
      std::vector<JointVector> out;
      for (;; i = parent[i]) {
        out.push_back(nodes[i]);
        if (i == 0) break;
      }
      return out;
    }
  };
  Tree from_start{{start}, {0}};
  Tree from_goal{{goal}, {0}};

  Rng rng(params.rng_seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Tree* a = &from_start;
  Tree* b = &from_goal;

  for (int it = 0; it < params.max_iterations; ++it) {
    const JointVector target = coin(rng) < params.goal_bias ? b->nodes.front() : uniform_sample(arm, rng);
    const std::size_t near = nearest(a->nodes, target);
    const double d = kin::l2_distance(a->nodes[near], target);
    if (d > 0.0) {
      const JointVector next =
          d > params.step_size ? kin::lerp(a->nodes[near], target, params.step_size / d) : target;
      if (edge_ok(a->nodes[near], next)) {
        const std::size_t added = a->add(next, near);
        // Connect the other tree toward the new node.
        std::size_t tip = nearest(b->nodes, next);
        for (;;) {
          const double e = kin::l2_distance(b->nodes[tip], next);
          if (e <= params.step_size) {
            if (!edge_ok(b->nodes[tip], next)) break;
            std::vector<JointVector> head = a->branch(added);
            std::vector<JointVector> tail = b->branch(tip);
            if (a == &from_goal) std::swap(head, tail);
            std::vector<JointVector> path(head.rbegin(), head.rend());
            path.insert(path.end(), tail.begin(), tail.end());
            return Path{std::move(path)};
          }
          const JointVector step = kin::lerp(b->nodes[tip], next, params.step_size / e);
          if (!edge_ok(b->nodes[tip], step)) break;
          tip = b->add(step, tip);
        }
      }
    }
    std::swap(a, b);
  }
  throw Error(ErrorCode::no_path_found, "rrt: iteration budget exhausted");
}

Path plan_prm(const ArmModel& arm, const JointVector& start,
              const JointVector& goal, const ObstacleSet& obstacles,
              const PlannerParams& params) {
  validate(params);
  check_endpoints(arm, start, goal, obstacles, params.clearance);
  if (start == goal) return Path{{start}};

  auto edge_ok = [&](const JointVector& a, const JointVector& b) {
    return edge_collision_free(arm, a, b, obstacles, params.clearance,
                               params.edge_resolution);
  };
  if (edge_ok(start, goal)) return Path{{start, goal}};

  Rng rng(params.rng_seed);
  std::vector<JointVector> nodes{start, goal};
  const int max_attempts = 20 * params.prm_samples;
  for (int a = 0; a < max_attempts && static_cast<int>(nodes.size()) < params.prm_samples + 2; ++a) {
    JointVector q = uniform_sample(arm, rng);
    if (collision_free(arm, q, obstacles, params.clearance)) nodes.push_back(q);
  }

  // Undirected k-nearest graph; edge validity is resolved lazily.
  enum class EdgeState : unsigned char { unknown, valid, invalid };
  struct Edge {
    std::size_t to;
    double w;
    std::size_t id;
  };
  const std::size_t n = nodes.size();
  std::vector<std::vector<Edge>> adj(n);
  std::vector<EdgeState> state;
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  {
    std::vector<std::pair<double, std::size_t>> dist;
    std::vector<std::vector<bool>> linked(n, std::vector<bool>(n, false));
    const std::size_t k = static_cast<std::size_t>(params.prm_k);
    for (std::size_t i = 0; i < n; ++i) {
      dist.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) dist.emplace_back(kin::l2_distance(nodes[i], nodes[j]), j);
      }
      const std::size_t take = std::min(k, dist.size());
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
      for (std::size_t m = 0; m < take; ++m) {
        const auto [w, j] = dist[m];
        if (linked[i][j]) continue;
        linked[i][j] = linked[j][i] = true;
        const std::size_t id = state.size();
        state.push_back(EdgeState::unknown);
        ends.emplace_back(i, j);
        adj[i].push_back({j, w, id});
        adj[j].push_back({i, w, id});
      }
    }
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  for (;;) {
    std::vector<double> cost(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev(n, kNone), via(n, kNone);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    cost[0] = 0.0;
    open.emplace(0.0, 0);
    while (!open.empty()) {
      const auto [c, u] = open.top();
      open.pop();
      if (c > cost[u]) continue;
      if (u == 1) break;
      for (const Edge& e : adj[u]) {
        if (state[e.id] == EdgeState::invalid) continue;
        const double nc = c + e.w;
        if (nc < cost[e.to]) {
          cost[e.to] = nc;
          prev[e.to] = u;
          via[e.to] = e.id;
          open.emplace(nc, e.to);
        }
      }
    }
    if (prev[1] == kNone) {
      throw Error(ErrorCode::no_path_found, "prm: start and goal are not connected");
    }

    std::vector<std::size_t> chain{1};
    for (std::size_t v = 1; v != 0; v = prev[v]) chain.push_back(prev[v]);
    std::reverse(chain.begin(), chain.end());

    bool all_valid = true;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const std::size_t id = via[chain[i]];
      if (state[id] == EdgeState::unknown) {
        const auto [a, b] = ends[id];
        state[id] = edge_ok(nodes[a], nodes[b]) ? EdgeState::valid : EdgeState::invalid;
      }
      if (state[id] == EdgeState::invalid) {
        all_valid = false;
        break;
      }
    }
    if (!all_valid) continue;

    Path path;
    for (std::size_t v : chain) path.waypoints.push_back(nodes[v]);
    return path;
  }
}

Path shortcut_path(const ArmModel& arm, const Path& path,
                   const ObstacleSet& obstacles, int iterations,
                   std::uint64_t rng_seed, double clearance) {
  Path out = path;
  if (out.waypoints.size() <= 2) return out;
  Rng rng(rng_seed);
  for (int it = 0; it < iterations && out.waypoints.size() > 2; ++it) {
    const std::size_t n = out.waypoints.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j < i + 2) continue;
    if (edge_collision_free(arm, out.waypoints[i], out.waypoints[j], obstacles,
                            clearance)) {
      out.waypoints.erase(out.waypoints.begin() + static_cast<std::ptrdiff_t>(i + 1),
                          out.waypoints.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  return out;
}

}  // namespace twinarm::plan
