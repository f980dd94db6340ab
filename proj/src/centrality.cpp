#include "spillnet/centrality.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace spillnet::centrality {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Weighted k-shell.
// ---------------------------------------------------------------------------

ShellAssignment weighted_kshell(const net::SpilloverNetwork& net,
                                double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw ConfigError("weighted_kshell: alpha and beta must be positive");
  const int n = net.n();
  ShellAssignment out;
  out.shell.assign(n, 0);
  if (n == 0) return out;

  std::vector<bool> alive(n, true);
  std::vector<int> raw(n, 0);
  int n_alive = n;
  long long k = 1;

  while (n_alive > 0) {
    // Stage renormalization: divide alive edge weights by their minimum and
    // round to nearest integer (>= 1 by construction).
    double min_w = kInf;
    for (int i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (!alive[j] || !(net.intensity(i, j) > 0.0)) continue;
        min_w = std::min(min_w, net.intensity(i, j));
      }
    }
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (std::isfinite(min_w)) {
      for (int i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        for (int j = 0; j < n; ++j) {
          if (!alive[j] || !(net.intensity(i, j) > 0.0)) continue;
          w(i, j) =
              static_cast<double>(std::llround(net.intensity(i, j) / min_w));
        }
      }
    }

    auto node_wk = [&](int i) {
      int deg = 0;
      double out_strength = 0;
      for (int j = 0; j < n; ++j) {
        if (!alive[j] || j == i) continue;
        bool neighbour = w(i, j) > 0.0 || w(j, i) > 0.0;
        if (neighbour) ++deg;
        out_strength += w(i, j);
      }
      if (deg == 0 || out_strength <= 0.0) return 0.0;
      return std::pow(std::pow(deg, alpha) * std::pow(out_strength, beta),
                      1.0 / (alpha + beta));
    };

    std::vector<double> wk(n, 0.0);
    double min_wk = kInf;
    for (int i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      wk[i] = node_wk(i);
      min_wk = std::min(min_wk, wk[i]);
    }
    // Empty stage: no node would fall at the current threshold, jump.
    if (min_wk > static_cast<double>(k)) {
      k = static_cast<long long>(std::ceil(min_wk));
    }
    if (k > std::numeric_limits<int>::max() / 2)
      throw NumericError("weighted_kshell: weight scale produced an absurd shell index");

    // Cascading removal at threshold k with this stage's weights.
    bool removed = true;
    while (removed) {
      removed = false;
      for (int i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        if (wk[i] <= static_cast<double>(k) + 1e-12) {
          alive[i] = false;
          raw[i] = static_cast<int>(k);
          --n_alive;
          removed = true;
        }
      }
      if (removed) {
        min_wk = kInf;
        for (int i = 0; i < n; ++i) {
          if (!alive[i]) continue;
          wk[i] = node_wk(i);
          min_wk = std::min(min_wk, wk[i]);
        }
      }
    }
    ++k;
  }

  // Compress raw thresholds to contiguous layers 1..max_shell.
  std::map<int, int> relabel;
  for (int i = 0; i < n; ++i) relabel[raw[i]] = 0;
  int next = 0;
  for (auto& [value, label] : relabel) label = ++next;
  for (int i = 0; i < n; ++i) out.shell[i] = relabel[raw[i]];
  out.max_shell = next;
  return out;
}

// ---------------------------------------------------------------------------
// Shortest paths with counting.
// ---------------------------------------------------------------------------

bool ShortestPaths::tied(double d1, double d2) {
  if (!std::isfinite(d1) || !std::isfinite(d2)) return false;
  return std::abs(d1 - d2) <= 1e-9 * std::max(1.0, d1);
}

std::vector<int> ShortestPaths::interior_nodes(int j, int k) const {
  std::vector<int> out;
  if (j == k || !reachable(j, k)) return out;
  const int n = static_cast<int>(dist.rows());
  for (int i = 0; i < n; ++i) {
    if (i == j || i == k) continue;
    if (!reachable(j, i) || !reachable(i, k)) continue;
    if (tied(dist(j, k), dist(j, i) + dist(i, k))) out.push_back(i);
  }
  return out;
}

namespace {

void dijkstra_with_counts(const Eigen::MatrixXd& len, int src,
                          Eigen::Ref<Eigen::VectorXd> dist,
                          Eigen::Ref<Eigen::VectorXd> count) {
  const int n = static_cast<int>(len.rows());
  dist.setConstant(kInf);
  count.setZero();
  dist[src] = 0.0;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  std::vector<bool> done(n, false);
  pq.emplace(0.0, src);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    for (int v = 0; v < n; ++v) {
      if (!(len(u, v) < kInf)) continue;
      double nd = d + len(u, v);
      if (nd < dist[v] && !ShortestPaths::tied(dist[v], nd)) {
        dist[v] = nd;
        pq.emplace(nd, v);
      }
    }
  }

  // Count on the shortest-path DAG in distance order.  Edge lengths are
  // strictly positive, so predecessors always precede successors.
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (std::isfinite(dist[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  count[src] = 1.0;
  for (int u : order) {
    if (count[u] == 0.0) continue;
    for (int v = 0; v < n; ++v) {
      if (!(len(u, v) < kInf) || v == src) continue;
      if (ShortestPaths::tied(dist[v], dist[u] + len(u, v)))
        count[v] += count[u];
    }
  }
}

Eigen::MatrixXd edge_lengths(const net::SpilloverNetwork& net, double alpha) {
  const int n = net.n();
  Eigen::MatrixXd len = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && net.intensity(i, j) > 0.0)
        len(i, j) = std::pow(net.intensity(i, j), -alpha);
    }
  }
  return len;
}

ShortestPaths run_all_pairs(const net::SpilloverNetwork& net, double alpha,
                            int workers) {
  if (!(alpha > 0.0))
    throw ConfigError("all_pairs_shortest: alpha must be positive");
  const int n = net.n();
  ShortestPaths sp;
  sp.alpha = alpha;
  sp.dist.resize(n, n);
  sp.count.resize(n, n);
  if (n == 0) return sp;
  const Eigen::MatrixXd len = edge_lengths(net, alpha);

#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (int src = 0; src < n; ++src) {
    Eigen::VectorXd d(n), c(n);
    dijkstra_with_counts(len, src, d, c);
    sp.dist.row(src) = d.transpose();
    sp.count.row(src) = c.transpose();
  }
  return sp;
}

}  // namespace

ShortestPaths all_pairs_shortest(const net::SpilloverNetwork& net,
                                 double alpha, int workers) {
  if (workers < 1)
    throw ConfigError("all_pairs_shortest: workers must be >= 1");
  return run_all_pairs(net, alpha, workers);
}

ShortestPaths all_pairs_shortest_serial(const net::SpilloverNetwork& net,
                                        double alpha) {
  return run_all_pairs(net, alpha, 1);
}

// ---------------------------------------------------------------------------
// Weighted betweenness.
// ---------------------------------------------------------------------------

CentralityScores weighted_betweenness(const ShortestPaths& sp, int workers) {
  const int n = static_cast<int>(sp.dist.rows());
  CentralityScores scores;
  scores.alpha = sp.alpha;
  scores.wbc.assign(n, 0.0);

#pragma omp parallel for num_threads(std::max(1, workers)) schedule(static)
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        if (!sp.reachable(j, k) || sp.count(j, k) <= 0.0) continue;
        if (!sp.reachable(j, i) || !sp.reachable(i, k)) continue;
        if (ShortestPaths::tied(sp.dist(j, k), sp.dist(j, i) + sp.dist(i, k))) {
          acc += sp.count(j, i) * sp.count(i, k) / sp.count(j, k);
        }
      }
    }
    scores.wbc[i] = acc;
  }
  return scores;
}

CentralityScores weighted_betweenness(const net::SpilloverNetwork& net,
                                      double alpha, int workers) {
  return weighted_betweenness(all_pairs_shortest(net, alpha, workers),
                              workers);
}

}  // namespace spillnet::centrality
