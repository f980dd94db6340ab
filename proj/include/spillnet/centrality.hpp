// Node importance: weighted k-shell decomposition and weighted betweenness
// centrality on the spillover network.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "spillnet/network.hpp"

namespace spillnet::centrality {

struct ShellAssignment {
  std::vector<int> shell;  // aligned with net.nodes, 1..max_shell
  int max_shell = 0;
};

// Weighted k-shell: per stage, edge weights are renormalized (divided by the
// current minimum and rounded to the nearest integer), each node gets
//   wk_i = (k_i^alpha * O_i^beta)^(1/(alpha+beta))
// with k_i its distinct-neighbour degree and O_i its (renormalized)
// out-strength, and every node with wk_i <= k is removed, cascading, before k
// increases.  A stage that removes nothing jumps k to ceil(min wk).  Raw
// thresholds are finally compressed to contiguous shells 1..max_shell.
ShellAssignment weighted_kshell(const net::SpilloverNetwork& net,
                                double alpha = 1.0, double beta = 1.0);

struct ShortestPaths {
  Eigen::MatrixXd dist;   // dist(i,j), +inf when unreachable, 0 diagonal
  Eigen::MatrixXd count;  // number of shortest paths, count(i,i) = 1
  double alpha = 0.5;

  bool reachable(int i, int j) const { return std::isfinite(dist(i, j)); }
  // Distances d1, d2 are considered tied when |d1-d2| <= 1e-9 * max(1, d1).
  static bool tied(double d1, double d2);
  // Nodes strictly inside at least one shortest j -> k path.
  std::vector<int> interior_nodes(int j, int k) const;
};

// All-pairs shortest paths under edge length s^(-alpha), with path counting.
ShortestPaths all_pairs_shortest(const net::SpilloverNetwork& net,
                                 double alpha = 0.5, int workers = 1);
ShortestPaths all_pairs_shortest_serial(const net::SpilloverNetwork& net,
                                        double alpha = 0.5);

struct CentralityScores {
  std::vector<double> wbc;  // aligned with net.nodes
  double alpha = 0.5;
};

// WBC_i = sum over ordered pairs (j,k), j != k, both != i, of the fraction of
// shortest j -> k paths passing through i.
CentralityScores weighted_betweenness(const net::SpilloverNetwork& net,
                                      double alpha = 0.5, int workers = 1);
CentralityScores weighted_betweenness(const ShortestPaths& sp, int workers = 1);

}  // namespace spillnet::centrality
