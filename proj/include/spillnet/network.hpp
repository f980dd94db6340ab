// Spillover network assembly and connectivity indicators.
//
// A directed edge i -> j exists when the pair's joint spillover test and the
// i -> j directional test both reject; its intensity is |a_ij| + |b_ij|.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "spillnet/bekk.hpp"
#include "spillnet/ingest.hpp"

namespace spillnet::net {

using ingest::Group;
using ingest::PeriodSpec;
using ingest::SectorGrouping;

struct SpilloverNetwork {
  std::vector<std::string> nodes;  // sorted unique codes
  Eigen::MatrixXd intensity;       // intensity(i,j) = s_ij >= 0, zero diagonal
  SectorGrouping grouping;
  PeriodSpec period;

  int n() const { return static_cast<int>(nodes.size()); }
  bool has_edge(int i, int j) const { return intensity(i, j) > 0.0; }
  Group group_of(int i) const { return grouping.group_of(nodes[i]); }
  int edge_count() const;
};

// Ungrouped nodes act as singleton groups: two distinct nodes are in the same
// group only if they share one of the four main tags.
bool same_group(const SpilloverNetwork& net, int i, int j);

// Assembles the network from fitted pairs.  Non-converged fits contribute no
// edges; weights below 1e-12 are demoted to non-edges.  Rejections are
// re-derived from the stored p-values at `level`.
SpilloverNetwork build_network(const std::vector<bekk::FittedPair>& fits,
                               const SectorGrouping& grouping,
                               const PeriodSpec& period, double level = 0.10);

struct NodeIndicators {
  std::string code;
  Group group = Group::Ungrouped;
  double out_strength = 0;        // O_i
  double in_strength = 0;         // I_i
  double relative_influence = 0;  // (O - I) / (O + I), 0 when O + I = 0
  double toto = 0;                // out-intensity toward other groups
  double tifo = 0;                // in-intensity from other groups
};

std::vector<NodeIndicators> node_connectivity(const SpilloverNetwork& net);

struct GroupIndicators {
  Group group = Group::Ungrouped;
  std::vector<std::string> codes;
  std::vector<double> toto, tifo;  // aligned with codes
  double sum_toto = 0, sum_o = 0, sum_tifo = 0, sum_i = 0;
  double toto_share_pct = 0;  // 100 * sum_toto / sum_o (0 when sum_o = 0)
  double tifo_share_pct = 0;
};

// One entry per non-empty main group, canonical order.
std::vector<GroupIndicators> group_connectivity(const SpilloverNetwork& net);

struct SectorInfluenceMatrix {
  std::vector<Group> groups;       // canonical order
  std::vector<int> group_sizes;
  Eigen::MatrixXd gross;           // summed intensity m -> n
  Eigen::MatrixXd si;              // gross / (N_m * N_n)
  Eigen::MatrixXi path_counts;     // edge counts m -> n
};

// Default: all groups (canonical order) that have at least one member.
SectorInfluenceMatrix sector_influence(const SpilloverNetwork& net);
// Explicit group list; an empty requested group is an error.
SectorInfluenceMatrix sector_influence(const SpilloverNetwork& net,
                                       const std::vector<Group>& groups);

struct NetworkTotals {
  double total_intensity = 0;
  long total_paths = 0;
};

NetworkTotals network_totals(const SpilloverNetwork& net);

}  // namespace spillnet::net
