// Major spillover paths, the group-level net-spillover digraph, and its
// maximum spanning arborescence.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "spillnet/network.hpp"

namespace spillnet::paths {

using ingest::Group;

// from == to selects intra-group edges, otherwise edges from -> to.
struct PathScope {
  Group from = Group::Ungrouped;
  Group to = Group::Ungrouped;

  bool intra() const { return from == to; }
  std::string label() const;
};

struct PathEdge {
  std::string from, to;
  double s = 0;
  int rank = 0;  // 1-based within the scope
};

struct MajorPathSet {
  PathScope scope;
  std::vector<PathEdge> edges;
  double cutoff = 0;  // intensity of the last selected edge, 0 when empty
  int candidate_count = 0;

  bool empty() const { return edges.empty(); }
};

// Selects the ceil(quantile * candidates) highest-intensity edges inside the
// scope; ties at the cutoff break by lexicographic (from, to).  A scope whose
// groups have no members is an error; zero candidate edges is not.
MajorPathSet major_paths(const net::SpilloverNetwork& net,
                         const PathScope& scope, double quantile = 0.20);

// All scopes over the non-empty main groups, row-major with intra scopes on
// the diagonal.
std::vector<MajorPathSet> all_major_paths(const net::SpilloverNetwork& net,
                                          double quantile = 0.20);

struct GroupDigraph {
  std::vector<Group> nodes;  // the four main groups, canonical order
  Eigen::MatrixXd gross;     // summed intensity m -> n
  Eigen::MatrixXd net;       // max(0, gross_mn - gross_nm), zero diagonal
};

// Requires all four main groups present in the influence matrix.
GroupDigraph group_net_digraph(const net::SectorInfluenceMatrix& si);

struct ArborescenceEdge {
  Group from = Group::Ungrouped;
  Group to = Group::Ungrouped;
  double weight = 0;
};

struct Arborescence {
  Group root = Group::Ungrouped;
  std::vector<ArborescenceEdge> edges;  // |nodes| - 1 spanning out-tree edges
  double total_weight = 0;
};

// Maximum-weight spanning out-tree over the positive net edges.  The root
// maximizes total weight among feasible roots; ties break by lexicographic
// group tag.
Arborescence max_arborescence(const GroupDigraph& g);

struct UndirectedEdge {
  Group a = Group::Ungrouped;
  Group b = Group::Ungrouped;
  double weight = 0;
};

// Comparison option: maximum spanning tree of the symmetrized net weights,
// ignoring direction.  Errors when the positive-weight graph is disconnected.
std::vector<UndirectedEdge> undirected_mst(const GroupDigraph& g);

struct NodeArbEdge {
  std::string from, to;
  double weight = 0;
};

struct NodeArborescence {
  std::string root;
  std::vector<NodeArbEdge> edges;
  double total_weight = 0;
};

// Node-level variant over net pairwise intensities max(0, s_ij - s_ji);
// root ties break by lexicographic code.
NodeArborescence node_arborescence(const net::SpilloverNetwork& net);

}  // namespace spillnet::paths
