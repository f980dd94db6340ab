// Earth mover's distance between spillover-intensity distributions.
//
// Distributions are summarized as signatures (cluster mean, weight) built by
// histogramming normalized intensities; the distance is solved as a balanced
// transportation problem with |mean_i - mean_j| ground costs.  A closed-form
// 1-D CDF distance is provided as an independent check; the transport solver
// never exploits the one-dimensional structure.
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "spillnet/network.hpp"

namespace spillnet::emd {

struct SignatureCluster {
  double mean = 0;    // position in normalized intensity space
  double weight = 0;  // > 0
};

struct Signature {
  std::vector<SignatureCluster> clusters;  // means strictly increasing
  double total_weight() const;
};

struct SignatureOptions {
  int n_bins = 20;
  // Unsigned domain is [0, 1]; the signed variant pools two directions with
  // opposite signs over [-1, 1].
  bool signed_domain = false;
};

// Histograms values / scale into n_bins equal bins; empty bins are dropped,
// each kept bin becomes a cluster at the mean of its members with weight
// count / total.  scale = 0 picks max |value|.
Signature build_signature(const std::vector<double>& values,
                          const SignatureOptions& opts = {},
                          double scale = 0.0);

struct TransportPlan {
  Eigen::MatrixXd flow;  // rows: clusters of s1, cols: clusters of s2
  double cost = 0;       // total work = sum flow * |mean difference|
};

// Exact optimal transport via the transportation simplex (Bland's rule).
TransportPlan emd_transport(const Signature& s1, const Signature& s2);

// EMD = optimal cost / total flow.
double emd(const Signature& s1, const Signature& s2);

// Independent oracle: for 1-D signatures with equal mass, EMD equals the
// integral of |CDF1 - CDF2|.
double emd_closed_form_1d(const Signature& s1, const Signature& s2);

struct PeriodEmdCell {
  bool present = false;
  double value = 0;  // percent (x100)
};

struct PeriodEmdTable {
  std::vector<std::string> period_pairs;  // "<p>_vs_<q>" for adjacent periods
  std::vector<ingest::Group> groups;      // the four main groups
  // cells[pair][from][to]
  std::vector<std::vector<std::vector<PeriodEmdCell>>> cells;
};

struct PeriodEmdOptions {
  int n_bins = 20;
  bool signed_pooling = false;  // pool m->n and n->m with opposite signs
  int workers = 1;
};

// EMD between adjacent periods for every ordered main-group cell (m, n),
// using a shared normalization per cell pair; a cell with no edges in either
// period is absent.
PeriodEmdTable period_emd_table(const std::vector<net::SpilloverNetwork>& periods,
                                const PeriodEmdOptions& opts = {});
PeriodEmdTable period_emd_table_serial(
    const std::vector<net::SpilloverNetwork>& periods,
    const PeriodEmdOptions& opts = {});

}  // namespace spillnet::emd
