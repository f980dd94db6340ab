// Independent reference implementations used as oracles.  Deliberately
// straight-line and unoptimized; they share no code with the library.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "spillnet/bekk.hpp"

namespace oracles {

struct Moments {
  double mean = 0, sd = 0, skewness = 0, kurtosis = 0;
  double jarque_bera = 0, ar1 = 0;
};

// Long-double accumulation of the descriptive-statistics contract.
Moments moments_reference(const std::vector<double>& x);

// Direct matrix-form BEKK recursion; h[k] matches observation k+1.
std::vector<Eigen::Matrix2d> bekk_h_reference(
    const spillnet::bekk::BekkParams& p, const Eigen::MatrixXd& returns,
    const Eigen::Matrix2d& h_init);

double bekk_loglik_reference(const spillnet::bekk::BekkParams& p,
                             const Eigen::MatrixXd& returns,
                             const Eigen::Matrix2d& h_init);

// Largest eigenvalue magnitude of a 4x4 matrix via Faddeev-LeVerrier
// characteristic polynomial and Durand-Kerner roots.
double spectral_radius_reference(const Eigen::Matrix4d& m);

// Weighted k-shell pruning loop, separately coded; returns compressed shells.
std::vector<int> kshell_reference(const Eigen::MatrixXd& s, double alpha,
                                  double beta);

// Classic unweighted k-core peeling on an undirected adjacency matrix, with
// labels compressed to 1..max.
std::vector<int> classic_kshell(const std::vector<std::vector<bool>>& adj);

struct BrutePaths {
  Eigen::MatrixXd dist;
  Eigen::MatrixXd count;
  std::vector<double> wbc;
};

// Exhaustive simple-path enumeration over a dense length matrix (infinity
// means no edge).  Ties use the same relative 1e-9 rule as the library.
BrutePaths brute_force_paths(const Eigen::MatrixXd& len);

struct BruteArb {
  bool ok = false;
  double best = 0;
};

// Exhaustive maximum spanning arborescence over all roots and parent
// assignments; entries of w that are > 0 are edges.
BruteArb brute_force_arborescence(const Eigen::MatrixXd& w);

}  // namespace oracles
