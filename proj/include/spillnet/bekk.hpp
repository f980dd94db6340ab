// Bivariate GARCH-BEKK(1,1) with VAR(1) mean: quasi-maximum-likelihood
// estimation, spillover hypothesis tests, and simulation.
//
// Model for a return pair r_t (2-vector):
//   r_t = mu + phi r_{t-1} + eps_t
//   H_t = C'C + A' eps_{t-1} eps_{t-1}' A + B' H_{t-1} B
// with C lower triangular (positive diagonal).  Spillover from series i to
// series j operates through a_ij = A(0,1) and b_ij = B(0,1).
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spillnet/common.hpp"

namespace spillnet::bekk {

inline constexpr int kNumParams = 17;

// Free-parameter vector ordering.
enum ParamIndex : int {
  kMuI = 0, kMuJ = 1,
  kPhiII = 2, kPhiIJ = 3, kPhiJI = 4, kPhiJJ = 5,
  kCII = 6, kCIJ = 7, kCJJ = 8,
  kAII = 9, kAIJ = 10, kAJI = 11, kAJJ = 12,
  kBII = 13, kBIJ = 14, kBJI = 15, kBJJ = 16,
};

struct BekkParams {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d phi = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d c_lower = Eigen::Matrix2d::Identity();  // (0,1) must be 0
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d b = Eigen::Matrix2d::Zero();

  Eigen::Matrix<double, kNumParams, 1> to_vector() const;
  static BekkParams from_vector(
      const Eigen::Ref<const Eigen::VectorXd>& v);

  // Throws NumericError if C is not lower triangular with positive diagonal
  // or the process is not covariance stationary.
  void validate() const;
};

struct StationarityResult {
  bool is_stationary = false;
  double spectral_radius = 0.0;  // of kron(A,A) + kron(B,B)
};

StationarityResult stationarity_check(const BekkParams& params);

// Conditional covariances aligned with residuals: element k corresponds to
// observation k+1 of the input sample (the first observation only feeds the
// lagged mean equation), so both vectors have length T-1.
struct CovarianceSeries {
  std::vector<Eigen::Matrix2d> h;
  std::vector<Eigen::Vector2d> residuals;
};

// Covariance of VAR(1) OLS residuals; falls back to the sample covariance if
// the regression is degenerate.  Used to start the variance recursion.
Eigen::Matrix2d initial_covariance(const Eigen::MatrixXd& returns);

CovarianceSeries conditional_covariances(const BekkParams& params,
                                         const Eigen::MatrixXd& returns);
CovarianceSeries conditional_covariances(const BekkParams& params,
                                         const Eigen::MatrixXd& returns,
                                         const Eigen::Matrix2d& h_init);

// Gaussian quasi log-likelihood sum_t [-ln(2 pi) - ln det(H_t)/2
// - eps_t' inv(H_t) eps_t / 2] over the T-1 effective observations.
double log_likelihood(const BekkParams& params, const Eigen::MatrixXd& returns);
double log_likelihood(const BekkParams& params, const Eigen::MatrixXd& returns,
                      const Eigen::Matrix2d& h_init);

// Exact gradient of log_likelihood in the free-parameter ordering, from the
// same tangent propagation the optimizer uses.
Eigen::Matrix<double, kNumParams, 1> log_likelihood_gradient(
    const BekkParams& params, const Eigen::MatrixXd& returns,
    const Eigen::Matrix2d& h_init);

enum class TestKind { joint, dir_ij, dir_ji };
enum class TestStyle { wald, lr };

struct TestResult {
  TestKind kind = TestKind::joint;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  double level = 0.10;
  bool rejected = false;        // p_value < level
  bool singular_vcov = false;   // restriction covariance not invertible
};

struct FitOptions {
  int restarts = 5;             // extra perturbed starts if the first fails
  int max_iter = 600;
  double grad_tol = 1e-5;       // max-norm on the transformed objective
  int min_obs = 200;
  double significance = 0.10;
  TestStyle test_style = TestStyle::wald;
  std::uint64_t seed = 20200103;  // drives restart perturbations
};

struct BekkFit {
  std::array<std::string, 2> pair = {"", ""};
  BekkParams params;
  double loglik = 0.0;
  Eigen::MatrixXd vcov;         // 17x17, free-parameter ordering
  bool vcov_pseudo = false;     // pseudo-inverse fallback was needed
  bool converged = false;
  int n_restarts_used = 0;
  double gradient_norm = 0.0;   // final max-norm, transformed objective
  Eigen::Matrix2d h_init = Eigen::Matrix2d::Identity();
};

BekkFit fit_pair(const Eigen::MatrixXd& returns, const FitOptions& opts = {});

struct PairTests {
  TestResult joint, dir_ij, dir_ji;
};

// Wald tests from the fitted vcov: joint {a_ij, a_ji, b_ij, b_ji} = 0 (df 4)
// and the two directional pairs (df 2).
PairTests spillover_tests(const BekkFit& fit, double level = 0.10);

// Likelihood-ratio variants: refits with the restricted entries pinned to 0.
PairTests spillover_tests_lr(const BekkFit& fit,
                             const Eigen::MatrixXd& returns,
                             const FitOptions& opts, double level = 0.10);

// Simulates t_obs observations after burn_in steps; H starts at the
// unconditional covariance.  Deterministic in (params, t_obs, seed, burn_in).
Eigen::MatrixXd simulate_pair(const BekkParams& params, int t_obs,
                              std::uint64_t seed, int burn_in = 500);

struct FittedPair {
  std::array<std::string, 2> codes;
  BekkFit fit;
  PairTests tests;
};

// Fits every unordered pair (i < j in code order) of panel columns.  Each
// pair gets an independent seed derived from opts.seed and its index, so the
// result does not depend on scheduling; `workers` sets the OpenMP team size.
std::vector<FittedPair> fit_all_pairs(const Eigen::MatrixXd& returns,
                                      const std::vector<std::string>& codes,
                                      const FitOptions& opts, int workers);

// Serial reference for the parallel driver; must produce identical results.
std::vector<FittedPair> fit_all_pairs_serial(
    const Eigen::MatrixXd& returns, const std::vector<std::string>& codes,
    const FitOptions& opts);

}  // namespace spillnet::bekk
