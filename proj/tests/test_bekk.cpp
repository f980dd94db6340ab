#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spillnet/bekk.hpp"
#include "spillnet/common.hpp"

using namespace spillnet;
using namespace spillnet::bekk;

namespace {

bool close_to(double a, double b, double tol = 1e-10) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(b));
}

BekkParams stationary_params() {
  BekkParams p;
  p.mu << 0.0002, -0.0001;
  p.phi << 0.05, 0.01, -0.02, 0.03;
  p.c_lower << 0.010, 0.0, 0.002, 0.008;
  p.a << 0.30, 0.05, -0.04, 0.25;
  p.b << 0.92, -0.03, 0.02, 0.90;
  return p;
}

Eigen::Matrix4d kron_sum(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      k.block<2, 2>(2 * i, 2 * j) = a(i, j) * a + b(i, j) * b;
    }
  return k;
}

Eigen::MatrixXd random_returns(int t_len, std::uint64_t seed, double sd = 0.01) {
  Rng rng(seed);
  Eigen::MatrixXd r(t_len, 2);
  for (int t = 0; t < t_len; ++t) {
    r(t, 0) = sd * rng.gaussian();
    r(t, 1) = sd * rng.gaussian();
  }
  return r;
}

BekkParams random_stationary(std::uint64_t seed) {
  Rng rng(seed);
  while (true) {
    BekkParams p;
    p.mu << 0.001 * rng.gaussian(), 0.001 * rng.gaussian();
    p.phi << 0.1 * rng.gaussian(), 0.1 * rng.gaussian(),
        0.1 * rng.gaussian(), 0.1 * rng.gaussian();
    p.c_lower << 0.01 * (1 + 0.2 * rng.uniform()), 0.0,
        0.003 * rng.gaussian(), 0.008 * (1 + 0.2 * rng.uniform());
    p.a << 0.2 + 0.1 * rng.uniform(), 0.1 * rng.gaussian(),
        0.1 * rng.gaussian(), 0.2 + 0.1 * rng.uniform();
    p.b << 0.7 + 0.15 * rng.uniform(), 0.05 * rng.gaussian(),
        0.05 * rng.gaussian(), 0.7 + 0.15 * rng.uniform();
    if (stationarity_check(p).is_stationary) return p;
  }
}

}  // namespace

TEST_CASE("BekkParams vector round trip and validation") {
  BekkParams p = stationary_params();
  auto v = p.to_vector();
  BekkParams q = BekkParams::from_vector(v);
  CHECK((q.to_vector() - v).norm() == 0.0);
  CHECK(v[kMuI] == p.mu[0]);
  CHECK(v[kAIJ] == p.a(0, 1));
  CHECK(v[kBJI] == p.b(1, 0));
  CHECK(v[kCIJ] == p.c_lower(1, 0));
  CHECK_NOTHROW(p.validate());

  BekkParams bad = p;
  bad.c_lower(0, 1) = 0.1;  // not lower triangular
  CHECK_THROWS_AS(bad.validate(), NumericError);

  bad = p;
  bad.c_lower(1, 1) = -0.01;
  CHECK_THROWS_AS(bad.validate(), NumericError);

  bad = p;
  bad.a.setIdentity();
  bad.b.setIdentity();  // radius 2
  CHECK_THROWS_AS(bad.validate(), NumericError);

  Eigen::VectorXd short_v(5);
  CHECK_THROWS_AS(BekkParams::from_vector(short_v), NumericError);
}

TEST_CASE("stationarity_check boundary cases") {
  BekkParams p;  // A = B = 0
  p.c_lower.setIdentity();
  auto r = stationarity_check(p);
  CHECK(r.is_stationary);
  CHECK(r.spectral_radius == 0.0);

  p.b.setIdentity();
  r = stationarity_check(p);
  CHECK_FALSE(r.is_stationary);
  CHECK(r.spectral_radius == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stationarity_check matches characteristic-polynomial oracle") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    Eigen::Matrix2d a, b;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        a(i, j) = 0.4 * rng.gaussian();
        b(i, j) = 0.4 * rng.gaussian();
      }
    BekkParams p;
    p.c_lower.setIdentity();
    p.a = a;
    p.b = b;
    double got = stationarity_check(p).spectral_radius;
    double want = oracles::spectral_radius_reference(kron_sum(a, b));
    CHECK(close_to(got, want, 1e-10));
  }
}

TEST_CASE("conditional_covariances collapses to C'C when A = B = 0") {
  BekkParams p;
  p.c_lower << 0.02, 0.0, 0.005, 0.01;
  Eigen::Matrix2d cc = p.c_lower.transpose() * p.c_lower;
  Eigen::MatrixXd r = random_returns(40, 9);

  auto cs = conditional_covariances(p, r, cc);
  REQUIRE(static_cast<int>(cs.h.size()) == 39);
  for (const auto& h : cs.h) CHECK((h - cc).norm() == 0.0);

  // Default h_init differs at the first element only.
  auto cs2 = conditional_covariances(p, r);
  CHECK((cs2.h[0] - initial_covariance(r)).norm() <= 1e-18);
  for (std::size_t k = 1; k < cs2.h.size(); ++k)
    CHECK((cs2.h[k] - cc).norm() == 0.0);
}

TEST_CASE("conditional_covariances residual identity when mu = phi = 0") {
  BekkParams p = stationary_params();
  p.mu.setZero();
  p.phi.setZero();
  Eigen::MatrixXd r = random_returns(30, 10);
  auto cs = conditional_covariances(p, r, Eigen::Matrix2d::Identity() * 1e-4);
  for (int t = 1; t < 30; ++t) {
    CHECK(cs.residuals[t - 1][0] == r(t, 0));
    CHECK(cs.residuals[t - 1][1] == r(t, 1));
  }
}

TEST_CASE("conditional_covariances matches direct recursion") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BekkParams p = random_stationary(seed);
    Eigen::MatrixXd r = random_returns(50, 100 + seed);
    Eigen::Matrix2d h0 = initial_covariance(r);
    auto cs = conditional_covariances(p, r, h0);
    auto ref = oracles::bekk_h_reference(p, r, h0);
    REQUIRE(cs.h.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          CHECK(close_to(cs.h[k](i, j), ref[k](i, j), 1e-10));
    }
  }
}

TEST_CASE("conditional covariances stay positive definite") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BekkParams p = random_stationary(seed);
    Eigen::MatrixXd r = simulate_pair(p, 600, 400 + seed);
    auto cs = conditional_covariances(p, r);
    for (const auto& h : cs.h) {
      Eigen::LLT<Eigen::Matrix2d> llt(h);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("log_likelihood closed-form terms") {
  const int t_len = 50;
  BekkParams p;  // mu = phi = 0, A = B = 0, C = I
  Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();

  Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(t_len, 2);
  double ll = log_likelihood(p, zeros, eye);
  CHECK(close_to(ll, -(t_len - 1) * std::log(2 * M_PI), 1e-12));

  Eigen::MatrixXd ones(t_len, 2);
  ones.col(0).setOnes();
  ones.col(1).setZero();
  ll = log_likelihood(p, ones, eye);
  CHECK(close_to(ll, (t_len - 1) * (-std::log(2 * M_PI) - 0.5), 1e-12));
}

TEST_CASE("log_likelihood matches direct-formula oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BekkParams p = random_stationary(seed);
    Eigen::MatrixXd r = random_returns(80, 200 + seed);
    Eigen::Matrix2d h0 = initial_covariance(r);
    double got = log_likelihood(p, r, h0);
    double want = oracles::bekk_loglik_reference(p, r, h0);
    CHECK(close_to(got, want, 1e-10));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  BekkParams p = random_stationary(3);
  Eigen::MatrixXd r = simulate_pair(p, 300, 77);
  Eigen::Matrix2d h0 = initial_covariance(r);
  Eigen::Matrix<double, kNumParams, 1> ga =
      log_likelihood_gradient(p, r, h0);
  auto v = p.to_vector();
  for (int k = 0; k < kNumParams; ++k) {
    double h = 1e-6 * std::max(1.0, std::abs(v[k]));
    Eigen::VectorXd vp = v, vm = v;
    vp[k] += h;
    vm[k] -= h;
    double fp = log_likelihood(BekkParams::from_vector(vp), r, h0);
    double fm = log_likelihood(BekkParams::from_vector(vm), r, h0);
    double gf = (fp - fm) / (2 * h);
    CHECK(std::abs(ga[k] - gf) <= 5e-5 * (1.0 + std::abs(ga[k])));
  }
}

TEST_CASE("simulate_pair determinism and moments") {
  BekkParams p = stationary_params();
  Eigen::MatrixXd r1 = simulate_pair(p, 500, 12345);
  Eigen::MatrixXd r2 = simulate_pair(p, 500, 12345);
  CHECK((r1 - r2).norm() == 0.0);
  Eigen::MatrixXd r3 = simulate_pair(p, 500, 54321);
  CHECK((r1 - r3).norm() != 0.0);

  CHECK_THROWS_AS(simulate_pair(p, 0, 1), ConfigError);

  BekkParams bad = p;
  bad.phi << 1.2, 0, 0, 1.2;
  CHECK_THROWS_AS(simulate_pair(bad, 100, 1), NumericError);

  // With A = B = 0 the returns are i.i.d. N(0, C'C).
  BekkParams iid;
  iid.c_lower << 0.010, 0.0, 0.004, 0.008;
  Eigen::Matrix2d cc = iid.c_lower.transpose() * iid.c_lower;
  const int t_len = 50000;
  Eigen::MatrixXd r = simulate_pair(iid, t_len, 2020);
  Eigen::RowVector2d mean = r.colwise().mean();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int t = 0; t < t_len; ++t) {
    Eigen::Vector2d d = r.row(t).transpose() - mean.transpose();
    cov += d * d.transpose();
  }
  cov /= t_len;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double se = std::sqrt((cc(i, i) * cc(j, j) + cc(i, j) * cc(i, j)) /
                            t_len);
      CHECK(std::abs(cov(i, j) - cc(i, j)) <= 3 * se);
    }
  }
}

TEST_CASE("fit_pair recovers simulated parameters" * doctest::timeout(60)) {
  BekkParams truth = stationary_params();
  Eigen::MatrixXd r = simulate_pair(truth, 12000, 8801);
  FitOptions opts;
  BekkFit fit = fit_pair(r, opts);
  REQUIRE(fit.converged);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(fit.params.a(i, j) - truth.a(i, j)) < 0.08);
      CHECK(std::abs(fit.params.b(i, j) - truth.b(i, j)) < 0.08);
    }
  CHECK(fit.gradient_norm < opts.grad_tol);
  CHECK(fit.vcov.rows() == kNumParams);
  CHECK(fit.vcov.cols() == kNumParams);

  // Deterministic refit.
  BekkFit fit2 = fit_pair(r, opts);
  CHECK((fit.params.to_vector() - fit2.params.to_vector()).norm() == 0.0);
  CHECK(fit.loglik == fit2.loglik);

  // Consistency: the truth beats visible single-entry perturbations.
  Eigen::Matrix2d h0 = initial_covariance(r);
  double at_truth = log_likelihood(truth, r, h0);
  for (int k : {kMuI, kPhiII, kAII, kBII}) {
    auto v = truth.to_vector();
    v[k] += (k == kAII || k == kBII) ? -0.2 : 0.2;
    CHECK(at_truth > log_likelihood(BekkParams::from_vector(v), r, h0));
  }
}

TEST_CASE("fit_pair scale equivariance" * doctest::timeout(120)) {
  BekkParams truth = stationary_params();
  Eigen::MatrixXd r = simulate_pair(truth, 6000, 555);
  FitOptions opts;
  BekkFit base = fit_pair(r, opts);
  BekkFit scaled = fit_pair(100.0 * r, opts);
  REQUIRE(base.converged);
  REQUIRE(scaled.converged);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(scaled.params.a(i, j) - base.params.a(i, j)) < 1e-3);
      CHECK(std::abs(scaled.params.b(i, j) - base.params.b(i, j)) < 1e-3);
      CHECK(std::abs(scaled.params.phi(i, j) - base.params.phi(i, j)) < 1e-3);
    }
  CHECK(close_to(scaled.params.c_lower(0, 0), 100 * base.params.c_lower(0, 0),
                 1e-3));
  CHECK(close_to(scaled.params.c_lower(1, 1), 100 * base.params.c_lower(1, 1),
                 1e-3));
  CHECK(std::abs(scaled.params.mu[0] - 100 * base.params.mu[0]) <
        1e-3 * (1 + 100 * std::abs(base.params.mu[0])));
}

TEST_CASE("fit_pair input validation") {
  FitOptions opts;
  Eigen::MatrixXd r = random_returns(500, 31);
  r.col(1).setConstant(3.0);
  CHECK_THROWS_AS(fit_pair(r, opts), DataError);  // constant column

  Eigen::MatrixXd tiny = random_returns(100, 32);
  CHECK_THROWS_AS(fit_pair(tiny, opts), DataError);  // below min_obs
}

TEST_CASE("spillover_tests zero restriction gives zero statistic") {
  BekkFit fit;
  fit.params = stationary_params();
  fit.params.a(0, 1) = fit.params.a(1, 0) = 0.0;
  fit.params.b(0, 1) = fit.params.b(1, 0) = 0.0;
  fit.converged = true;
  fit.vcov = Eigen::MatrixXd::Identity(kNumParams, kNumParams);
  PairTests t = spillover_tests(fit, 0.10);
  CHECK(t.joint.statistic == 0.0);
  CHECK(t.joint.p_value == 1.0);
  CHECK(t.joint.df == 4);
  CHECK_FALSE(t.joint.rejected);
  CHECK(t.dir_ij.statistic == 0.0);
  CHECK(t.dir_ij.df == 2);
  CHECK(t.dir_ji.df == 2);
  CHECK(t.joint.kind == TestKind::joint);
  CHECK(t.dir_ij.kind == TestKind::dir_ij);
  CHECK(t.dir_ji.kind == TestKind::dir_ji);
}

TEST_CASE("spillover_tests statistic with identity vcov") {
  BekkFit fit;
  fit.params = stationary_params();
  fit.converged = true;
  fit.vcov = Eigen::MatrixXd::Identity(kNumParams, kNumParams);
  PairTests t = spillover_tests(fit, 0.10);
  const auto& p = fit.params;
  double joint = p.a(0, 1) * p.a(0, 1) + p.a(1, 0) * p.a(1, 0) +
                 p.b(0, 1) * p.b(0, 1) + p.b(1, 0) * p.b(1, 0);
  CHECK(close_to(t.joint.statistic, joint, 1e-12));
  CHECK(close_to(t.dir_ij.statistic,
                 p.a(0, 1) * p.a(0, 1) + p.b(0, 1) * p.b(0, 1), 1e-12));
  CHECK(close_to(t.joint.p_value, chi_square_survival(joint, 4), 1e-12));
  CHECK(t.joint.rejected == (t.joint.p_value < 0.10));
}

TEST_CASE("spillover_tests singular vcov flags and does not reject") {
  BekkFit fit;
  fit.params = stationary_params();
  fit.converged = true;
  fit.vcov = Eigen::MatrixXd::Zero(kNumParams, kNumParams);
  PairTests t = spillover_tests(fit, 0.10);
  CHECK(t.joint.singular_vcov);
  CHECK(t.joint.p_value == 1.0);
  CHECK_FALSE(t.joint.rejected);
}

TEST_CASE("fit_all_pairs parallel equals serial" * doctest::timeout(120)) {
  const int t_len = 700;
  BekkParams p = stationary_params();
  Eigen::MatrixXd cols(t_len, 3);
  cols.block(0, 0, t_len, 2) = simulate_pair(p, t_len, 41);
  cols.col(2) = simulate_pair(p, t_len, 42).col(0);
  std::vector<std::string> codes = {"a1", "b2", "c3"};
  FitOptions opts;
  opts.seed = 99;
  auto par = fit_all_pairs(cols, codes, opts, 4);
  auto ser = fit_all_pairs_serial(cols, codes, opts);
  REQUIRE(par.size() == 3);
  REQUIRE(ser.size() == 3);
  for (std::size_t k = 0; k < par.size(); ++k) {
    CHECK(par[k].codes == ser[k].codes);
    CHECK(par[k].fit.converged == ser[k].fit.converged);
    CHECK((par[k].fit.params.to_vector() - ser[k].fit.params.to_vector())
              .norm() == 0.0);
    CHECK(par[k].fit.loglik == ser[k].fit.loglik);
    CHECK(par[k].tests.joint.p_value == ser[k].tests.joint.p_value);
  }
  // Pairs are in code order: (a1,b2), (a1,c3), (b2,c3).
  CHECK(par[0].codes[0] == "a1");
  CHECK(par[0].codes[1] == "b2");
  CHECK(par[2].codes[0] == "b2");
  CHECK(par[2].codes[1] == "c3");
}

TEST_CASE("spillover_tests_lr smoke" * doctest::timeout(120)) {
  BekkParams truth = stationary_params();
  Eigen::MatrixXd r = simulate_pair(truth, 800, 4242);
  FitOptions opts;
  BekkFit fit = fit_pair(r, opts);
  REQUIRE(fit.converged);
  PairTests t = spillover_tests_lr(fit, r, opts, 0.10);
  CHECK(t.joint.df == 4);
  CHECK(t.dir_ij.df == 2);
  CHECK(t.joint.statistic >= 0.0);
  CHECK(t.joint.p_value >= 0.0);
  CHECK(t.joint.p_value <= 1.0);
  CHECK(t.dir_ij.p_value >= 0.0);
  CHECK(t.dir_ij.p_value <= 1.0);
}
