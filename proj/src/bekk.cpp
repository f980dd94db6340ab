#include "spillnet/bekk.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace spillnet::bekk {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
// Trial points with kron radius at or above this are rejected during fitting.
constexpr double kRadiusBound = 1.0 - 1e-6;
constexpr double kDetFloor = 1e-300;

Eigen::Matrix4d kron2(const Eigen::Matrix2d& x, const Eigen::Matrix2d& y) {
  Eigen::Matrix4d k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      k.block<2, 2>(2 * i, 2 * j) = x(i, j) * y;
  return k;
}

double spectral_radius_kron(const Eigen::Matrix2d& a,
                            const Eigen::Matrix2d& b) {
  Eigen::Matrix4d k = kron2(a, a) + kron2(b, b);
  Eigen::EigenSolver<Eigen::Matrix4d> es(k, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius2(const Eigen::Matrix2d& m) {
  Eigen::EigenSolver<Eigen::Matrix2d> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Likelihood engine.  Works on raw parameter arrays in the fixed 17-element
// ordering and evaluates the mean negative log-likelihood together with its
// exact gradient by forward tangent propagation through the recursion.
// ---------------------------------------------------------------------------

struct Engine {
  std::vector<double> r1, r2;  // data columns
  double h011 = 1, h012 = 0, h022 = 1;

  Engine(const Eigen::MatrixXd& returns, const Eigen::Matrix2d& h_init) {
    const int t_len = static_cast<int>(returns.rows());
    r1.resize(t_len);
    r2.resize(t_len);
    for (int t = 0; t < t_len; ++t) {
      r1[t] = returns(t, 0);
      r2[t] = returns(t, 1);
    }
    h011 = h_init(0, 0);
    h012 = 0.5 * (h_init(0, 1) + h_init(1, 0));
    h022 = h_init(1, 1);
  }

  int n_terms() const { return static_cast<int>(r1.size()) - 1; }

  // f = mean over t of [ln 2pi + ln det H_t / 2 + q_t / 2].  grad (17, same
  // ordering, untransformed space) and opg (17x17 sum of per-term score outer
  // products, total-likelihood scale) are optional.  Returns false when the
  // recursion degenerates (non-finite values or loss of positive
  // definiteness).
  bool eval(const double* p, double& f, double* grad, Eigen::MatrixXd* opg) const {
    const double mu1 = p[kMuI], mu2 = p[kMuJ];
    const double f11 = p[kPhiII], f12 = p[kPhiIJ], f21 = p[kPhiJI],
                 f22 = p[kPhiJJ];
    const double c11 = p[kCII], c21 = p[kCIJ], c22 = p[kCJJ];
    const double a11 = p[kAII], a12 = p[kAIJ], a21 = p[kAJI], a22 = p[kAJJ];
    const double b11 = p[kBII], b12 = p[kBIJ], b21 = p[kBJI], b22 = p[kBJJ];

    // C'C for lower-triangular C.
    const double cc11 = c11 * c11 + c21 * c21;
    const double cc12 = c21 * c22;
    const double cc22 = c22 * c22;

    const bool want_grad = grad != nullptr || opg != nullptr;
    // d(C'C)/dc for the three C parameters (constant over time).
    const double dcc[3][3] = {{2 * c11, 0, 0},
                              {2 * c21, c22, 0},
                              {0, c21, 2 * c22}};

    const int t_len = static_cast<int>(r1.size());
    const int m_terms = t_len - 1;

    double h11 = h011, h12 = h012, h22 = h022;
    double dh11[kNumParams] = {0}, dh12[kNumParams] = {0},
           dh22[kNumParams] = {0};

    // State carried from the previous step for tangent construction.
    double pe1 = 0, pe2 = 0;    // eps_{t-1}
    double pv1 = 0, pv2 = 0;    // A' eps_{t-1}
    double pg11 = 0, pg12 = 0, pg21 = 0, pg22 = 0;  // H_{t-1} B
    double prp1 = 0, prp2 = 0;  // regressors of eps_{t-1}

    double acc = 0.0;
    double gacc[kNumParams] = {0};

    for (int t = 1; t < t_len; ++t) {
      const double rp1 = r1[t - 1], rp2 = r2[t - 1];
      const double e1 = r1[t] - mu1 - f11 * rp1 - f12 * rp2;
      const double e2 = r2[t] - mu2 - f21 * rp1 - f22 * rp2;

      if (t > 1) {
        // H_t = C'C + A' e e' A + B' H B with e = eps_{t-1}, H = H_{t-1}.
        const double x11 = b11 * h11 + b21 * h12;
        const double x12 = b11 * h12 + b21 * h22;
        const double x21 = b12 * h11 + b22 * h12;
        const double x22 = b12 * h12 + b22 * h22;
        const double w11 = x11 * b11 + x12 * b21;
        const double w12 = x11 * b12 + x12 * b22;
        const double w22 = x21 * b12 + x22 * b22;
        const double n11 = cc11 + pv1 * pv1 + w11;
        const double n12 = cc12 + pv1 * pv2 + w12;
        const double n22 = cc22 + pv2 * pv2 + w22;

        if (want_grad) {
          for (int k = 0; k < kNumParams; ++k) {
            // Common recursion term B' dH B.
            const double y11 = b11 * dh11[k] + b21 * dh12[k];
            const double y12 = b11 * dh12[k] + b21 * dh22[k];
            const double y21 = b12 * dh11[k] + b22 * dh12[k];
            const double y22 = b12 * dh12[k] + b22 * dh22[k];
            double s11 = y11 * b11 + y12 * b21;
            double s12 = y11 * b12 + y12 * b22;
            double s22 = y21 * b12 + y22 * b22;
            switch (k) {
              case kMuI: case kMuJ: case kPhiII: case kPhiIJ:
              case kPhiJI: case kPhiJJ: {
                // d eps_{t-1} for this parameter.
                double de1, de2;
                switch (k) {
                  case kMuI: de1 = -1; de2 = 0; break;
                  case kMuJ: de1 = 0; de2 = -1; break;
                  case kPhiII: de1 = -prp1; de2 = 0; break;
                  case kPhiIJ: de1 = -prp2; de2 = 0; break;
                  case kPhiJI: de1 = 0; de2 = -prp1; break;
                  default: de1 = 0; de2 = -prp2; break;
                }
                const double dv1 = a11 * de1 + a21 * de2;
                const double dv2 = a12 * de1 + a22 * de2;
                s11 += 2 * dv1 * pv1;
                s12 += dv1 * pv2 + pv1 * dv2;
                s22 += 2 * dv2 * pv2;
                break;
              }
              case kCII: case kCIJ: case kCJJ: {
                const double* d = dcc[k - kCII];
                s11 += d[0]; s12 += d[1]; s22 += d[2];
                break;
              }
              case kAII:
                s11 += 2 * pe1 * pv1; s12 += pe1 * pv2; break;
              case kAIJ:
                s12 += pe1 * pv1; s22 += 2 * pe1 * pv2; break;
              case kAJI:
                s11 += 2 * pe2 * pv1; s12 += pe2 * pv2; break;
              case kAJJ:
                s12 += pe2 * pv1; s22 += 2 * pe2 * pv2; break;
              case kBII:
                s11 += 2 * pg11; s12 += pg12; break;
              case kBIJ:
                s12 += pg11; s22 += 2 * pg12; break;
              case kBJI:
                s11 += 2 * pg21; s12 += pg22; break;
              default:  // kBJJ
                s12 += pg21; s22 += 2 * pg22; break;
            }
            dh11[k] = s11; dh12[k] = s12; dh22[k] = s22;
          }
        }
        h11 = n11; h12 = n12; h22 = n22;
      }

      const double det = h11 * h22 - h12 * h12;
      if (!(det > kDetFloor) || !(h11 > 0.0)) return false;
      const double inv_det = 1.0 / det;
      const double i11 = h22 * inv_det;
      const double i12 = -h12 * inv_det;
      const double i22 = h11 * inv_det;
      const double u1 = i11 * e1 + i12 * e2;
      const double u2 = i12 * e1 + i22 * e2;
      const double q = e1 * u1 + e2 * u2;
      acc += kLog2Pi + 0.5 * (std::log(det) + q);
      if (!std::isfinite(acc)) return false;

      if (want_grad) {
        const double w11 = i11 - u1 * u1;
        const double w12 = i12 - u1 * u2;
        const double w22 = i22 - u2 * u2;
        double termdot[kNumParams];
        for (int k = 0; k < kNumParams; ++k) {
          termdot[k] =
              0.5 * (w11 * dh11[k] + 2 * w12 * dh12[k] + w22 * dh22[k]);
        }
        // Mean-equation parameters also move the current residual.
        termdot[kMuI] += -u1;
        termdot[kMuJ] += -u2;
        termdot[kPhiII] += -u1 * rp1;
        termdot[kPhiIJ] += -u1 * rp2;
        termdot[kPhiJI] += -u2 * rp1;
        termdot[kPhiJJ] += -u2 * rp2;
        for (int k = 0; k < kNumParams; ++k) gacc[k] += termdot[k];
        if (opg) {
          for (int i = 0; i < kNumParams; ++i)
            for (int j = i; j < kNumParams; ++j)
              (*opg)(i, j) += termdot[i] * termdot[j];
        }
      }

      // Stash the step-t state needed by the t+1 tangents.
      pe1 = e1; pe2 = e2;
      pv1 = a11 * e1 + a21 * e2;
      pv2 = a12 * e1 + a22 * e2;
      pg11 = h11 * b11 + h12 * b21;
      pg12 = h11 * b12 + h12 * b22;
      pg21 = h12 * b11 + h22 * b21;
      pg22 = h12 * b12 + h22 * b22;
      prp1 = rp1; prp2 = rp2;
    }

    f = acc / m_terms;
    if (grad) {
      for (int k = 0; k < kNumParams; ++k) {
        grad[k] = gacc[k] / m_terms;
        if (!std::isfinite(grad[k])) return false;
      }
    }
    if (opg) {
      for (int i = 0; i < kNumParams; ++i)
        for (int j = 0; j < i; ++j) (*opg)(i, j) = (*opg)(j, i);
    }
    return std::isfinite(f);
  }
};

// ---------------------------------------------------------------------------
// Transformed problem: optimizer coordinates are the free parameters with the
// C diagonal on a log scale.  A subset of coordinates can be pinned (for the
// restricted refits of the likelihood-ratio tests).
// ---------------------------------------------------------------------------

struct Problem {
  const Engine* eng = nullptr;
  std::array<bool, kNumParams> free_mask{};
  std::array<double, kNumParams> pinned{};  // untransformed values for fixed coords
  std::vector<int> free_idx;

  explicit Problem(const Engine& e) : eng(&e) {
    free_mask.fill(true);
    pinned.fill(0.0);
    rebuild();
  }

  void pin(int idx) { free_mask[idx] = false; rebuild(); }

  void rebuild() {
    free_idx.clear();
    for (int i = 0; i < kNumParams; ++i)
      if (free_mask[i]) free_idx.push_back(i);
  }

  int dim() const { return static_cast<int>(free_idx.size()); }

  static bool log_coord(int i) { return i == kCII || i == kCJJ; }

  void untransform(const Eigen::VectorXd& x, double p[kNumParams]) const {
    for (int i = 0; i < kNumParams; ++i) p[i] = pinned[i];
    for (int k = 0; k < dim(); ++k) {
      int i = free_idx[k];
      p[i] = log_coord(i) ? std::exp(x[k]) : x[k];
    }
  }

  Eigen::VectorXd transform(const double p[kNumParams]) const {
    Eigen::VectorXd x(dim());
    for (int k = 0; k < dim(); ++k) {
      int i = free_idx[k];
      x[k] = log_coord(i) ? std::log(p[i]) : p[i];
    }
    return x;
  }

  // f and gradient in transformed coordinates; false if the point is
  // rejected (non-stationary) or the recursion failed.
  bool eval(const Eigen::VectorXd& x, double& f, Eigen::VectorXd* g) const {
    double p[kNumParams];
    untransform(x, p);
    Eigen::Matrix2d a, b;
    a << p[kAII], p[kAIJ], p[kAJI], p[kAJJ];
    b << p[kBII], p[kBIJ], p[kBJI], p[kBJJ];
    if (spectral_radius_kron(a, b) >= kRadiusBound) return false;
    double full_grad[kNumParams];
    if (!eng->eval(p, f, g ? full_grad : nullptr, nullptr)) return false;
    if (g) {
      g->resize(dim());
      for (int k = 0; k < dim(); ++k) {
        int i = free_idx[k];
        (*g)[k] = log_coord(i) ? full_grad[i] * p[i] : full_grad[i];
        if (!std::isfinite((*g)[k])) return false;
      }
    }
    return true;
  }
};

struct BfgsOutcome {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  double gnorm = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool valid = false;  // the start point evaluated successfully
};

BfgsOutcome bfgs_minimize(const Problem& prob, Eigen::VectorXd x,
                          int max_iter, double gtol) {
  const int n = prob.dim();
  BfgsOutcome out;
  double f;
  Eigen::VectorXd g(n);
  if (!prob.eval(x, f, &g)) return out;
  out.valid = true;

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < gtol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = -(hinv * g);
    double slope = g.dot(d);
    if (!(slope < 0)) {  // not a descent direction; reset curvature model
      hinv.setIdentity();
      d = -g;
      slope = g.dot(d);
      if (!(slope < 0)) break;
    }

    double alpha = 1.0;
    double f_new = 0;
    Eigen::VectorXd x_new, g_new(n);
    bool step_ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * d;
      if (prob.eval(x_new, f_new, &g_new) &&
          f_new <= f + 1e-4 * alpha * slope) {
        step_ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!step_ok) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv *= sy / y.dot(y);
        scaled = true;
      }
      Eigen::VectorXd hy = hinv * y;
      double yhy = y.dot(hy);
      // Standard inverse BFGS update.
      hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
              (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    x = x_new;
    f = f_new;
    g = g_new;
  }

  out.x = x;
  out.f = f;
  out.gnorm = g.lpNorm<Eigen::Infinity>();
  return out;
}

// VAR(1) OLS; returns false when X'X is singular.
bool var1_ols(const Eigen::MatrixXd& returns, Eigen::Vector2d& mu,
              Eigen::Matrix2d& phi, Eigen::Matrix2d& resid_cov) {
  const int t_len = static_cast<int>(returns.rows());
  const int m = t_len - 1;
  if (m < 4) return false;
  Eigen::MatrixXd x(m, 3), y(m, 2);
  for (int t = 1; t < t_len; ++t) {
    x(t - 1, 0) = 1.0;
    x(t - 1, 1) = returns(t - 1, 0);
    x(t - 1, 2) = returns(t - 1, 1);
    y.row(t - 1) = returns.row(t);
  }
  Eigen::Matrix3d xtx = x.transpose() * x;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(xtx);
  if (!lu.isInvertible()) return false;
  Eigen::MatrixXd beta = lu.solve(x.transpose() * y);  // 3 x 2
  mu = beta.row(0).transpose();
  phi << beta(1, 0), beta(2, 0), beta(1, 1), beta(2, 1);
  Eigen::MatrixXd resid = y - x * beta;
  resid_cov = resid.transpose() * resid / m;
  return resid_cov.allFinite();
}

Eigen::Matrix2d sample_covariance(const Eigen::MatrixXd& returns) {
  Eigen::RowVector2d mean = returns.colwise().mean();
  Eigen::MatrixXd centered = returns.rowwise() - mean;
  return centered.transpose() * centered /
         std::max<Eigen::Index>(1, returns.rows() - 1);
}

bool is_pd2(const Eigen::Matrix2d& m) {
  return m(0, 0) > 0.0 && m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public parameter plumbing.
// ---------------------------------------------------------------------------

Eigen::Matrix<double, kNumParams, 1> BekkParams::to_vector() const {
  Eigen::Matrix<double, kNumParams, 1> v;
  v << mu(0), mu(1), phi(0, 0), phi(0, 1), phi(1, 0), phi(1, 1), c_lower(0, 0),
      c_lower(1, 0), c_lower(1, 1), a(0, 0), a(0, 1), a(1, 0), a(1, 1),
      b(0, 0), b(0, 1), b(1, 0), b(1, 1);
  return v;
}

BekkParams BekkParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kNumParams)
    throw NumericError("BekkParams::from_vector: need 17 elements");
  BekkParams p;
  p.mu << v[kMuI], v[kMuJ];
  p.phi << v[kPhiII], v[kPhiIJ], v[kPhiJI], v[kPhiJJ];
  p.c_lower << v[kCII], 0.0, v[kCIJ], v[kCJJ];
  p.a << v[kAII], v[kAIJ], v[kAJI], v[kAJJ];
  p.b << v[kBII], v[kBIJ], v[kBJI], v[kBJJ];
  return p;
}

void BekkParams::validate() const {
  auto finite = [](const auto& m) { return m.allFinite(); };
  if (!finite(mu) || !finite(phi) || !finite(c_lower) || !finite(a) ||
      !finite(b)) {
    throw NumericError("BekkParams: non-finite entry");
  }
  if (c_lower(0, 1) != 0.0)
    throw NumericError("BekkParams: C must be lower triangular");
  if (!(c_lower(0, 0) > 0.0) || !(c_lower(1, 1) > 0.0))
    throw NumericError("BekkParams: C diagonal must be positive");
  StationarityResult st = stationarity_check(*this);
  if (!st.is_stationary) {
    throw NumericError("BekkParams: not covariance stationary (radius " +
                       format_sig(st.spectral_radius) + ")");
  }
}

StationarityResult stationarity_check(const BekkParams& params) {
  double radius = spectral_radius_kron(params.a, params.b);
  return {radius < 1.0, radius};
}

Eigen::Matrix2d initial_covariance(const Eigen::MatrixXd& returns) {
  if (returns.cols() != 2)
    throw DataError("initial_covariance: expected 2 columns");
  if (returns.rows() < 5)
    throw DataError("initial_covariance: too few observations");
  Eigen::Vector2d mu;
  Eigen::Matrix2d phi, cov;
  if (var1_ols(returns, mu, phi, cov) && is_pd2(cov)) return cov;
  cov = sample_covariance(returns);
  if (!is_pd2(cov))
    throw DataError("initial_covariance: degenerate pair covariance");
  return cov;
}

CovarianceSeries conditional_covariances(const BekkParams& params,
                                         const Eigen::MatrixXd& returns) {
  return conditional_covariances(params, returns,
                                 initial_covariance(returns));
}

CovarianceSeries conditional_covariances(const BekkParams& params,
                                         const Eigen::MatrixXd& returns,
                                         const Eigen::Matrix2d& h_init) {
  params.validate();
  if (returns.cols() != 2)
    throw DataError("conditional_covariances: expected 2 columns");
  const int t_len = static_cast<int>(returns.rows());
  if (t_len < 2)
    throw DataError("conditional_covariances: need at least 2 observations");
  if (!returns.allFinite())
    throw DataError("conditional_covariances: non-finite return");

  const Eigen::Matrix2d cc = params.c_lower.transpose() * params.c_lower;
  CovarianceSeries out;
  out.h.reserve(t_len - 1);
  out.residuals.reserve(t_len - 1);
  Eigen::Matrix2d h = 0.5 * (h_init + h_init.transpose());
  for (int t = 1; t < t_len; ++t) {
    Eigen::Vector2d eps = returns.row(t).transpose() - params.mu -
                          params.phi * returns.row(t - 1).transpose();
    if (t > 1) {
      const Eigen::Vector2d& prev = out.residuals.back();
      h = cc + params.a.transpose() * (prev * prev.transpose()) * params.a +
          params.b.transpose() * h * params.b;
    }
    if (!h.allFinite()) {
      throw NumericError("conditional covariance non-finite at step " +
                         std::to_string(t));
    }
    out.h.push_back(h);
    out.residuals.push_back(eps);
  }
  return out;
}

double log_likelihood(const BekkParams& params,
                      const Eigen::MatrixXd& returns) {
  return log_likelihood(params, returns, initial_covariance(returns));
}

double log_likelihood(const BekkParams& params, const Eigen::MatrixXd& returns,
                      const Eigen::Matrix2d& h_init) {
  params.validate();
  if (returns.cols() != 2)
    throw DataError("log_likelihood: expected 2 columns");
  if (returns.rows() < 2)
    throw DataError("log_likelihood: need at least 2 observations");
  if (!returns.allFinite())
    throw DataError("log_likelihood: non-finite return");
  Engine eng(returns, h_init);
  auto v = params.to_vector();
  double f;
  if (!eng.eval(v.data(), f, nullptr, nullptr))
    throw NumericError("log_likelihood: covariance recursion degenerated");
  return -eng.n_terms() * f;
}

Eigen::Matrix<double, kNumParams, 1> log_likelihood_gradient(
    const BekkParams& params, const Eigen::MatrixXd& returns,
    const Eigen::Matrix2d& h_init) {
  params.validate();
  if (returns.cols() != 2)
    throw DataError("log_likelihood_gradient: expected 2 columns");
  if (returns.rows() < 2)
    throw DataError("log_likelihood_gradient: need at least 2 observations");
  Engine eng(returns, h_init);
  auto v = params.to_vector();
  double f;
  double g[kNumParams];
  if (!eng.eval(v.data(), f, g, nullptr))
    throw NumericError("log_likelihood_gradient: recursion degenerated");
  Eigen::Matrix<double, kNumParams, 1> out;
  for (int k = 0; k < kNumParams; ++k) out[k] = -eng.n_terms() * g[k];
  return out;
}

// ---------------------------------------------------------------------------
// Fitting.
// ---------------------------------------------------------------------------

namespace {

struct WarmStart {
  double p[kNumParams];
};

// Diagonal-BEKK start with variance-targeted C.
bool make_warm_start(const Eigen::Vector2d& mu0, const Eigen::Matrix2d& phi0,
                     const Eigen::Matrix2d& sigma, double a_diag,
                     double b_diag, WarmStart& out) {
  const double factor = 1.0 - a_diag * a_diag - b_diag * b_diag;
  if (factor <= 1e-4) return false;
  Eigen::Matrix2d target = factor * sigma;
  // Solve C'C = target for lower-triangular C with positive diagonal:
  // c22 = sqrt(t22), c21 = t12 / c22, c11 = sqrt(t11 - c21^2).
  double t11 = target(0, 0), t12 = target(0, 1), t22 = target(1, 1);
  if (t22 <= 0) return false;
  double c22 = std::sqrt(t22);
  double c21 = t12 / c22;
  double c11sq = t11 - c21 * c21;
  if (c11sq <= 0) return false;
  double c11 = std::sqrt(c11sq);

  double* p = out.p;
  p[kMuI] = mu0(0); p[kMuJ] = mu0(1);
  p[kPhiII] = phi0(0, 0); p[kPhiIJ] = phi0(0, 1);
  p[kPhiJI] = phi0(1, 0); p[kPhiJJ] = phi0(1, 1);
  p[kCII] = c11; p[kCIJ] = c21; p[kCJJ] = c22;
  p[kAII] = a_diag; p[kAIJ] = 0; p[kAJI] = 0; p[kAJJ] = a_diag;
  p[kBII] = b_diag; p[kBIJ] = 0; p[kBJI] = 0; p[kBJJ] = b_diag;
  return true;
}

// Central differences of the analytic gradient in untransformed coordinates;
// rows that cannot be evaluated fall back to one-sided or zero.
Eigen::MatrixXd hessian_of_mean_nll(const Engine& eng,
                                    const double p0[kNumParams]) {
  auto grad_at = [&](const double* p, Eigen::VectorXd& g) -> bool {
    Eigen::Matrix2d a, b;
    a << p[kAII], p[kAIJ], p[kAJI], p[kAJJ];
    b << p[kBII], p[kBIJ], p[kBJI], p[kBJJ];
    if (spectral_radius_kron(a, b) >= 1.0 - 1e-9) return false;
    double f;
    double buf[kNumParams];
    if (!eng.eval(p, f, buf, nullptr)) return false;
    g = Eigen::Map<Eigen::VectorXd>(buf, kNumParams);
    return true;
  };

  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(kNumParams, kNumParams);
  Eigen::VectorXd gp(kNumParams), gm(kNumParams);
  double p[kNumParams];
  for (int i = 0; i < kNumParams; ++i) {
    double h = 1e-4 * std::max(std::abs(p0[i]), 0.1);
    bool done = false;
    for (int attempt = 0; attempt < 3 && !done; ++attempt, h /= 8) {
      std::copy(p0, p0 + kNumParams, p);
      p[i] = p0[i] + h;
      bool okp = grad_at(p, gp);
      p[i] = p0[i] - h;
      bool okm = grad_at(p, gm);
      if (okp && okm) {
        hess.col(i) = (gp - gm) / (2 * h);
        done = true;
      } else if (okp) {
        Eigen::VectorXd g0(kNumParams);
        std::copy(p0, p0 + kNumParams, p);
        if (grad_at(p, g0)) {
          hess.col(i) = (gp - g0) / h;
          done = true;
        }
      }
    }
  }
  return 0.5 * (hess + hess.transpose());
}

// Inverse with PD check; false if not positive definite enough.
bool pd_inverse(const Eigen::MatrixXd& m, Eigen::MatrixXd& inv) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return inv.allFinite();
}

Eigen::MatrixXd clamped_pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  double cutoff = ev.cwiseAbs().maxCoeff() * 1e-12 + 1e-300;
  Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > cutoff) inv_ev[i] = 1.0 / ev[i];
  return es.eigenvectors() * inv_ev.asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

BekkFit fit_pair(const Eigen::MatrixXd& returns, const FitOptions& opts) {
  if (returns.cols() != 2) throw DataError("fit_pair: expected 2 columns");
  const int t_len = static_cast<int>(returns.rows());
  if (t_len < opts.min_obs) {
    throw DataError("fit_pair: " + std::to_string(t_len) +
                    " observations, need at least " +
                    std::to_string(opts.min_obs));
  }
  if (!returns.allFinite()) throw DataError("fit_pair: non-finite return");
  for (int c = 0; c < 2; ++c) {
    double sd = std::sqrt(
        (returns.col(c).array() - returns.col(c).mean()).square().sum() /
        (t_len - 1));
    if (!(sd > 0.0))
      throw DataError("fit_pair: column " + std::to_string(c) +
                      " is constant");
  }

  // A single common scale keeps A and B exactly invariant while bringing the
  // optimizer coordinates to O(1); mu, C, and their vcov rows are unscaled at
  // the end.
  const double var1 =
      (returns.col(0).array() - returns.col(0).mean()).square().mean();
  const double var2 =
      (returns.col(1).array() - returns.col(1).mean()).square().mean();
  const double scale = std::sqrt(0.5 * (var1 + var2));
  if (!(scale > 0.0)) throw DataError("fit_pair: degenerate returns");

  const Eigen::Matrix2d h_init_orig = initial_covariance(returns);
  const Eigen::MatrixXd std_returns = returns / scale;
  const Eigen::Matrix2d h_init_std = h_init_orig / (scale * scale);

  Engine eng(std_returns, h_init_std);
  Problem prob(eng);

  Eigen::Vector2d mu0;
  Eigen::Matrix2d phi0, sigma0;
  if (!var1_ols(std_returns, mu0, phi0, sigma0) || !is_pd2(sigma0)) {
    mu0 = std_returns.colwise().mean();
    phi0.setZero();
    sigma0 = sample_covariance(std_returns);
    if (!is_pd2(sigma0)) throw DataError("fit_pair: degenerate pair covariance");
  }
  // An explosive OLS mean start would poison the recursion; damp it.
  if (spectral_radius2(phi0) >= 0.999) phi0 *= 0.9 / spectral_radius2(phi0);

  BfgsOutcome best;
  int best_attempt = -1;
  const int attempts = 1 + std::max(0, opts.restarts);
  for (int k = 0; k < attempts; ++k) {
    double a_diag = 0.25, b_diag = 0.93;
    if (k > 0) {
      Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(k)));
      a_diag = 0.05 + 0.45 * rng.uniform();
      b_diag = 0.55 + 0.43 * rng.uniform();
      double norm2 = a_diag * a_diag + b_diag * b_diag;
      if (norm2 > 0.98) {
        double shrink = std::sqrt(0.97 / norm2);
        a_diag *= shrink;
        b_diag *= shrink;
      }
    }
    WarmStart ws;
    if (!make_warm_start(mu0, phi0, sigma0, a_diag, b_diag, ws)) continue;
    BfgsOutcome run =
        bfgs_minimize(prob, prob.transform(ws.p), opts.max_iter, opts.grad_tol);
    if (!run.valid) continue;
    if (run.converged) {
      best = run;
      best_attempt = k;
      break;
    }
    if (best_attempt < 0 || run.f < best.f) {
      best = run;
      best_attempt = k;
    }
  }
  if (best_attempt < 0) {
    throw NumericError("fit_pair: no start point could be evaluated");
  }

  double p_std[kNumParams];
  prob.untransform(best.x, p_std);

  // The likelihood is invariant under A -> -A and B -> -B; normalize the
  // representative so the diagonals are non-negative.
  if (p_std[kAII] < 0)
    for (int i = kAII; i <= kAJJ; ++i) p_std[i] = -p_std[i];
  if (p_std[kBII] < 0)
    for (int i = kBII; i <= kBJJ; ++i) p_std[i] = -p_std[i];

  const int m_terms = eng.n_terms();
  Eigen::MatrixXd hess = hessian_of_mean_nll(eng, p_std) * m_terms;

  BekkFit fit;
  fit.vcov_pseudo = false;
  Eigen::MatrixXd vcov_std;
  if (!pd_inverse(hess, vcov_std)) {
    fit.vcov_pseudo = true;
    Eigen::MatrixXd opg = Eigen::MatrixXd::Zero(kNumParams, kNumParams);
    double f_tmp;
    double gbuf[kNumParams];
    if (eng.eval(p_std, f_tmp, gbuf, &opg) && pd_inverse(opg, vcov_std)) {
      // OPG inverse used as-is.
    } else {
      vcov_std = clamped_pseudo_inverse(hess);
    }
  }

  // Undo the data standardization: mu and C scale linearly, A/B do not.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(kNumParams);
  d[kMuI] = d[kMuJ] = d[kCII] = d[kCIJ] = d[kCJJ] = scale;
  Eigen::VectorXd theta(kNumParams);
  for (int i = 0; i < kNumParams; ++i) theta[i] = p_std[i] * d[i];

  fit.params = BekkParams::from_vector(theta);
  fit.vcov = d.asDiagonal() * vcov_std * d.asDiagonal();
  fit.loglik = -m_terms * best.f - 2.0 * m_terms * std::log(scale);
  fit.converged = best.converged;
  fit.n_restarts_used = best_attempt;
  fit.gradient_norm = best.gnorm;
  fit.h_init = h_init_orig;
  return fit;
}

// ---------------------------------------------------------------------------
// Hypothesis tests.
// ---------------------------------------------------------------------------

namespace {

const std::vector<int>& restricted_indices(TestKind kind) {
  static const std::vector<int> joint = {kAIJ, kAJI, kBIJ, kBJI};
  static const std::vector<int> dij = {kAIJ, kBIJ};
  static const std::vector<int> dji = {kAJI, kBJI};
  switch (kind) {
    case TestKind::joint: return joint;
    case TestKind::dir_ij: return dij;
    default: return dji;
  }
}

TestResult wald_test(const BekkFit& fit, TestKind kind, double level) {
  const auto& idx = restricted_indices(kind);
  const int k = static_cast<int>(idx.size());
  TestResult res;
  res.kind = kind;
  res.df = k;
  res.level = level;

  auto theta_full = fit.params.to_vector();
  Eigen::VectorXd theta(k);
  Eigen::MatrixXd v(k, k);
  for (int i = 0; i < k; ++i) {
    theta[i] = theta_full[idx[i]];
    for (int j = 0; j < k; ++j) v(i, j) = fit.vcov(idx[i], idx[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (v + v.transpose()));
  if (llt.info() != Eigen::Success) {
    res.singular_vcov = true;
    res.p_value = 1.0;
    res.rejected = false;
    return res;
  }
  double stat = theta.dot(llt.solve(theta));
  if (!std::isfinite(stat) || stat < 0) {
    res.singular_vcov = true;
    res.p_value = 1.0;
    res.rejected = false;
    return res;
  }
  res.statistic = stat;
  res.p_value = chi_square_survival(stat, k);
  res.rejected = res.p_value < level;
  return res;
}

}  // namespace

PairTests spillover_tests(const BekkFit& fit, double level) {
  if (fit.vcov.rows() != kNumParams || fit.vcov.cols() != kNumParams)
    throw NumericError("spillover_tests: fit has no 17x17 vcov");
  PairTests t;
  t.joint = wald_test(fit, TestKind::joint, level);
  t.dir_ij = wald_test(fit, TestKind::dir_ij, level);
  t.dir_ji = wald_test(fit, TestKind::dir_ji, level);
  return t;
}

namespace {

TestResult lr_test(const BekkFit& fit, const Eigen::MatrixXd& returns,
                   const FitOptions& opts, TestKind kind, double level) {
  const auto& idx = restricted_indices(kind);
  TestResult res;
  res.kind = kind;
  res.df = static_cast<int>(idx.size());
  res.level = level;

  // Restricted refit: same standardization recipe as fit_pair, with the
  // restricted coordinates pinned at zero and the unrestricted solution
  // (projected) as the start.
  const double var1 =
      (returns.col(0).array() - returns.col(0).mean()).square().mean();
  const double var2 =
      (returns.col(1).array() - returns.col(1).mean()).square().mean();
  const double scale = std::sqrt(0.5 * (var1 + var2));
  const Eigen::MatrixXd std_returns = returns / scale;
  const Eigen::Matrix2d h_init_std = fit.h_init / (scale * scale);

  Engine eng(std_returns, h_init_std);
  Problem prob(eng);
  for (int i : idx) prob.pin(i);

  double p0[kNumParams];
  auto theta = fit.params.to_vector();
  Eigen::VectorXd dinv = Eigen::VectorXd::Ones(kNumParams);
  dinv[kMuI] = dinv[kMuJ] = dinv[kCII] = dinv[kCIJ] = dinv[kCJJ] =
      1.0 / scale;
  for (int i = 0; i < kNumParams; ++i) p0[i] = theta[i] * dinv[i];
  for (int i : idx) p0[i] = 0.0;

  BfgsOutcome run =
      bfgs_minimize(prob, prob.transform(p0), opts.max_iter, opts.grad_tol);
  if (!run.valid) {
    res.singular_vcov = true;
    res.p_value = 1.0;
    res.rejected = false;
    return res;
  }
  const int m_terms = eng.n_terms();
  double ll_restricted = -m_terms * run.f - 2.0 * m_terms * std::log(scale);
  double stat = 2.0 * (fit.loglik - ll_restricted);
  res.statistic = std::max(0.0, stat);
  res.p_value = chi_square_survival(res.statistic, res.df);
  res.rejected = res.p_value < level;
  return res;
}

}  // namespace

PairTests spillover_tests_lr(const BekkFit& fit,
                             const Eigen::MatrixXd& returns,
                             const FitOptions& opts, double level) {
  PairTests t;
  t.joint = lr_test(fit, returns, opts, TestKind::joint, level);
  t.dir_ij = lr_test(fit, returns, opts, TestKind::dir_ij, level);
  t.dir_ji = lr_test(fit, returns, opts, TestKind::dir_ji, level);
  return t;
}

// ---------------------------------------------------------------------------
// Simulation.
// ---------------------------------------------------------------------------

Eigen::MatrixXd simulate_pair(const BekkParams& params, int t_obs,
                              std::uint64_t seed, int burn_in) {
  params.validate();
  if (t_obs <= 0) throw ConfigError("simulate_pair: T must be positive");
  if (burn_in < 0) throw ConfigError("simulate_pair: negative burn-in");
  if (spectral_radius2(params.phi) >= 1.0)
    throw NumericError("simulate_pair: mean equation not stationary");

  const Eigen::Matrix2d cc = params.c_lower.transpose() * params.c_lower;
  // Unconditional covariance: vec(H) = (I - kron(A,A)' - kron(B,B)') \ vec(C'C).
  Eigen::Matrix4d k =
      (kron2(params.a, params.a) + kron2(params.b, params.b)).transpose();
  Eigen::Vector4d vcc(cc(0, 0), cc(1, 0), cc(0, 1), cc(1, 1));
  Eigen::Vector4d vh = (Eigen::Matrix4d::Identity() - k)
                           .fullPivLu()
                           .solve(vcc);
  Eigen::Matrix2d h;
  h << vh(0), 0.5 * (vh(1) + vh(2)), 0.5 * (vh(1) + vh(2)), vh(3);

  Eigen::Vector2d r_prev =
      (Eigen::Matrix2d::Identity() - params.phi).fullPivLu().solve(params.mu);

  Rng rng(seed);
  Eigen::MatrixXd out(t_obs, 2);
  for (int t = 0; t < burn_in + t_obs; ++t) {
    const double l11sq = h(0, 0);
    if (!(l11sq > 0)) throw NumericError("simulate_pair: H lost definiteness");
    const double l11 = std::sqrt(l11sq);
    const double l21 = h(0, 1) / l11;
    const double l22sq = h(1, 1) - l21 * l21;
    if (!(l22sq > 0)) throw NumericError("simulate_pair: H lost definiteness");
    const double l22 = std::sqrt(l22sq);
    const double z1 = rng.gaussian();
    const double z2 = rng.gaussian();
    Eigen::Vector2d eps(l11 * z1, l21 * z1 + l22 * z2);
    Eigen::Vector2d r = params.mu + params.phi * r_prev + eps;
    if (t >= burn_in) out.row(t - burn_in) = r.transpose();
    h = cc + params.a.transpose() * (eps * eps.transpose()) * params.a +
        params.b.transpose() * h * params.b;
    if (!h.allFinite())
      throw NumericError("simulate_pair: covariance recursion diverged");
    r_prev = r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Panel drivers.
// ---------------------------------------------------------------------------

namespace {

FittedPair fit_one(const Eigen::MatrixXd& returns,
                   const std::vector<std::string>& codes, int i, int j,
                   const FitOptions& opts, std::uint64_t pair_salt) {
  Eigen::MatrixXd pair_data(returns.rows(), 2);
  pair_data.col(0) = returns.col(i);
  pair_data.col(1) = returns.col(j);
  FitOptions pair_opts = opts;
  pair_opts.seed = mix_seed(opts.seed, pair_salt);
  FittedPair fp;
  fp.codes = {codes[i], codes[j]};
  fp.fit = fit_pair(pair_data, pair_opts);
  fp.fit.pair = fp.codes;
  if (opts.test_style == TestStyle::wald) {
    fp.tests = spillover_tests(fp.fit, opts.significance);
  } else {
    fp.tests =
        spillover_tests_lr(fp.fit, pair_data, pair_opts, opts.significance);
  }
  return fp;
}

std::vector<std::pair<int, int>> pair_list(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace

std::vector<FittedPair> fit_all_pairs(const Eigen::MatrixXd& returns,
                                      const std::vector<std::string>& codes,
                                      const FitOptions& opts, int workers) {
  const int n = static_cast<int>(codes.size());
  if (returns.cols() != n)
    throw DataError("fit_all_pairs: codes do not match return columns");
  if (n < 2) throw DataError("fit_all_pairs: need at least 2 codes");
  if (workers < 1) throw ConfigError("fit_all_pairs: workers must be >= 1");

  auto pairs = pair_list(n);
  std::vector<FittedPair> out(pairs.size());
  std::exception_ptr first_error = nullptr;

#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
    try {
      out[k] = fit_one(returns, codes, pairs[k].first, pairs[k].second, opts,
                       static_cast<std::uint64_t>(k));
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::vector<FittedPair> fit_all_pairs_serial(
    const Eigen::MatrixXd& returns, const std::vector<std::string>& codes,
    const FitOptions& opts) {
  const int n = static_cast<int>(codes.size());
  if (returns.cols() != n)
    throw DataError("fit_all_pairs: codes do not match return columns");
  if (n < 2) throw DataError("fit_all_pairs: need at least 2 codes");

  auto pairs = pair_list(n);
  std::vector<FittedPair> out(pairs.size());
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
    out[k] = fit_one(returns, codes, pairs[k].first, pairs[k].second, opts,
                     static_cast<std::uint64_t>(k));
  }
  return out;
}

}  // namespace spillnet::bekk
