#include "spillnet/emd.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace spillnet::emd {

namespace {
constexpr double kBalanceTol = 1e-9;
constexpr double kReducedCostTol = 1e-12;
constexpr int kMaxPivots = 100000;
}  // namespace

double Signature::total_weight() const {
  double sum = 0;
  for (const auto& c : clusters) sum += c.weight;
  return sum;
}

Signature build_signature(const std::vector<double>& values,
                          const SignatureOptions& opts, double scale) {
  if (values.empty()) throw DataError("build_signature: no values");
  if (opts.n_bins < 1) throw ConfigError("build_signature: n_bins must be >= 1");
  double max_abs = 0;
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("build_signature: non-finite value");
    if (!opts.signed_domain && v < 0)
      throw DataError("build_signature: negative value in unsigned domain");
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (scale == 0.0) scale = max_abs;
  if (!(scale > 0.0)) throw DataError("build_signature: zero scale");

  const int n_bins = opts.n_bins;
  std::vector<double> bin_sum(n_bins, 0.0);
  std::vector<long> bin_count(n_bins, 0);
  for (double v : values) {
    double x = v / scale;
    double t = opts.signed_domain ? 0.5 * (x + 1.0) : x;
    if (t < -1e-9 || t > 1.0 + 1e-9)
      throw DataError("build_signature: value outside normalization scale");
    t = std::clamp(t, 0.0, 1.0);
    int idx = std::min(static_cast<int>(t * n_bins), n_bins - 1);
    bin_sum[idx] += x;
    bin_count[idx] += 1;
  }

  Signature sig;
  const double total = static_cast<double>(values.size());
  for (int b = 0; b < n_bins; ++b) {
    if (bin_count[b] == 0) continue;
    sig.clusters.push_back(
        {bin_sum[b] / bin_count[b], bin_count[b] / total});
  }
  return sig;
}

namespace {

void validate_signature(const Signature& s, const char* which) {
  if (s.clusters.empty())
    throw DataError(std::string("emd: empty signature ") + which);
  for (std::size_t i = 0; i < s.clusters.size(); ++i) {
    if (!(s.clusters[i].weight > 0.0) || !std::isfinite(s.clusters[i].mean))
      throw DataError(std::string("emd: bad cluster in signature ") + which);
    if (i > 0 && !(s.clusters[i].mean > s.clusters[i - 1].mean))
      throw DataError(std::string("emd: cluster means not increasing in ") +
                      which);
  }
}

}  // namespace

TransportPlan emd_transport(const Signature& s1, const Signature& s2) {
  validate_signature(s1, "1");
  validate_signature(s2, "2");
  const int m = static_cast<int>(s1.clusters.size());
  const int n = static_cast<int>(s2.clusters.size());

  double sum1 = s1.total_weight();
  double sum2 = s2.total_weight();
  if (std::abs(sum1 - sum2) > kBalanceTol)
    throw DataError("emd: signatures are not mass-balanced");

  std::vector<double> a(m), b(n);
  for (int i = 0; i < m; ++i) a[i] = s1.clusters[i].weight;
  // Rescale demands so the problem balances exactly.
  for (int j = 0; j < n; ++j) b[j] = s2.clusters[j].weight * (sum1 / sum2);

  Eigen::MatrixXd cost(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = std::abs(s1.clusters[i].mean - s2.clusters[j].mean);

  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, n);
  std::vector<std::vector<bool>> basic(m, std::vector<bool>(n, false));

  // Northwest-corner initial basis: exactly m + n - 1 basic cells.
  {
    int i = 0, j = 0;
    double ra = a[0], rb = b[0];
    while (true) {
      double f = std::min(ra, rb);
      flow(i, j) = f;
      basic[i][j] = true;
      ra -= f;
      rb -= f;
      if (i == m - 1 && j == n - 1) break;
      if ((ra <= rb && i < m - 1) || j == n - 1) {
        ++i;
        ra = a[i];
      } else {
        ++j;
        rb = b[j];
      }
    }
  }

  // Vertices: rows 0..m-1, columns m..m+n-1.  The basis is a spanning tree.
  auto solve_potentials = [&](std::vector<double>& u, std::vector<double>& v) {
    u.assign(m, 0.0);
    v.assign(n, 0.0);
    std::vector<bool> known(m + n, false);
    std::vector<int> stack = {0};
    known[0] = true;
    while (!stack.empty()) {
      int vert = stack.back();
      stack.pop_back();
      if (vert < m) {
        for (int j = 0; j < n; ++j) {
          if (basic[vert][j] && !known[m + j]) {
            v[j] = cost(vert, j) - u[vert];
            known[m + j] = true;
            stack.push_back(m + j);
          }
        }
      } else {
        int j = vert - m;
        for (int i = 0; i < m; ++i) {
          if (basic[i][j] && !known[i]) {
            u[i] = cost(i, j) - v[j];
            known[i] = true;
            stack.push_back(i);
          }
        }
      }
    }
    for (bool k : known)
      if (!k) throw NumericError("emd: transport basis lost connectivity");
  };

  std::vector<double> u, v;
  for (int pivot = 0; pivot < kMaxPivots; ++pivot) {
    solve_potentials(u, v);

    // Bland's rule: first (row-major) non-basic cell with negative reduced cost.
    int ei = -1, ej = -1;
    for (int i = 0; i < m && ei < 0; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!basic[i][j] && cost(i, j) - u[i] - v[j] < -kReducedCostTol) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei < 0) break;  // optimal

    // Unique tree path from column vertex ej to row vertex ei.
    std::vector<int> parent(m + n, -1);
    std::vector<bool> seen(m + n, false);
    std::vector<int> stack = {m + ej};
    seen[m + ej] = true;
    while (!stack.empty()) {
      int vert = stack.back();
      stack.pop_back();
      if (vert == ei) break;
      if (vert < m) {
        for (int j = 0; j < n; ++j) {
          if (basic[vert][j] && !seen[m + j]) {
            seen[m + j] = true;
            parent[m + j] = vert;
            stack.push_back(m + j);
          }
        }
      } else {
        int j = vert - m;
        for (int i = 0; i < m; ++i) {
          if (basic[i][j] && !seen[i]) {
            seen[i] = true;
            parent[i] = vert;
            stack.push_back(i);
          }
        }
      }
    }
    if (!seen[ei]) throw NumericError("emd: transport basis disconnected");

    // Cycle cells: entering (+), then alternating along the path back.
    struct Cell { int i, j; bool plus; };
    std::vector<Cell> cycle = {{ei, ej, true}};
    int vert = ei;
    bool plus = false;
    while (vert != m + ej) {
      int par = parent[vert];
      int ci = vert < m ? vert : par;
      int cj = vert < m ? par - m : vert - m;
      cycle.push_back({ci, cj, plus});
      plus = !plus;
      vert = par;
    }

    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;  // index into cycle
    for (std::size_t c = 0; c < cycle.size(); ++c) {
      if (cycle[c].plus) continue;
      double f = flow(cycle[c].i, cycle[c].j);
      long long id = static_cast<long long>(cycle[c].i) * n + cycle[c].j;
      long long best_id = leave >= 0
          ? static_cast<long long>(cycle[leave].i) * n + cycle[leave].j
          : -1;
      if (f < theta || (f == theta && (leave < 0 || id < best_id))) {
        theta = f;
        leave = static_cast<int>(c);
      }
    }
    if (leave < 0) throw NumericError("emd: unbounded transport pivot");

    for (const Cell& c : cycle) {
      flow(c.i, c.j) += c.plus ? theta : -theta;
    }
    basic[ei][ej] = true;
    basic[cycle[leave].i][cycle[leave].j] = false;
    flow(cycle[leave].i, cycle[leave].j) = 0.0;

    if (pivot == kMaxPivots - 1)
      throw NumericError("emd: transport simplex failed to terminate");
  }

  TransportPlan plan;
  plan.flow = flow.cwiseMax(0.0);
  plan.cost = (plan.flow.array() * cost.array()).sum();
  return plan;
}

double emd(const Signature& s1, const Signature& s2) {
  TransportPlan plan = emd_transport(s1, s2);
  double total = plan.flow.sum();
  if (!(total > 0.0)) throw NumericError("emd: zero total flow");
  return plan.cost / total;
}

double emd_closed_form_1d(const Signature& s1, const Signature& s2) {
  validate_signature(s1, "1");
  validate_signature(s2, "2");
  double sum1 = s1.total_weight();
  double sum2 = s2.total_weight();
  if (std::abs(sum1 - sum2) > kBalanceTol)
    throw DataError("emd: signatures are not mass-balanced");

  std::set<double> points;
  for (const auto& c : s1.clusters) points.insert(c.mean);
  for (const auto& c : s2.clusters) points.insert(c.mean);
  std::vector<double> xs(points.begin(), points.end());

  auto cdf = [](const Signature& s, double x, double norm) {
    double acc = 0;
    for (const auto& c : s.clusters) {
      if (c.mean <= x) acc += c.weight;
      else break;
    }
    return acc / norm;
  };

  double dist = 0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    double f1 = cdf(s1, xs[k], sum1);
    double f2 = cdf(s2, xs[k], sum2);
    dist += std::abs(f1 - f2) * (xs[k + 1] - xs[k]);
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Period table.
// ---------------------------------------------------------------------------

namespace {

std::vector<double> cell_values(const net::SpilloverNetwork& net,
                                ingest::Group gm, ingest::Group gn,
                                bool signed_pooling) {
  std::vector<double> vals;
  const int n = net.n();
  for (int i = 0; i < n; ++i) {
    if (net.group_of(i) != gm) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i || net.group_of(j) != gn) continue;
      double s = net.intensity(i, j);
      if (s > 0.0) vals.push_back(s);
    }
  }
  if (signed_pooling && gm != gn) {
    for (int i = 0; i < n; ++i) {
      if (net.group_of(i) != gn) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i || net.group_of(j) != gm) continue;
        double s = net.intensity(i, j);
        if (s > 0.0) vals.push_back(-s);
      }
    }
  }
  return vals;
}

PeriodEmdTable run_period_table(const std::vector<net::SpilloverNetwork>& periods,
                                const PeriodEmdOptions& opts, int workers) {
  if (periods.size() < 2)
    throw DataError("period_emd_table: need at least 2 periods");
  for (std::size_t p = 1; p < periods.size(); ++p) {
    if (periods[p].nodes != periods[0].nodes)
      throw DataError("period_emd_table: period networks have different nodes");
  }
  if (opts.n_bins < 1)
    throw ConfigError("period_emd_table: n_bins must be >= 1");

  PeriodEmdTable table;
  table.groups.assign(std::begin(ingest::kMainGroups),
                      std::end(ingest::kMainGroups));
  const int g = static_cast<int>(table.groups.size());
  const int n_pairs = static_cast<int>(periods.size()) - 1;
  for (int p = 0; p < n_pairs; ++p) {
    table.period_pairs.push_back(periods[p].period.name + "_vs_" +
                                 periods[p + 1].period.name);
  }
  table.cells.assign(
      n_pairs, std::vector<std::vector<PeriodEmdCell>>(
                   g, std::vector<PeriodEmdCell>(g)));

  const int n_cells = n_pairs * g * g;
#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (int idx = 0; idx < n_cells; ++idx) {
    const int p = idx / (g * g);
    const int gm = (idx / g) % g;
    const int gn = idx % g;
    auto vals_p = cell_values(periods[p], table.groups[gm], table.groups[gn],
                              opts.signed_pooling);
    auto vals_q = cell_values(periods[p + 1], table.groups[gm],
                              table.groups[gn], opts.signed_pooling);
    if (vals_p.empty() || vals_q.empty()) continue;

    double scale = 0;
    for (double v : vals_p) scale = std::max(scale, std::abs(v));
    for (double v : vals_q) scale = std::max(scale, std::abs(v));

    SignatureOptions sopts;
    sopts.n_bins = opts.n_bins;
    sopts.signed_domain = opts.signed_pooling;
    Signature sig_p = build_signature(vals_p, sopts, scale);
    Signature sig_q = build_signature(vals_q, sopts, scale);
    PeriodEmdCell cell;
    cell.present = true;
    cell.value = 100.0 * emd(sig_p, sig_q);
    table.cells[p][gm][gn] = cell;
  }
  return table;
}

}  // namespace

PeriodEmdTable period_emd_table(const std::vector<net::SpilloverNetwork>& periods,
                                const PeriodEmdOptions& opts) {
  if (opts.workers < 1)
    throw ConfigError("period_emd_table: workers must be >= 1");
  return run_period_table(periods, opts, opts.workers);
}

PeriodEmdTable period_emd_table_serial(
    const std::vector<net::SpilloverNetwork>& periods,
    const PeriodEmdOptions& opts) {
  return run_period_table(periods, opts, 1);
}

}  // namespace spillnet::emd
