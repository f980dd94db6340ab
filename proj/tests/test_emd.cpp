#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "spillnet/common.hpp"
#include "spillnet/emd.hpp"

using namespace spillnet;
using namespace spillnet::emd;

namespace {

Signature sig(std::initializer_list<SignatureCluster> clusters) {
  Signature s;
  s.clusters = clusters;
  return s;
}

Signature random_signature(Rng& rng, int n_values, int n_bins = 20) {
  std::vector<double> values;
  values.reserve(n_values);
  for (int k = 0; k < n_values; ++k) values.push_back(rng.uniform());
  SignatureOptions opts;
  opts.n_bins = n_bins;
  return build_signature(values, opts);
}

net::SpilloverNetwork period_net(const std::string& name,
                                 const Eigen::MatrixXd& intensity,
                                 const std::vector<ingest::Group>& groups) {
  net::SpilloverNetwork nw;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::string code = "n" + std::to_string(i);
    nw.nodes.push_back(code);
    nw.grouping.entries[code] = {"s", groups[i]};
  }
  nw.intensity = intensity;
  nw.period = {name, "2020-01-01", "2020-12-31"};
  return nw;
}

}  // namespace

TEST_CASE("build_signature basics") {
  SignatureOptions opts;

  // Identical values collapse to one cluster at the normalized position.
  auto s = build_signature({3.0, 3.0, 3.0}, opts);
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].mean == 1.0);  // scale defaults to max |value|
  CHECK(s.clusters[0].weight == 1.0);

  s = build_signature({0.5, 0.5}, opts, 2.0);
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].mean == 0.25);

  // Two extreme values with two bins.
  opts.n_bins = 2;
  s = build_signature({0.0, 1.0}, opts, 1.0);
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[0].mean == 0.0);
  CHECK(s.clusters[0].weight == 0.5);
  CHECK(s.clusters[1].mean == 1.0);
  CHECK(s.clusters[1].weight == 0.5);

  // Cluster means are bin-member averages and weights sum to one.
  opts.n_bins = 20;
  Rng rng(11);
  std::vector<double> values;
  for (int k = 0; k < 1000; ++k) values.push_back(rng.uniform());
  s = build_signature(values, opts);
  double total = 0, max_abs = 0;
  for (double v : values) max_abs = std::max(max_abs, v);
  std::vector<double> bin_sum(20, 0.0);
  std::vector<long> bin_count(20, 0);
  for (double v : values) {
    double x = v / max_abs;
    int idx = std::min(static_cast<int>(x * 20), 19);
    bin_sum[idx] += x;
    bin_count[idx] += 1;
  }
  std::size_t c = 0;
  for (int b = 0; b < 20; ++b) {
    if (bin_count[b] == 0) continue;
    REQUIRE(c < s.clusters.size());
    CHECK(s.clusters[c].mean ==
          doctest::Approx(bin_sum[b] / bin_count[b]).epsilon(1e-15));
    CHECK(s.clusters[c].weight ==
          doctest::Approx(bin_count[b] / 1000.0).epsilon(1e-15));
    total += s.clusters[c].weight;
    ++c;
  }
  CHECK(c == s.clusters.size());
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 1; k < s.clusters.size(); ++k)
    CHECK(s.clusters[k].mean > s.clusters[k - 1].mean);
}

TEST_CASE("build_signature signed domain") {
  SignatureOptions opts;
  opts.signed_domain = true;
  opts.n_bins = 2;
  auto s = build_signature({-1.0, 1.0}, opts, 1.0);
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[0].mean == -1.0);
  CHECK(s.clusters[1].mean == 1.0);
  CHECK(s.total_weight() == 1.0);
}

TEST_CASE("build_signature validation") {
  SignatureOptions opts;
  CHECK_THROWS_WITH_AS(build_signature({}, opts),
                       doctest::Contains("no values"), DataError);
  CHECK_THROWS_WITH_AS(build_signature({-0.5}, opts),
                       doctest::Contains("negative value"), DataError);
  CHECK_THROWS_WITH_AS(build_signature({0.0, 0.0}, opts),
                       doctest::Contains("zero scale"), DataError);
  CHECK_THROWS_WITH_AS(build_signature({1.5}, opts, 1.0),
                       doctest::Contains("outside normalization"), DataError);
  opts.n_bins = 0;
  CHECK_THROWS_AS(build_signature({0.5}, opts), ConfigError);
  opts.n_bins = 20;
  CHECK_THROWS_AS(
      build_signature({std::numeric_limits<double>::quiet_NaN()}, opts),
      DataError);
}

TEST_CASE("emd hand examples") {
  // Identical signatures: zero distance, exactly.
  auto s1 = sig({{0.125, 0.25}, {0.5, 0.5}, {0.875, 0.25}});
  CHECK(emd::emd(s1, s1) == 0.0);

  // Point masses at 0 and 1: everything moves distance 1.
  CHECK(emd::emd(sig({{0.0, 1.0}}), sig({{1.0, 1.0}})) == 1.0);

  // Split mass converging on the midpoint.
  auto s2 = sig({{0.0, 0.5}, {1.0, 0.5}});
  auto s3 = sig({{0.5, 1.0}});
  CHECK(emd::emd(s2, s3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(emd::emd(s3, s2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(emd_closed_form_1d(s2, s3) == doctest::Approx(0.5).epsilon(1e-12));

  // Asymmetric masses still balance (equal totals).
  auto s4 = sig({{0.0, 0.75}, {1.0, 0.25}});
  auto s5 = sig({{0.25, 1.0}});
  // Move 0.75 from 0 to 0.25 (cost 0.1875) and 0.25 from 1 (cost 0.1875).
  CHECK(emd::emd(s4, s5) == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("emd validation") {
  auto good = sig({{0.5, 1.0}});
  CHECK_THROWS_WITH_AS(emd::emd(sig({}), good), doctest::Contains("empty"),
                       DataError);
  CHECK_THROWS_WITH_AS(emd::emd(sig({{0.2, 1.1}}), good),
                       doctest::Contains("not mass-balanced"), DataError);
  CHECK_THROWS_WITH_AS(emd::emd(sig({{0.5, 0.5}, {0.2, 0.5}}), good),
                       doctest::Contains("not increasing"), DataError);
  CHECK_THROWS_AS(emd::emd(sig({{0.5, -1.0}, {0.7, 2.0}}), good), DataError);
}

TEST_CASE("transport plan is a feasible optimal flow") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto s1 = random_signature(rng, 40 + static_cast<int>(rng.next_u64() % 160));
    auto s2 = random_signature(rng, 40 + static_cast<int>(rng.next_u64() % 160));
    auto plan = emd_transport(s1, s2);
    REQUIRE(plan.flow.rows() == static_cast<long>(s1.clusters.size()));
    REQUIRE(plan.flow.cols() == static_cast<long>(s2.clusters.size()));
    CHECK(plan.flow.minCoeff() >= 0.0);
    for (long i = 0; i < plan.flow.rows(); ++i)
      CHECK(std::abs(plan.flow.row(i).sum() - s1.clusters[i].weight) <= 1e-9);
    double rescale = s1.total_weight() / s2.total_weight();
    for (long j = 0; j < plan.flow.cols(); ++j)
      CHECK(std::abs(plan.flow.col(j).sum() -
                     s2.clusters[j].weight * rescale) <= 1e-9);
    CHECK(plan.cost >= 0.0);
  }
}

TEST_CASE("transport solution matches the closed-form 1-D distance") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto s1 = random_signature(rng, 30 + static_cast<int>(rng.next_u64() % 200));
    auto s2 = random_signature(rng, 30 + static_cast<int>(rng.next_u64() % 200));
    double via_transport = emd::emd(s1, s2);
    double via_cdf = emd_closed_form_1d(s1, s2);
    CHECK(std::abs(via_transport - via_cdf) <= 1e-9);
  }
}

TEST_CASE("emd is a metric on equal-mass signatures") {
  Rng rng(23);
  for (int rep = 0; rep < 60; ++rep) {
    auto a = random_signature(rng, 100);
    auto b = random_signature(rng, 100);
    auto c = random_signature(rng, 100);
    double ab = emd::emd(a, b);
    double ba = emd::emd(b, a);
    double ac = emd::emd(a, c);
    double cb = emd::emd(c, b);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) <= 1e-12);
    CHECK(ab <= ac + cb + 1e-9);
    CHECK(emd::emd(a, a) == 0.0);
  }
}

TEST_CASE("emd is translation invariant") {
  auto shift = [](const Signature& s, double c) {
    Signature out = s;
    for (auto& cl : out.clusters) cl.mean += c;
    return out;
  };
  auto s1 = sig({{0.0, 0.25}, {0.25, 0.25}, {0.75, 0.5}});
  auto s2 = sig({{0.125, 0.5}, {0.5, 0.5}});
  double base = emd::emd(s1, s2);
  for (double c : {0.25, 1.0, -0.5}) {
    CHECK(std::abs(emd::emd(shift(s1, c), shift(s2, c)) - base) <= 1e-12);
  }
}

TEST_CASE("period_emd_table identical periods give zero cells") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s(0, 1) = 0.5;
  s(1, 0) = 0.25;
  s(2, 3) = 0.125;
  s(0, 2) = 0.75;
  std::vector<ingest::Group> groups = {ingest::Group::Ke, ingest::Group::Ke,
                                       ingest::Group::Cg, ingest::Group::Us};
  auto p1 = period_net("p1", s, groups);
  auto p2 = period_net("p2", s, groups);
  auto table = period_emd_table({p1, p2});
  REQUIRE(table.period_pairs.size() == 1);
  CHECK(table.period_pairs[0] == "p1_vs_p2");
  REQUIRE(table.groups.size() == 4);
  CHECK(table.groups[0] == ingest::Group::Ke);

  int present = 0;
  for (const auto& row : table.cells[0])
    for (const auto& cell : row) {
      if (!cell.present) continue;
      ++present;
      CHECK(cell.value == 0.0);
    }
  // Ke->Ke (both directions), Ke->Cg, Cg->Us are the populated cells.
  CHECK(present == 3);
  // A cell with no edges in either period is absent.
  CHECK_FALSE(table.cells[0][3][0].present);  // Us -> Ke
}

TEST_CASE("period_emd_table reacts only in the perturbed cell") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s(0, 1) = 0.5;   // Ke -> Cg
  s(0, 2) = 0.25;  // Ke -> Cg (second target)
  s(3, 0) = 0.5;   // Us -> Ke
  std::vector<ingest::Group> groups = {ingest::Group::Ke, ingest::Group::Cg,
                                       ingest::Group::Cg, ingest::Group::Us};
  auto p1 = period_net("p1", s, groups);
  Eigen::MatrixXd s2 = s;
  s2(0, 1) = 1.0;  // double one Ke -> Cg edge
  auto p2 = period_net("p2", s2, groups);
  auto table = period_emd_table({p1, p2});
  // Ke -> Cg moved, Us -> Ke did not.
  CHECK(table.cells[0][0][1].present);
  CHECK(table.cells[0][0][1].value > 0.0);
  CHECK(table.cells[0][3][0].present);
  CHECK(table.cells[0][3][0].value == 0.0);
}

TEST_CASE("period_emd_table signed pooling uses reverse edges") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(1, 0) = 0.5;  // only Cg -> Ke
  std::vector<ingest::Group> groups = {ingest::Group::Ke, ingest::Group::Cg};
  auto p1 = period_net("p1", s, groups);
  auto p2 = period_net("p2", s, groups);

  auto plain = period_emd_table({p1, p2});
  CHECK_FALSE(plain.cells[0][0][1].present);  // Ke -> Cg has no edges
  CHECK(plain.cells[0][1][0].present);

  PeriodEmdOptions opts;
  opts.signed_pooling = true;
  auto pooled = period_emd_table({p1, p2}, opts);
  CHECK(pooled.cells[0][0][1].present);  // reverse direction pooled in
  CHECK(pooled.cells[0][0][1].value == 0.0);
}

TEST_CASE("period_emd_table validation") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 1) = 0.5;
  std::vector<ingest::Group> groups = {ingest::Group::Ke, ingest::Group::Cg};
  auto p1 = period_net("p1", s, groups);
  CHECK_THROWS_WITH_AS(period_emd_table({p1}),
                       doctest::Contains("at least 2"), DataError);

  auto p2 = period_net("p2", s, groups);
  p2.nodes[0] = "zz";
  CHECK_THROWS_WITH_AS(period_emd_table({p1, p2}),
                       doctest::Contains("different nodes"), DataError);

  auto p3 = period_net("p3", s, groups);
  PeriodEmdOptions opts;
  opts.n_bins = 0;
  CHECK_THROWS_AS(period_emd_table({p1, p3}, opts), ConfigError);
  opts.n_bins = 20;
  opts.workers = 0;
  CHECK_THROWS_AS(period_emd_table({p1, p3}, opts), ConfigError);
}

TEST_CASE("period_emd_table parallel equals serial") {
  Rng rng(31);
  std::vector<ingest::Group> groups;
  for (int i = 0; i < 12; ++i)
    groups.push_back(ingest::kMainGroups[rng.next_u64() % 4]);
  std::vector<net::SpilloverNetwork> periods;
  for (int p = 0; p < 3; ++p) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(12, 12);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        if (i != j && rng.uniform() < 0.35)
          s(i, j) = static_cast<double>(1 + rng.next_u64() % 1024) / 1024.0;
    periods.push_back(period_net("p" + std::to_string(p), s, groups));
  }
  PeriodEmdOptions opts;
  opts.workers = 4;
  auto par = period_emd_table(periods, opts);
  auto ser = period_emd_table_serial(periods);
  REQUIRE(par.period_pairs == ser.period_pairs);
  for (std::size_t p = 0; p < par.cells.size(); ++p)
    for (std::size_t m = 0; m < par.cells[p].size(); ++m)
      for (std::size_t n = 0; n < par.cells[p][m].size(); ++n) {
        CHECK(par.cells[p][m][n].present == ser.cells[p][m][n].present);
        CHECK(par.cells[p][m][n].value == ser.cells[p][m][n].value);
      }
}
