// Parallel kernels against their serial reference implementations.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <string>
#include <thread>
#include <vector>

#include "spillnet/bekk.hpp"
#include "spillnet/centrality.hpp"
#include "spillnet/common.hpp"
#include "spillnet/emd.hpp"
#include "spillnet/network.hpp"

using namespace spillnet;

namespace {

int worker_count() {
  int w = static_cast<int>(std::thread::hardware_concurrency());
  return w > 0 ? w : 4;
}

Eigen::MatrixXd noise_panel(int t_obs, int n_codes, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd r(t_obs, n_codes);
  for (int t = 0; t < t_obs; ++t)
    for (int c = 0; c < n_codes; ++c) r(t, c) = 0.01 * rng.gaussian();
  return r;
}

std::vector<std::string> make_codes(int n) {
  std::vector<std::string> codes;
  for (int i = 0; i < n; ++i) codes.push_back("x" + std::to_string(100 + i));
  return codes;
}

net::SpilloverNetwork random_network(int n, double density, std::uint64_t seed) {
  Rng rng(seed);
  net::SpilloverNetwork nw;
  nw.nodes = make_codes(n);
  nw.intensity = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density)
        nw.intensity(i, j) = 0.05 + 0.5 * rng.uniform();
  return nw;
}

bekk::FitOptions bench_fit_options() {
  bekk::FitOptions opts;
  opts.restarts = 1;
  opts.max_iter = 150;
  return opts;
}

}  // namespace

static void BM_FitAllPairs(benchmark::State& state) {
  auto returns = noise_panel(400, 4, 7);
  auto codes = make_codes(4);
  auto opts = bench_fit_options();
  for (auto _ : state) {
    auto fits = bekk::fit_all_pairs(returns, codes, opts, worker_count());
    benchmark::DoNotOptimize(fits);
  }
}
BENCHMARK(BM_FitAllPairs)->Unit(benchmark::kMillisecond);

static void BM_FitAllPairsSerial(benchmark::State& state) {
  auto returns = noise_panel(400, 4, 7);
  auto codes = make_codes(4);
  auto opts = bench_fit_options();
  for (auto _ : state) {
    auto fits = bekk::fit_all_pairs_serial(returns, codes, opts);
    benchmark::DoNotOptimize(fits);
  }
}
BENCHMARK(BM_FitAllPairsSerial)->Unit(benchmark::kMillisecond);

static void BM_AllPairsShortest(benchmark::State& state) {
  auto nw = random_network(static_cast<int>(state.range(0)), 0.08, 11);
  for (auto _ : state) {
    auto sp = centrality::all_pairs_shortest(nw, 0.5, worker_count());
    benchmark::DoNotOptimize(sp);
  }
}
BENCHMARK(BM_AllPairsShortest)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_AllPairsShortestSerial(benchmark::State& state) {
  auto nw = random_network(static_cast<int>(state.range(0)), 0.08, 11);
  for (auto _ : state) {
    auto sp = centrality::all_pairs_shortest_serial(nw, 0.5);
    benchmark::DoNotOptimize(sp);
  }
}
BENCHMARK(BM_AllPairsShortestSerial)
    ->Arg(100)
    ->Arg(300)
    ->Unit(benchmark::kMillisecond);

static void BM_WeightedBetweenness(benchmark::State& state) {
  auto nw = random_network(static_cast<int>(state.range(0)), 0.08, 13);
  for (auto _ : state) {
    auto scores = centrality::weighted_betweenness(nw, 0.5, worker_count());
    benchmark::DoNotOptimize(scores);
  }
}
BENCHMARK(BM_WeightedBetweenness)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_PeriodEmdTable(benchmark::State& state) {
  std::vector<net::SpilloverNetwork> periods;
  for (int p = 0; p < 4; ++p) {
    auto nw = random_network(40, 0.2, 17 + p);
    for (int i = 0; i < 40; ++i)
      nw.grouping.entries[nw.nodes[i]] = {"s",
                                          ingest::kMainGroups[i % 4]};
    periods.push_back(std::move(nw));
  }
  emd::PeriodEmdOptions opts;
  opts.workers = worker_count();
  for (auto _ : state) {
    auto table = emd::period_emd_table(periods, opts);
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_PeriodEmdTable)->Unit(benchmark::kMillisecond);

static void BM_PeriodEmdTableSerial(benchmark::State& state) {
  std::vector<net::SpilloverNetwork> periods;
  for (int p = 0; p < 4; ++p) {
    auto nw = random_network(40, 0.2, 17 + p);
    for (int i = 0; i < 40; ++i)
      nw.grouping.entries[nw.nodes[i]] = {"s",
                                          ingest::kMainGroups[i % 4]};
    periods.push_back(std::move(nw));
  }
  emd::PeriodEmdOptions opts;
  for (auto _ : state) {
    auto table = emd::period_emd_table_serial(periods, opts);
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_PeriodEmdTableSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
