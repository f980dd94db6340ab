// Synthetic panel generation: a scenario lists index codes with group tags
// and block-diagonal GARCH dynamics (univariate or bivariate BEKK blocks).
// Simulation writes a long price CSV plus grouping/periods JSON that feed the
// pipeline unchanged.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "spillnet/bekk.hpp"
#include "spillnet/ingest.hpp"

namespace spillnet::scenario {

struct ScenarioIndex {
  std::string code, sector;
  ingest::Group group = ingest::Group::Ungrouped;
};

struct ScenarioPeriod {
  std::string name;
  int days = 0;
};

// One or two codes; pair blocks use the full BEKK parameter set, scalar
// blocks only the (0,0) entries (univariate GARCH with AR(1) mean).
struct Block {
  std::vector<std::string> codes;
  bekk::BekkParams params;
};

struct Scenario {
  std::string base_date = "2020-01-06";  // must be a weekday
  int minutes_per_day = 61;              // bars per day, from 09:30
  std::vector<ScenarioPeriod> periods;
  std::vector<ScenarioIndex> indices;    // ascending unique codes
  std::vector<Block> blocks;             // covers every code exactly once
};

Scenario load_scenario(const std::string& path);
void validate(const Scenario& sc);

struct SimResult {
  std::vector<std::string> codes;
  Eigen::MatrixXd returns;     // days*(minutes_per_day-1) rows, one col per code
  ingest::PricePanel panel;    // prices at base 100, within-day compounding
};

// Deterministic in (sc, seed); block k draws from an independent child seed.
SimResult simulate_scenario(const Scenario& sc, std::uint64_t seed);

// Writes prices.csv, grouping.json, periods.json; returns the file names.
std::vector<std::string> write_outputs(const Scenario& sc, const SimResult& sim,
                                       const std::string& out_dir);

}  // namespace spillnet::scenario
