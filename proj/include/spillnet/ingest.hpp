// Data ingest: intraday price panels, within-day log returns, period
// splitting, industry grouping, and descriptive statistics.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "spillnet/common.hpp"

namespace spillnet::ingest {

// Industry group tags.  Ke/Cg/Kg/Us are the four main groups; indices that do
// not belong to any of them are Ungrouped and form singleton groups of their
// own for "outside the group" purposes.
enum class Group { Ke, Cg, Kg, Us, Ungrouped };

inline constexpr Group kMainGroups[] = {Group::Ke, Group::Cg, Group::Kg,
                                        Group::Us};
inline constexpr Group kAllGroups[] = {Group::Ke, Group::Cg, Group::Kg,
                                       Group::Us, Group::Ungrouped};

std::string to_string(Group g);
Group parse_group(const std::string& tag);

struct GroupingEntry {
  std::string sector;
  Group group = Group::Ungrouped;
};

// code -> (sector name, group tag); codes absent from the map are Ungrouped
// with an empty sector.
struct SectorGrouping {
  std::map<std::string, GroupingEntry> entries;

  Group group_of(const std::string& code) const {
    auto it = entries.find(code);
    return it == entries.end() ? Group::Ungrouped : it->second.group;
  }
  std::string sector_of(const std::string& code) const {
    auto it = entries.find(code);
    return it == entries.end() ? std::string() : it->second.sector;
  }
};

SectorGrouping load_grouping(const std::string& json_path);

struct PeriodSpec {
  std::string name;
  std::string start;  // inclusive, "YYYY-MM-DD"
  std::string end;    // inclusive
};

std::vector<PeriodSpec> load_periods(const std::string& json_path);
std::vector<PeriodSpec> default_periods();

// One row per minute bar (union grid over all codes), one column per code.
struct PricePanel {
  std::vector<std::string> codes;       // sorted, unique
  std::vector<std::string> stamps;      // "YYYY-MM-DD HH:MM", strictly increasing
  std::vector<std::string> stamp_day;   // date part of each stamp
  Eigen::MatrixXd prices;               // stamps.size() x codes.size(), all > 0
};

enum class PriceFormat { long_rows, wide };

// Loads a price CSV.  Long format: timestamp,code,close.  Wide format:
// timestamp,<code>,<code>,...  Missing cells are forward-filled within a day
// up to max_gap consecutive missing bars; larger gaps, leading gaps,
// duplicates, and non-positive prices are errors.
PricePanel load_price_panel(const std::string& path, PriceFormat format,
                            int max_gap = 5);

// Within-day log returns; day-boundary (overnight) returns are dropped.
struct ReturnPanel {
  std::vector<std::string> codes;
  Eigen::MatrixXd obs;                 // n_obs x codes.size()
  std::vector<std::string> obs_day;    // date of each observation row
  std::vector<std::string> days;       // distinct trading days, ascending

  int n_obs() const { return static_cast<int>(obs.rows()); }
  int n_codes() const { return static_cast<int>(obs.cols()); }
};

ReturnPanel compute_log_returns(const PricePanel& panel);

// Selects the rows of each period ([start, end] by date).  Specs must be
// non-overlapping with unique names; a spec matching no trading day is an
// error.
std::vector<ReturnPanel> split_periods(const ReturnPanel& panel,
                                       const std::vector<PeriodSpec>& specs);

struct StatsRow {
  std::string code;
  long n_obs = 0;
  double mean = 0, sd = 0, skewness = 0, kurtosis = 0;  // kurtosis raw (normal = 3)
  double jarque_bera = 0, jb_p_value = 0;
  double ar1 = 0;
};

// Moments use the population definitions except sd (sample, n-1 divisor);
// AR1 uses the biased estimator (denominator n * variance).
StatsRow descriptive_stats(const Eigen::VectorXd& series,
                           const std::string& code = "");

}  // namespace spillnet::ingest
