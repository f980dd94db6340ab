#include "spillnet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "spillnet/csv.hpp"

namespace spillnet::ingest {

using nlohmann::json;

std::string to_string(Group g) {
  switch (g) {
    case Group::Ke: return "Ke";
    case Group::Cg: return "Cg";
    case Group::Kg: return "Kg";
    case Group::Us: return "Us";
    case Group::Ungrouped: return "Ungrouped";
  }
  throw NumericError("bad group enum");
}

Group parse_group(const std::string& tag) {
  if (tag == "Ke") return Group::Ke;
  if (tag == "Cg") return Group::Cg;
  if (tag == "Kg") return Group::Kg;
  if (tag == "Us") return Group::Us;
  if (tag == "Ungrouped") return Group::Ungrouped;
  throw DataError("unknown group tag: '" + tag +
                  "' (expected Ke, Cg, Kg, Us, or Ungrouped)");
}

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open JSON file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

double parse_price(const std::string& s, const std::string& where) {
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE ||
      !std::isfinite(v)) {
    throw DataError(where + ": bad numeric value '" + s + "'");
  }
  return v;
}

struct Stamp {
  std::string norm;  // "YYYY-MM-DD HH:MM"
  std::string day;
};

Stamp parse_stamp(const std::string& raw) {
  // Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM", optional ":00" seconds.
  if (raw.size() < 16) throw DataError("bad timestamp: '" + raw + "'");
  std::string day = raw.substr(0, 10);
  Date::parse(day);  // validates the date part
  char sep = raw[10];
  if (sep != ' ' && sep != 'T')
    throw DataError("bad timestamp separator: '" + raw + "'");
  std::string hm = raw.substr(11);
  if (hm.size() == 8 && hm[5] == ':') {
    if (hm.substr(6) != "00")
      throw DataError("sub-minute timestamp not supported: '" + raw + "'");
    hm = hm.substr(0, 5);
  }
  if (hm.size() != 5 || hm[2] != ':' || !std::isdigit(hm[0]) ||
      !std::isdigit(hm[1]) || !std::isdigit(hm[3]) || !std::isdigit(hm[4])) {
    throw DataError("bad timestamp time: '" + raw + "'");
  }
  int hh = (hm[0] - '0') * 10 + (hm[1] - '0');
  int mm = (hm[3] - '0') * 10 + (hm[4] - '0');
  if (hh > 23 || mm > 59) throw DataError("bad timestamp time: '" + raw + "'");
  return {day + " " + hm, day};
}

}  // namespace

SectorGrouping load_grouping(const std::string& json_path) {
  json j = load_json_file(json_path);
  if (!j.is_object())
    throw DataError(json_path + ": grouping must be a JSON object");
  SectorGrouping g;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& code = it.key();
    if (code.empty()) throw DataError(json_path + ": empty code key");
    const json& entry = it.value();
    if (!entry.is_object() || !entry.contains("sector") ||
        !entry.contains("group") || !entry["sector"].is_string() ||
        !entry["group"].is_string()) {
      throw DataError(json_path + ": entry for '" + code +
                      "' must be {\"sector\": str, \"group\": str}");
    }
    g.entries[code] = {entry["sector"].get<std::string>(),
                       parse_group(entry["group"].get<std::string>())};
  }
  return g;
}

std::vector<PeriodSpec> load_periods(const std::string& json_path) {
  json j = load_json_file(json_path);
  if (!j.is_array())
    throw DataError(json_path + ": periods must be a JSON array");
  std::vector<PeriodSpec> specs;
  for (const json& e : j) {
    if (!e.is_object() || !e.contains("name") || !e.contains("start") ||
        !e.contains("end")) {
      throw DataError(json_path +
                      ": each period needs {\"name\", \"start\", \"end\"}");
    }
    specs.push_back({e["name"].get<std::string>(),
                     e["start"].get<std::string>(),
                     e["end"].get<std::string>()});
  }
  return specs;
}

std::vector<PeriodSpec> default_periods() {
  return {{"period1", "2020-01-03", "2020-01-23"},
          {"period2", "2020-02-03", "2020-02-28"},
          {"period3", "2020-03-02", "2020-03-20"}};
}

namespace {

// Shared tail of panel loading: cells indexed [stamp][code], flag = present.
PricePanel assemble_panel(std::vector<std::string> codes,
                          std::vector<Stamp> stamps,
                          const Eigen::MatrixXd& raw,
                          const Eigen::Matrix<bool, Eigen::Dynamic,
                                              Eigen::Dynamic>& present,
                          int max_gap) {
  const int n_stamps = static_cast<int>(stamps.size());
  const int n_codes = static_cast<int>(codes.size());
  if (n_stamps == 0) throw DataError("price panel has no rows");
  if (n_codes == 0) throw DataError("price panel has no codes");
  if (max_gap < 0) throw ConfigError("max_gap must be >= 0");

  PricePanel panel;
  panel.codes = std::move(codes);
  panel.prices.resize(n_stamps, n_codes);
  panel.stamps.reserve(n_stamps);
  panel.stamp_day.reserve(n_stamps);
  for (const Stamp& s : stamps) {
    panel.stamps.push_back(s.norm);
    panel.stamp_day.push_back(s.day);
  }

  // Forward-fill per code within each day; a run of more than max_gap missing
  // bars, or a missing bar with nothing before it in the day, is an error.
  int day_begin = 0;
  while (day_begin < n_stamps) {
    int day_end = day_begin;
    while (day_end < n_stamps &&
           panel.stamp_day[day_end] == panel.stamp_day[day_begin]) {
      ++day_end;
    }
    for (int c = 0; c < n_codes; ++c) {
      double last = 0.0;
      bool have_last = false;
      int run = 0;
      for (int r = day_begin; r < day_end; ++r) {
        if (present(r, c)) {
          panel.prices(r, c) = raw(r, c);
          last = raw(r, c);
          have_last = true;
          run = 0;
        } else {
          if (!have_last) {
            throw DataError("code " + panel.codes[c] + " has no price at " +
                            panel.stamps[r] + " and nothing earlier that day");
          }
          if (++run > max_gap) {
            throw DataError("code " + panel.codes[c] + " gap exceeds " +
                            std::to_string(max_gap) + " minutes at " +
                            panel.stamps[r]);
          }
          panel.prices(r, c) = last;
        }
      }
    }
    day_begin = day_end;
  }
  return panel;
}

}  // namespace

PricePanel load_price_panel(const std::string& path, PriceFormat format,
                            int max_gap) {
  csv::Table t = csv::read_file(path);

  if (format == PriceFormat::long_rows) {
    if (t.header.size() != 3 || t.header[0] != "timestamp" ||
        t.header[1] != "code" || t.header[2] != "close") {
      throw DataError(path + ": long format needs header timestamp,code,close");
    }
    std::map<std::string, Stamp> stamp_by_norm;
    std::set<std::string> code_set;
    // (stamp, code) -> price
    std::map<std::pair<std::string, std::string>, double> cells;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      Stamp st = parse_stamp(row[0]);
      const std::string& code = row[1];
      if (code.empty())
        throw DataError(path + ": empty code at " + row[0]);
      double price =
          parse_price(row[2], path + " row " + std::to_string(i + 2));
      if (price <= 0.0) {
        throw DataError(path + ": non-positive price for " + code + " at " +
                        st.norm);
      }
      auto key = std::make_pair(st.norm, code);
      if (!cells.emplace(key, price).second) {
        throw DataError(path + ": duplicate (timestamp, code): " + st.norm +
                        ", " + code);
      }
      stamp_by_norm.emplace(st.norm, st);
      code_set.insert(code);
    }
    std::vector<std::string> codes(code_set.begin(), code_set.end());
    std::vector<Stamp> stamps;
    stamps.reserve(stamp_by_norm.size());
    for (auto& [norm, st] : stamp_by_norm) stamps.push_back(st);
    const int n_stamps = static_cast<int>(stamps.size());
    const int n_codes = static_cast<int>(codes.size());
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n_stamps, n_codes);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present(n_stamps,
                                                                n_codes);
    present.setConstant(false);
    std::map<std::string, int> code_index;
    for (int c = 0; c < n_codes; ++c) code_index[codes[c]] = c;
    std::map<std::string, int> stamp_index;
    for (int r = 0; r < n_stamps; ++r) stamp_index[stamps[r].norm] = r;
    for (const auto& [key, price] : cells) {
      int r = stamp_index.at(key.first);
      int c = code_index.at(key.second);
      raw(r, c) = price;
      present(r, c) = true;
    }
    return assemble_panel(std::move(codes), std::move(stamps), raw, present,
                          max_gap);
  }

  // Wide format: timestamp,<code>,...
  if (t.header.size() < 2 || t.header[0] != "timestamp") {
    throw DataError(path + ": wide format needs header timestamp,<code>,...");
  }
  std::vector<std::string> codes(t.header.begin() + 1, t.header.end());
  {
    std::set<std::string> uniq(codes.begin(), codes.end());
    if (uniq.size() != codes.size())
      throw DataError(path + ": duplicate code column");
    for (const auto& c : codes)
      if (c.empty()) throw DataError(path + ": empty code column name");
  }
  const int n_codes = static_cast<int>(codes.size());
  const int n_stamps = static_cast<int>(t.rows.size());
  std::vector<Stamp> stamps;
  stamps.reserve(n_stamps);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n_stamps, n_codes);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present(n_stamps,
                                                              n_codes);
  present.setConstant(false);
  std::string prev_norm;
  for (int r = 0; r < n_stamps; ++r) {
    const auto& row = t.rows[r];
    Stamp st = parse_stamp(row[0]);
    if (r > 0 && st.norm <= prev_norm) {
      throw DataError(path + ": timestamps not strictly increasing at " +
                      st.norm);
    }
    prev_norm = st.norm;
    stamps.push_back(st);
    for (int c = 0; c < n_codes; ++c) {
      const std::string& cell = row[c + 1];
      if (cell.empty()) continue;
      double price =
          parse_price(cell, path + " row " + std::to_string(r + 2));
      if (price <= 0.0) {
        throw DataError(path + ": non-positive price for " + codes[c] +
                        " at " + st.norm);
      }
      raw(r, c) = price;
      present(r, c) = true;
    }
  }
  // Column order follows the sorted code order, so permute.
  std::vector<int> order(n_codes);
  for (int i = 0; i < n_codes; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return codes[a] < codes[b]; });
  std::vector<std::string> sorted_codes(n_codes);
  Eigen::MatrixXd raw2(n_stamps, n_codes);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present2(n_stamps,
                                                               n_codes);
  for (int c = 0; c < n_codes; ++c) {
    sorted_codes[c] = codes[order[c]];
    raw2.col(c) = raw.col(order[c]);
    present2.col(c) = present.col(order[c]);
  }
  return assemble_panel(std::move(sorted_codes), std::move(stamps), raw2,
                        present2, max_gap);
}

ReturnPanel compute_log_returns(const PricePanel& panel) {
  const int n_stamps = static_cast<int>(panel.stamps.size());
  const int n_codes = static_cast<int>(panel.codes.size());
  ReturnPanel rp;
  rp.codes = panel.codes;

  std::vector<std::pair<int, int>> day_ranges;  // [begin, end)
  int begin = 0;
  while (begin < n_stamps) {
    int end = begin;
    while (end < n_stamps && panel.stamp_day[end] == panel.stamp_day[begin])
      ++end;
    if (end - begin < 2) {
      throw DataError("trading day " + panel.stamp_day[begin] +
                      " has fewer than 2 observations");
    }
    day_ranges.emplace_back(begin, end);
    rp.days.push_back(panel.stamp_day[begin]);
    begin = end;
  }

  int total = 0;
  for (auto [b, e] : day_ranges) total += e - b - 1;
  rp.obs.resize(total, n_codes);
  rp.obs_day.reserve(total);
  int out = 0;
  for (auto [b, e] : day_ranges) {
    for (int r = b + 1; r < e; ++r) {
      for (int c = 0; c < n_codes; ++c) {
        rp.obs(out, c) =
            std::log(panel.prices(r, c)) - std::log(panel.prices(r - 1, c));
      }
      rp.obs_day.push_back(panel.stamp_day[r]);
      ++out;
    }
  }
  return rp;
}

std::vector<ReturnPanel> split_periods(const ReturnPanel& panel,
                                       const std::vector<PeriodSpec>& specs) {
  if (specs.empty()) throw DataError("no period specs given");
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (s.name.empty()) throw DataError("period with empty name");
    if (!names.insert(s.name).second)
      throw DataError("duplicate period name: " + s.name);
    Date::parse(s.start);
    Date::parse(s.end);
    if (s.end < s.start)
      throw DataError("period " + s.name + " has end before start");
  }
  std::vector<const PeriodSpec*> sorted;
  for (const auto& s : specs) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start <= sorted[i - 1]->end) {
      throw DataError("periods " + sorted[i - 1]->name + " and " +
                      sorted[i]->name + " overlap");
    }
  }

  std::vector<ReturnPanel> out;
  for (const auto& s : specs) {
    std::vector<int> rows;
    for (int r = 0; r < panel.n_obs(); ++r) {
      if (panel.obs_day[r] >= s.start && panel.obs_day[r] <= s.end)
        rows.push_back(r);
    }
    if (rows.empty()) {
      throw DataError("period " + s.name + " matches no trading day");
    }
    ReturnPanel sub;
    sub.codes = panel.codes;
    sub.obs.resize(static_cast<int>(rows.size()), panel.n_codes());
    sub.obs_day.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      sub.obs.row(static_cast<int>(i)) = panel.obs.row(rows[i]);
      sub.obs_day.push_back(panel.obs_day[rows[i]]);
      if (sub.days.empty() || sub.days.back() != sub.obs_day.back())
        sub.days.push_back(sub.obs_day.back());
    }
    out.push_back(std::move(sub));
  }
  return out;
}

StatsRow descriptive_stats(const Eigen::VectorXd& series,
                           const std::string& code) {
  const long n = series.size();
  if (n < 8) {
    throw DataError("descriptive_stats: need at least 8 observations" +
                    (code.empty() ? "" : " for " + code));
  }
  for (long i = 0; i < n; ++i) {
    if (!std::isfinite(series[i]))
      throw DataError("descriptive_stats: non-finite value" +
                      (code.empty() ? "" : " in " + code));
  }
  double mean = series.mean();
  double m2 = 0, m3 = 0, m4 = 0;
  for (long i = 0; i < n; ++i) {
    double d = series[i] - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  double ssq = m2;  // sum of squared deviations
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0.0) {
    throw DataError("descriptive_stats: degenerate (constant) series" +
                    (code.empty() ? "" : ": " + code));
  }

  StatsRow row;
  row.code = code;
  row.n_obs = n;
  row.mean = mean;
  row.sd = std::sqrt(ssq / (n - 1));
  row.skewness = m3 / std::pow(m2, 1.5);
  row.kurtosis = m4 / (m2 * m2);
  double excess = row.kurtosis - 3.0;
  row.jarque_bera =
      n / 6.0 * (row.skewness * row.skewness + 0.25 * excess * excess);
  row.jb_p_value = chi_square_survival(row.jarque_bera, 2);
  double num = 0;
  for (long t = 1; t < n; ++t)
    num += (series[t] - mean) * (series[t - 1] - mean);
  row.ar1 = num / ssq;
  return row;
}

}  // namespace spillnet::ingest
