#include "spillnet/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "spillnet/csv.hpp"

namespace spillnet::scenario {

using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

Eigen::Matrix2d mat2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
      !j[1].is_array() || j[1].size() != 2)
    throw DataError("scenario: " + what + " must be a 2x2 array");
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

Block parse_block(const json& j) {
  Block b;
  for (const auto& c : j.at("codes")) b.codes.push_back(c.get<std::string>());
  if (b.codes.size() == 1) {
    b.params.mu(0) = j.value("mu", 0.0);
    b.params.phi(0, 0) = j.value("phi", 0.0);
    b.params.c_lower(0, 0) = j.at("c").get<double>();
    b.params.a(0, 0) = j.at("a").get<double>();
    b.params.b(0, 0) = j.at("b").get<double>();
  } else if (b.codes.size() == 2) {
    if (j.contains("mu")) {
      b.params.mu(0) = j["mu"][0].get<double>();
      b.params.mu(1) = j["mu"][1].get<double>();
    }
    if (j.contains("phi")) b.params.phi = mat2(j["phi"], "phi");
    b.params.c_lower = mat2(j.at("c"), "c");
    b.params.a = mat2(j.at("a"), "a");
    b.params.b = mat2(j.at("b"), "b");
  } else {
    throw DataError("scenario: blocks must have 1 or 2 codes");
  }
  return b;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  json doc = parse_json_file(path);
  Scenario sc;
  try {
    sc.base_date = doc.value("base_date", sc.base_date);
    sc.minutes_per_day = doc.value("minutes_per_day", sc.minutes_per_day);
    for (const auto& p : doc.at("periods")) {
      sc.periods.push_back(
          {p.at("name").get<std::string>(), p.at("days").get<int>()});
    }
    for (const auto& ix : doc.at("indices")) {
      ScenarioIndex si;
      si.code = ix.at("code").get<std::string>();
      si.sector = ix.value("sector", std::string());
      si.group = ingest::parse_group(ix.at("group").get<std::string>());
      sc.indices.push_back(std::move(si));
    }
    for (const auto& b : doc.at("blocks")) sc.blocks.push_back(parse_block(b));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  validate(sc);
  return sc;
}

void validate(const Scenario& sc) {
  Date base = Date::parse(sc.base_date);
  if (base.weekday() == 0 || base.weekday() == 6)
    throw DataError("scenario: base_date must be a weekday");
  if (sc.minutes_per_day < 2 || sc.minutes_per_day > 870)
    throw DataError("scenario: minutes_per_day must be in [2, 870]");

  if (sc.periods.empty()) throw DataError("scenario: no periods");
  std::set<std::string> names;
  for (const auto& p : sc.periods) {
    if (p.name.empty()) throw DataError("scenario: empty period name");
    if (!names.insert(p.name).second)
      throw DataError("scenario: duplicate period name " + p.name);
    if (p.days < 1) throw DataError("scenario: period days must be >= 1");
  }

  if (sc.indices.empty()) throw DataError("scenario: no indices");
  for (std::size_t i = 0; i < sc.indices.size(); ++i) {
    if (sc.indices[i].code.empty()) throw DataError("scenario: empty code");
    if (i > 0 && !(sc.indices[i - 1].code < sc.indices[i].code))
      throw DataError("scenario: index codes must be ascending and unique");
  }

  std::set<std::string> known, covered;
  for (const auto& ix : sc.indices) known.insert(ix.code);
  for (const auto& b : sc.blocks) {
    for (const auto& c : b.codes) {
      if (!known.count(c)) throw DataError("scenario: unknown block code " + c);
      if (!covered.insert(c).second)
        throw DataError("scenario: duplicate code " + c);
    }
    if (b.codes.size() == 2) {
      b.params.validate();
    } else {
      double a = b.params.a(0, 0), bb = b.params.b(0, 0);
      if (!(b.params.c_lower(0, 0) > 0.0))
        throw NumericError("scenario: scalar block needs c > 0");
      if (a * a + bb * bb >= 1.0)
        throw NumericError("scenario: scalar block not stationary");
      if (std::abs(b.params.phi(0, 0)) >= 1.0)
        throw NumericError("scenario: scalar block mean not stationary");
    }
  }
  if (covered.size() != known.size())
    throw DataError("scenario: blocks must cover every code");
}

namespace {

// Univariate GARCH(1,1) with AR(1) mean, matching the bivariate convention
// h_t = c^2 + a^2 eps^2 + b^2 h_{t-1}.
Eigen::VectorXd simulate_scalar(const bekk::BekkParams& p, int t_obs,
                                std::uint64_t seed, int burn_in = 500) {
  const double mu = p.mu(0), phi = p.phi(0, 0), c = p.c_lower(0, 0);
  const double a2 = p.a(0, 0) * p.a(0, 0), b2 = p.b(0, 0) * p.b(0, 0);
  Rng rng(seed);
  double h = c * c / (1.0 - a2 - b2);
  double r_prev = mu / (1.0 - phi);
  Eigen::VectorXd out(t_obs);
  for (int t = -burn_in; t < t_obs; ++t) {
    double eps = std::sqrt(h) * rng.gaussian();
    double r = mu + phi * r_prev + eps;
    if (t >= 0) out(t) = r;
    h = c * c + a2 * eps * eps + b2 * h;
    r_prev = r;
  }
  return out;
}

std::string minute_stamp(const Date& day, int bar) {
  int minute = 9 * 60 + 30 + bar;
  char buf[16];
  std::snprintf(buf, sizeof(buf), " %02d:%02d", minute / 60, minute % 60);
  return day.str() + buf;
}

}  // namespace

SimResult simulate_scenario(const Scenario& sc, std::uint64_t seed) {
  validate(sc);
  const int n = static_cast<int>(sc.indices.size());
  const int mpd = sc.minutes_per_day;
  int total_days = 0;
  for (const auto& p : sc.periods) total_days += p.days;
  const int t_obs = total_days * (mpd - 1);

  SimResult sim;
  for (const auto& ix : sc.indices) sim.codes.push_back(ix.code);
  std::map<std::string, int> col;
  for (int i = 0; i < n; ++i) col[sim.codes[i]] = i;

  sim.returns.resize(t_obs, n);
  for (std::size_t k = 0; k < sc.blocks.size(); ++k) {
    const Block& b = sc.blocks[k];
    std::uint64_t block_seed = mix_seed(seed, k);
    if (b.codes.size() == 2) {
      Eigen::MatrixXd r = bekk::simulate_pair(b.params, t_obs, block_seed);
      sim.returns.col(col[b.codes[0]]) = r.col(0);
      sim.returns.col(col[b.codes[1]]) = r.col(1);
    } else {
      sim.returns.col(col[b.codes[0]]) =
          simulate_scalar(b.params, t_obs, block_seed);
    }
  }

  ingest::PricePanel& panel = sim.panel;
  panel.codes = sim.codes;
  panel.prices.resize(total_days * mpd, n);
  Eigen::RowVectorXd price = Eigen::RowVectorXd::Constant(n, 100.0);
  Date day = Date::parse(sc.base_date);
  for (int d = 0; d < total_days; ++d) {
    if (d > 0) day = day.next_weekday();
    for (int bar = 0; bar < mpd; ++bar) {
      if (bar > 0) {
        int row = d * (mpd - 1) + bar - 1;
        price = price.array() * sim.returns.row(row).array().exp();
      }
      panel.stamps.push_back(minute_stamp(day, bar));
      panel.stamp_day.push_back(day.str());
      panel.prices.row(d * mpd + bar) = price;
    }
  }
  return sim;
}

std::vector<std::string> write_outputs(const Scenario& sc, const SimResult& sim,
                                       const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  {
    csv::Writer w(path("prices.csv"));
    w.row({"timestamp", "code", "close"});
    for (std::size_t t = 0; t < sim.panel.stamps.size(); ++t) {
      for (std::size_t c = 0; c < sim.codes.size(); ++c) {
        w.row({sim.panel.stamps[t], sim.codes[c],
               format_sig(sim.panel.prices(t, c), 17)});
      }
    }
  }

  {
    json g = json::object();
    for (const auto& ix : sc.indices) {
      g[ix.code] = {{"sector", ix.sector},
                    {"group", ingest::to_string(ix.group)}};
    }
    std::ofstream out(path("grouping.json"), std::ios::binary);
    out << g.dump(2) << "\n";
  }

  {
    json arr = json::array();
    Date day = Date::parse(sc.base_date);
    bool first = true;
    for (const auto& p : sc.periods) {
      std::string start, end;
      for (int d = 0; d < p.days; ++d) {
        if (!first) day = day.next_weekday();
        first = false;
        if (d == 0) start = day.str();
        end = day.str();
      }
      arr.push_back({{"name", p.name}, {"start", start}, {"end", end}});
    }
    std::ofstream out(path("periods.json"), std::ios::binary);
    out << arr.dump(2) << "\n";
  }

  return {"prices.csv", "grouping.json", "periods.json"};
}

}  // namespace spillnet::scenario
