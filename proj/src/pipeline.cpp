#include "spillnet/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "spillnet/report.hpp"

namespace spillnet::pipe {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string resolve(const std::string& cfg_path, const std::string& p) {
  if (p.empty()) return p;
  fs::path fp(p);
  if (fp.is_absolute()) return p;
  return (fs::path(cfg_path).parent_path() / fp).string();
}

void check_keys(const json& obj, const std::vector<std::string>& known,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown config key " + where + it.key());
  }
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  json doc = parse_json_file(path);
  if (!doc.is_object()) throw ConfigError(path + ": config must be an object");
  check_keys(doc,
             {"prices", "grouping", "periods", "price_format", "out_dir",
              "max_gap_minutes", "significance", "betweenness_alpha",
              "kshell_alpha", "kshell_beta", "emd_bins", "emd_signed",
              "major_path_quantile", "dot_edge_quantile", "group_tree",
              "workers", "seed", "fit"},
             "");

  PipelineConfig cfg;
  try {
    cfg.prices_path = resolve(path, doc.value("prices", std::string()));
    cfg.grouping_path = resolve(path, doc.value("grouping", std::string()));
    cfg.periods_path = resolve(path, doc.value("periods", std::string()));
    cfg.price_format = doc.value("price_format", cfg.price_format);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.max_gap_minutes = doc.value("max_gap_minutes", cfg.max_gap_minutes);
    cfg.significance = doc.value("significance", cfg.significance);
    cfg.betweenness_alpha =
        doc.value("betweenness_alpha", cfg.betweenness_alpha);
    cfg.kshell_alpha = doc.value("kshell_alpha", cfg.kshell_alpha);
    cfg.kshell_beta = doc.value("kshell_beta", cfg.kshell_beta);
    cfg.emd_bins = doc.value("emd_bins", cfg.emd_bins);
    cfg.emd_signed = doc.value("emd_signed", cfg.emd_signed);
    cfg.major_path_quantile =
        doc.value("major_path_quantile", cfg.major_path_quantile);
    cfg.dot_edge_quantile =
        doc.value("dot_edge_quantile", cfg.dot_edge_quantile);
    cfg.group_tree = doc.value("group_tree", cfg.group_tree);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("fit")) {
      const json& f = doc["fit"];
      check_keys(f, {"restarts", "max_iter", "grad_tol", "min_obs",
                     "test_style"},
                 "fit.");
      cfg.fit.restarts = f.value("restarts", cfg.fit.restarts);
      cfg.fit.max_iter = f.value("max_iter", cfg.fit.max_iter);
      cfg.fit.grad_tol = f.value("grad_tol", cfg.fit.grad_tol);
      cfg.fit.min_obs = f.value("min_obs", cfg.fit.min_obs);
      cfg.fit.test_style = f.value("test_style", cfg.fit.test_style);
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const PipelineConfig& cfg) {
  if (cfg.prices_path.empty()) throw ConfigError("config: prices path missing");
  if (cfg.grouping_path.empty())
    throw ConfigError("config: grouping path missing");
  if (cfg.price_format != "long" && cfg.price_format != "wide")
    throw ConfigError("config: price_format must be long or wide");
  if (cfg.max_gap_minutes < 0)
    throw ConfigError("config: max_gap_minutes must be >= 0");
  if (!(cfg.significance > 0.0) || !(cfg.significance < 1.0))
    throw ConfigError("config: significance must be in (0, 1)");
  if (!(cfg.betweenness_alpha > 0.0) || cfg.betweenness_alpha > 1.0)
    throw ConfigError("config: betweenness_alpha must be in (0, 1]");
  if (!(cfg.kshell_alpha > 0.0) || !(cfg.kshell_beta > 0.0))
    throw ConfigError("config: k-shell exponents must be positive");
  if (cfg.emd_bins < 1) throw ConfigError("config: emd_bins must be >= 1");
  if (!(cfg.major_path_quantile > 0.0) || cfg.major_path_quantile > 1.0)
    throw ConfigError("config: major_path_quantile must be in (0, 1]");
  if (!(cfg.dot_edge_quantile > 0.0) || cfg.dot_edge_quantile > 1.0)
    throw ConfigError("config: dot_edge_quantile must be in (0, 1]");
  if (cfg.group_tree != "arborescence" && cfg.group_tree != "undirected_mst")
    throw ConfigError("config: group_tree must be arborescence or undirected_mst");
  if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (cfg.fit.restarts < 0) throw ConfigError("config: fit.restarts must be >= 0");
  if (cfg.fit.max_iter < 1) throw ConfigError("config: fit.max_iter must be >= 1");
  if (!(cfg.fit.grad_tol > 0.0))
    throw ConfigError("config: fit.grad_tol must be positive");
  if (cfg.fit.min_obs < 10) throw ConfigError("config: fit.min_obs must be >= 10");
  if (cfg.fit.test_style != "wald" && cfg.fit.test_style != "lr")
    throw ConfigError("config: fit.test_style must be wald or lr");
}

bekk::FitOptions fit_options(const PipelineConfig& cfg) {
  bekk::FitOptions opts;
  opts.restarts = cfg.fit.restarts;
  opts.max_iter = cfg.fit.max_iter;
  opts.grad_tol = cfg.fit.grad_tol;
  opts.min_obs = cfg.fit.min_obs;
  opts.significance = cfg.significance;
  opts.test_style =
      cfg.fit.test_style == "lr" ? bekk::TestStyle::lr : bekk::TestStyle::wald;
  opts.seed = cfg.seed;
  return opts;
}

Stage parse_stage(const std::string& name) {
  if (name == "stats") return Stage::stats;
  if (name == "fit") return Stage::fit;
  if (name == "network") return Stage::network;
  if (name == "analyze") return Stage::analyze;
  if (name == "emd") return Stage::emd;
  if (name == "paths") return Stage::paths;
  if (name == "report") return Stage::report;
  throw ConfigError("unknown stage: " + name);
}

namespace {

// Tracks files written by one invocation so a failed run leaves nothing.
class Emitter {
 public:
  explicit Emitter(std::string out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  std::string path(const std::string& name) { return out_dir_ + "/" + name; }

  void record(const std::string& name) { files_.push_back(name); }

  const std::vector<std::string>& files() const { return files_; }

  void remove_all() {
    for (const auto& name : files_) {
      std::error_code ec;
      fs::remove(path(name), ec);
    }
  }

 private:
  std::string out_dir_;
  std::vector<std::string> files_;
};

template <typename F>
auto stage_guard(const char* name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("stage ") + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("stage ") + name + ": " + e.what());
  }
}

json config_echo(const PipelineConfig& cfg) {
  auto num = [](double x) { return std::stod(format_sig(x, 6)); };
  json fit = {{"restarts", cfg.fit.restarts},
              {"max_iter", cfg.fit.max_iter},
              {"grad_tol", num(cfg.fit.grad_tol)},
              {"min_obs", cfg.fit.min_obs},
              {"test_style", cfg.fit.test_style}};
  // workers and out_dir are execution details, not analysis inputs; leaving
  // them out keeps re-runs of the same analysis byte-identical.
  return {{"prices", cfg.prices_path},
          {"grouping", cfg.grouping_path},
          {"periods", cfg.periods_path},
          {"price_format", cfg.price_format},
          {"max_gap_minutes", cfg.max_gap_minutes},
          {"significance", num(cfg.significance)},
          {"betweenness_alpha", num(cfg.betweenness_alpha)},
          {"kshell_alpha", num(cfg.kshell_alpha)},
          {"kshell_beta", num(cfg.kshell_beta)},
          {"emd_bins", cfg.emd_bins},
          {"emd_signed", cfg.emd_signed},
          {"major_path_quantile", num(cfg.major_path_quantile)},
          {"dot_edge_quantile", num(cfg.dot_edge_quantile)},
          {"group_tree", cfg.group_tree},
          {"seed", cfg.seed},
          {"fit", std::move(fit)}};
}

void check_period_name(const std::string& name) {
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok)
      throw DataError("period name unusable in file names: " + name);
  }
}

}  // namespace

ReportBundle run_pipeline(const PipelineConfig& cfg, Stage upto) {
  validate_config(cfg);
  const int level = static_cast<int>(upto);
  auto reached = [&](Stage s) { return level >= static_cast<int>(s); };

  Emitter em(cfg.out_dir);
  try {
    // Ingest.
    ingest::SectorGrouping grouping;
    std::vector<ingest::PeriodSpec> specs;
    std::vector<ingest::ReturnPanel> panels;
    stage_guard("ingest", [&] {
      grouping = ingest::load_grouping(cfg.grouping_path);
      specs = cfg.periods_path.empty() ? ingest::default_periods()
                                       : ingest::load_periods(cfg.periods_path);
      for (const auto& s : specs) check_period_name(s.name);
      auto format = cfg.price_format == "wide" ? ingest::PriceFormat::wide
                                               : ingest::PriceFormat::long_rows;
      auto panel = ingest::load_price_panel(cfg.prices_path, format,
                                            cfg.max_gap_minutes);
      for (const auto& code : panel.codes)
        if (!grouping.entries.count(code))
          throw DataError("no grouping entry for code " + code);
      panels = ingest::split_periods(ingest::compute_log_returns(panel), specs);
    });
    const int np = static_cast<int>(panels.size());

    stage_guard("stats", [&] {
      for (int p = 0; p < np; ++p) {
        std::vector<ingest::StatsRow> rows;
        for (int c = 0; c < panels[p].n_codes(); ++c) {
          try {
            rows.push_back(ingest::descriptive_stats(panels[p].obs.col(c),
                                                     panels[p].codes[c]));
          } catch (const DataError& e) {
            throw DataError(panels[p].codes[c] + ": " + e.what());
          }
        }
        std::string name = "stats_" + specs[p].name + ".csv";
        report::write_stats_csv(em.path(name), rows);
        em.record(name);
      }
    });

    std::vector<std::vector<bekk::FittedPair>> fits(np);
    if (reached(Stage::fit)) {
      stage_guard("fit", [&] {
        bekk::FitOptions opts = fit_options(cfg);
        for (int p = 0; p < np; ++p) {
          opts.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(p));
          fits[p] = bekk::fit_all_pairs(panels[p].obs, panels[p].codes, opts,
                                        cfg.workers);
          std::string name = "fits_" + specs[p].name + ".csv";
          report::write_fits_csv(em.path(name), fits[p]);
          em.record(name);
        }
      });
    }

    std::vector<net::SpilloverNetwork> nets;
    if (reached(Stage::network)) {
      stage_guard("network", [&] {
        for (int p = 0; p < np; ++p) {
          nets.push_back(net::build_network(fits[p], grouping, specs[p],
                                            cfg.significance));
          std::string name = "network_" + specs[p].name + ".json";
          report::write_network_json(em.path(name), nets[p]);
          em.record(name);
        }
      });
    }

    if (reached(Stage::analyze)) {
      stage_guard("analyze", [&] {
        for (int p = 0; p < np; ++p) {
          const auto& nw = nets[p];
          auto nodes = net::node_connectivity(nw);
          auto shells = centrality::weighted_kshell(nw, cfg.kshell_alpha,
                                                    cfg.kshell_beta);
          auto wbc = centrality::weighted_betweenness(
              nw, cfg.betweenness_alpha, cfg.workers);
          auto groups = net::group_connectivity(nw);
          auto si = net::sector_influence(nw);
          auto totals = net::network_totals(nw);

          std::string name = "indicators_" + specs[p].name + ".csv";
          report::write_indicators_csv(em.path(name), nw, nodes, shells, wbc);
          em.record(name);
          name = "group_summary_" + specs[p].name + ".csv";
          report::write_group_summary_csv(em.path(name), nw, nodes, groups,
                                          wbc);
          em.record(name);
          name = "group_matrix_" + specs[p].name + ".csv";
          report::write_group_matrix_csv(em.path(name), si);
          em.record(name);
          name = "network_totals_" + specs[p].name + ".csv";
          report::write_totals_csv(em.path(name), totals);
          em.record(name);
        }
      });
    }

    if (reached(Stage::emd)) {
      stage_guard("emd", [&] {
        if (np < 2) {
          if (upto == Stage::emd)
            throw DataError("EMD table needs at least 2 periods");
          return;  // report run on a single period: nothing to compare
        }
        emd::PeriodEmdOptions opts;
        opts.n_bins = cfg.emd_bins;
        opts.signed_pooling = cfg.emd_signed;
        opts.workers = cfg.workers;
        auto table = emd::period_emd_table(nets, opts);
        report::write_emd_csv(em.path("emd_table.csv"), table);
        em.record("emd_table.csv");
      });
    }

    if (reached(Stage::paths)) {
      stage_guard("paths", [&] {
        for (int p = 0; p < np; ++p) {
          const auto& nw = nets[p];
          auto sets = paths::all_major_paths(nw, cfg.major_path_quantile);
          std::string name = "major_paths_" + specs[p].name + ".csv";
          report::write_major_paths_csv(em.path(name), sets);
          em.record(name);

          int main_present = 0;
          for (ingest::Group g : ingest::kMainGroups)
            for (int i = 0; i < nw.n(); ++i)
              if (nw.group_of(i) == g) {
                ++main_present;
                break;
              }
          if (main_present != 4) continue;  // group digraph undefined

          auto gd = paths::group_net_digraph(net::sector_influence(nw));
          paths::Arborescence arb;
          std::vector<paths::UndirectedEdge> mst;
          bool have_arb = false, have_mst = false;
          try {
            if (cfg.group_tree == "undirected_mst") {
              mst = paths::undirected_mst(gd);
              have_mst = true;
            } else {
              arb = paths::max_arborescence(gd);
              have_arb = true;
            }
          } catch (const DataError&) {
            // not spanning-connected: emit the digraph without a tree
          }
          std::string dot = report::emit_group_dot(
              gd, have_arb ? &arb : nullptr, have_mst ? &mst : nullptr);
          name = "groups_" + specs[p].name + ".dot";
          report::write_text(em.path(name), dot);
          em.record(name);
        }
      });
    }

    if (reached(Stage::report)) {
      stage_guard("report", [&] {
        for (int p = 0; p < np; ++p) {
          std::string name = "network_" + specs[p].name + ".dot";
          report::write_text(em.path(name),
                             report::emit_dot(nets[p], cfg.dot_edge_quantile));
          em.record(name);
        }
      });
    }

    // Manifest over everything this run wrote.
    json files = json::object();
    for (const auto& name : em.files())
      files[name] = sha256_file(em.path(name));
    json manifest = {{"config", config_echo(cfg)},
                     {"files", std::move(files)},
                     {"tool", {{"name", "spillnet"}, {"version", "0.1.0"}}}};
    report::write_text(em.path("run_manifest.json"), manifest.dump(2) + "\n");
    em.record("run_manifest.json");
  } catch (...) {
    em.remove_all();
    throw;
  }

  ReportBundle bundle;
  bundle.files = em.files();
  return bundle;
}

}  // namespace spillnet::pipe
