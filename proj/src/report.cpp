#include "spillnet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"
#include "spillnet/csv.hpp"

namespace spillnet::report {

using nlohmann::json;

namespace {

std::string fmt(double x) { return format_sig(x, 6); }

std::string fmt2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

// JSON double carrying exactly the 6-significant-digit value we print.
double jnum(double x) { return std::stod(fmt(x)); }

const char* group_color(ingest::Group g) {
  switch (g) {
    case ingest::Group::Ke: return "#e41a1c";
    case ingest::Group::Cg: return "#377eb8";
    case ingest::Group::Kg: return "#4daf4a";
    case ingest::Group::Us: return "#984ea3";
    default: return "#999999";
  }
}

struct DotEdge {
  int i, j;
  double s;
};

}  // namespace

std::string emit_dot(const net::SpilloverNetwork& nw, double edge_quantile) {
  if (!(edge_quantile > 0.0) || edge_quantile > 1.0)
    throw ConfigError("emit_dot: edge_quantile must be in (0, 1]");
  const int n = nw.n();

  std::vector<DotEdge> edges;
  double max_s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i && nw.has_edge(i, j)) {
        edges.push_back({i, j, nw.intensity(i, j)});
        max_s = std::max(max_s, nw.intensity(i, j));
      }
  std::sort(edges.begin(), edges.end(), [](const DotEdge& a, const DotEdge& b) {
    if (a.s != b.s) return a.s > b.s;
    if (a.i != b.i) return a.i < b.i;  // nodes are code-sorted
    return a.j < b.j;
  });
  int keep = 0;
  if (!edges.empty()) {
    keep = static_cast<int>(std::ceil(edge_quantile * edges.size() - 1e-9));
    keep = std::clamp(keep, 1, static_cast<int>(edges.size()));
  }

  std::vector<net::NodeIndicators> nodes = node_connectivity(nw);
  double max_o = 0;
  for (const auto& nd : nodes) max_o = std::max(max_o, nd.out_strength);

  std::string out;
  out += "digraph spillovers {\n";
  out += "  rankdir=LR;\n";
  out += "  node [style=filled, fontname=\"Helvetica\"];\n";
  for (int i = 0; i < n; ++i) {
    double w = 0.3 + (max_o > 0 ? 0.7 * nodes[i].out_strength / max_o : 0.0);
    out += "  \"" + nw.nodes[i] + "\" [fillcolor=\"" +
           group_color(nw.group_of(i)) + "\", width=" + fmt(w) +
           ", height=" + fmt(w) + ", fixedsize=true];\n";
  }
  for (int k = 0; k < keep; ++k) {
    double pen = 0.5 + (max_s > 0 ? 4.0 * edges[k].s / max_s : 0.0);
    out += "  \"" + nw.nodes[edges[k].i] + "\" -> \"" +
           nw.nodes[edges[k].j] + "\" [penwidth=" + fmt(pen) + "];\n";
  }
  out += "}\n";
  return out;
}

std::string emit_group_dot(const paths::GroupDigraph& g,
                           const paths::Arborescence* arb,
                           const std::vector<paths::UndirectedEdge>* mst) {
  const int n = static_cast<int>(g.nodes.size());
  std::set<std::pair<int, int>> black;
  auto index_of = [&](ingest::Group t) {
    for (int i = 0; i < n; ++i)
      if (g.nodes[i] == t) return i;
    throw DataError("emit_group_dot: unknown group in spanning structure");
  };
  if (arb) {
    for (const auto& e : arb->edges)
      black.insert({index_of(e.from), index_of(e.to)});
  }
  if (mst) {
    for (const auto& e : *mst) {
      int a = index_of(e.a), b = index_of(e.b);
      // Mark whichever net direction carries the weight.
      if (g.net(a, b) > 0.0) black.insert({a, b});
      else black.insert({b, a});
    }
  }

  std::string out;
  out += "digraph groups {\n";
  out += "  node [style=filled, shape=circle, fontname=\"Helvetica\"];\n";
  for (int i = 0; i < n; ++i) {
    out += "  \"" + ingest::to_string(g.nodes[i]) + "\" [fillcolor=\"" +
           group_color(g.nodes[i]) + "\"];\n";
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b || !(g.net(a, b) > 0.0)) continue;
      bool spanning = black.count({a, b}) > 0;
      out += "  \"" + ingest::to_string(g.nodes[a]) + "\" -> \"" +
             ingest::to_string(g.nodes[b]) + "\" [label=\"" +
             fmt(g.net(a, b)) + "\", color=" +
             (spanning ? "black, penwidth=2" : "gray") + "];\n";
    }
  out += "}\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << text;
}

void write_stats_csv(const std::string& path,
                     const std::vector<ingest::StatsRow>& rows) {
  csv::Writer w(path);
  w.row({"code", "mean", "sd", "skewness", "kurtosis", "jarque_bera", "jb_p",
         "ar1", "n_obs"});
  for (const auto& r : rows) {
    w.row({r.code, fmt(r.mean), fmt(r.sd), fmt(r.skewness), fmt(r.kurtosis),
           fmt(r.jarque_bera), fmt(r.jb_p_value), fmt(r.ar1),
           std::to_string(r.n_obs)});
  }
}

void write_fits_csv(const std::string& path,
                    const std::vector<bekk::FittedPair>& fits) {
  csv::Writer w(path);
  w.row({"code_i",     "code_j", "converged", "loglik", "mu_i",   "mu_j",
         "phi_ii",     "phi_ij", "phi_ji",    "phi_jj", "c_ii",   "c_ij",
         "c_jj",       "a_ii",   "a_ij",      "a_ji",   "a_jj",   "b_ii",
         "b_ij",       "b_ji",   "b_jj",      "joint_stat", "joint_p",
         "dij_stat",   "dij_p",  "dji_stat",  "dji_p"});
  for (const auto& f : fits) {
    std::vector<std::string> row = {f.codes[0], f.codes[1],
                                    f.fit.converged ? "1" : "0",
                                    fmt(f.fit.loglik)};
    auto v = f.fit.params.to_vector();
    for (int k = 0; k < bekk::kNumParams; ++k) row.push_back(fmt(v(k)));
    for (const auto* t : {&f.tests.joint, &f.tests.dir_ij, &f.tests.dir_ji}) {
      row.push_back(fmt(t->statistic));
      row.push_back(fmt(t->p_value));
    }
    w.row(row);
  }
}

void write_network_json(const std::string& path,
                        const net::SpilloverNetwork& nw) {
  json doc;
  doc["period"] = {{"name", nw.period.name},
                   {"start", nw.period.start},
                   {"end", nw.period.end}};
  doc["nodes"] = nw.nodes;
  json edges = json::array();
  for (int i = 0; i < nw.n(); ++i)
    for (int j = 0; j < nw.n(); ++j)
      if (j != i && nw.has_edge(i, j)) {
        double s = nw.intensity(i, j);
        edges.push_back({{"from", nw.nodes[i]},
                         {"to", nw.nodes[j]},
                         {"w", jnum(s)},
                         {"s", jnum(s)}});
      }
  doc["edges"] = std::move(edges);
  write_text(path, doc.dump(2) + "\n");
}

void write_indicators_csv(const std::string& path,
                          const net::SpilloverNetwork& nw,
                          const std::vector<net::NodeIndicators>& nodes,
                          const centrality::ShellAssignment& shells,
                          const centrality::CentralityScores& wbc) {
  csv::Writer w(path);
  w.row({"code", "group", "O", "I", "ri", "toto", "tifo", "shell", "wbc"});
  for (int i = 0; i < nw.n(); ++i) {
    const auto& nd = nodes[i];
    w.row({nd.code, ingest::to_string(nd.group), fmt(nd.out_strength),
           fmt(nd.in_strength), fmt(nd.relative_influence), fmt(nd.toto),
           fmt(nd.tifo), std::to_string(shells.shell[i]), fmt(wbc.wbc[i])});
  }
}

namespace {

struct Spread {
  double mn = 0, md = 0, mx = 0;
};

Spread spread(const std::vector<double>& v) {
  Spread s;
  if (v.empty()) return s;
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.mn = *lo;
  s.mx = *hi;
  s.md = median(v);
  return s;
}

}  // namespace

void write_group_summary_csv(const std::string& path,
                             const net::SpilloverNetwork& nw,
                             const std::vector<net::NodeIndicators>& nodes,
                             const std::vector<net::GroupIndicators>& groups,
                             const centrality::CentralityScores& wbc) {
  csv::Writer w(path);
  w.row({"group",      "n",          "O_min",      "O_median",
         "O_max",      "toto_min",   "toto_median", "toto_max",
         "toto_share_pct", "I_min",  "I_median",   "I_max",
         "tifo_min",   "tifo_median", "tifo_max",  "tifo_share_pct",
         "ri_min",     "ri_median",  "ri_max",     "wbc_min",
         "wbc_median", "wbc_max"});
  for (const auto& g : groups) {
    std::vector<double> o, i, ri, bc;
    for (int k = 0; k < nw.n(); ++k) {
      if (nw.group_of(k) != g.group) continue;
      o.push_back(nodes[k].out_strength);
      i.push_back(nodes[k].in_strength);
      ri.push_back(nodes[k].relative_influence);
      bc.push_back(wbc.wbc[k]);
    }
    Spread so = spread(o), st = spread(g.toto), si = spread(i),
           sf = spread(g.tifo), sr = spread(ri), sb = spread(bc);
    w.row({ingest::to_string(g.group), std::to_string(g.codes.size()),
           fmt(so.mn), fmt(so.md), fmt(so.mx), fmt(st.mn), fmt(st.md),
           fmt(st.mx), fmt(g.toto_share_pct), fmt(si.mn), fmt(si.md),
           fmt(si.mx), fmt(sf.mn), fmt(sf.md), fmt(sf.mx),
           fmt(g.tifo_share_pct), fmt(sr.mn), fmt(sr.md), fmt(sr.mx),
           fmt(sb.mn), fmt(sb.md), fmt(sb.mx)});
  }
}

void write_group_matrix_csv(const std::string& path,
                            const net::SectorInfluenceMatrix& si) {
  csv::Writer w(path);
  w.row({"from", "to", "gross", "si", "paths"});
  const int g = static_cast<int>(si.groups.size());
  double gross_all = 0, gross_off = 0;
  long paths_all = 0, paths_off = 0;
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) {
      w.row({ingest::to_string(si.groups[a]), ingest::to_string(si.groups[b]),
             fmt(si.gross(a, b)), fmt(si.si(a, b)),
             std::to_string(si.path_counts(a, b))});
      gross_all += si.gross(a, b);
      paths_all += si.path_counts(a, b);
      if (a != b) {
        gross_off += si.gross(a, b);
        paths_off += si.path_counts(a, b);
      }
    }
  w.row({"Total", "with_diagonal", fmt(gross_all), "",
         std::to_string(paths_all)});
  w.row({"Total", "off_diagonal", fmt(gross_off), "",
         std::to_string(paths_off)});
}

void write_totals_csv(const std::string& path, const net::NetworkTotals& t) {
  csv::Writer w(path);
  w.row({"total_intensity", "total_paths"});
  w.row({fmt(t.total_intensity), std::to_string(t.total_paths)});
}

void write_major_paths_csv(const std::string& path,
                           const std::vector<paths::MajorPathSet>& sets) {
  csv::Writer w(path);
  w.row({"scope", "from", "to", "s", "rank"});
  for (const auto& set : sets) {
    for (const auto& e : set.edges) {
      w.row({set.scope.label(), e.from, e.to, fmt(e.s),
             std::to_string(e.rank)});
    }
  }
}

void write_emd_csv(const std::string& path, const emd::PeriodEmdTable& table) {
  csv::Writer w(path);
  std::vector<std::string> header = {"from"};
  for (const auto& pair : table.period_pairs)
    for (const auto& g : table.groups)
      header.push_back(pair + "_" + ingest::to_string(g));
  w.row(header);
  for (std::size_t a = 0; a < table.groups.size(); ++a) {
    std::vector<std::string> row = {ingest::to_string(table.groups[a])};
    for (std::size_t p = 0; p < table.period_pairs.size(); ++p)
      for (std::size_t b = 0; b < table.groups.size(); ++b) {
        const auto& cell = table.cells[p][a][b];
        row.push_back(cell.present ? fmt2(cell.value) : "");
      }
    w.row(row);
  }
}

}  // namespace spillnet::report
