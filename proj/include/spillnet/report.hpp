// Report artifact emission: CSV/JSON writers and DOT rendering.  All numbers
// are written with 6 significant digits (EMD percentages with 2 decimals) so
// that identical analyses produce identical bytes.
#pragma once

#include <string>
#include <vector>

#include "spillnet/centrality.hpp"
#include "spillnet/emd.hpp"
#include "spillnet/ingest.hpp"
#include "spillnet/network.hpp"
#include "spillnet/paths.hpp"

namespace spillnet::report {

// DOT rendering of the spillover network: nodes coloured by group and sized
// by out-strength, only the top edge_quantile share of edges by intensity.
std::string emit_dot(const net::SpilloverNetwork& nw,
                     double edge_quantile = 0.05);

// DOT rendering of the group net digraph; spanning edges (arborescence or
// undirected MST) are drawn black, remaining net edges gray.  Pass null when
// no spanning structure exists.
std::string emit_group_dot(const paths::GroupDigraph& g,
                           const paths::Arborescence* arb,
                           const std::vector<paths::UndirectedEdge>* mst);

void write_text(const std::string& path, const std::string& text);

void write_stats_csv(const std::string& path,
                     const std::vector<ingest::StatsRow>& rows);

void write_fits_csv(const std::string& path,
                    const std::vector<bekk::FittedPair>& fits);

void write_network_json(const std::string& path,
                        const net::SpilloverNetwork& nw);

// Per-node indicator rows merged with centrality results.
void write_indicators_csv(const std::string& path,
                          const net::SpilloverNetwork& nw,
                          const std::vector<net::NodeIndicators>& nodes,
                          const centrality::ShellAssignment& shells,
                          const centrality::CentralityScores& wbc);

// Group summary: per main group min/median/max of O, TOTO, I, TIFO, ri, wbc
// plus the TOTO/O and TIFO/I percentage shares.
void write_group_summary_csv(const std::string& path,
                             const net::SpilloverNetwork& nw,
                             const std::vector<net::NodeIndicators>& nodes,
                             const std::vector<net::GroupIndicators>& groups,
                             const centrality::CentralityScores& wbc);

// Long-format gross/SI/path-count matrix over the influence groups, with
// with-diagonal and off-diagonal totals appended.
void write_group_matrix_csv(const std::string& path,
                            const net::SectorInfluenceMatrix& si);

void write_totals_csv(const std::string& path, const net::NetworkTotals& t);

void write_major_paths_csv(const std::string& path,
                           const std::vector<paths::MajorPathSet>& sets);

// Table-shaped EMD matrix: one row per from-group, one column block per
// adjacent period pair, percent values with 2 decimals, absent cells empty.
void write_emd_csv(const std::string& path, const emd::PeriodEmdTable& table);

}  // namespace spillnet::report
