#include "spillnet/network.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace spillnet::net {

namespace {
constexpr double kWeightFloor = 1e-12;
}

int SpilloverNetwork::edge_count() const {
  int count = 0;
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j)
      if (intensity(i, j) > 0.0) ++count;
  return count;
}

bool same_group(const SpilloverNetwork& net, int i, int j) {
  Group gi = net.group_of(i);
  return gi == net.group_of(j) && gi != Group::Ungrouped;
}

SpilloverNetwork build_network(const std::vector<bekk::FittedPair>& fits,
                               const SectorGrouping& grouping,
                               const PeriodSpec& period, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("build_network: significance level must be in (0,1)");

  std::set<std::string> code_set;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& fp : fits) {
    const auto& [ci, cj] = fp.codes;
    if (ci == cj) throw DataError("build_network: self pair " + ci);
    auto key = ci < cj ? std::make_pair(ci, cj) : std::make_pair(cj, ci);
    if (!seen.insert(key).second)
      throw DataError("build_network: duplicate pair " + ci + "," + cj);
    code_set.insert(ci);
    code_set.insert(cj);
  }
  for (const auto& code : code_set) {
    if (!grouping.entries.count(code))
      throw DataError("build_network: code " + code + " missing from grouping");
  }

  SpilloverNetwork net;
  net.nodes.assign(code_set.begin(), code_set.end());
  net.grouping = grouping;
  net.period = period;
  net.intensity = Eigen::MatrixXd::Zero(net.n(), net.n());

  std::map<std::string, int> index;
  for (int i = 0; i < net.n(); ++i) index[net.nodes[i]] = i;

  for (const auto& fp : fits) {
    if (!fp.fit.converged) continue;
    const int i = index[fp.codes[0]];
    const int j = index[fp.codes[1]];
    const bool joint = fp.tests.joint.p_value < level;
    if (!joint) continue;
    if (fp.tests.dir_ij.p_value < level) {
      double w = std::abs(fp.fit.params.a(0, 1)) +
                 std::abs(fp.fit.params.b(0, 1));
      if (w >= kWeightFloor) net.intensity(i, j) = w;
    }
    if (fp.tests.dir_ji.p_value < level) {
      double w = std::abs(fp.fit.params.a(1, 0)) +
                 std::abs(fp.fit.params.b(1, 0));
      if (w >= kWeightFloor) net.intensity(j, i) = w;
    }
  }
  return net;
}

std::vector<NodeIndicators> node_connectivity(const SpilloverNetwork& net) {
  const int n = net.n();
  std::vector<NodeIndicators> out(n);
  for (int i = 0; i < n; ++i) {
    NodeIndicators& ind = out[i];
    ind.code = net.nodes[i];
    ind.group = net.group_of(i);
    for (int j = 0; j < n; ++j) {
      double sout = net.intensity(i, j);
      double sin = net.intensity(j, i);
      ind.out_strength += sout;
      ind.in_strength += sin;
      if (!same_group(net, i, j)) {
        ind.toto += sout;
        ind.tifo += sin;
      }
    }
    double gross = ind.out_strength + ind.in_strength;
    ind.relative_influence =
        gross > 0.0 ? (ind.out_strength - ind.in_strength) / gross : 0.0;
  }
  return out;
}

std::vector<GroupIndicators> group_connectivity(const SpilloverNetwork& net) {
  auto nodes = node_connectivity(net);
  std::vector<GroupIndicators> out;
  for (Group g : ingest::kMainGroups) {
    GroupIndicators gi;
    gi.group = g;
    for (const auto& ind : nodes) {
      if (ind.group != g) continue;
      gi.codes.push_back(ind.code);
      gi.toto.push_back(ind.toto);
      gi.tifo.push_back(ind.tifo);
      gi.sum_toto += ind.toto;
      gi.sum_o += ind.out_strength;
      gi.sum_tifo += ind.tifo;
      gi.sum_i += ind.in_strength;
    }
    if (gi.codes.empty()) continue;
    gi.toto_share_pct = gi.sum_o > 0.0 ? 100.0 * gi.sum_toto / gi.sum_o : 0.0;
    gi.tifo_share_pct = gi.sum_i > 0.0 ? 100.0 * gi.sum_tifo / gi.sum_i : 0.0;
    out.push_back(std::move(gi));
  }
  return out;
}

SectorInfluenceMatrix sector_influence(const SpilloverNetwork& net) {
  std::vector<Group> groups;
  for (Group g : ingest::kAllGroups) {
    int size = 0;
    for (int i = 0; i < net.n(); ++i)
      if (net.group_of(i) == g) ++size;
    if (size > 0) groups.push_back(g);
  }
  if (groups.empty())
    throw DataError("sector_influence: network has no nodes");
  return sector_influence(net, groups);
}

SectorInfluenceMatrix sector_influence(const SpilloverNetwork& net,
                                       const std::vector<Group>& groups) {
  SectorInfluenceMatrix si;
  si.groups = groups;
  const int g = static_cast<int>(groups.size());
  si.group_sizes.assign(g, 0);
  std::vector<std::vector<int>> members(g);
  for (int m = 0; m < g; ++m) {
    for (int i = 0; i < net.n(); ++i) {
      if (net.group_of(i) == groups[m]) members[m].push_back(i);
    }
    si.group_sizes[m] = static_cast<int>(members[m].size());
    if (members[m].empty()) {
      throw DataError("sector_influence: group " +
                      ingest::to_string(groups[m]) + " is empty");
    }
  }

  si.gross = Eigen::MatrixXd::Zero(g, g);
  si.si = Eigen::MatrixXd::Zero(g, g);
  si.path_counts = Eigen::MatrixXi::Zero(g, g);
  for (int m = 0; m < g; ++m) {
    for (int nn = 0; nn < g; ++nn) {
      double sum = 0;
      int paths = 0;
      for (int i : members[m]) {
        for (int j : members[nn]) {
          double s = net.intensity(i, j);
          sum += s;
          if (s > 0.0) ++paths;
        }
      }
      si.gross(m, nn) = sum;
      si.path_counts(m, nn) = paths;
      si.si(m, nn) =
          sum / (static_cast<double>(si.group_sizes[m]) * si.group_sizes[nn]);
    }
  }
  return si;
}

NetworkTotals network_totals(const SpilloverNetwork& net) {
  NetworkTotals t;
  for (int i = 0; i < net.n(); ++i) {
    double row = 0;
    for (int j = 0; j < net.n(); ++j) {
      double s = net.intensity(i, j);
      row += s;
      if (s > 0.0) ++t.total_paths;
    }
    t.total_intensity += row;
  }
  return t;
}

}  // namespace spillnet::net
