#include "poolgraph/model_graph.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <tuple>

#include "poolgraph/rank_stats.hpp"

namespace poolgraph {

std::size_t ModelGraph::index_of(ModelId id) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  if (it == nodes.end() || *it != id)
    throw Error("model " + std::to_string(id) + " is not a graph node");
  return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<double> ModelGraph::strengths() const {
  std::vector<double> s(nodes.size(), 0.0);
  for (const auto& e : edges) {
    s[e.i] += e.weight;
    s[e.j] += e.weight;
  }
  return s;
}

CorrelationMatrix spearman_corr(const ScoreSet& score_set) {
  const std::size_t m = score_set.vectors.size();
  if (m < 2) throw Error("correlation needs at least two score vectors");
  const std::size_t len = score_set.length();
  for (const auto& v : score_set.vectors)
    if (v.scores.size() != len) throw Error("score vectors of unequal length");
  if (len < kMinBatchLength)
    throw Error("score vectors shorter than " + std::to_string(kMinBatchLength));

  CorrelationMatrix corr;
  corr.batch_index = score_set.batch_index;
  corr.model_ids = score_set.ids();
  corr.entries.assign(m * m, 0.0);

  std::vector<std::vector<double>> ranks(m);
  for (std::size_t i = 0; i < m; ++i) {
    ranks[i] = stats::average_ranks(score_set.vectors[i].scores);
    const auto [lo, hi] = std::minmax_element(ranks[i].begin(), ranks[i].end());
    if (*lo == *hi) corr.constant_models.push_back(corr.model_ids[i]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double rho = stats::pearson(ranks[i], ranks[j]);
      corr.entries[i * m + j] = rho;
      corr.entries[j * m + i] = rho;
    }
  }
  return corr;
}

ModelGraph build_graph(const CorrelationMatrix& corr) {
  ModelGraph g;
  g.batch_index = corr.batch_index;
  g.nodes = corr.model_ids;
  if (!std::is_sorted(g.nodes.begin(), g.nodes.end()))
    throw Error("correlation matrix model ids must be ascending");
  const std::size_t m = corr.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (const double w = corr.at(i, j); w != 0.0) g.edges.push_back({i, j, w});
  return g;
}

ModelGraph positive_view(const ModelGraph& graph) {
  ModelGraph g;
  g.batch_index = graph.batch_index;
  g.nodes = graph.nodes;
  for (const auto& e : graph.edges)
    if (e.weight > 0.0) g.edges.push_back(e);
  return g;
}

ModelGraph induced_subgraph(const ModelGraph& graph, std::span<const ModelId> ids) {
  ModelGraph g;
  g.batch_index = graph.batch_index;
  g.nodes.assign(ids.begin(), ids.end());
  std::sort(g.nodes.begin(), g.nodes.end());
  std::vector<std::ptrdiff_t> remap(graph.size(), -1);
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    remap[graph.index_of(g.nodes[k])] = static_cast<std::ptrdiff_t>(k);
  for (const auto& e : graph.edges) {
    if (remap[e.i] < 0 || remap[e.j] < 0) continue;
    auto a = static_cast<std::size_t>(remap[e.i]);
    auto b = static_cast<std::size_t>(remap[e.j]);
    if (a > b) std::swap(a, b);
    g.edges.push_back({a, b, e.weight});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  return g;
}

void write_edge_list(const ModelGraph& graph, std::ostream& out) {
  const auto old = out.precision(17);
  for (const auto& e : graph.edges)
    out << graph.nodes[e.i] << ' ' << graph.nodes[e.j] << ' ' << e.weight << '\n';
  out.precision(old);
}

}  // namespace poolgraph
