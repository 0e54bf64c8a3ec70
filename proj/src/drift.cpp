#include "poolgraph/drift.hpp"

#include <algorithm>
#include <numeric>

#include "poolgraph/rank_stats.hpp"

namespace poolgraph {

CentralityRanking centrality_ranking(const ModelGraph& graph, double damping) {
  if (graph.size() == 0) throw Error("centrality ranking of an empty graph");
  const auto pr = pagerank(positive_view(graph), damping);
  std::vector<std::size_t> order(pr.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pr[a] > pr[b]; });
  // Group near-equal values and order each group by id (positions follow ascending id).
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    const double head = pr[order[start]];
    while (end < order.size() && head - pr[order[end]] <= 1e-12 * head) ++end;
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(start),
              order.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
  }
  CentralityRanking out;
  out.batch_index = graph.batch_index;
  for (std::size_t r = 0; r < order.size(); ++r) out.ranking[graph.nodes[order[r]]] = r + 1;
  return out;
}

std::optional<double> centrality_drift(const CentralityRanking& prev, const CentralityRanking& cur) {
  std::vector<double> a, b;
  for (const auto& [id, rank] : prev.ranking) {
    const auto it = cur.ranking.find(id);
    if (it == cur.ranking.end()) continue;
    a.push_back(static_cast<double>(rank));
    b.push_back(static_cast<double>(it->second));
  }
  if (a.size() < 2) return std::nullopt;
  const auto tau = stats::kendall_tau_b(a, b);
  if (!tau) return std::nullopt;
  return std::clamp((1.0 - *tau) / 2.0, 0.0, 1.0);
}

std::optional<double> community_drift(const Partition& prev, const Partition& cur) {
  const auto prev_ids = prev.ids();
  const auto cur_ids = cur.ids();
  std::vector<ModelId> common;
  std::set_intersection(prev_ids.begin(), prev_ids.end(), cur_ids.begin(), cur_ids.end(),
                        std::back_inserter(common));
  if (common.size() < 2) return std::nullopt;
  const auto a = prev.labels_for(common);
  const auto b = cur.labels_for(common);
  return std::clamp(1.0 - stats::normalized_mutual_information(a, b), 0.0, 1.0);
}

DriftScore drift_score(double d_comm, double d_cent, double beta, double theta,
                       std::size_t batch_index) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must lie in [0, 1]");
  if (!(d_comm >= 0.0 && d_comm <= 1.0 && d_cent >= 0.0 && d_cent <= 1.0))
    throw Error("drift components must lie in [0, 1]");
  DriftScore s;
  s.batch_index = batch_index;
  s.d_comm = d_comm;
  s.d_cent = d_cent;
  s.combined = beta * d_comm + (1.0 - beta) * d_cent;
  s.drifted = s.combined > theta;
  return s;
}

DriftScore detect_drift(const std::optional<DriftState>& prev, const DriftState& cur, double beta,
                        double theta) {
  const std::size_t t = cur.ranking.batch_index;
  if (!prev) return drift_score(0.0, 0.0, beta, theta, t);
  const double d_cent = centrality_drift(prev->ranking, cur.ranking).value_or(1.0);
  const double d_comm = community_drift(prev->partition, cur.partition).value_or(1.0);
  return drift_score(d_comm, d_cent, beta, theta, t);
}

}  // namespace poolgraph
