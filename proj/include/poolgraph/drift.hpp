#pragma once

#include <cstddef>
#include <map>
#include <optional>

#include "poolgraph/community.hpp"
#include "poolgraph/model_graph.hpp"

namespace poolgraph {

/// Whole-graph centrality ranking: rank 1 is the most central model.
struct CentralityRanking {
  std::size_t batch_index = 0;
  std::map<ModelId, std::size_t> ranking;
};

/// PageRank on the positive view, sorted descending. Values equal up to 1e-12 (relative)
/// count as tied and are ordered by model id.
CentralityRanking centrality_ranking(const ModelGraph& graph, double damping = 0.85);

/// (1 - Kendall tau-b) / 2 over the common model ids; nullopt when fewer than two are shared.
std::optional<double> centrality_drift(const CentralityRanking& prev, const CentralityRanking& cur);

/// 1 - NMI of the two partitions restricted to their common ids; nullopt when fewer than two
/// are shared.
std::optional<double> community_drift(const Partition& prev, const Partition& cur);

struct DriftScore {
  std::size_t batch_index = 0;
  double d_cent = 0.0;
  double d_comm = 0.0;
  double combined = 0.0;
  bool drifted = false;
};

/// combined = beta * d_comm + (1 - beta) * d_cent; drifted when combined > theta.
DriftScore drift_score(double d_comm, double d_cent, double beta, double theta,
                       std::size_t batch_index = 0);

/// Graph state carried between batches for drift comparison.
struct DriftState {
  CentralityRanking ranking;
  Partition partition;
};

/// Drift between consecutive batches. No previous state gives a zero score; an incomparable
/// measure (too few shared models) counts as maximal drift.
DriftScore detect_drift(const std::optional<DriftState>& prev, const DriftState& cur, double beta,
                        double theta);

}  // namespace poolgraph
