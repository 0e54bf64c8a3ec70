#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "poolgraph/detectors.hpp"
#include "poolgraph/model_graph.hpp"

namespace poolgraph {

/// Disjoint, nonempty communities covering a graph's nodes. Members are ascending and
/// communities are ordered by their smallest member.
struct Partition {
  std::size_t batch_index = 0;
  std::vector<std::vector<ModelId>> communities;
  double resolution = 1.0;

  std::size_t size() const { return communities.size(); }
  std::vector<ModelId> ids() const;
  /// Community index for each id in `ids`, in the same order.
  std::vector<std::size_t> labels_for(std::span<const ModelId> ids) const;
  /// Throws Error unless the communities are disjoint, nonempty and cover the graph nodes.
  void validate(const ModelGraph& graph) const;
  /// Sorts members and orders communities canonically.
  void canonicalize();

  static Partition singletons(const ModelGraph& graph);
  static Partition whole(const ModelGraph& graph);

  bool operator==(const Partition&) const = default;
};

/// Weighted modularity with a resolution factor on the null-model term.
double modularity(const ModelGraph& graph, const Partition& partition, double resolution);

/// Multi-level Louvain modularity maximization on nonnegative weights. Nodes are visited in
/// ascending id order unless `shuffle` is set, in which case `seed` fixes the order.
Partition louvain(const ModelGraph& graph, double resolution, std::uint64_t seed = 0,
                  bool shuffle = false);

/// Weighted PageRank by power iteration, aligned with `graph.nodes`. Mass at nodes without
/// edges is redistributed uniformly. Throws Error when `max_iter` is reached.
std::vector<double> pagerank(const ModelGraph& graph, double damping = 0.85, double tol = 1e-12,
                             std::size_t max_iter = 10000);

/// Two-component one-dimensional Gaussian mixture fitted by EM.
struct GaussianMixture1D {
  double weight[2] = {0.5, 0.5};
  double mean[2] = {0.0, 0.0};
  double variance[2] = {1.0, 1.0};
  std::size_t iterations = 0;
  bool degenerate = false;

  /// 1 where the posterior of the higher-mean component exceeds 1/2; all zeros when degenerate.
  std::vector<std::uint8_t> binarize(std::span<const double> x) const;
};

GaussianMixture1D fit_gmm(std::span<const double> x);

struct PseudoLabels {
  std::size_t batch_index = 0;
  std::vector<std::uint8_t> labels;
};

/// Per-model GMM binarization followed by a strict-majority vote across models.
PseudoLabels pseudo_ground_truth(const ScoreSet& score_set);

/// ROC-AUC of scores against pseudo labels; 0.5 when the labels hold a single class.
double pseudo_performance(std::span<const double> scores, const PseudoLabels& pseudo);

struct RepresentativeSet {
  std::size_t batch_index = 0;
  std::vector<ModelId> members;  // members[c] represents community c
  std::map<ModelId, double> centrality;       // normalized within community
  std::map<ModelId, double> performance;      // pseudo-AUC
  std::map<ModelId, double> combined_scores;  // alpha * centrality + (1 - alpha) * performance

  std::vector<ModelId> sorted_members() const;
};

/// Picks the highest combined score per community (ties to the lower id). Centrality is
/// PageRank on the community's induced subgraph, min-max normalized within the community.
/// `pseudo` may be empty when alpha == 1 or every community is a singleton.
RepresentativeSet select_representatives(const ModelGraph& graph, const Partition& partition,
                                         const ScoreSet& score_set, const PseudoLabels& pseudo,
                                         double alpha, double damping = 0.85);

struct EnsembleScore {
  std::size_t batch_index = 0;
  std::vector<double> scores;
};

/// Population z-normalization; constant vectors map to zeros.
std::vector<double> z_normalize(std::span<const double> v);

/// Equal-weight average of the representatives' z-normalized scores, summed in ascending id order.
EnsembleScore ensemble(const RepresentativeSet& reps, const ScoreSet& score_set);

}  // namespace poolgraph
