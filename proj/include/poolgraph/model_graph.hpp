#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "poolgraph/detectors.hpp"

namespace poolgraph {

/// Pairwise Spearman correlations of a batch's score vectors, zero diagonal.
struct CorrelationMatrix {
  std::size_t batch_index = 0;
  std::vector<ModelId> model_ids;
  std::vector<double> entries;          // row-major, model_ids.size() squared
  std::vector<ModelId> constant_models;  // score vectors with no rank variation

  std::size_t size() const { return model_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return entries[i * model_ids.size() + j]; }
};

struct Edge {
  std::size_t i = 0;  // node positions, i < j
  std::size_t j = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Undirected weighted model graph; one stored edge per connected pair, no self-loops.
struct ModelGraph {
  std::size_t batch_index = 0;
  std::vector<ModelId> nodes;  // ascending
  std::vector<Edge> edges;     // sorted by (i, j)

  std::size_t size() const { return nodes.size(); }
  /// Position of a model id in `nodes`; throws Error when absent.
  std::size_t index_of(ModelId id) const;
  /// Weighted degree of every node.
  std::vector<double> strengths() const;

  bool operator==(const ModelGraph&) const = default;
};

/// Throws Error on fewer than two vectors, vectors shorter than kMinBatchLength, or unequal lengths.
CorrelationMatrix spearman_corr(const ScoreSet& score_set);

/// One node per model, one edge per nonzero off-diagonal entry.
ModelGraph build_graph(const CorrelationMatrix& corr);

/// Negative weights clamped to zero and the resulting zero-weight edges removed.
ModelGraph positive_view(const ModelGraph& graph);

/// Subgraph on the given model ids (each must be a node of `graph`).
ModelGraph induced_subgraph(const ModelGraph& graph, std::span<const ModelId> ids);

/// "i j weight" per line, using model ids.
void write_edge_list(const ModelGraph& graph, std::ostream& out);

}  // namespace poolgraph
