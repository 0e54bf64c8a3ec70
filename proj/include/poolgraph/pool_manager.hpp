#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "poolgraph/community.hpp"
#include "poolgraph/detectors.hpp"

namespace poolgraph {

/// Contribution bookkeeping for every pool model.
struct PoolLedger {
  std::map<ModelId, std::uint64_t> rep_counts;             // selections since the last drift
  std::map<ModelId, std::optional<double>> long_term;      // nullopt until the model's first drift
  std::optional<std::size_t> last_drift_batch;
  double gamma = 0.5;

  /// New entries with zero count and undefined long-term score.
  void register_models(std::span<const ModelId> ids);
  void drop(std::span<const ModelId> ids);
  bool counters_zero() const;
};

/// Increments the count of every representative. Throws Error on an empty set or an unknown id.
void record_representatives(PoolLedger& ledger, const RepresentativeSet& reps);

/// n_j / sum(n); uniform when every count is zero.
std::map<ModelId, double> short_term_scores(const PoolLedger& ledger);

/// Undefined scores take cs_j; defined ones move by gamma toward cs_j. Resets every counter.
void update_long_term(PoolLedger& ledger, const std::map<ModelId, double>& cs);

/// max(0, pool_size + arch_count - capacity).
std::size_t n_exceed(std::size_t pool_size, std::size_t arch_count, std::size_t capacity);

/// Removes up to `count` models with the smallest defined long-term score (ties to the lower
/// id). Models with undefined scores are exempt, so fewer may be removed. Returns the removed ids.
std::vector<ModelId> prune(ModelPool& pool, PoolLedger& ledger, std::size_t count);

/// Drops `count` specs, each time from the family with the most pool members plus remaining
/// newcomers (ties to the later spec).
std::vector<ArchitectureSpec> reduce_newcomers(std::span<const ArchitectureSpec> arch_set,
                                               const ModelPool& pool, std::size_t count);

enum class UpdateKind { major, minor };

struct UpdateOutcome {
  UpdateKind kind = UpdateKind::minor;
  std::vector<ModelId> pruned;
  std::vector<ModelId> added;
  std::vector<ModelId> trained;
  std::map<ModelId, double> short_term;  // major updates only
};

/// Drift response: short-term scores, long-term update with counter reset, pruning, training
/// of survivors on the batch, then one new trained model per (possibly reduced) architecture.
UpdateOutcome major_update(ModelPool& pool, PoolLedger& ledger,
                           std::span<const ArchitectureSpec> arch_set, const SeriesView& batch,
                           std::size_t batch_index, std::uint64_t run_seed);

/// Trains only the representatives on the batch.
UpdateOutcome minor_update(ModelPool& pool, const RepresentativeSet& reps, const SeriesView& batch,
                           std::size_t batch_index);

}  // namespace poolgraph
