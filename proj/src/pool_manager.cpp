#include "poolgraph/pool_manager.hpp"

#include <algorithm>
#include <tuple>

namespace poolgraph {

void PoolLedger::register_models(std::span<const ModelId> ids) {
  for (ModelId id : ids) {
    if (rep_counts.count(id)) throw Error("ledger already tracks model " + std::to_string(id));
    rep_counts[id] = 0;
    long_term[id] = std::nullopt;
  }
}

void PoolLedger::drop(std::span<const ModelId> ids) {
  for (ModelId id : ids) {
    rep_counts.erase(id);
    long_term.erase(id);
  }
}

bool PoolLedger::counters_zero() const {
  return std::all_of(rep_counts.begin(), rep_counts.end(),
                     [](const auto& kv) { return kv.second == 0; });
}

void record_representatives(PoolLedger& ledger, const RepresentativeSet& reps) {
  if (reps.members.empty()) throw Error("empty representative set");
  for (ModelId id : reps.members)
    if (!ledger.rep_counts.count(id))
      throw Error("representative " + std::to_string(id) + " is not tracked by the ledger");
  for (ModelId id : reps.members) ++ledger.rep_counts[id];
}

std::map<ModelId, double> short_term_scores(const PoolLedger& ledger) {
  std::map<ModelId, double> cs;
  if (ledger.rep_counts.empty()) return cs;
  std::uint64_t total = 0;
  for (const auto& [id, n] : ledger.rep_counts) total += n;
  const double uniform = 1.0 / static_cast<double>(ledger.rep_counts.size());
  for (const auto& [id, n] : ledger.rep_counts)
    cs[id] = total == 0 ? uniform : static_cast<double>(n) / static_cast<double>(total);
  return cs;
}

void update_long_term(PoolLedger& ledger, const std::map<ModelId, double>& cs) {
  for (auto& [id, score] : ledger.long_term) {
    const auto it = cs.find(id);
    if (it == cs.end()) throw Error("no short-term score for model " + std::to_string(id));
    score = score ? ledger.gamma * it->second + (1.0 - ledger.gamma) * *score : it->second;
  }
  for (auto& [id, n] : ledger.rep_counts) n = 0;
}

std::size_t n_exceed(std::size_t pool_size, std::size_t arch_count, std::size_t capacity) {
  return pool_size + arch_count > capacity ? pool_size + arch_count - capacity : 0;
}

std::vector<ModelId> prune(ModelPool& pool, PoolLedger& ledger, std::size_t count) {
  std::vector<std::pair<double, ModelId>> candidates;
  for (const auto& [id, score] : ledger.long_term)
    if (score && pool.find(id)) candidates.emplace_back(*score, id);
  std::sort(candidates.begin(), candidates.end());
  std::vector<ModelId> removed;
  for (std::size_t k = 0; k < std::min(count, candidates.size()); ++k)
    removed.push_back(candidates[k].second);
  std::sort(removed.begin(), removed.end());
  pool.remove(removed);
  ledger.drop(removed);
  return removed;
}

std::vector<ArchitectureSpec> reduce_newcomers(std::span<const ArchitectureSpec> arch_set,
                                               const ModelPool& pool, std::size_t count) {
  std::vector<ArchitectureSpec> kept(arch_set.begin(), arch_set.end());
  std::map<Family, std::size_t> members;
  for (const auto& m : pool.models()) ++members[m.spec.family];
  for (const auto& s : kept) ++members[s.family];
  for (std::size_t d = 0; d < count && !kept.empty(); ++d) {
    std::size_t drop = kept.size() - 1;
    for (std::size_t k = kept.size(); k-- > 0;)
      if (members[kept[k].family] > members[kept[drop].family]) drop = k;
    --members[kept[drop].family];
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return kept;
}

UpdateOutcome major_update(ModelPool& pool, PoolLedger& ledger,
                           std::span<const ArchitectureSpec> arch_set, const SeriesView& batch,
                           std::size_t batch_index, std::uint64_t run_seed) {
  UpdateOutcome out;
  out.kind = UpdateKind::major;
  out.short_term = short_term_scores(ledger);
  update_long_term(ledger, out.short_term);
  ledger.last_drift_batch = batch_index;

  const std::size_t excess = n_exceed(pool.size(), arch_set.size(), pool.capacity());
  out.pruned = prune(pool, ledger, excess);
  const std::size_t shortfall = excess - out.pruned.size();

  out.trained = pool.ids();
  train_scored(pool, out.trained, batch, batch_index);

  const auto specs = reduce_newcomers(arch_set, pool, shortfall);
  if (specs.empty()) return out;
  const ModelId first = pool.allocate_ids(specs.size());
  auto fresh = instantiate_and_train(specs, batch, run_seed, first, batch_index);
  for (const auto& m : fresh) out.added.push_back(m.id);
  pool.add(std::move(fresh));
  ledger.register_models(out.added);
  return out;
}

UpdateOutcome minor_update(ModelPool& pool, const RepresentativeSet& reps, const SeriesView& batch,
                           std::size_t batch_index) {
  UpdateOutcome out;
  out.kind = UpdateKind::minor;
  out.trained = reps.sorted_members();
  train_scored(pool, out.trained, batch, batch_index);
  return out;
}

}  // namespace poolgraph
