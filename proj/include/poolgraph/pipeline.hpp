#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poolgraph/community.hpp"
#include "poolgraph/detectors.hpp"
#include "poolgraph/drift.hpp"
#include "poolgraph/pool_manager.hpp"
#include "poolgraph/stream.hpp"

namespace poolgraph {

enum class AblationMode {
  full,
  single_community,  // one community holding every model
  centrality_only,   // alpha = 1
  pseudo_only,       // alpha = 0
  average_ensemble,  // every model is a representative
  single_best,       // one representative chosen from the whole graph
};

std::string_view mode_name(AblationMode mode);
AblationMode parse_mode(std::string_view name);
/// The five modes compared by an ablation run.
std::vector<AblationMode> ablation_modes();

enum class ThresholdPolicy { rolling_zscore, quantile };

std::string_view policy_name(ThresholdPolicy policy);
ThresholdPolicy parse_policy(std::string_view name);

struct ThresholdParams {
  double k = 3.0;             // rolling_zscore multiplier
  std::size_t window = 2048;  // history length
  double q = 0.99;            // quantile level
};

struct PipelineConfig {
  std::size_t batch_size = 512;
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.5;
  double theta_drift = 0.3;
  double resolution = 1.0;
  std::size_t capacity = 0;  // 0 selects ceil(2.5 * architecture count)
  double damping = 0.85;
  ThresholdPolicy threshold_policy = ThresholdPolicy::rolling_zscore;
  ThresholdParams threshold_params;
  std::uint64_t seed = 0;
  AblationMode mode = AblationMode::full;
  bool shuffle_louvain = false;  // seeded node order instead of ascending ids

  /// Throws Error on an out-of-range field.
  void validate() const;
  std::size_t effective_capacity(std::size_t arch_count) const;
};

/// Config variant for an ablation mode (alpha is pinned for the centrality/pseudo modes).
PipelineConfig ablation_mode(PipelineConfig config, AblationMode mode);

/// Binarizes final scores against a rolling history of earlier scores.
class Thresholder {
 public:
  Thresholder(ThresholdPolicy policy, ThresholdParams params);

  /// Flags scores against the history (or the scores themselves when the history is empty),
  /// then appends them to the history.
  std::vector<std::uint8_t> apply(std::span<const double> scores);
  std::size_t history_size() const { return history_.size(); }

 private:
  ThresholdPolicy policy_;
  ThresholdParams params_;
  std::deque<double> history_;
};

/// Stateless form used by tests: flags `scores` against `history`.
std::vector<std::uint8_t> threshold(std::span<const double> scores, ThresholdPolicy policy,
                                    const ThresholdParams& params,
                                    std::span<const double> history);

/// ROC-AUC over the whole run; nullopt when only one class is present.
std::optional<double> auc_metric(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels);

/// Total elapsed milliseconds divided by the step count.
double adt_metric(std::span<const double> elapsed_ms, std::size_t total_steps);

struct LedgerEntry {
  ModelId id = 0;
  std::uint64_t count = 0;
  std::optional<double> long_term;
};

struct BatchResult {
  std::size_t batch_index = 0;
  std::vector<double> s_final;
  std::vector<std::uint8_t> predictions;
  bool alarm = false;
  DriftScore drift;
  ModelGraph graph;  // signed correlation graph of this batch
  std::vector<std::vector<ModelId>> communities;
  std::vector<ModelId> representatives;  // ascending
  std::map<ModelId, double> combined_scores;
  UpdateOutcome update;
  std::vector<LedgerEntry> ledger_after;  // filled at major updates
  std::size_t pool_size = 0;               // after the update
  std::size_t pool_capacity = 0;
  double elapsed_ms = 0.0;
};

struct PoolMember {
  ModelId id = 0;
  std::string spec;
  std::size_t birth_batch = 0;
};

struct RunReport {
  std::string stream_name;
  PipelineConfig config;
  std::vector<BatchResult> batches;
  std::optional<double> auc;
  double adt_ms = 0.0;
  std::size_t scored_steps = 0;
  double total_elapsed_ms = 0.0;
  std::vector<std::size_t> drift_batches;
  std::vector<PoolMember> final_pool;

  std::vector<double> all_scores() const;
  double mean_communities() const;
  double mean_representatives() const;
};

/// Standardizes rows with running per-dimension statistics and prepends recent raw history
/// (standardized with the same statistics) as detector context.
class Preprocessor {
 public:
  Preprocessor(std::size_t dimension, std::size_t context);

  void observe(const Batch& batch);
  SeriesBuffer prepare(const Batch& batch) const;
  void remember(const Batch& batch);
  std::size_t context() const { return context_; }

 private:
  std::size_t dimension_;
  std::size_t context_;
  Standardizer standardizer_;
  std::deque<std::vector<double>> history_;
};

/// Largest context any architecture in the set needs.
std::size_t max_context(std::span<const ArchitectureSpec> arch_set, std::size_t dimension);

/// Online detector over a batched stream: train on the first batch, then test-then-train on
/// every later batch.
class Pipeline {
 public:
  Pipeline(std::vector<ArchitectureSpec> arch_set, PipelineConfig config, std::size_t dimension);

  /// Fits the standardizer and trains one model per architecture on the batch.
  void train_initial(const Batch& batch);
  /// Runs the full per-batch detection and update path.
  BatchResult process(const Batch& batch);

  const ModelPool& pool() const { return pool_; }
  const PoolLedger& ledger() const { return ledger_; }
  const PipelineConfig& config() const { return config_; }

 private:
  Partition partition_for(const ModelGraph& positive) const;

  std::vector<ArchitectureSpec> arch_set_;
  PipelineConfig config_;
  std::size_t dimension_;
  Preprocessor prep_;
  ModelPool pool_;
  PoolLedger ledger_;
  Thresholder thresholder_;
  std::optional<DriftState> previous_;
  bool trained_ = false;
};

using BatchObserver = std::function<void(const BatchResult&, const Pipeline&)>;

/// Algorithm driver over a whole stream. Requires at least two batches.
RunReport run(const LabeledStream& stream, const std::vector<ArchitectureSpec>& arch_set,
              const PipelineConfig& config, const BatchObserver& observer = {});

struct IndividualResult {
  std::string spec;
  std::optional<double> auc;
};

/// Each architecture alone: trained on the first batch, scored then updated on every later batch,
/// with the same preprocessing as the ensemble.
std::vector<IndividualResult> run_individuals(const LabeledStream& stream,
                                              const std::vector<ArchitectureSpec>& arch_set,
                                              const PipelineConfig& config);

/// One JSON object per line. `with_timing` false omits elapsed_ms.
void write_batch_jsonl(const BatchResult& result, std::ostream& out, bool with_timing = true);
void write_summary_json(const RunReport& report, std::ostream& out);
/// "t,index,score,prediction,label" rows for every scored step.
void write_scores_csv(const RunReport& report, const LabeledStream& stream, std::ostream& out);

}  // namespace poolgraph
