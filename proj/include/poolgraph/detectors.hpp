#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poolgraph/stream.hpp"

namespace poolgraph {

using ModelId = std::uint32_t;

// ---------------------------------------------------------------------------
// Architecture set
// ---------------------------------------------------------------------------

enum class Family { loda, zscore, ar_residual, pca, knn };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

struct ParamSchema {
  std::string name;
  double default_value;
  double min;
  double max;
  bool integer;
};

/// Declared hyperparameters of a family, in canonical order.
const std::vector<ParamSchema>& family_schema(Family family);

/// An algorithm plus a hyperparameter configuration; not yet a trained model.
struct ArchitectureSpec {
  Family family = Family::zscore;
  std::map<std::string, double> hyperparams;

  /// Value of a declared parameter, falling back to its schema default.
  double param(const std::string& name) const;
  /// Throws Error on an unknown parameter, a value out of range or a non-integer where one is required.
  void validate() const;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// "family key=value ..." with every schema parameter written out.
std::string format_spec(const ArchitectureSpec& spec);
ArchitectureSpec parse_spec(std::string_view line);

/// Built-in architecture set: 12 configurations over 5 detector families.
std::vector<ArchitectureSpec> builtin_arch_set();

// ---------------------------------------------------------------------------
// Input views
// ---------------------------------------------------------------------------

/// Row-major view of a batch preceded by `context` history rows. Row indices are relative
/// to the first batch row, so history rows have negative indices.
class SeriesView {
 public:
  SeriesView() = default;
  SeriesView(std::span<const double> data, std::size_t dim, std::size_t context);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::size_t context() const { return context_; }
  bool empty() const { return rows_ == 0; }

  /// Row i in [-context, rows); earlier indices clamp to the oldest available row.
  std::span<const double> row(std::ptrdiff_t i) const;
  /// Concatenation of the `window` rows ending at row i, oldest first.
  void lag_vector(std::ptrdiff_t i, std::size_t window, std::span<double> out) const;

 private:
  std::span<const double> data_;
  std::size_t dim_ = 0;
  std::size_t context_ = 0;
  std::size_t rows_ = 0;
};

/// Owning counterpart of SeriesView.
struct SeriesBuffer {
  std::vector<double> data;
  std::size_t dim = 0;
  std::size_t context = 0;

  SeriesView view() const { return SeriesView(data, dim, context); }
  /// Raw batch values without history.
  static SeriesBuffer from_batch(const Batch& batch);
};

// ---------------------------------------------------------------------------
// Detector contract
// ---------------------------------------------------------------------------

/// Incremental hash used to fingerprint learned state.
class StateHasher {
 public:
  void add(double v);
  void add(std::uint64_t v);
  void add(std::span<const double> v) {
    for (double x : v) add(x);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

/// An online anomaly detector. Scores are "higher = more anomalous", one per batch row.
class Detector {
 public:
  virtual ~Detector() = default;

  /// Scores every batch row. Must not change learned state.
  virtual std::vector<double> score(const SeriesView& batch) const = 0;
  /// Incorporates the batch into the learned state. First call acts as initial training.
  virtual void update(const SeriesView& batch) = 0;

  /// History rows needed to form an input at the first batch row.
  virtual std::size_t context_length() const = 0;
  /// Minimum rows (history + batch) for initial training.
  virtual std::size_t warmup() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::uint64_t state_hash() const = 0;
  virtual std::unique_ptr<Detector> clone() const = 0;
};

std::unique_ptr<Detector> make_detector(const ArchitectureSpec& spec, std::size_t dimension,
                                        std::uint64_t seed);

/// Per-model seed derived from the run seed and model id.
std::uint64_t model_seed(std::uint64_t run_seed, ModelId id);

// ---------------------------------------------------------------------------
// Models and pool
// ---------------------------------------------------------------------------

struct ModelInstance {
  ModelId id = 0;
  ArchitectureSpec spec;
  std::unique_ptr<Detector> detector;
  std::size_t birth_batch = 0;

  ModelInstance() = default;
  ModelInstance(ModelId id, ArchitectureSpec spec, std::unique_ptr<Detector> detector,
                std::size_t birth_batch)
      : id(id), spec(std::move(spec)), detector(std::move(detector)), birth_batch(birth_batch) {}
  ModelInstance(const ModelInstance& other);
  ModelInstance& operator=(const ModelInstance& other);
  ModelInstance(ModelInstance&&) noexcept = default;
  ModelInstance& operator=(ModelInstance&&) noexcept = default;
};

struct ScoreVector {
  ModelId model_id = 0;
  std::vector<double> scores;
};

struct ScoreSet {
  std::size_t batch_index = 0;
  std::vector<ScoreVector> vectors;  // ascending model id

  const ScoreVector* find(ModelId id) const;
  const ScoreVector& at(ModelId id) const;
  std::size_t length() const { return vectors.empty() ? 0 : vectors.front().scores.size(); }
  std::vector<ModelId> ids() const;
};

/// Capacity-bounded collection of models, kept in ascending id order.
class ModelPool {
 public:
  explicit ModelPool(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return models_.size(); }
  const std::vector<ModelInstance>& models() const { return models_; }
  std::vector<ModelId> ids() const;

  ModelInstance* find(ModelId id);
  const ModelInstance* find(ModelId id) const;
  ModelInstance& at(ModelId id);

  /// Appends models; ids must exceed every id already present.
  void add(std::vector<ModelInstance> models);
  void remove(std::span<const ModelId> ids);

  ModelId next_id() const { return next_id_; }
  ModelId allocate_ids(std::size_t count);

  /// Prequential bookkeeping: the batch most recently scored by score_pool.
  std::optional<std::size_t> scored_batch() const { return scored_batch_; }
  void mark_scored(std::size_t batch_index) { scored_batch_ = batch_index; }

 private:
  std::size_t capacity_;
  std::vector<ModelInstance> models_;
  ModelId next_id_ = 0;
  std::optional<std::size_t> scored_batch_;
};

/// One trained model per spec, with consecutive ids starting at `first_id`.
std::vector<ModelInstance> instantiate_and_train(std::span<const ArchitectureSpec> arch_set,
                                                 const SeriesView& batch, std::uint64_t run_seed,
                                                 ModelId first_id, std::size_t birth_batch = 0);

/// Scores every pool model on the batch and records the batch as scored.
ScoreSet score_pool(ModelPool& pool, const SeriesView& batch, std::size_t batch_index);

void update_model(ModelInstance& model, const SeriesView& batch);

/// Updates the listed models on a batch that has already been scored (test-then-train).
/// Throws Error when the pool has not scored `batch_index`.
void train_scored(ModelPool& pool, std::span<const ModelId> ids, const SeriesView& batch,
                  std::size_t batch_index);

}  // namespace poolgraph
