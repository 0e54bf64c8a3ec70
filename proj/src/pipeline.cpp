#include "poolgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "poolgraph/model_graph.hpp"
#include "poolgraph/rank_stats.hpp"

namespace poolgraph {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Names and configuration
// ---------------------------------------------------------------------------

namespace {

struct ModeName {
  AblationMode mode;
  std::string_view name;
};

constexpr ModeName kModes[] = {
    {AblationMode::full, "full"},
    {AblationMode::single_community, "single_community"},
    {AblationMode::centrality_only, "centrality_only"},
    {AblationMode::pseudo_only, "pseudo_only"},
    {AblationMode::average_ensemble, "average_ensemble"},
    {AblationMode::single_best, "single_best"},
};

}  // namespace

std::string_view mode_name(AblationMode mode) {
  for (const auto& m : kModes)
    if (m.mode == mode) return m.name;
  throw Error("unknown ablation mode");
}

AblationMode parse_mode(std::string_view name) {
  for (const auto& m : kModes)
    if (m.name == name) return m.mode;
  throw Error("unknown ablation mode '" + std::string(name) + "'");
}

std::vector<AblationMode> ablation_modes() {
  return {AblationMode::full, AblationMode::single_community, AblationMode::centrality_only,
          AblationMode::pseudo_only, AblationMode::average_ensemble};
}

std::string_view policy_name(ThresholdPolicy policy) {
  return policy == ThresholdPolicy::quantile ? "quantile" : "rolling_zscore";
}

ThresholdPolicy parse_policy(std::string_view name) {
  if (name == "rolling_zscore") return ThresholdPolicy::rolling_zscore;
  if (name == "quantile") return ThresholdPolicy::quantile;
  throw Error("unknown threshold policy '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(name) + " must lie in [0, 1]");
  };
  unit(alpha, "alpha");
  unit(beta, "beta");
  unit(gamma, "gamma");
  if (!(theta_drift > 0.0 && theta_drift <= 1.0)) throw Error("theta_drift must lie in (0, 1]");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw Error("resolution must be positive");
  if (!(damping > 0.0 && damping < 1.0)) throw Error("damping must lie in (0, 1)");
  if (batch_size < kMinBatchLength)
    throw Error("batch_size must be at least " + std::to_string(kMinBatchLength));
  if (!(threshold_params.k >= 0.0)) throw Error("threshold k must be nonnegative");
  if (threshold_params.window == 0) throw Error("threshold window must be positive");
  if (!(threshold_params.q > 0.0 && threshold_params.q < 1.0))
    throw Error("threshold q must lie in (0, 1)");
}

std::size_t PipelineConfig::effective_capacity(std::size_t arch_count) const {
  if (capacity != 0) return capacity;
  return (5 * arch_count + 1) / 2;  // ceil(2.5 * count)
}

PipelineConfig ablation_mode(PipelineConfig config, AblationMode mode) {
  config.mode = mode;
  if (mode == AblationMode::centrality_only) config.alpha = 1.0;
  if (mode == AblationMode::pseudo_only) config.alpha = 0.0;
  return config;
}

// ---------------------------------------------------------------------------
// Thresholding and metrics
// ---------------------------------------------------------------------------

namespace {

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<std::uint8_t> threshold(std::span<const double> scores, ThresholdPolicy policy,
                                    const ThresholdParams& params,
                                    std::span<const double> history) {
  const auto ref = history.empty() ? scores : history;
  std::vector<std::uint8_t> out(scores.size(), 0);
  if (ref.empty()) return out;
  double cut = 0.0;
  if (policy == ThresholdPolicy::rolling_zscore) {
    const double mu = stats::mean(ref);
    const double sd = stats::stddev(ref);
    cut = sd > 0.0 ? mu + params.k * sd : mu;
  } else {
    cut = quantile_of(std::vector<double>(ref.begin(), ref.end()), params.q);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > cut ? 1 : 0;
  return out;
}

Thresholder::Thresholder(ThresholdPolicy policy, ThresholdParams params)
    : policy_(policy), params_(params) {}

std::vector<std::uint8_t> Thresholder::apply(std::span<const double> scores) {
  const std::vector<double> hist(history_.begin(), history_.end());
  auto flags = threshold(scores, policy_, params_, hist);
  for (double s : scores) history_.push_back(s);
  while (history_.size() > params_.window) history_.pop_front();
  return flags;
}

std::optional<double> auc_metric(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error("auc: score and label lengths differ");
  return stats::roc_auc(scores, labels);
}

double adt_metric(std::span<const double> elapsed_ms, std::size_t total_steps) {
  if (total_steps == 0) throw Error("adt needs at least one time step");
  return std::accumulate(elapsed_ms.begin(), elapsed_ms.end(), 0.0) /
         static_cast<double>(total_steps);
}

std::vector<double> RunReport::all_scores() const {
  std::vector<double> out;
  for (const auto& b : batches) out.insert(out.end(), b.s_final.begin(), b.s_final.end());
  return out;
}

double RunReport::mean_communities() const {
  if (batches.empty()) return 0.0;
  double total = 0.0;
  for (const auto& b : batches) total += static_cast<double>(b.communities.size());
  return total / static_cast<double>(batches.size());
}

double RunReport::mean_representatives() const {
  if (batches.empty()) return 0.0;
  double total = 0.0;
  for (const auto& b : batches) total += static_cast<double>(b.representatives.size());
  return total / static_cast<double>(batches.size());
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

Preprocessor::Preprocessor(std::size_t dimension, std::size_t context)
    : dimension_(dimension), context_(context), standardizer_(dimension) {}

void Preprocessor::observe(const Batch& batch) {
  for (const auto& p : batch.points) standardizer_.observe(p.values);
}

SeriesBuffer Preprocessor::prepare(const Batch& batch) const {
  if (batch.dimension() != dimension_) throw Error("batch dimension does not match the stream");
  SeriesBuffer buf;
  buf.dim = dimension_;
  buf.context = history_.size();
  buf.data.resize((history_.size() + batch.size()) * dimension_);
  std::size_t r = 0;
  auto put = [&](const std::vector<double>& row) {
    standardizer_.transform(row, std::span<double>(buf.data.data() + r * dimension_, dimension_));
    ++r;
  };
  for (const auto& row : history_) put(row);
  for (const auto& p : batch.points) put(p.values);
  return buf;
}

void Preprocessor::remember(const Batch& batch) {
  for (const auto& p : batch.points) history_.push_back(p.values);
  while (history_.size() > context_) history_.pop_front();
}

std::size_t max_context(std::span<const ArchitectureSpec> arch_set, std::size_t dimension) {
  std::size_t c = 0;
  for (const auto& spec : arch_set) c = std::max(c, make_detector(spec, dimension, 0)->context_length());
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::vector<ArchitectureSpec> arch_set, PipelineConfig config,
                   std::size_t dimension)
    : arch_set_(std::move(arch_set)),
      config_(config),
      dimension_(dimension),
      prep_(dimension, max_context(arch_set_, dimension)),
      pool_(config.effective_capacity(arch_set_.size())),
      thresholder_(config.threshold_policy, config.threshold_params) {
  config_.validate();
  if (arch_set_.size() < 2) throw Error("the architecture set needs at least two entries");
  if (pool_.capacity() < arch_set_.size())
    throw Error("capacity is smaller than the architecture set");
  for (const auto& spec : arch_set_) spec.validate();
  ledger_.gamma = config_.gamma;
}

void Pipeline::train_initial(const Batch& batch) {
  if (trained_) throw Error("initial training already done");
  prep_.observe(batch);
  const auto buf = prep_.prepare(batch);
  const ModelId first = pool_.allocate_ids(arch_set_.size());
  auto models = instantiate_and_train(arch_set_, buf.view(), config_.seed, first, batch.batch_index);
  pool_.add(std::move(models));
  ledger_.register_models(pool_.ids());
  prep_.remember(batch);
  trained_ = true;
}

Partition Pipeline::partition_for(const ModelGraph& positive) const {
  switch (config_.mode) {
    case AblationMode::single_community:
    case AblationMode::single_best:
      return Partition::whole(positive);
    case AblationMode::average_ensemble:
      return Partition::singletons(positive);
    default:
      return louvain(positive, config_.resolution, config_.seed ^ positive.batch_index,
                     config_.shuffle_louvain);
  }
}

BatchResult Pipeline::process(const Batch& batch) {
  if (!trained_) throw Error("process called before initial training");
  const std::size_t t = batch.batch_index;
  const auto start = std::chrono::steady_clock::now();

  const auto buf = prep_.prepare(batch);
  const auto view = buf.view();
  const auto scores = score_pool(pool_, view, t);

  const auto graph = build_graph(spearman_corr(scores));
  const auto positive = positive_view(graph);
  const auto partition = partition_for(positive);

  const bool needs_pseudo =
      config_.alpha < 1.0 &&
      std::any_of(partition.communities.begin(), partition.communities.end(),
                  [](const auto& c) { return c.size() > 1; });
  const PseudoLabels pseudo = needs_pseudo ? pseudo_ground_truth(scores) : PseudoLabels{t, {}};
  const auto reps =
      select_representatives(positive, partition, scores, pseudo, config_.alpha, config_.damping);
  auto final_scores = ensemble(reps, scores);

  DriftState current{centrality_ranking(positive, config_.damping), partition};
  const auto drift = detect_drift(previous_, current, config_.beta, config_.theta_drift);

  BatchResult result;
  result.batch_index = t;
  if (drift.drifted) {
    result.update = major_update(pool_, ledger_, arch_set_, view, t, config_.seed);
    for (const auto& [id, n] : ledger_.rep_counts)
      result.ledger_after.push_back({id, n, ledger_.long_term.at(id)});
  } else {
    record_representatives(ledger_, reps);
    result.update = minor_update(pool_, reps, view, t);
  }
  previous_ = std::move(current);

  result.predictions = thresholder_.apply(final_scores.scores);
  result.alarm = std::any_of(result.predictions.begin(), result.predictions.end(),
                             [](std::uint8_t p) { return p != 0; });
  prep_.observe(batch);
  prep_.remember(batch);
  const auto stop = std::chrono::steady_clock::now();

  result.s_final = std::move(final_scores.scores);
  result.drift = drift;
  result.graph = graph;
  result.communities = partition.communities;
  result.representatives = reps.sorted_members();
  result.combined_scores = reps.combined_scores;
  result.pool_size = pool_.size();
  result.pool_capacity = pool_.capacity();
  result.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return result;
}

namespace {

std::vector<std::uint8_t> scored_labels(const std::vector<Batch>& batches) {
  std::vector<std::uint8_t> labels;
  for (std::size_t b = 1; b < batches.size(); ++b)
    for (const auto& p : batches[b].points) {
      if (!p.label) return {};
      labels.push_back(*p.label);
    }
  return labels;
}

std::vector<Batch> checked_batches(const LabeledStream& stream, const PipelineConfig& config) {
  config.validate();
  stream.validate();
  auto batches = batch_iter(stream, config.batch_size);
  if (batches.size() < 2)
    throw Error("the stream must hold at least two batches (initial training plus one scored)");
  return batches;
}

}  // namespace

RunReport run(const LabeledStream& stream, const std::vector<ArchitectureSpec>& arch_set,
              const PipelineConfig& config, const BatchObserver& observer) {
  const auto batches = checked_batches(stream, config);
  Pipeline pipeline(arch_set, config, stream.dimension);
  pipeline.train_initial(batches.front());

  RunReport report;
  report.stream_name = stream.name;
  report.config = config;
  std::vector<double> elapsed;
  for (std::size_t b = 1; b < batches.size(); ++b) {
    BatchResult r;
    try {
      r = pipeline.process(batches[b]);
    } catch (const Error& e) {
      throw Error("batch " + std::to_string(b) + ": " + e.what());
    }
    if (r.pool_size > r.pool_capacity)
      throw Error("batch " + std::to_string(b) + ": pool exceeds its capacity");
    if (observer) observer(r, pipeline);
    elapsed.push_back(r.elapsed_ms);
    report.scored_steps += r.s_final.size();
    if (r.update.kind == UpdateKind::major) report.drift_batches.push_back(r.batch_index);
    report.batches.push_back(std::move(r));
  }
  report.total_elapsed_ms = std::accumulate(elapsed.begin(), elapsed.end(), 0.0);
  report.adt_ms = adt_metric(elapsed, report.scored_steps);
  const auto labels = scored_labels(batches);
  if (!labels.empty()) report.auc = auc_metric(report.all_scores(), labels);
  for (const auto& m : pipeline.pool().models())
    report.final_pool.push_back({m.id, format_spec(m.spec), m.birth_batch});
  return report;
}

std::vector<IndividualResult> run_individuals(const LabeledStream& stream,
                                              const std::vector<ArchitectureSpec>& arch_set,
                                              const PipelineConfig& config) {
  const auto batches = checked_batches(stream, config);
  const auto labels = scored_labels(batches);
  std::vector<IndividualResult> out;
  for (std::size_t a = 0; a < arch_set.size(); ++a) {
    Preprocessor prep(stream.dimension, max_context(std::span(&arch_set[a], 1), stream.dimension));
    prep.observe(batches.front());
    ModelPool pool(1);
    pool.add(instantiate_and_train(std::span(&arch_set[a], 1),
                                   prep.prepare(batches.front()).view(), config.seed,
                                   static_cast<ModelId>(a)));
    prep.remember(batches.front());
    const ModelId id = pool.ids().front();
    std::vector<double> all;
    for (std::size_t b = 1; b < batches.size(); ++b) {
      const auto buf = prep.prepare(batches[b]);
      const auto set = score_pool(pool, buf.view(), b);
      const auto& s = set.at(id).scores;
      all.insert(all.end(), s.begin(), s.end());
      train_scored(pool, std::span(&id, 1), buf.view(), b);
      prep.observe(batches[b]);
      prep.remember(batches[b]);
    }
    IndividualResult r;
    r.spec = format_spec(arch_set[a]);
    if (!labels.empty()) r.auc = auc_metric(all, labels);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json ledger_json(const std::vector<LedgerEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j{{"id", e.id}, {"count", e.count}};
    j["long_term"] = e.long_term ? json(*e.long_term) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

void write_batch_jsonl(const BatchResult& r, std::ostream& out, bool with_timing) {
  json j;
  j["t"] = r.batch_index;
  j["d_cent"] = r.drift.d_cent;
  j["d_comm"] = r.drift.d_comm;
  j["D"] = r.drift.combined;
  j["drifted"] = r.drift.drifted;
  std::vector<std::size_t> sizes;
  for (const auto& c : r.communities) sizes.push_back(c.size());
  j["partition_sizes"] = sizes;
  j["communities"] = r.communities;
  j["representatives"] = r.representatives;
  json h = json::object();
  for (const auto& [id, v] : r.combined_scores) h[std::to_string(id)] = v;
  j["h"] = std::move(h);
  j["alarm"] = r.alarm;
  j["predictions"] = r.predictions;
  j["update"] = r.update.kind == UpdateKind::major ? "major" : "minor";
  j["trained"] = r.update.trained;
  j["pool_size"] = r.pool_size;
  if (r.update.kind == UpdateKind::major) {
    j["pruned"] = r.update.pruned;
    j["added"] = r.update.added;
    json cs = json::object();
    for (const auto& [id, v] : r.update.short_term) cs[std::to_string(id)] = v;
    j["short_term"] = std::move(cs);
    j["ledger"] = ledger_json(r.ledger_after);
  }
  if (with_timing) j["elapsed_ms"] = r.elapsed_ms;
  out << j.dump() << '\n';
}

void write_summary_json(const RunReport& report, std::ostream& out) {
  const auto& c = report.config;
  json j;
  j["stream"] = report.stream_name;
  j["auc"] = report.auc ? json(*report.auc) : json(nullptr);
  j["adt_ms"] = report.adt_ms;
  j["scored_steps"] = report.scored_steps;
  j["scored_batches"] = report.batches.size();
  j["total_elapsed_ms"] = report.total_elapsed_ms;
  j["drift_batches"] = report.drift_batches;
  j["mean_communities"] = report.mean_communities();
  j["mean_representatives"] = report.mean_representatives();
  json pool = json::array();
  for (const auto& m : report.final_pool)
    pool.push_back({{"id", m.id}, {"spec", m.spec}, {"birth_batch", m.birth_batch}});
  j["final_pool"] = std::move(pool);
  j["config"] = {{"batch_size", c.batch_size},
                 {"alpha", c.alpha},
                 {"beta", c.beta},
                 {"gamma", c.gamma},
                 {"theta_drift", c.theta_drift},
                 {"resolution", c.resolution},
                 {"capacity", c.capacity},
                 {"damping", c.damping},
                 {"threshold_policy", policy_name(c.threshold_policy)},
                 {"threshold_k", c.threshold_params.k},
                 {"threshold_window", c.threshold_params.window},
                 {"threshold_q", c.threshold_params.q},
                 {"seed", c.seed},
                 {"mode", mode_name(c.mode)}};
  out << j.dump(2) << '\n';
}

void write_scores_csv(const RunReport& report, const LabeledStream& stream, std::ostream& out) {
  const auto batches = batch_iter(stream, report.config.batch_size);
  const auto old = out.precision(17);
  out << "t,index,score,prediction,label\n";
  for (const auto& r : report.batches) {
    const auto& points = batches.at(r.batch_index).points;
    for (std::size_t i = 0; i < r.s_final.size(); ++i) {
      out << r.batch_index << ',' << points[i].index << ',' << r.s_final[i] << ','
          << int(r.predictions[i]) << ',';
      if (points[i].label) out << int(*points[i].label);
      out << '\n';
    }
  }
  out.precision(old);
}

}  // namespace poolgraph
