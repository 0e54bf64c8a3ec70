#include "poolgraph/detectors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

namespace {

const std::vector<std::pair<Family, std::string_view>> kFamilyNames = {
    {Family::loda, "loda"},
    {Family::zscore, "zscore"},
    {Family::ar_residual, "ar"},
    {Family::pca, "pca"},
    {Family::knn, "knn"},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

}  // namespace

std::string_view family_name(Family family) {
  for (const auto& [f, name] : kFamilyNames)
    if (f == family) return name;
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames)
    if (n == name) return f;
  throw Error("unknown detector family '" + std::string(name) + "'");
}

const std::vector<ParamSchema>& family_schema(Family family) {
  static const std::vector<ParamSchema> loda = {
      {"window", 4, 1, 256, true},
      {"projections", 32, 1, 512, true},
      {"bins", 20, 2, 1000, true},
      {"train_window", 2048, 16, 1e6, true},
  };
  static const std::vector<ParamSchema> zscore = {
      {"alpha", 0.05, 1e-6, 1.0, false},
  };
  static const std::vector<ParamSchema> ar = {
      {"order", 8, 1, 64, true},
      {"forgetting", 0.999, 0.9, 1.0, false},
  };
  static const std::vector<ParamSchema> pca = {
      {"window", 16, 1, 256, true},
      {"components", 2, 1, 64, true},
      {"train_window", 2048, 16, 1e6, true},
  };
  static const std::vector<ParamSchema> knn = {
      {"window", 8, 1, 256, true},
      {"neighbors", 5, 1, 64, true},
      {"reservoir", 2048, 16, 1e6, true},
  };
  switch (family) {
    case Family::loda: return loda;
    case Family::zscore: return zscore;
    case Family::ar_residual: return ar;
    case Family::pca: return pca;
    case Family::knn: return knn;
  }
  throw Error("unknown detector family");
}

double ArchitectureSpec::param(const std::string& name) const {
  if (const auto it = hyperparams.find(name); it != hyperparams.end()) return it->second;
  for (const auto& p : family_schema(family))
    if (p.name == name) return p.default_value;
  throw Error("family " + std::string(family_name(family)) + " has no parameter '" + name + "'");
}

void ArchitectureSpec::validate() const {
  const auto& schema = family_schema(family);
  for (const auto& [name, value] : hyperparams) {
    const auto it = std::find_if(schema.begin(), schema.end(),
                                 [&](const ParamSchema& p) { return p.name == name; });
    if (it == schema.end())
      throw Error("family " + std::string(family_name(family)) + " has no parameter '" + name +
                  "'");
    if (!std::isfinite(value) || value < it->min || value > it->max)
      throw Error("parameter " + name + "=" + std::to_string(value) + " out of range for " +
                  std::string(family_name(family)));
    if (it->integer && value != std::round(value))
      throw Error("parameter " + name + " must be an integer");
  }
}

std::string format_spec(const ArchitectureSpec& spec) {
  std::string out(family_name(spec.family));
  char buf[32];
  for (const auto& p : family_schema(spec.family)) {
    const auto res = std::to_chars(buf, buf + sizeof buf, spec.param(p.name));  // shortest round trip
    out += ' ' + p.name + '=' + std::string(buf, res.ptr);
  }
  return out;
}

ArchitectureSpec parse_spec(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string family;
  if (!(in >> family)) throw Error("empty architecture line");
  ArchitectureSpec spec;
  spec.family = parse_family(family);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw Error("architecture parameter without '=': " + token);
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw Error("architecture parameter " + key + " is not numeric: " + value);
    spec.hyperparams[key] = v;
  }
  spec.validate();
  return spec;
}

std::vector<ArchitectureSpec> builtin_arch_set() {
  const char* lines[] = {
      "zscore alpha=0.5",
      "zscore alpha=0.2",
      "zscore alpha=0.05",
      "ar order=4 forgetting=0.995",
      "ar order=16 forgetting=0.999",
      "loda window=1 projections=16",
      "loda window=4 projections=32",
      "loda window=16 projections=64",
      "pca window=16 components=2",
      "pca window=32 components=4",
      "knn window=8 neighbors=5",
      "knn window=16 neighbors=10",
  };
  std::vector<ArchitectureSpec> specs;
  for (const char* line : lines) specs.push_back(parse_spec(line));
  return specs;
}

// ---------------------------------------------------------------------------

SeriesView::SeriesView(std::span<const double> data, std::size_t dim, std::size_t context)
    : data_(data), dim_(dim), context_(context) {
  if (dim == 0) throw Error("series dimension must be positive");
  if (data.size() % dim != 0) throw Error("series data is not a whole number of rows");
  const std::size_t total = data.size() / dim;
  if (context > total) throw Error("series context exceeds available rows");
  rows_ = total - context;
}

std::span<const double> SeriesView::row(std::ptrdiff_t i) const {
  const auto first = -static_cast<std::ptrdiff_t>(context_);
  if (i < first) i = first;
  if (i >= static_cast<std::ptrdiff_t>(rows_)) throw Error("series row out of range");
  const auto offset = static_cast<std::size_t>(i - first) * dim_;
  return data_.subspan(offset, dim_);
}

void SeriesView::lag_vector(std::ptrdiff_t i, std::size_t window, std::span<double> out) const {
  if (out.size() != window * dim_) throw Error("lag vector buffer has the wrong size");
  for (std::size_t k = 0; k < window; ++k) {
    const auto r = row(i - static_cast<std::ptrdiff_t>(window - 1 - k));
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(k * dim_));
  }
}

SeriesBuffer SeriesBuffer::from_batch(const Batch& batch) {
  SeriesBuffer buf;
  buf.dim = batch.dimension();
  buf.data.reserve(batch.size() * buf.dim);
  for (const auto& p : batch.points) {
    if (p.values.size() != buf.dim) throw Error("batch rows have inconsistent dimension");
    buf.data.insert(buf.data.end(), p.values.begin(), p.values.end());
  }
  if (buf.dim == 0) buf.dim = 1;
  return buf;
}

void StateHasher::add(double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  add(bits);
}

void StateHasher::add(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h_ ^= (v >> (8 * i)) & 0xffU;
    h_ *= 1099511628211ULL;
  }
}

// ---------------------------------------------------------------------------

std::uint64_t model_seed(std::uint64_t run_seed, ModelId id) {
  return splitmix64(run_seed ^ splitmix64(0x5eedULL + id));
}

std::unique_ptr<Detector> make_detector(const ArchitectureSpec& spec, std::size_t dimension,
                                        std::uint64_t seed) {
  spec.validate();
  switch (spec.family) {
    case Family::zscore:
      return std::make_unique<ZScoreDetector>(dimension, spec.param("alpha"));
    case Family::ar_residual:
      return std::make_unique<ArResidualDetector>(dimension, as_size(spec.param("order")),
                                                  spec.param("forgetting"));
    case Family::loda:
      return std::make_unique<LodaDetector>(
          dimension, as_size(spec.param("window")), as_size(spec.param("projections")),
          as_size(spec.param("bins")), as_size(spec.param("train_window")), seed);
    case Family::pca:
      return std::make_unique<PcaDetector>(dimension, as_size(spec.param("window")),
                                           as_size(spec.param("components")),
                                           as_size(spec.param("train_window")));
    case Family::knn:
      return std::make_unique<KnnDetector>(
          dimension, as_size(spec.param("window")), as_size(spec.param("neighbors")),
          as_size(spec.param("reservoir")), seed);
  }
  throw Error("unknown detector family");
}

ModelInstance::ModelInstance(const ModelInstance& other)
    : id(other.id),
      spec(other.spec),
      detector(other.detector ? other.detector->clone() : nullptr),
      birth_batch(other.birth_batch) {}

ModelInstance& ModelInstance::operator=(const ModelInstance& other) {
  if (this != &other) {
    ModelInstance copy(other);
    *this = std::move(copy);
  }
  return *this;
}

const ScoreVector* ScoreSet::find(ModelId id) const {
  const auto it = std::lower_bound(vectors.begin(), vectors.end(), id,
                                   [](const ScoreVector& v, ModelId x) { return v.model_id < x; });
  if (it == vectors.end() || it->model_id != id) return nullptr;
  return &*it;
}

const ScoreVector& ScoreSet::at(ModelId id) const {
  const auto* v = find(id);
  if (!v) throw Error("no score vector for model " + std::to_string(id));
  return *v;
}

std::vector<ModelId> ScoreSet::ids() const {
  std::vector<ModelId> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(v.model_id);
  return out;
}

std::vector<ModelId> ModelPool::ids() const {
  std::vector<ModelId> out;
  out.reserve(models_.size());
  for (const auto& m : models_) out.push_back(m.id);
  return out;
}

ModelInstance* ModelPool::find(ModelId id) {
  const auto it = std::lower_bound(models_.begin(), models_.end(), id,
                                   [](const ModelInstance& m, ModelId x) { return m.id < x; });
  if (it == models_.end() || it->id != id) return nullptr;
  return &*it;
}

const ModelInstance* ModelPool::find(ModelId id) const {
  return const_cast<ModelPool*>(this)->find(id);
}

ModelInstance& ModelPool::at(ModelId id) {
  auto* m = find(id);
  if (!m) throw Error("model " + std::to_string(id) + " is not in the pool");
  return *m;
}

void ModelPool::add(std::vector<ModelInstance> models) {
  if (models_.size() + models.size() > capacity_) throw Error("model pool capacity exceeded");
  std::optional<ModelId> last;
  if (!models_.empty()) last = models_.back().id;
  for (const auto& m : models) {
    if (last && m.id <= *last) throw Error("model ids must be added in increasing order");
    last = m.id;
  }
  for (auto& m : models) {
    next_id_ = std::max<ModelId>(next_id_, m.id + 1);
    models_.push_back(std::move(m));
  }
}

void ModelPool::remove(std::span<const ModelId> ids) {
  for (ModelId id : ids)
    if (!find(id)) throw Error("cannot remove model " + std::to_string(id) + ": not in pool");
  std::erase_if(models_, [&](const ModelInstance& m) {
    return std::find(ids.begin(), ids.end(), m.id) != ids.end();
  });
}

ModelId ModelPool::allocate_ids(std::size_t count) {
  const ModelId first = next_id_;
  next_id_ += static_cast<ModelId>(count);
  return first;
}

std::vector<ModelInstance> instantiate_and_train(std::span<const ArchitectureSpec> arch_set,
                                                 const SeriesView& batch, std::uint64_t run_seed,
                                                 ModelId first_id, std::size_t birth_batch) {
  std::vector<ModelInstance> models;
  models.reserve(arch_set.size());
  ModelId id = first_id;
  for (const auto& spec : arch_set) {
    auto detector = make_detector(spec, batch.dim(), model_seed(run_seed, id));
    if (batch.context() + batch.rows() < detector->warmup())
      throw Error("batch of " + std::to_string(batch.rows()) + " rows is too short to train '" +
                  format_spec(spec) + "' (needs " + std::to_string(detector->warmup()) + ")");
    detector->update(batch);
    models.emplace_back(id, spec, std::move(detector), birth_batch);
    ++id;
  }
  return models;
}

ScoreSet score_pool(ModelPool& pool, const SeriesView& batch, std::size_t batch_index) {
  ScoreSet set;
  set.batch_index = batch_index;
  set.vectors.reserve(pool.size());
  for (const auto& m : pool.models()) {
    if (m.detector->dimension() != batch.dim())
      throw Error("model " + std::to_string(m.id) + " expects dimension " +
                  std::to_string(m.detector->dimension()) + ", batch has " +
                  std::to_string(batch.dim()));
    ScoreVector v{m.id, m.detector->score(batch)};
    for (double& s : v.scores)
      if (!std::isfinite(s))
        throw Error("model " + std::to_string(m.id) + " produced a non-finite score");
    set.vectors.push_back(std::move(v));
  }
  pool.mark_scored(batch_index);
  return set;
}

void update_model(ModelInstance& model, const SeriesView& batch) {
  if (batch.empty()) return;
  if (model.detector->dimension() != batch.dim())
    throw Error("model " + std::to_string(model.id) + " expects dimension " +
                std::to_string(model.detector->dimension()) + ", batch has " +
                std::to_string(batch.dim()));
  model.detector->update(batch);
}

void train_scored(ModelPool& pool, std::span<const ModelId> ids, const SeriesView& batch,
                  std::size_t batch_index) {
  if (pool.scored_batch() != batch_index)
    throw Error("prequential order violated: batch " + std::to_string(batch_index) +
                " must be scored before any model trains on it");
  for (ModelId id : ids) update_model(pool.at(id), batch);
}

}  // namespace poolgraph
