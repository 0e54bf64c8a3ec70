#include <algorithm>
#include <cmath>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

namespace {

constexpr double kPseudoCount = 0.1;

}  // namespace

LodaDetector::LodaDetector(std::size_t dimension, std::size_t window, std::size_t projections,
                           std::size_t bins, std::size_t train_window, std::uint64_t seed)
    : dim_(dimension),
      window_(window),
      projections_(projections),
      bins_(bins),
      train_window_(train_window) {
  if (dimension == 0 || window == 0 || projections == 0 || bins < 2 || train_window == 0)
    throw Error("loda: invalid configuration");
  const std::size_t width = window * dimension;
  const auto nonzeros = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(width)))));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  weights_.assign(projections * width, 0.0);
  std::vector<std::size_t> slots(width);
  for (std::size_t p = 0; p < projections; ++p) {
    for (std::size_t k = 0; k < width; ++k) slots[k] = k;
    std::shuffle(slots.begin(), slots.end(), rng);
    for (std::size_t k = 0; k < nonzeros; ++k) weights_[p * width + slots[k]] = normal(rng);
  }
  history_.assign(projections * train_window, 0.0);
}

void LodaDetector::project(const SeriesView& batch, std::ptrdiff_t row, std::vector<double>& lag,
                           std::span<double> out) const {
  batch.lag_vector(row, window_, lag);
  const std::size_t width = lag.size();
  for (std::size_t p = 0; p < projections_; ++p) {
    const double* w = weights_.data() + p * width;
    double acc = 0.0;
    for (std::size_t k = 0; k < width; ++k) acc += w[k] * lag[k];
    out[p] = acc;
  }
}

void LodaDetector::rebuild() {
  const std::size_t n = std::min(history_count_, train_window_);
  histograms_.assign(projections_, Histogram{});
  if (n == 0) return;
  const double total = static_cast<double>(n) + kPseudoCount * static_cast<double>(bins_);
  std::vector<double> counts(bins_);
  for (std::size_t p = 0; p < projections_; ++p) {
    double lo = history_[p], hi = history_[p];
    for (std::size_t s = 0; s < n; ++s) {
      const double v = history_[s * projections_ + p];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto& h = histograms_[p];
    h.lo = lo;
    h.width = (hi - lo) / static_cast<double>(bins_);
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double v = history_[s * projections_ + p];
      auto b = static_cast<std::size_t>((v - lo) / h.width);
      counts[std::min(b, bins_ - 1)] += 1.0;
    }
    h.log_density.resize(bins_);
    for (std::size_t b = 0; b < bins_; ++b)
      h.log_density[b] = std::log((counts[b] + kPseudoCount) / total / h.width);
    h.empty_log_density = std::log(kPseudoCount / total / h.width);
  }
}

std::vector<double> LodaDetector::score(const SeriesView& batch) const {
  if (batch.dim() != dim_) throw Error("loda: dimension mismatch");
  std::vector<double> out(batch.rows(), 0.0);
  if (histograms_.empty()) return out;
  std::vector<double> lag(window_ * dim_), proj(projections_);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    project(batch, static_cast<std::ptrdiff_t>(i), lag, proj);
    double acc = 0.0;
    for (std::size_t p = 0; p < projections_; ++p) {
      const auto& h = histograms_[p];
      const double pos = (proj[p] - h.lo) / h.width;
      double logp = h.empty_log_density;
      if (pos >= 0.0) {
        auto b = static_cast<std::size_t>(pos);
        if (b == bins_ && pos <= static_cast<double>(bins_)) b = bins_ - 1;
        if (b < bins_) logp = h.log_density[b];
      }
      acc -= logp;
    }
    out[i] = acc / static_cast<double>(projections_);
  }
  return out;
}

void LodaDetector::update(const SeriesView& batch) {
  if (batch.dim() != dim_) throw Error("loda: dimension mismatch");
  if (batch.empty()) return;
  std::vector<double> lag(window_ * dim_);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    std::span<double> slot(history_.data() + history_head_ * projections_, projections_);
    project(batch, static_cast<std::ptrdiff_t>(i), lag, slot);
    history_head_ = (history_head_ + 1) % train_window_;
    ++history_count_;
  }
  rebuild();
}

std::uint64_t LodaDetector::state_hash() const {
  StateHasher h;
  h.add(weights_);
  h.add(static_cast<std::uint64_t>(history_count_));
  h.add(static_cast<std::uint64_t>(history_head_));
  h.add(history_);
  return h.value();
}

std::unique_ptr<Detector> LodaDetector::clone() const {
  return std::make_unique<LodaDetector>(*this);
}

}  // namespace poolgraph
