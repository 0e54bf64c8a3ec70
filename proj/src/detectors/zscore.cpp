#include <cmath>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

namespace {

constexpr double kVarianceFloor = 1e-12;

void check_dim(const SeriesView& batch, std::size_t dim) {
  if (batch.dim() != dim) throw Error("zscore: dimension mismatch");
}

}  // namespace

ZScoreDetector::ZScoreDetector(std::size_t dimension, double alpha)
    : dim_(dimension), alpha_(alpha), mean_(dimension, 0.0), var_(dimension, 1.0) {
  if (dimension == 0) throw Error("zscore: dimension must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("zscore: alpha must lie in (0, 1]");
}

ZScoreDetector ZScoreDetector::with_state(std::vector<double> mean, std::vector<double> variance,
                                          double alpha) {
  if (mean.size() != variance.size()) throw Error("zscore: mean/variance size mismatch");
  ZScoreDetector d(mean.size(), alpha);
  d.mean_ = std::move(mean);
  d.var_ = std::move(variance);
  d.initialized_ = true;
  return d;
}

std::vector<double> ZScoreDetector::score(const SeriesView& batch) const {
  check_dim(batch, dim_);
  std::vector<double> mean = mean_;
  std::vector<double> var = var_;
  std::vector<double> out(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto x = batch.row(static_cast<std::ptrdiff_t>(i));
    double ss = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double delta = x[j] - mean[j];
      ss += delta * delta / std::max(var[j], kVarianceFloor);
      mean[j] += alpha_ * delta;
      var[j] = (1.0 - alpha_) * (var[j] + alpha_ * delta * delta);
    }
    out[i] = std::sqrt(ss / static_cast<double>(dim_));
  }
  return out;
}

void ZScoreDetector::update(const SeriesView& batch) {
  check_dim(batch, dim_);
  if (batch.empty()) return;
  if (!initialized_) {
    const double n = static_cast<double>(batch.rows());
    for (std::size_t j = 0; j < dim_; ++j) {
      double s = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < batch.rows(); ++i) s += batch.row(static_cast<std::ptrdiff_t>(i))[j];
      const double m = s / n;
      for (std::size_t i = 0; i < batch.rows(); ++i) {
        const double d = batch.row(static_cast<std::ptrdiff_t>(i))[j] - m;
        ss += d * d;
      }
      mean_[j] = m;
      var_[j] = std::max(ss / n, kVarianceFloor);
    }
    initialized_ = true;
  }
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto x = batch.row(static_cast<std::ptrdiff_t>(i));
    for (std::size_t j = 0; j < dim_; ++j) {
      const double delta = x[j] - mean_[j];
      mean_[j] += alpha_ * delta;
      var_[j] = (1.0 - alpha_) * (var_[j] + alpha_ * delta * delta);
    }
  }
}

std::uint64_t ZScoreDetector::state_hash() const {
  StateHasher h;
  h.add(static_cast<std::uint64_t>(initialized_));
  h.add(mean_);
  h.add(var_);
  return h.value();
}

std::unique_ptr<Detector> ZScoreDetector::clone() const {
  return std::make_unique<ZScoreDetector>(*this);
}

}  // namespace poolgraph
