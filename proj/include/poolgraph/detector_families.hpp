#pragma once

// Concrete detector families of the built-in architecture set.

#include <random>
#include <vector>

#include "poolgraph/detectors.hpp"

namespace poolgraph {

/// Exponentially weighted running z-score. Scores the root-mean-square of per-dimension
/// z-values against the state before each row, then advances the state by that row.
class ZScoreDetector final : public Detector {
 public:
  ZScoreDetector(std::size_t dimension, double alpha);
  /// Detector with a given running state, for inspection.
  static ZScoreDetector with_state(std::vector<double> mean, std::vector<double> variance,
                                   double alpha);

  std::vector<double> score(const SeriesView& batch) const override;
  void update(const SeriesView& batch) override;
  std::size_t context_length() const override { return 0; }
  std::size_t warmup() const override { return 2; }
  std::size_t dimension() const override { return dim_; }
  std::uint64_t state_hash() const override;
  std::unique_ptr<Detector> clone() const override;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& variance() const { return var_; }

 private:
  std::size_t dim_;
  double alpha_;
  bool initialized_ = false;
  std::vector<double> mean_;
  std::vector<double> var_;
};

/// Per-dimension autoregressive forecaster fit by recursive least squares with forgetting.
/// Scores the root-mean-square forecast residual across dimensions.
class ArResidualDetector final : public Detector {
 public:
  ArResidualDetector(std::size_t dimension, std::size_t order, double forgetting);

  std::vector<double> score(const SeriesView& batch) const override;
  void update(const SeriesView& batch) override;
  std::size_t context_length() const override { return order_; }
  std::size_t warmup() const override { return 2 * order_ + 2; }
  std::size_t dimension() const override { return dim_; }
  std::uint64_t state_hash() const override;
  std::unique_ptr<Detector> clone() const override;

  struct Channel {
    std::vector<double> weights;  // intercept first, then lags (most recent first)
    std::vector<double> cov;      // (order+1)^2 inverse-correlation estimate
    double residual_var = 1.0;  // running residual variance, sets the clipping limit
    std::uint64_t updates = 0;
  };

 private:
  std::vector<double> run(const SeriesView& batch, std::vector<Channel>& channels) const;

  std::size_t dim_;
  std::size_t order_;
  double forgetting_;
  std::vector<Channel> channels_;
};

/// Lightweight online detector built from sparse random projections of lag vectors, each
/// summarized by an equal-width histogram over a sliding training window. Scores the mean
/// negative log density across projections.
class LodaDetector final : public Detector {
 public:
  LodaDetector(std::size_t dimension, std::size_t window, std::size_t projections,
               std::size_t bins, std::size_t train_window, std::uint64_t seed);

  std::vector<double> score(const SeriesView& batch) const override;
  void update(const SeriesView& batch) override;
  std::size_t context_length() const override { return window_ - 1; }
  std::size_t warmup() const override { return window_ + 1; }
  std::size_t dimension() const override { return dim_; }
  std::uint64_t state_hash() const override;
  std::unique_ptr<Detector> clone() const override;

 private:
  struct Histogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<double> log_density;  // per bin
    double empty_log_density = 0.0;   // empty bins and out-of-range values
  };

  void project(const SeriesView& batch, std::ptrdiff_t row, std::vector<double>& lag,
               std::span<double> out) const;
  void rebuild();

  std::size_t dim_;
  std::size_t window_;
  std::size_t projections_;
  std::size_t bins_;
  std::size_t train_window_;
  std::vector<double> weights_;  // projections x (window * dim)
  std::vector<double> history_;  // ring of projected training vectors, projections each
  std::size_t history_count_ = 0;
  std::size_t history_head_ = 0;
  std::vector<Histogram> histograms_;
};

/// Reconstruction error of lag vectors against the leading principal subspace of a sliding
/// training window.
class PcaDetector final : public Detector {
 public:
  PcaDetector(std::size_t dimension, std::size_t window, std::size_t components,
              std::size_t train_window);

  std::vector<double> score(const SeriesView& batch) const override;
  void update(const SeriesView& batch) override;
  std::size_t context_length() const override { return window_ - 1; }
  std::size_t warmup() const override { return window_ + components_ + 1; }
  std::size_t dimension() const override { return dim_; }
  std::uint64_t state_hash() const override;
  std::unique_ptr<Detector> clone() const override;

 private:
  void refit();

  std::size_t dim_;
  std::size_t window_;
  std::size_t components_;
  std::size_t train_window_;
  std::size_t width_;            // window * dim
  std::vector<double> history_;  // ring of lag vectors
  std::size_t history_count_ = 0;
  std::size_t history_head_ = 0;
  std::vector<double> mean_;
  std::vector<double> basis_;  // width x components, column-major
};

/// Distance to the k-th nearest lag vector in a bounded reservoir.
class KnnDetector final : public Detector {
 public:
  KnnDetector(std::size_t dimension, std::size_t window, std::size_t neighbors,
              std::size_t reservoir, std::uint64_t seed);

  std::vector<double> score(const SeriesView& batch) const override;
  void update(const SeriesView& batch) override;
  std::size_t context_length() const override { return window_ - 1; }
  std::size_t warmup() const override { return window_ + neighbors_ + 1; }
  std::size_t dimension() const override { return dim_; }
  std::uint64_t state_hash() const override;
  std::unique_ptr<Detector> clone() const override;

  std::size_t reservoir_size() const { return stored_; }

 private:
  // Distance to the k-th nearest stored window for each query row.
  std::vector<double> kth_distances(std::span<const double> queries) const;

  std::size_t dim_;
  std::size_t window_;
  std::size_t neighbors_;
  std::size_t capacity_;
  std::size_t width_;
  std::vector<double> reservoir_;
  std::size_t stored_ = 0;
  std::uint64_t seen_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace poolgraph
