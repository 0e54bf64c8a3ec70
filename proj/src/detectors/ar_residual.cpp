#include <algorithm>
#include <cmath>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

namespace {

constexpr double kInitialCovariance = 100.0;
constexpr double kResidualRate = 0.01;
constexpr double kResidualFloor = 1e-8;
// Caps covariance wind-up when the input stops exciting some directions.
constexpr double kMaxCovarianceTrace = 1e6;
// Residuals beyond this many standard deviations are clipped before they enter the
// parameter and variance updates, so isolated outliers do not corrupt the model.
constexpr double kClip = 4.0;

void reset_covariance(std::vector<double>& cov, std::size_t n) {
  std::fill(cov.begin(), cov.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) cov[k * n + k] = kInitialCovariance;
}

}  // namespace

ArResidualDetector::ArResidualDetector(std::size_t dimension, std::size_t order,
                                       double forgetting)
    : dim_(dimension), order_(order), forgetting_(forgetting) {
  if (dimension == 0) throw Error("ar: dimension must be positive");
  if (order == 0) throw Error("ar: order must be positive");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) throw Error("ar: forgetting must lie in (0, 1]");
  const std::size_t n = order + 1;
  Channel c;
  c.weights.assign(n, 0.0);
  c.cov.resize(n * n);
  reset_covariance(c.cov, n);
  channels_.assign(dimension, c);
}

std::vector<double> ArResidualDetector::run(const SeriesView& batch,
                                            std::vector<Channel>& channels) const {
  if (batch.dim() != dim_) throw Error("ar: dimension mismatch");
  const std::size_t n = order_ + 1;
  std::vector<double> phi(n), pphi(n), out(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto t = static_cast<std::ptrdiff_t>(i);
    const auto x = batch.row(t);
    double ss = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      auto& ch = channels[j];
      phi[0] = 1.0;
      for (std::size_t k = 1; k < n; ++k) phi[k] = batch.row(t - static_cast<std::ptrdiff_t>(k))[j];

      double pred = 0.0;
      for (std::size_t k = 0; k < n; ++k) pred += ch.weights[k] * phi[k];
      const double e = x[j] - pred;
      const double var = std::max(ch.residual_var, kResidualFloor);
      ss += e * e;
      const double limit = kClip * std::sqrt(var);
      const double eu = std::clamp(e, -limit, limit);

      // Recursive least squares step.
      double denom = forgetting_;
      for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += ch.cov[r * n + c] * phi[c];
        pphi[r] = acc;
        denom += phi[r] * acc;
      }
      if (!(denom > 0.0) || !std::isfinite(denom)) {
        reset_covariance(ch.cov, n);
        continue;
      }
      double trace = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double gain = pphi[r] / denom;
        ch.weights[r] += gain * eu;
        for (std::size_t c = 0; c < n; ++c)
          ch.cov[r * n + c] = (ch.cov[r * n + c] - gain * pphi[c]) / forgetting_;
        trace += ch.cov[r * n + r];
      }
      for (std::size_t r = 0; r < n; ++r)  // keep the covariance symmetric
        for (std::size_t c = r + 1; c < n; ++c) {
          const double avg = 0.5 * (ch.cov[r * n + c] + ch.cov[c * n + r]);
          ch.cov[r * n + c] = ch.cov[c * n + r] = avg;
        }
      if (trace > kMaxCovarianceTrace) {
        const double shrink = kMaxCovarianceTrace / trace;
        for (double& v : ch.cov) v *= shrink;
      }
      // Running mean of squared residuals until the exponential rate takes over.
      ++ch.updates;
      const double rate = std::max(kResidualRate, 1.0 / static_cast<double>(ch.updates));
      ch.residual_var = (1.0 - rate) * ch.residual_var + rate * eu * eu;
    }
    out[i] = std::sqrt(ss / static_cast<double>(dim_));
  }
  return out;
}

std::vector<double> ArResidualDetector::score(const SeriesView& batch) const {
  auto scratch = channels_;
  return run(batch, scratch);
}

void ArResidualDetector::update(const SeriesView& batch) {
  if (batch.dim() != dim_) throw Error("ar: dimension mismatch");
  if (batch.empty()) return;
  run(batch, channels_);
}

std::uint64_t ArResidualDetector::state_hash() const {
  StateHasher h;
  for (const auto& ch : channels_) {
    h.add(ch.weights);
    h.add(ch.cov);
    h.add(ch.residual_var);
    h.add(ch.updates);
  }
  return h.value();
}

std::unique_ptr<Detector> ArResidualDetector::clone() const {
  return std::make_unique<ArResidualDetector>(*this);
}

}  // namespace poolgraph
