#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

namespace {

constexpr std::size_t kQueryBlock = 128;

}  // namespace

KnnDetector::KnnDetector(std::size_t dimension, std::size_t window, std::size_t neighbors,
                         std::size_t reservoir, std::uint64_t seed)
    : dim_(dimension),
      window_(window),
      neighbors_(neighbors),
      capacity_(reservoir),
      width_(window * dimension),
      rng_(seed) {
  if (dimension == 0 || window == 0 || neighbors == 0 || reservoir <= neighbors)
    throw Error("knn: invalid configuration");
  reservoir_.reserve(reservoir * width_);
}

std::vector<double> KnnDetector::kth_distances(std::span<const double> queries) const {
  const std::size_t count = queries.size() / width_;
  std::vector<double> out(count, 0.0);
  if (stored_ == 0 || count == 0) return out;

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> ref(reservoir_.data(), static_cast<Eigen::Index>(stored_),
                                        static_cast<Eigen::Index>(width_));
  const Eigen::VectorXd ref_norm = ref.rowwise().squaredNorm();
  std::vector<double> best;

  // Squared distances via |q|^2 + |r|^2 - 2 q.r, one block of queries at a time.
  for (std::size_t first = 0; first < count; first += kQueryBlock) {
    const std::size_t rows = std::min(kQueryBlock, count - first);
    const Eigen::Map<const RowMatrix> q(queries.data() + first * width_,
                                        static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(width_));
    const RowMatrix cross = q * ref.transpose();
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t k = std::min(neighbors_, stored_);
      const double qn = q.row(static_cast<Eigen::Index>(i)).squaredNorm();
      // best[0..k) holds the k smallest squared distances, ascending.
      best.assign(k, std::numeric_limits<double>::infinity());
      for (std::size_t r = 0; r < stored_; ++r) {
        const double d2 = std::max(
            0.0, qn + ref_norm[static_cast<Eigen::Index>(r)] -
                     2.0 * cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)));
        if (d2 >= best[k - 1]) continue;
        std::size_t pos = k - 1;
        while (pos > 0 && best[pos - 1] > d2) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = d2;
      }
      out[first + i] = std::sqrt(best[k - 1]);
    }
  }
  return out;
}

std::vector<double> KnnDetector::score(const SeriesView& batch) const {
  if (batch.dim() != dim_) throw Error("knn: dimension mismatch");
  std::vector<double> out(batch.rows(), 0.0);
  if (stored_ == 0) return out;
  std::vector<double> lags(batch.rows() * width_);
  for (std::size_t i = 0; i < batch.rows(); ++i)
    batch.lag_vector(static_cast<std::ptrdiff_t>(i), window_,
                     std::span<double>(lags).subspan(i * width_, width_));
  return kth_distances(lags);
}

void KnnDetector::update(const SeriesView& batch) {
  if (batch.dim() != dim_) throw Error("knn: dimension mismatch");
  if (batch.empty()) return;
  std::vector<double> lag(width_);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    batch.lag_vector(static_cast<std::ptrdiff_t>(i), window_, lag);
    ++seen_;
    if (stored_ < capacity_) {
      reservoir_.insert(reservoir_.end(), lag.begin(), lag.end());
      ++stored_;
    } else {
      std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
      const auto slot = pick(rng_);
      if (slot < capacity_)
        std::copy(lag.begin(), lag.end(), reservoir_.begin() + static_cast<std::ptrdiff_t>(slot * width_));
    }
  }

}

std::uint64_t KnnDetector::state_hash() const {
  StateHasher h;
  h.add(reservoir_);
  h.add(static_cast<std::uint64_t>(stored_));
  h.add(seen_);
  return h.value();
}

std::unique_ptr<Detector> KnnDetector::clone() const {
  return std::make_unique<KnnDetector>(*this);
}

}  // namespace poolgraph
