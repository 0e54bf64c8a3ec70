#include <Eigen/Dense>
#include <algorithm>

#include "poolgraph/detector_families.hpp"

namespace poolgraph {

PcaDetector::PcaDetector(std::size_t dimension, std::size_t window, std::size_t components,
                         std::size_t train_window)
    : dim_(dimension),
      window_(window),
      components_(components),
      train_window_(train_window),
      width_(window * dimension) {
  if (dimension == 0 || window == 0 || train_window == 0) throw Error("pca: invalid configuration");
  if (components == 0 || components >= width_)
    throw Error("pca: components must be positive and below window * dimension (" +
                std::to_string(width_) + ")");
  history_.assign(train_window * width_, 0.0);
  mean_.assign(width_, 0.0);
}

void PcaDetector::refit() {
  const std::size_t n = std::min(history_count_, train_window_);
  if (n == 0) return;
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Matrix> samples(history_.data(), static_cast<Eigen::Index>(n),
                                         static_cast<Eigen::Index>(width_));
  const Eigen::RowVectorXd mu = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mu;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");

  // Eigenvalues come back ascending; keep the trailing `components_` vectors.
  const auto w = static_cast<Eigen::Index>(width_);
  const auto k = static_cast<Eigen::Index>(components_);
  basis_.assign(width_ * components_, 0.0);
  Eigen::Map<Eigen::MatrixXd> basis(basis_.data(), w, k);
  basis = solver.eigenvectors().rightCols(k);
  for (std::size_t j = 0; j < width_; ++j) mean_[j] = mu(static_cast<Eigen::Index>(j));
}

std::vector<double> PcaDetector::score(const SeriesView& batch) const {
  if (batch.dim() != dim_) throw Error("pca: dimension mismatch");
  std::vector<double> out(batch.rows(), 0.0);
  if (basis_.empty()) return out;
  const auto w = static_cast<Eigen::Index>(width_);
  const auto k = static_cast<Eigen::Index>(components_);
  const Eigen::Map<const Eigen::MatrixXd> basis(basis_.data(), w, k);
  const Eigen::Map<const Eigen::VectorXd> mu(mean_.data(), w);
  std::vector<double> lag(width_);
  Eigen::VectorXd centered(w), coeffs(k);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    batch.lag_vector(static_cast<std::ptrdiff_t>(i), window_, lag);
    centered = Eigen::Map<const Eigen::VectorXd>(lag.data(), w) - mu;
    coeffs.noalias() = basis.transpose() * centered;
    // Residual energy of an orthonormal projection.
    out[i] = std::max(0.0, centered.squaredNorm() - coeffs.squaredNorm());
  }
  return out;
}

void PcaDetector::update(const SeriesView& batch) {
  if (batch.dim() != dim_) throw Error("pca: dimension mismatch");
  if (batch.empty()) return;
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    std::span<double> slot(history_.data() + history_head_ * width_, width_);
    batch.lag_vector(static_cast<std::ptrdiff_t>(i), window_, slot);
    history_head_ = (history_head_ + 1) % train_window_;
    ++history_count_;
  }
  refit();
}

std::uint64_t PcaDetector::state_hash() const {
  StateHasher h;
  h.add(static_cast<std::uint64_t>(history_count_));
  h.add(static_cast<std::uint64_t>(history_head_));
  h.add(history_);
  h.add(mean_);
  h.add(basis_);
  return h.value();
}

std::unique_ptr<Detector> PcaDetector::clone() const {
  return std::make_unique<PcaDetector>(*this);
}

}  // namespace poolgraph
