#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

// Rank-based statistics shared by graph construction, representative selection,
// drift measurement and evaluation.
namespace poolgraph::stats {

/// 1-based ranks; tied values receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman correlation with average-rank ties; 0 when either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// Kendall tau-b. Returns nullopt when fewer than two items or either side is all-tied.
std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b);

/// ROC-AUC via the Mann-Whitney statistic, ties counted 0.5.
/// nullopt when either class is absent.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Normalized mutual information of two labelings of the same items, normalized by the
/// arithmetic mean of the two entropies. Both-zero entropies give 1.
double normalized_mutual_information(std::span<const std::size_t> a,
                                     std::span<const std::size_t> b);

double mean(std::span<const double> v);
/// Population standard deviation.
double stddev(std::span<const double> v);

}  // namespace poolgraph::stats
