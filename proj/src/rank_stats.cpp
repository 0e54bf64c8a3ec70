#include "poolgraph/rank_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "poolgraph/stream.hpp"

namespace poolgraph::stats {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("pearson: vectors of unequal length");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("spearman: vectors of unequal length");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("kendall: vectors of unequal length");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  // Rankings compared here are short (pool sizes), so the O(n^2) count is fine.
  double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ties_a += 1.0;
      } else if (db == 0.0) {
        ties_b += 1.0;
      } else if ((da > 0.0) == (db > 0.0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double denom =
      std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
  if (denom == 0.0) return std::nullopt;
  return std::clamp((concordant - discordant) / denom, -1.0, 1.0);
}

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error("roc_auc: length mismatch");
  const auto ranks = average_ranks(scores);
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  const double u = rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * neg);
}

double normalized_mutual_information(std::span<const std::size_t> a,
                                     std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw Error("nmi: labelings of unequal length");
  const double n = static_cast<double>(a.size());
  if (a.empty()) return 1.0;
  std::map<std::size_t, double> ca, cb;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<std::size_t, double>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  if (ha <= 0.0 && hb <= 0.0) return 1.0;
  // Terms are summed in sorted order so that swapping the arguments is bit-exact.
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [key, c] : joint) {
    const double pxy = c / n;
    terms.push_back(pxy * std::log(pxy / ((ca[key.first] / n) * (cb[key.second] / n))));
  }
  std::sort(terms.begin(), terms.end());
  const double mi = std::accumulate(terms.begin(), terms.end(), 0.0);
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

}  // namespace poolgraph::stats
