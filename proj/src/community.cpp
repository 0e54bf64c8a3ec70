#include "poolgraph/community.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "poolgraph/rank_stats.hpp"

namespace poolgraph {

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

std::vector<ModelId> Partition::ids() const {
  std::vector<ModelId> out;
  for (const auto& c : communities) out.insert(out.end(), c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> Partition::labels_for(std::span<const ModelId> ids) const {
  std::map<ModelId, std::size_t> where;
  for (std::size_t c = 0; c < communities.size(); ++c)
    for (ModelId id : communities[c]) where[id] = c;
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (ModelId id : ids) {
    const auto it = where.find(id);
    if (it == where.end()) throw Error("model " + std::to_string(id) + " is not in the partition");
    out.push_back(it->second);
  }
  return out;
}

void Partition::validate(const ModelGraph& graph) const {
  for (const auto& c : communities)
    if (c.empty()) throw Error("partition has an empty community");
  const auto all = ids();
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw Error("partition communities overlap");
  if (all != graph.nodes) throw Error("partition does not cover the graph nodes");
}

void Partition::canonicalize() {
  for (auto& c : communities) std::sort(c.begin(), c.end());
  std::erase_if(communities, [](const auto& c) { return c.empty(); });
  std::sort(communities.begin(), communities.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

Partition Partition::singletons(const ModelGraph& graph) {
  Partition p;
  p.batch_index = graph.batch_index;
  for (ModelId id : graph.nodes) p.communities.push_back({id});
  return p;
}

Partition Partition::whole(const ModelGraph& graph) {
  Partition p;
  p.batch_index = graph.batch_index;
  if (!graph.nodes.empty()) p.communities.push_back(graph.nodes);
  return p;
}

// ---------------------------------------------------------------------------
// Louvain
// ---------------------------------------------------------------------------

double modularity(const ModelGraph& graph, const Partition& partition, double resolution) {
  const auto strength = graph.strengths();
  const double two_m = std::accumulate(strength.begin(), strength.end(), 0.0);
  if (two_m <= 0.0) return 0.0;
  const auto community = partition.labels_for(graph.nodes);
  std::vector<double> internal(partition.size(), 0.0), total(partition.size(), 0.0);
  for (const auto& e : graph.edges)
    if (community[e.i] == community[e.j]) internal[community[e.i]] += 2.0 * e.weight;
  for (std::size_t i = 0; i < graph.size(); ++i) total[community[i]] += strength[i];
  double q = 0.0;
  for (std::size_t c = 0; c < partition.size(); ++c)
    q += internal[c] / two_m - resolution * (total[c] / two_m) * (total[c] / two_m);
  return q;
}

namespace {

struct WorkGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // no self entries
  std::vector<double> self;  // sum of A_ii (both directions of internal edges)
  std::size_t size() const { return adj.size(); }
};

}  // namespace

Partition louvain(const ModelGraph& graph, double resolution, std::uint64_t seed, bool shuffle) {
  if (graph.size() == 0) throw Error("louvain on an empty graph");
  if (!(resolution > 0.0)) throw Error("louvain resolution must be positive");
  for (const auto& e : graph.edges)
    if (e.weight < 0.0) throw Error("louvain requires nonnegative edge weights");

  const std::size_t n = graph.size();
  WorkGraph work;
  work.adj.resize(n);
  work.self.assign(n, 0.0);
  for (const auto& e : graph.edges) {
    if (e.weight == 0.0) continue;
    work.adj[e.i].emplace_back(e.j, e.weight);
    work.adj[e.j].emplace_back(e.i, e.weight);
  }
  std::vector<std::size_t> membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});

  std::mt19937_64 rng(seed);
  constexpr double kMinGain = 1e-12;

  while (true) {
    const std::size_t wn = work.size();
    std::vector<double> k(wn, 0.0);
    for (std::size_t i = 0; i < wn; ++i) {
      k[i] = work.self[i];
      for (const auto& [j, w] : work.adj[i]) k[i] += w;
    }
    const double two_m = std::accumulate(k.begin(), k.end(), 0.0);
    if (two_m <= 0.0) break;

    std::vector<std::size_t> community(wn);
    std::iota(community.begin(), community.end(), std::size_t{0});
    std::vector<double> total = k;
    std::vector<std::size_t> order(wn);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> link(wn, 0.0);
    std::vector<std::size_t> touched;
    bool any_move = false;
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t i : order) {
        const std::size_t own = community[i];
        total[own] -= k[i];
        touched.clear();
        for (const auto& [j, w] : work.adj[i]) {
          const std::size_t c = community[j];
          if (link[c] == 0.0) touched.push_back(c);
          link[c] += w;
        }
        std::sort(touched.begin(), touched.end());
        std::size_t best = own;
        double best_gain = link[own] - resolution * total[own] * k[i] / two_m;
        for (std::size_t c : touched) {
          const double gain = link[c] - resolution * total[c] * k[i] / two_m;
          if (gain > best_gain + kMinGain) {
            best_gain = gain;
            best = c;
          }
        }
        for (std::size_t c : touched) link[c] = 0.0;
        total[best] += k[i];
        if (best != own) {
          community[i] = best;
          moved = true;
          any_move = true;
        }
      }
    }
    if (!any_move) break;

    // Aggregate communities into super-nodes, numbered by first appearance.
    std::vector<std::size_t> renumber(wn, std::numeric_limits<std::size_t>::max());
    std::size_t count = 0;
    for (std::size_t i = 0; i < wn; ++i)
      if (renumber[community[i]] == std::numeric_limits<std::size_t>::max())
        renumber[community[i]] = count++;
    for (auto& m : membership) m = renumber[community[m]];

    WorkGraph next;
    next.adj.resize(count);
    next.self.assign(count, 0.0);
    std::vector<std::map<std::size_t, double>> merged(count);
    for (std::size_t i = 0; i < wn; ++i) {
      const std::size_t ci = renumber[community[i]];
      next.self[ci] += work.self[i];
      for (const auto& [j, w] : work.adj[i]) {
        const std::size_t cj = renumber[community[j]];
        if (ci == cj)
          next.self[ci] += w;  // each internal edge is seen from both ends
        else
          merged[ci][cj] += w;
      }
    }
    for (std::size_t c = 0; c < count; ++c)
      for (const auto& [d, w] : merged[c]) next.adj[c].emplace_back(d, w);
    work = std::move(next);
    if (count == 1) break;
  }

  Partition p;
  p.batch_index = graph.batch_index;
  p.resolution = resolution;
  const std::size_t groups = *std::max_element(membership.begin(), membership.end()) + 1;
  p.communities.resize(groups);
  for (std::size_t i = 0; i < n; ++i) p.communities[membership[i]].push_back(graph.nodes[i]);
  p.canonicalize();
  return p;
}

// ---------------------------------------------------------------------------
// PageRank
// ---------------------------------------------------------------------------

std::vector<double> pagerank(const ModelGraph& graph, double damping, double tol,
                             std::size_t max_iter) {
  const std::size_t n = graph.size();
  if (n == 0) return {};
  if (!(damping > 0.0 && damping < 1.0)) throw Error("pagerank damping must lie in (0, 1)");
  if (!(tol > 0.0)) throw Error("pagerank tolerance must be positive");
  for (const auto& e : graph.edges)
    if (e.weight < 0.0) throw Error("pagerank requires nonnegative edge weights");

  const auto strength = graph.strengths();
  const double nd = static_cast<double>(n);
  std::vector<double> p(n, 1.0 / nd), next(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (strength[i] <= 0.0) dangling += p[i];
    const double base = (1.0 - damping) / nd + damping * dangling / nd;
    std::fill(next.begin(), next.end(), base);
    for (const auto& e : graph.edges) {
      if (e.weight <= 0.0) continue;
      next[e.j] += damping * p[e.i] * e.weight / strength[e.i];
      next[e.i] += damping * p[e.j] * e.weight / strength[e.j];
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - p[i]);
    p.swap(next);
    if (change < tol) {
      const double sum = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& v : p) v /= sum;
      return p;
    }
  }
  throw Error("pagerank did not converge in " + std::to_string(max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// Pseudo ground truth
// ---------------------------------------------------------------------------

namespace {

constexpr double kGmmVarianceFloor = 1e-12;
constexpr double kGmmTolerance = 1e-6;  // on the total log-likelihood
constexpr std::size_t kGmmMaxIterations = 100;
constexpr double kGmmMinSeparation = 1e-9;

double percentile(std::vector<double> sorted_copy, double q) {
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const double pos = q * static_cast<double>(sorted_copy.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_copy.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_copy[lo] + frac * (sorted_copy[hi] - sorted_copy[lo]);
}

}  // namespace

std::vector<std::uint8_t> GaussianMixture1D::binarize(std::span<const double> x) const {
  std::vector<std::uint8_t> out(x.size(), 0);
  if (degenerate) return out;
  const int high = mean[1] > mean[0] ? 1 : 0;
  const int low = 1 - high;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lh = std::log(weight[high]) - 0.5 * std::log(variance[high]) -
                      0.5 * (x[i] - mean[high]) * (x[i] - mean[high]) / variance[high];
    const double ll = std::log(weight[low]) - 0.5 * std::log(variance[low]) -
                      0.5 * (x[i] - mean[low]) * (x[i] - mean[low]) / variance[low];
    out[i] = lh > ll ? 1 : 0;
  }
  return out;
}

GaussianMixture1D fit_gmm(std::span<const double> x) {
  GaussianMixture1D g;
  const std::size_t n = x.size();
  if (n < 2) {
    g.degenerate = true;
    return g;
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  if (*hi_it - *lo_it <= 0.0) {
    g.degenerate = true;
    return g;
  }
  std::vector<double> copy(x.begin(), x.end());
  g.mean[0] = percentile(copy, 0.25);
  g.mean[1] = percentile(copy, 0.90);
  if (g.mean[1] <= g.mean[0]) g.mean[1] = *hi_it;  // heavy ties at the low end
  const double var = std::max(stats::stddev(x) * stats::stddev(x), kGmmVarianceFloor);
  g.variance[0] = g.variance[1] = var;

  std::vector<double> resp(n);  // posterior of component 1
  double prev_ll = -std::numeric_limits<double>::infinity();
  constexpr double kLogNorm = -0.91893853320467274178;  // -0.5 * log(2 pi)
  for (std::size_t iter = 0; iter < kGmmMaxIterations; ++iter) {
    g.iterations = iter + 1;
    double ll = 0.0;
    const double c0 = std::log(g.weight[0]) - 0.5 * std::log(g.variance[0]) + kLogNorm;
    const double c1 = std::log(g.weight[1]) - 0.5 * std::log(g.variance[1]) + kLogNorm;
    const double inv0 = 0.5 / g.variance[0];
    const double inv1 = 0.5 / g.variance[1];
    double n1 = 0.0, s1 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = x[i] - g.mean[0];
      const double d1 = x[i] - g.mean[1];
      const double l0 = c0 - d0 * d0 * inv0;
      const double l1 = c1 - d1 * d1 * inv1;
      // log(e^l0 + e^l1) = max + log1p(e^-|l0 - l1|)
      const double e = std::exp(-std::abs(l0 - l1));
      ll += std::max(l0, l1) + std::log1p(e);
      const double r = (l1 >= l0 ? 1.0 : e) / (1.0 + e);
      resp[i] = r;
      n1 += r;
      s1 += r * x[i];
      s0 += (1.0 - r) * x[i];
    }
    // M step
    const double n0 = static_cast<double>(n) - n1;
    if (n0 <= 0.0 || n1 <= 0.0) break;  // one component absorbed everything
    g.mean[0] = s0 / n0;
    g.mean[1] = s1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = x[i] - g.mean[0];
      const double d1 = x[i] - g.mean[1];
      v0 += (1.0 - resp[i]) * d0 * d0;
      v1 += resp[i] * d1 * d1;
    }
    g.variance[0] = std::max(v0 / n0, kGmmVarianceFloor);
    g.variance[1] = std::max(v1 / n1, kGmmVarianceFloor);
    g.weight[0] = n0 / static_cast<double>(n);
    g.weight[1] = n1 / static_cast<double>(n);
    if (ll - prev_ll < kGmmTolerance) break;
    prev_ll = ll;
  }
  if (std::abs(g.mean[1] - g.mean[0]) < kGmmMinSeparation || g.weight[0] <= 0.0 ||
      g.weight[1] <= 0.0)
    g.degenerate = true;
  return g;
}

PseudoLabels pseudo_ground_truth(const ScoreSet& score_set) {
  if (score_set.vectors.empty()) throw Error("pseudo ground truth needs at least one score vector");
  PseudoLabels out;
  out.batch_index = score_set.batch_index;
  const std::size_t len = score_set.length();
  std::vector<std::size_t> votes(len, 0);
  for (const auto& v : score_set.vectors) {
    if (v.scores.size() != len) throw Error("score vectors of unequal length");
    const auto flags = fit_gmm(v.scores).binarize(v.scores);
    for (std::size_t i = 0; i < len; ++i) votes[i] += flags[i];
  }
  const std::size_t m = score_set.vectors.size();
  out.labels.resize(len);
  for (std::size_t i = 0; i < len; ++i) out.labels[i] = 2 * votes[i] > m ? 1 : 0;
  return out;
}

double pseudo_performance(std::span<const double> scores, const PseudoLabels& pseudo) {
  if (scores.size() != pseudo.labels.size())
    throw Error("pseudo performance: score and label lengths differ");
  return stats::roc_auc(scores, pseudo.labels).value_or(0.5);
}

// ---------------------------------------------------------------------------
// Representatives and ensemble
// ---------------------------------------------------------------------------

std::vector<ModelId> RepresentativeSet::sorted_members() const {
  auto out = members;
  std::sort(out.begin(), out.end());
  return out;
}

RepresentativeSet select_representatives(const ModelGraph& graph, const Partition& partition,
                                         const ScoreSet& score_set, const PseudoLabels& pseudo,
                                         double alpha, double damping) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  partition.validate(graph);
  RepresentativeSet reps;
  reps.batch_index = partition.batch_index;
  const bool have_pseudo = !pseudo.labels.empty();

  for (const auto& community : partition.communities) {
    if (community.size() == 1) {
      const ModelId id = community.front();
      reps.members.push_back(id);
      reps.centrality[id] = 1.0;
      if (have_pseudo) {
        const double q = pseudo_performance(score_set.at(id).scores, pseudo);
        reps.performance[id] = q;
        reps.combined_scores[id] = alpha + (1.0 - alpha) * q;
      }
      continue;
    }
    if (!have_pseudo && alpha < 1.0)
      throw Error("pseudo labels are required to rank a multi-model community");

    const auto sub = induced_subgraph(graph, community);
    const auto pr = pagerank(sub, damping);
    const auto [lo, hi] = std::minmax_element(pr.begin(), pr.end());
    const double span = *hi - *lo;
    const bool flat = span <= 1e-12 * *hi;

    ModelId best = sub.nodes.front();
    double best_h = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sub.size(); ++k) {
      const ModelId id = sub.nodes[k];
      const double c = flat ? 1.0 : (pr[k] - *lo) / span;
      const double q = have_pseudo ? pseudo_performance(score_set.at(id).scores, pseudo) : 0.0;
      const double h = alpha * c + (1.0 - alpha) * q;
      reps.centrality[id] = c;
      if (have_pseudo) reps.performance[id] = q;
      reps.combined_scores[id] = h;
      if (h > best_h) {  // ascending ids, so ties keep the lower id
        best_h = h;
        best = id;
      }
    }
    reps.members.push_back(best);
  }
  return reps;
}

std::vector<double> z_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  const double sd = stats::stddev(v);
  if (!(sd > 0.0)) return out;
  const double m = stats::mean(v);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
  return out;
}

EnsembleScore ensemble(const RepresentativeSet& reps, const ScoreSet& score_set) {
  if (reps.members.empty()) throw Error("ensemble needs at least one representative");
  EnsembleScore out;
  out.batch_index = reps.batch_index;
  out.scores.assign(score_set.length(), 0.0);
  const auto ids = reps.sorted_members();
  for (ModelId id : ids) {
    const auto z = z_normalize(score_set.at(id).scores);
    for (std::size_t i = 0; i < z.size(); ++i) out.scores[i] += z[i];
  }
  const double count = static_cast<double>(ids.size());
  for (double& s : out.scores) s /= count;
  return out;
}

}  // namespace poolgraph
