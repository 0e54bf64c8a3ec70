// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "poolgraph/drift.hpp"
#include "poolgraph/pipeline.hpp"
#include "poolgraph/rank_stats.hpp"

using namespace poolgraph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects mismatches without stopping at the first one.
struct Check {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first;

  void expect(bool ok, const std::string& what) {
    ++cases;
    if (ok) return;
    if (failures++ == 0) first = what;
  }
};

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::vector<std::vector<std::size_t>> set_partitions(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  oracle::for_each_partition(n, [&](const std::vector<std::size_t>& l) { out.push_back(l); });
  return out;
}

CentralityRanking ranking_of(const std::vector<std::size_t>& ranks) {
  CentralityRanking r;
  for (std::size_t i = 0; i < ranks.size(); ++i) r.ranking[static_cast<ModelId>(i)] = ranks[i];
  return r;
}

// ---------------------------------------------------------------------------
// 1. Statistic oracles
// ---------------------------------------------------------------------------

Outcome statistic_oracles() {
  const auto start = Clock::now();
  constexpr double tol = 1e-9;
  Check spear, kendall, nmi, auc;
  std::mt19937_64 rng(101);

  // Spearman and Kendall drift: every permutation of 1..n against the identity, n <= 8.
  for (std::size_t n = 2; n <= 8; ++n) {
    std::vector<double> base(n);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<std::size_t> ibase(n), perm(n);
    std::iota(ibase.begin(), ibase.end(), 1);
    perm = ibase;
    const auto prev = ranking_of(ibase);
    do {
      const std::vector<double> p(perm.begin(), perm.end());
      spear.expect(std::abs(stats::spearman(base, p) - oracle::spearman(base, p)) <= tol,
                   "spearman n=" + std::to_string(n));
      const double lib = *centrality_drift(prev, ranking_of(perm));
      const double ref = (1.0 - *oracle::kendall_tau_b(base, p)) / 2.0;
      kendall.expect(std::abs(lib - ref) <= 1e-12, "kendall n=" + std::to_string(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  // NMI: all pairs of set partitions for n <= 6, every partition against three references for 7, 8.
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto parts = set_partitions(n);
    std::vector<std::vector<std::size_t>> refs = parts;
    if (n > 6) refs = {parts.front(), parts[parts.size() / 2], parts.back()};
    for (const auto& a : parts)
      for (const auto& b : refs) {
        const double lib = stats::normalized_mutual_information(a, b);
        nmi.expect(std::abs(lib - oracle::nmi(a, b)) <= tol, "nmi n=" + std::to_string(n));
      }
  }
  // AUC: every score vector over {0,1,2}^n against every two-class labeling, n <= 8.
  for (std::size_t n = 2; n <= 8; ++n) {
    std::size_t score_codes = 1;
    for (std::size_t i = 0; i < n; ++i) score_codes *= 3;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t sc = 0; sc < score_codes; ++sc) {
      for (std::size_t i = 0, c = sc; i < n; ++i, c /= 3) s[i] = static_cast<double>(c % 3);
      for (std::size_t yc = 1; yc + 1 < (std::size_t{1} << n); ++yc) {
        for (std::size_t i = 0; i < n; ++i) y[i] = (yc >> i) & 1;
        auc.expect(std::abs(*stats::roc_auc(s, y) - *oracle::auc(s, y)) <= tol,
                   "auc n=" + std::to_string(n));
      }
    }
  }
  // 200 seeded random cases each, with ties.
  std::uniform_int_distribution<int> level(0, 7);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 9 + trial % 42;
    std::vector<double> a(n), b(n);
    std::vector<std::size_t> la(n), lb(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = level(rng);
      b[i] = level(rng);
      la[i] = static_cast<std::size_t>(level(rng)) % 4;
      lb[i] = static_cast<std::size_t>(level(rng)) % 3;
      y[i] = coin(rng);
    }
    y[0] = 1;
    y[1] = 0;
    spear.expect(std::abs(stats::spearman(a, b) - oracle::spearman(a, b)) <= tol, "spearman random");
    std::vector<std::size_t> ra(n), rb(n);
    std::iota(ra.begin(), ra.end(), 1);
    std::iota(rb.begin(), rb.end(), 1);
    std::shuffle(ra.begin(), ra.end(), rng);
    std::shuffle(rb.begin(), rb.end(), rng);
    const double ref = (1.0 - *oracle::kendall_tau_b(std::vector<double>(ra.begin(), ra.end()),
                                                     std::vector<double>(rb.begin(), rb.end()))) /
                       2.0;
    kendall.expect(std::abs(*centrality_drift(ranking_of(ra), ranking_of(rb)) - ref) <= 1e-12,
                   "kendall random");
    nmi.expect(std::abs(stats::normalized_mutual_information(la, lb) - oracle::nmi(la, lb)) <= tol,
               "nmi random");
    auc.expect(std::abs(*stats::roc_auc(a, y) - *oracle::auc(a, y)) <= tol, "auc random");
  }
  const double secs = seconds_since(start);
  std::size_t cases = 0, failures = 0;
  std::string first;
  for (const auto* c : {&spear, &kendall, &nmi, &auc}) {
    cases += c->cases;
    failures += c->failures;
    if (first.empty()) first = c->first;
  }
  std::ostringstream d;
  d << cases << " cases (spearman " << spear.cases << ", kendall " << kendall.cases << ", nmi "
    << nmi.cases << ", auc " << auc.cases << "), " << failures << " mismatches";
  if (failures) d << " first: " << first;
  d << ", " << fmt(secs, 2) << " s";
  return {failures == 0 && secs < 10.0, d.str()};
}

// ---------------------------------------------------------------------------
// 2. Louvain planted partitions and optimality ratio
// ---------------------------------------------------------------------------

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

Outcome louvain_planted() {
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;
  for (const auto& sizes : {std::vector<std::size_t>{5, 5}, std::vector<std::size_t>{5, 5, 5}}) {
    const auto g = oracle::planted(sizes, 0.9, 0.05);
    std::vector<std::size_t> truth;
    for (std::size_t b = 0; b < sizes.size(); ++b) truth.insert(truth.end(), sizes[b], b);
    std::size_t exact = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
      exact += same_partition(oracle::labels_of(g, louvain(g, 1.0, seed, true)), truth);
    d << sizes.size() << "x5 cliques " << exact << "/50; ";
    ok = ok && exact == 50;
  }
  std::mt19937_64 rng(202);
  double ratio = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_connected(3 + trial % 6, 0.35, rng);
    const double q = modularity(g, louvain(g, 1.0), 1.0);
    const double best = oracle::best_modularity(g, 1.0);
    ratio += best > 1e-9 ? q / best : 1.0;
  }
  ratio /= 50;
  const double secs = seconds_since(start);
  d << "mean modularity ratio " << fmt(ratio) << " over 50 graphs, " << fmt(secs, 2) << " s";
  return {ok && ratio >= 0.95 && secs < 30.0, d.str()};
}

// ---------------------------------------------------------------------------
// 3. PageRank
// ---------------------------------------------------------------------------

Outcome pagerank_checks() {
  double worst_sum = 0;
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    auto g = oracle::random_connected(1 + trial % 15, 0.3, rng);
    if (trial % 7 == 0) g.nodes.push_back(static_cast<ModelId>(g.size()));
    const auto pr = pagerank(g);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0));
  }
  std::vector<std::vector<double>> k4(4, std::vector<double>(4, 1.0));
  for (std::size_t i = 0; i < 4; ++i) k4[i][i] = 0;
  double k4_err = 0;
  for (double p : pagerank(oracle::graph_from(k4))) k4_err = std::max(k4_err, std::abs(p - 0.25));

  // Path a-b-c: x = (1-d)/3 + d y/2 and y = (1-d)/3 + 2 d x.
  const double d = 0.85, t = (1 - d) / 3;
  const double y = t * (1 + 2 * d) / (1 - d * d);
  const double x = t + d * y / 2;
  std::vector<std::vector<double>> path{{0, 1, 0}, {1, 0, 1}, {0, 1, 0}};
  const auto pr = pagerank(oracle::graph_from(path), d);
  const double path_err =
      std::max({std::abs(pr[0] - x), std::abs(pr[1] - y), std::abs(pr[2] - x)});
  std::ostringstream s;
  s << "max |sum-1| " << worst_sum << " over 200 graphs; K4 error " << k4_err << "; path error "
    << path_err << " (closed form " << fmt(x, 6) << ", " << fmt(y, 6) << ", " << fmt(x, 6) << ")";
  return {worst_sum <= 1e-9 && k4_err <= 1e-9 && path_err <= 1e-6, s.str()};
}

// ---------------------------------------------------------------------------
// 4. Resolution limits
// ---------------------------------------------------------------------------

Outcome resolution_limits() {
  const auto stream = synth_stream("sinusoid", 6144, 0.01, std::nullopt, 4);
  const auto arch = builtin_arch_set();
  PipelineConfig base;
  base.batch_size = 256;
  base.seed = 4;

  auto low = base;
  low.resolution = 0.01;
  auto high = base;
  high.resolution = 100.0;
  const auto r_low = run(stream, arch, low);
  const auto r_best = run(stream, arch, ablation_mode(base, AblationMode::single_best));
  const auto r_high = run(stream, arch, high);
  const auto r_avg = run(stream, arch, ablation_mode(base, AblationMode::average_ensemble));
  const bool eq_low = r_low.all_scores() == r_best.all_scores();
  const bool eq_high = r_high.all_scores() == r_avg.all_scores();
  std::ostringstream d;
  d << arch.size() << "-model fixture, " << r_low.scored_steps << " steps: resolution 0.01 vs "
    << "single_best " << (eq_low ? "bit-equal" : "DIFFERENT") << " (mean communities "
    << fmt(r_low.mean_communities(), 2) << "); resolution 100 vs average_ensemble "
    << (eq_high ? "bit-equal" : "DIFFERENT") << " (mean communities "
    << fmt(r_high.mean_communities(), 2) << ")";
  return {eq_low && eq_high, d.str()};
}

// ---------------------------------------------------------------------------
// 5 and 6. End-to-end detection and efficiency direction
// ---------------------------------------------------------------------------

struct SeedRuns {
  RunReport full;
  RunReport average;
  double full_wall_s = 0;
};

LabeledStream sinusoid_fixture(std::uint64_t seed) {
  return synth_stream("sinusoid", 20000, 0.01, std::nullopt, seed);
}

std::vector<SeedRuns> seeded_runs() {
  std::vector<SeedRuns> out;
  const auto arch = builtin_arch_set();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto stream = sinusoid_fixture(seed);
    PipelineConfig config;
    config.seed = seed;
    SeedRuns r;
    const auto start = Clock::now();
    r.full = run(stream, arch, config);
    r.full_wall_s = seconds_since(start);
    r.average = run(stream, arch, ablation_mode(config, AblationMode::average_ensemble));
    out.push_back(std::move(r));
  }
  return out;
}

Outcome end_to_end(const std::vector<SeedRuns>& runs) {
  const auto& r = runs.front();  // seed 1
  PipelineConfig config;
  config.seed = 1;
  const auto individuals = run_individuals(sinusoid_fixture(1), builtin_arch_set(), config);
  std::vector<double> ind;
  for (const auto& i : individuals) ind.push_back(i.auc.value_or(0.0));
  std::sort(ind.begin(), ind.end());
  const double median = ind.size() % 2 ? ind[ind.size() / 2]
                                       : 0.5 * (ind[ind.size() / 2 - 1] + ind[ind.size() / 2]);
  const double full = r.full.auc.value_or(0.0);
  const double avg = r.average.auc.value_or(0.0);
  const bool ok = full >= 0.90 && full >= median && full >= avg - 0.02 && r.full_wall_s < 60.0;
  std::ostringstream d;
  d << "seed 1: AUC " << fmt(full) << ", median individual " << fmt(median) << " (range "
    << fmt(ind.front()) << ".." << fmt(ind.back()) << "), average_ensemble " << fmt(avg)
    << ", wall " << fmt(r.full_wall_s, 2) << " s";
  return {ok, d.str()};
}

Outcome efficiency(const std::vector<SeedRuns>& runs) {
  std::size_t wins = 0;
  std::ostringstream d;
  d << "ADT full/average (ms):";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const bool win = runs[i].full.adt_ms < runs[i].average.adt_ms;
    wins += win;
    d << ' ' << fmt(runs[i].full.adt_ms) << '/' << fmt(runs[i].average.adt_ms)
      << "[drifts " << runs[i].full.drift_batches.size() << ']';
  }
  d << "; full faster in " << wins << "/10";
  return {wins >= 8, d.str()};
}

// ---------------------------------------------------------------------------
// 7. Drift responsiveness
// ---------------------------------------------------------------------------

Outcome drift_response() {
  const auto arch = builtin_arch_set();
  std::size_t caught = 0, quiet_majors = 0;
  std::ostringstream d;
  d << "first major after the shift batch:";
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec spec;
    spec.length = 20000;
    spec.anomaly_rate = 0.01;
    spec.seed = seed;
    spec.shift = MeanShift{10000, 5.0 * stationary_stddev(spec)};
    const auto stream = synth_stream(spec);
    PipelineConfig config;
    config.seed = seed;
    const std::size_t shift_batch = spec.shift->at / config.batch_size;
    const auto report = run(stream, arch, config);
    std::optional<std::size_t> first;
    for (std::size_t t : report.drift_batches)
      if (t >= shift_batch) {
        first = t;
        break;
      }
    const bool hit = first && *first <= shift_batch + 3;
    caught += hit;
    d << ' ' << (first ? "+" + std::to_string(*first - shift_batch) : std::string("none"));

    config.theta_drift = 0.999;
    quiet_majors += run(stream, arch, config).drift_batches.size();
  }
  d << "; within 3 batches in " << caught << "/10; majors at theta 0.999: " << quiet_majors;
  return {caught >= 8 && quiet_majors == 0, d.str()};
}

// ---------------------------------------------------------------------------
// 8. Pool lifecycle
// ---------------------------------------------------------------------------

Outcome pool_lifecycle() {
  const auto stream = synth_stream("sinusoid", 10000, 0.01, std::nullopt, 8);
  const auto arch = builtin_arch_set();
  PipelineConfig config;
  config.theta_drift = 0.01;
  config.seed = 8;
  const std::size_t cap = config.effective_capacity(arch.size());
  Check c;
  std::size_t majors = 0;
  std::set<ModelId> before;
  bool have_before = false;
  const auto report = run(stream, arch, config, [&](const BatchResult& r, const Pipeline& p) {
    c.expect(p.pool().size() <= cap, "pool above capacity at t=" + std::to_string(r.batch_index));
    if (r.update.kind == UpdateKind::major) {
      ++majors;
      double sum = 0;
      for (const auto& [id, v] : r.update.short_term) sum += v;
      c.expect(std::abs(sum - 1.0) <= 1e-12, "cs sum at t=" + std::to_string(r.batch_index));
      for (ModelId id : r.update.pruned) {
        c.expect(std::find(r.update.added.begin(), r.update.added.end(), id) == r.update.added.end(),
                 "newcomer pruned at birth");
        c.expect(!have_before || before.count(id) == 1, "pruned a model not in the previous pool");
      }
      for (ModelId id : r.update.added) {
        const auto* m = p.pool().find(id);
        c.expect(m && m->birth_batch == r.batch_index, "newcomer birth batch");
      }
      c.expect(p.ledger().counters_zero(), "counters after major at t=" + std::to_string(r.batch_index));
    }
    const auto ids = p.pool().ids();
    before = std::set<ModelId>(ids.begin(), ids.end());
    have_before = true;
  });
  std::ostringstream d;
  d << report.batches.size() << " batches, " << majors << " major updates, capacity " << cap
    << ", " << c.cases << " checks, " << c.failures << " violations";
  if (c.failures) d << " first: " << c.first;
  return {c.failures == 0 && majors >= report.batches.size() / 5, d.str()};
}

// ---------------------------------------------------------------------------
// 9. Determinism and 10. ADT identity
// ---------------------------------------------------------------------------

Outcome determinism() {
  const auto stream = synth_stream("sinusoid", 10000, 0.01, std::nullopt, 9);
  PipelineConfig config;
  config.seed = 9;
  auto dump = [&] {
    std::ostringstream out;
    for (const auto& b : run(stream, builtin_arch_set(), config).batches)
      write_batch_jsonl(b, out, false);
    return out.str();
  };
  const auto a = dump();
  const auto b = dump();
  return {a == b && !a.empty(), std::to_string(a.size()) + " JSONL bytes per run, " +
                                    (a == b ? "identical" : "DIFFERENT")};
}

Outcome adt_identity(const std::vector<SeedRuns>& runs) {
  double worst = 0;
  for (const auto& r : runs)
    for (const auto* rep : {&r.full, &r.average}) {
      double sum = 0;
      for (const auto& b : rep->batches) sum += b.elapsed_ms;
      const double rel = std::abs(rep->adt_ms * static_cast<double>(rep->scored_steps) - sum) / sum;
      worst = std::max(worst, rel);
    }
  return {worst <= 0.01, "worst relative gap " + std::to_string(worst) + " over 20 runs"};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  auto guarded = [](const std::function<Outcome()>& f) -> Outcome {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "statistic oracles", guarded(statistic_oracles));
  report(2, "louvain planted partitions", guarded(louvain_planted));
  report(3, "pagerank", guarded(pagerank_checks));
  report(4, "resolution limits", guarded(resolution_limits));
  std::vector<SeedRuns> runs;
  const auto runs_ok = guarded([&] {
    runs = seeded_runs();
    return Outcome{true, ""};
  });
  if (runs_ok.pass) {
    report(5, "end-to-end detection", guarded([&] { return end_to_end(runs); }));
    report(6, "efficiency direction", guarded([&] { return efficiency(runs); }));
  } else {
    report(5, "end-to-end detection", runs_ok);
    report(6, "efficiency direction", runs_ok);
  }
  report(7, "drift responsiveness", guarded(drift_response));
  report(8, "pool lifecycle", guarded(pool_lifecycle));
  report(9, "determinism", guarded(determinism));
  report(10, "adt identity",
         runs_ok.pass ? guarded([&] { return adt_identity(runs); }) : runs_ok);
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
