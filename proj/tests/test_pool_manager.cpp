#include <doctest.h>

#include <numeric>
#include <random>

#include "poolgraph/pool_manager.hpp"

using namespace poolgraph;

namespace {

SeriesBuffer noise_batch(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SeriesBuffer b;
  b.dim = 1;
  b.data.resize(rows);
  for (double& x : b.data) x = g(rng);
  return b;
}

std::vector<ArchitectureSpec> zscore_specs(std::size_t count) {
  std::vector<ArchitectureSpec> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(parse_spec("zscore alpha=" + std::to_string(0.05 + 0.01 * static_cast<double>(k))));
  return out;
}

// A pool of `size` trained models tracked by a ledger; the first `defined` get long-term scores.
struct Fixture {
  ModelPool pool;
  PoolLedger ledger;

  Fixture(std::size_t size, std::size_t capacity, std::size_t defined) : pool(capacity) {
    const auto batch = noise_batch(64, 1);
    const auto specs = zscore_specs(size);
    pool.add(instantiate_and_train(specs, batch.view(), 5, pool.allocate_ids(size)));
    const auto ids = pool.ids();
    ledger.register_models(ids);
    for (std::size_t k = 0; k < defined; ++k) ledger.long_term[ids[k]] = 0.01 * static_cast<double>(k + 1);
  }
};

RepresentativeSet reps_of(std::vector<ModelId> ids) {
  RepresentativeSet r;
  r.members = std::move(ids);
  return r;
}

}  // namespace

TEST_CASE("record representatives") {
  PoolLedger ledger;
  const std::vector<ModelId> ids{1, 3, 8};
  ledger.register_models(ids);
  record_representatives(ledger, reps_of({3, 8}));
  CHECK(ledger.rep_counts == std::map<ModelId, std::uint64_t>{{1, 0}, {3, 1}, {8, 1}});
  record_representatives(ledger, reps_of({8, 3}));
  CHECK(ledger.rep_counts.at(3) == 2);
  CHECK(ledger.rep_counts.at(8) == 2);
  CHECK(ledger.rep_counts.at(1) == 0);
  CHECK_THROWS_AS(record_representatives(ledger, reps_of({})), Error);
  CHECK_THROWS_AS(record_representatives(ledger, reps_of({3, 9})), Error);
  CHECK(ledger.rep_counts.at(3) == 2);  // a rejected set changes nothing
  CHECK_THROWS_AS(ledger.register_models(ids), Error);
}

TEST_CASE("short-term scores") {
  PoolLedger ledger;
  ledger.rep_counts = {{0, 2}, {1, 1}, {2, 1}};
  CHECK(short_term_scores(ledger) == std::map<ModelId, double>{{0, 0.5}, {1, 0.25}, {2, 0.25}});
  ledger.rep_counts = {{0, 5}, {1, 0}, {2, 0}};
  CHECK(short_term_scores(ledger) == std::map<ModelId, double>{{0, 1.0}, {1, 0.0}, {2, 0.0}});
  ledger.rep_counts = {{0, 0}, {1, 0}, {2, 0}};
  for (const auto& [id, v] : short_term_scores(ledger)) CHECK(v == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    ledger.rep_counts.clear();
    for (ModelId id = 0; id < 1 + trial % 30; ++id) ledger.rep_counts[id] = rng() % 50;
    const auto cs = short_term_scores(ledger);
    double sum = 0;
    for (const auto& [id, v] : cs) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("long-term update") {
  PoolLedger ledger;
  ledger.rep_counts = {{0, 4}, {1, 2}};
  ledger.long_term = {{0, 0.8}, {1, std::nullopt}};
  update_long_term(ledger, {{0, 0.4}, {1, 0.25}});
  CHECK(*ledger.long_term.at(0) == doctest::Approx(0.6));
  CHECK(*ledger.long_term.at(1) == 0.25);
  CHECK(ledger.counters_zero());

  ledger.gamma = 1.0;
  update_long_term(ledger, {{0, 0.1}, {1, 0.9}});
  CHECK(*ledger.long_term.at(0) == 0.1);
  CHECK(*ledger.long_term.at(1) == 0.9);
  CHECK_THROWS_AS(update_long_term(ledger, {{0, 0.1}}), Error);
}

TEST_CASE("n_exceed") {
  CHECK(n_exceed(20, 15, 30) == 5);
  CHECK(n_exceed(10, 15, 30) == 0);
  CHECK(n_exceed(30, 15, 30) == 15);
}

TEST_CASE("prune removes the smallest defined long-term scores") {
  Fixture f(3, 10, 0);
  f.ledger.long_term = {{0, 0.5}, {1, 0.1}, {2, 0.4}};
  CHECK(prune(f.pool, f.ledger, 0).empty());
  CHECK(f.pool.size() == 3);
  CHECK(prune(f.pool, f.ledger, 1) == std::vector<ModelId>{1});
  CHECK(f.pool.ids() == std::vector<ModelId>{0, 2});
  CHECK_FALSE(f.ledger.rep_counts.count(1));
  CHECK_FALSE(f.ledger.long_term.count(1));

  Fixture tie(2, 10, 0);
  tie.ledger.long_term = {{0, 0.2}, {1, 0.2}};
  CHECK(prune(tie.pool, tie.ledger, 1) == std::vector<ModelId>{0});

  // Undefined scores are exempt, so only two of the requested three go.
  Fixture exempt(4, 10, 0);
  exempt.ledger.long_term = {{0, std::nullopt}, {1, 0.3}, {2, std::nullopt}, {3, 0.1}};
  CHECK(prune(exempt.pool, exempt.ledger, 3) == std::vector<ModelId>{1, 3});
  CHECK(exempt.pool.ids() == std::vector<ModelId>{0, 2});
}

TEST_CASE("major update at capacity") {
  Fixture f(20, 30, 20);
  const auto arch = builtin_arch_set();
  REQUIRE(arch.size() == 12);
  const auto batch = noise_batch(64, 2);
  record_representatives(f.ledger, reps_of({0, 4}));
  score_pool(f.pool, batch.view(), 1);
  const auto out = major_update(f.pool, f.ledger, arch, batch.view(), 1, 9);

  CHECK(out.kind == UpdateKind::major);
  CHECK(out.pruned.size() == 2);
  CHECK(out.added.size() == 12);
  CHECK(f.pool.size() == 30);
  CHECK(out.trained.size() == 18);
  CHECK(f.ledger.counters_zero());
  CHECK(f.ledger.last_drift_batch == 1);
  // Short-term scores: 0 and 4 were each chosen once; the rest never.
  CHECK(out.short_term.at(0) == 0.5);
  CHECK(out.short_term.at(1) == 0.0);
  // After the update CS_j = 0.5 cs_j + 0.5 * 0.01 (j + 1), so models 1 and 2 are the smallest.
  CHECK(out.pruned == std::vector<ModelId>{1, 2});
  for (ModelId id : out.added) {
    CHECK_FALSE(f.ledger.long_term.at(id).has_value());
    CHECK(f.pool.at(id).birth_batch == 1);
    CHECK(id >= 20);
  }
  for (const auto& [id, cs] : f.ledger.long_term)
    if (cs) {
      CHECK(*cs >= 0.0);
      CHECK(*cs <= 1.0);
    }
}

TEST_CASE("major update below capacity, on consecutive drifts and with a prune shortfall") {
  Fixture small(5, 20, 5);
  const auto arch = builtin_arch_set();
  const auto batch = noise_batch(64, 3);
  score_pool(small.pool, batch.view(), 4);
  auto out = major_update(small.pool, small.ledger, arch, batch.view(), 4, 9);
  CHECK(out.pruned.empty());
  CHECK(small.pool.size() == 17);

  // Back-to-back drift: cs is uniform (1/17), so the newcomers from drift 4 receive their first
  // long-term score 1/17 and become the prunable minimum; ties go to the lower ids 5..13.
  score_pool(small.pool, batch.view(), 5);
  out = major_update(small.pool, small.ledger, arch, batch.view(), 5, 9);
  CHECK(out.pruned == std::vector<ModelId>{5, 6, 7, 8, 9, 10, 11, 12, 13});
  CHECK(out.added.size() == 12);
  CHECK(small.pool.size() == 20);

  // Capacity below the architecture count: five prunable models cannot cover an excess of
  // seven, so two architectures are not instantiated.
  Fixture tight(5, 10, 5);
  score_pool(tight.pool, batch.view(), 2);
  out = major_update(tight.pool, tight.ledger, arch, batch.view(), 2, 9);
  CHECK(out.pruned.size() == 5);
  CHECK(out.added.size() == 10);
  CHECK(tight.pool.size() == 10);
}

TEST_CASE("reduce newcomers drops from the most represented family") {
  ModelPool pool(40);
  const auto batch = noise_batch(64, 4);
  pool.add(instantiate_and_train(zscore_specs(4), batch.view(), 1, pool.allocate_ids(4)));
  const auto arch = builtin_arch_set();
  const auto kept = reduce_newcomers(arch, pool, 3);
  CHECK(kept.size() == arch.size() - 3);
  const auto count = [](const std::vector<ArchitectureSpec>& v, Family f) {
    return std::count_if(v.begin(), v.end(), [f](const auto& s) { return s.family == f; });
  };
  CHECK(count(kept, Family::zscore) == 0);
  CHECK(reduce_newcomers(arch, pool, 0) == arch);
  CHECK(reduce_newcomers(arch, pool, 50).empty());
}

TEST_CASE("minor update trains only the representatives") {
  Fixture f(10, 30, 0);
  const auto batch = noise_batch(64, 6);
  std::map<ModelId, std::uint64_t> before;
  for (const auto& m : f.pool.models()) before[m.id] = m.detector->state_hash();
  score_pool(f.pool, batch.view(), 2);
  const auto out = minor_update(f.pool, reps_of({8, 3}), batch.view(), 2);
  CHECK(out.kind == UpdateKind::minor);
  CHECK(out.trained == std::vector<ModelId>{3, 8});
  CHECK(out.pruned.empty());
  CHECK(out.added.empty());
  CHECK(f.pool.size() == 10);
  for (const auto& m : f.pool.models()) {
    const bool trained = m.id == 3 || m.id == 8;
    CHECK((m.detector->state_hash() != before[m.id]) == trained);
  }
  CHECK_THROWS_AS(minor_update(f.pool, reps_of({3}), batch.view(), 7), Error);
}
