#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "poolgraph/rank_stats.hpp"

using namespace poolgraph;

namespace {

std::vector<double> random_with_ties(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("average ranks split ties") {
  const std::vector<double> x{10, 20, 20, 5};
  CHECK(stats::average_ranks(x) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK(stats::average_ranks(std::vector<double>{7, 7, 7}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("spearman examples") {
  const std::vector<double> a{1, 2, 3, 4}, up{10, 20, 30, 40}, down{4, 3, 2, 1};
  CHECK(stats::spearman(a, up) == doctest::Approx(1.0));
  CHECK(stats::spearman(a, down) == doctest::Approx(-1.0));
  // Pearson of rank vectors (1,2,3) and (1,3,2): covariance 1/2 of variance 1.
  CHECK(stats::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats::spearman(a, std::vector<double>{5, 5, 5, 5}) == 0.0);
}

TEST_CASE("spearman matches the rank-Pearson oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 29;
    const auto a = random_with_ties(rng, n, 1 + trial % 7);
    const auto b = random_with_ties(rng, n, 2 + trial % 5);
    CHECK(stats::spearman(a, b) == doctest::Approx(oracle::spearman(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("spearman is invariant under increasing transforms and symmetric") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(40), b(40), fb(40);
    for (auto& x : a) x = g(rng);
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = g(rng);
      fb[i] = std::exp(3 * b[i]) + 2;
    }
    CHECK(stats::spearman(a, b) == stats::spearman(a, fb));
    CHECK(stats::spearman(a, b) == stats::spearman(b, a));
  }
}

TEST_CASE("kendall tau-b examples") {
  CHECK(*stats::kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 1.0);
  CHECK(*stats::kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == -1.0);
  // One discordant pair of three: (2 - 1) / 3.
  CHECK(*stats::kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_FALSE(stats::kendall_tau_b(std::vector<double>{1}, std::vector<double>{1}).has_value());
  CHECK_FALSE(
      stats::kendall_tau_b(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}).has_value());
}

TEST_CASE("kendall matches the pair-counting oracle on every permutation up to 8") {
  for (std::size_t n = 2; n <= 8; ++n) {
    std::vector<double> base(n), perm(n);
    std::iota(base.begin(), base.end(), 1.0);
    perm = base;
    std::size_t checked = 0;
    do {
      const auto lib = stats::kendall_tau_b(base, perm);
      const auto ref = oracle::kendall_tau_b(base, perm);
      REQUIRE(lib.has_value());
      if (std::abs(*lib - *ref) > 1e-12) FAIL("n=" << n << " mismatch");
      ++checked;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(checked > 0);
  }
}

TEST_CASE("kendall matches the oracle on random tied inputs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 9 + trial % 30;
    const auto a = random_with_ties(rng, n, 3 + trial % 6);
    const auto b = random_with_ties(rng, n, 3 + trial % 4);
    const auto lib = stats::kendall_tau_b(a, b);
    const auto ref = oracle::kendall_tau_b(a, b);
    REQUIRE(lib.has_value() == ref.has_value());
    if (lib) CHECK(*lib == doctest::Approx(*ref).epsilon(1e-12));
  }
}

TEST_CASE("roc auc examples and oracle") {
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(*stats::roc_auc(s, std::vector<std::uint8_t>{0, 0, 1, 1}) == 1.0);
  CHECK(*stats::roc_auc(std::vector<double>{4, 3, 2, 1}, std::vector<std::uint8_t>{0, 0, 1, 1}) ==
        0.0);
  // Pairs (2>1), (4>1), (4>3) correct, (2<3) wrong.
  CHECK(*stats::roc_auc(s, std::vector<std::uint8_t>{0, 1, 0, 1}) == 0.75);
  CHECK(*stats::roc_auc(std::vector<double>{1, 1}, std::vector<std::uint8_t>{0, 1}) == 0.5);
  CHECK_FALSE(stats::roc_auc(s, std::vector<std::uint8_t>{1, 1, 1, 1}).has_value());

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 49;
    const auto sc = random_with_ties(rng, n, 2 + trial % 10);
    std::vector<std::uint8_t> y(n);
    std::bernoulli_distribution coin(0.3);
    for (auto& v : y) v = coin(rng) ? 1 : 0;
    const auto lib = stats::roc_auc(sc, y);
    const auto ref = oracle::auc(sc, y);
    REQUIRE(lib.has_value() == ref.has_value());
    if (lib) CHECK(*lib == doctest::Approx(*ref).epsilon(1e-12));
  }
}

TEST_CASE("nmi examples and oracle") {
  using L = std::vector<std::size_t>;
  CHECK(stats::normalized_mutual_information(L{0, 0, 1, 1}, L{0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(stats::normalized_mutual_information(L{0, 0, 1, 1}, L{5, 5, 2, 2}) == doctest::Approx(1.0));
  // {1,2}{3,4} against {1,3}{2,4}: every cell of the contingency table is 1/4, so MI = 0.
  CHECK(stats::normalized_mutual_information(L{0, 0, 1, 1}, L{0, 1, 0, 1}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats::normalized_mutual_information(L{0, 0, 0}, L{1, 1, 1}) == 1.0);
  CHECK(stats::normalized_mutual_information(L{0, 0, 0, 0}, L{0, 0, 1, 1}) == 0.0);

  // Every pair of labelings of 6 items with up to 3 labels each.
  std::vector<L> all;
  for (std::size_t code = 0; code < 729; ++code) {
    L l(6);
    std::size_t c = code;
    for (auto& v : l) {
      v = c % 3;
      c /= 3;
    }
    all.push_back(l);
  }
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto& a = all[pick(rng)];
    const auto& b = all[pick(rng)];
    const double lib = stats::normalized_mutual_information(a, b);
    CHECK(lib == doctest::Approx(oracle::nmi(a, b)).epsilon(1e-9));
    CHECK(lib == stats::normalized_mutual_information(b, a));
  }
}

TEST_CASE("mean and population stddev") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(stats::mean(v) == 5.0);
  CHECK(stats::stddev(v) == doctest::Approx(2.0));
}
