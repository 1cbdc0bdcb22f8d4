#include "doctest.h"

#include <bit>
#include <cmath>
#include <random>

#include "verirl/evalkit.hpp"

using namespace verirl;
using namespace verirl::evalkit;
using doctest::Approx;

namespace {

// Fraction of k-subsets of {0..n-1} that hit one of the first c items.
double enumerate_pass_at_k(int n, int c, int k) {
  long hit = 0;
  long total = 0;
  const unsigned correct = (1u << c) - 1u;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    ++total;
    if (mask & correct) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

reward::RewardBreakdown bd(bool match) {
  return {true, true, match, match ? 1.2 : 0.2};
}

}  // namespace

TEST_CASE("pass_at_k examples") {
  CHECK(pass_at_k(4, 2, 2) == Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(pass_at_k(4, 3, 2) == 1.0);
  CHECK(pass_at_k(10, 0, 5) == 0.0);
  CHECK(pass_at_k(128, 0, 128) == 0.0);
  CHECK_THROWS_AS(pass_at_k(4, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(pass_at_k(4, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(pass_at_k(4, 1, 5), std::invalid_argument);
}

TEST_CASE("pass_at_k equals subset enumeration for n <= 12") {
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        CHECK(std::abs(pass_at_k(n, c, k) - enumerate_pass_at_k(n, c, k)) < 1e-12);
      }
    }
  }
}

TEST_CASE("pass_at_k identities") {
  for (int n = 1; n <= 128; n += 7) {
    for (int c = 0; c <= n; c += 3) {
      CHECK(std::abs(pass_at_k(n, c, 1) - static_cast<double>(c) / n) < 1e-15);
      double prev = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double v = pass_at_k(n, c, k);
        CHECK(v >= prev);
        if (c > 0 && k > n - c) CHECK(v == 1.0);
        prev = v;
      }
    }
  }
}

TEST_CASE("pass_at_k matches Monte Carlo at n = 128") {
  std::mt19937_64 rng(17);
  std::vector<int> idx(128);
  for (int c : {1, 5, 20, 64}) {
    for (int k : {1, 4, 16, 64}) {
      int hits = 0;
      const int draws = 20000;
      for (int d = 0; d < draws; ++d) {
        for (int i = 0; i < 128; ++i) idx[i] = i;
        bool hit = false;
        for (int j = 0; j < k; ++j) {
          std::uniform_int_distribution<int> u(j, 127);
          std::swap(idx[j], idx[u(rng)]);
          if (idx[j] < c) hit = true;
        }
        hits += hit;
      }
      CHECK(std::abs(pass_at_k(128, c, k) - static_cast<double>(hits) / draws) < 0.015);
    }
  }
}

TEST_CASE("pass_at_k_curve") {
  auto curve = pass_at_k_curve({4, {4, 0}, {4}});
  CHECK(curve.estimates[0] == 0.5);
  curve = pass_at_k_curve({8, {8, 8, 8}, {1, 2, 4, 8}});
  for (double e : curve.estimates) CHECK(e == 1.0);

  std::mt19937_64 rng(2);
  std::vector<int> counts;
  for (int i = 0; i < 9; ++i) counts.push_back(static_cast<int>(rng() % 13));
  std::vector<int> ks(12);
  for (int k = 1; k <= 12; ++k) ks[k - 1] = k;
  curve = pass_at_k_curve({12, counts, ks});
  for (std::size_t j = 0; j < ks.size(); ++j) {
    double oracle = 0.0;
    for (int c : counts) oracle += enumerate_pass_at_k(12, c, ks[j]);
    oracle /= counts.size();
    CHECK(std::abs(curve.estimates[j] - oracle) < 1e-12);
    if (j > 0) CHECK(curve.estimates[j] >= curve.estimates[j - 1]);
  }
  CHECK_THROWS_AS(pass_at_k_curve({4, {}, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(pass_at_k_curve({4, {5}, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(pass_at_k_curve({4, {1}, {2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(pass_at_k_curve({4, {1}, {8}}), std::invalid_argument);
}

TEST_CASE("entity_accuracy") {
  std::vector<reward::RewardBreakdown> v;
  for (int i = 0; i < 10; ++i) v.push_back(bd(i < 3));
  CHECK(entity_accuracy(v) == Approx(30.0));
  v.assign(4, bd(true));
  CHECK(entity_accuracy(v) == 100.0);
  v.assign(4, bd(false));
  CHECK(entity_accuracy(v) == 0.0);
  // Matches count regardless of gates unless gated accuracy is asked for.
  v = {bd(true), {true, false, true, 0.0}};
  CHECK(entity_accuracy(v) == 100.0);
  CHECK(entity_accuracy(v, true) == 50.0);
  CHECK_THROWS_AS(entity_accuracy(std::vector<reward::RewardBreakdown>{}),
                  std::invalid_argument);
}

TEST_CASE("chrf examples") {
  CHECK(chrf("abc", "abc") == 100.0);
  CHECK(chrf("xyz", "abc") == 0.0);
  CHECK(chrf("ab", "abc", 2, 2.0) == Approx(700.0 / 11.0).epsilon(1e-9));
  CHECK(std::abs(chrf("ab", "abc", 2, 2.0) - 63.636) < 1e-3);
  CHECK(chrf("", "") == 100.0);
  CHECK(chrf("", "abc") == 0.0);
  CHECK(chrf("a b c", "abc") == 100.0);
}

TEST_CASE("chrf bounds") {
  std::mt19937_64 rng(4);
  const std::string alphabet = "abcde é大";
  for (int i = 0; i < 300; ++i) {
    std::string a;
    std::string b;
    for (int j = 0; j < 1 + static_cast<int>(rng() % 8); ++j) a += alphabet[rng() % 6];
    for (int j = 0; j < static_cast<int>(rng() % 8); ++j) b += alphabet[rng() % 6];
    const double f = chrf(a, b);
    CHECK(f >= 0.0);
    CHECK(f <= 100.0);
    CHECK(chrf(a, a) == Approx(100.0));
  }
  CHECK_THROWS_AS(chrf("a", "a", 0), std::invalid_argument);
  CHECK_THROWS_AS(chrf("a", "a", 2, 0.0), std::invalid_argument);
}
