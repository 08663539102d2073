#include "smra/orbit.hpp"
#include "smra/signal.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <set>

using namespace smra;

namespace {

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RealVector random_vector(int L, Rng& rng) {
  RealVector v(L);
  for (int i = 0; i < L; ++i) v[i] = rng.normal();
  return v;
}

// All supports of size m in {0..L-1}, visited via callback.
template <class F>
void for_each_support(int L, int m, F&& f) {
  std::vector<int> s(m);
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == m) {
      f(s);
      return;
    }
    for (int i = start; i < L; ++i) {
      s[pos] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
}

// Collision-free iff no two distinct ordered pairs share a circular difference.
bool collision_free_by_pairs(const std::vector<int>& s, int L) {
  std::vector<std::pair<int, int>> pairs;
  for (int a : s)
    for (int b : s)
      if (a != b) pairs.emplace_back(a, b);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j)
      if (((pairs[i].first - pairs[i].second) % L + L) % L == ((pairs[j].first - pairs[j].second) % L + L) % L)
        return false;
  return true;
}

}  // namespace

TEST_CASE("circular_shift follows the index definition", "[signal]") {
  CHECK(circular_shift(vec({1, 0, 0}), 1) == vec({0, 1, 0}));
  const RealVector x = vec({3, 1, 4, 1, 5});
  CHECK(circular_shift(x, 0) == x);
  CHECK(circular_shift(x, 5) == x);
  CHECK(circular_shift(x, -1) == circular_shift(x, 4));
  CHECK(circular_shift(x, 2) == vec({1, 5, 3, 1, 4}));
}

TEST_CASE("circular shifts compose additively", "[signal][property]") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 1 + static_cast<int>(rng.uniform_index(30));
    const RealVector x = random_vector(L, rng);
    const long a = rng.uniform_index(100) - 50;
    const long b = rng.uniform_index(100) - 50;
    REQUIRE(circular_shift(circular_shift(x, a), b) == circular_shift(x, a + b));
  }
}

TEST_CASE("sample_bernoulli_signal", "[signal]") {
  Rng rng(3);
  SECTION("q = 0 gives the zero signal") {
    const auto x = sample_bernoulli_signal(10, 0.0, rng);
    CHECK(x.sparsity() == 0);
    CHECK(x.values().isZero());
  }
  SECTION("q = 1 gives all ones") {
    const auto x = sample_bernoulli_signal(10, 1.0, rng);
    CHECK(x.sparsity() == 10);
  }
  SECTION("mean sparsity matches Binomial(60, 0.2)") {
    const int seeds = 10000;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Rng r(static_cast<std::uint64_t>(s));
      sum += sample_bernoulli_signal(60, 0.2, r).sparsity();
    }
    const double se = std::sqrt(60 * 0.2 * 0.8 / seeds);
    CHECK(std::abs(sum / seeds - 12.0) < 3.0 * se);
  }
  SECTION("q outside [0,1] is rejected") { CHECK_THROWS_AS(sample_bernoulli_signal(10, 1.5, rng), ParameterError); }
}

TEST_CASE("sample_fixed_sparsity", "[signal]") {
  Rng rng(5);
  CHECK(sample_fixed_sparsity(5, 0, rng).values() == RealVector::Zero(5));
  CHECK(sample_fixed_sparsity(5, 5, rng).values() == RealVector::Ones(5));
  for (int s = 0; s < 50; ++s) {
    Rng r(static_cast<std::uint64_t>(s));
    const auto x = sample_fixed_sparsity(12, 4, r);
    CHECK(x.values().sum() == 4.0);
    CHECK(x.sparsity() == 4);
  }
  CHECK_THROWS_AS(sample_fixed_sparsity(5, 6, rng), ParameterError);
  CHECK_THROWS_AS(sample_fixed_sparsity(5, -1, rng), ParameterError);
}

TEST_CASE("SparseSignal rejects non-binary values", "[signal]") {
  CHECK_THROWS_AS(SparseSignal(vec({0, 0.5, 1})), ParameterError);
  const SparseSignal s(vec({0, 1, 1, 0}));
  CHECK(s.support() == std::vector<int>{1, 2});
}

TEST_CASE("difference_multiset", "[signal]") {
  SECTION("{0,1,3} mod 7 is a perfect difference set") {
    const auto d = difference_multiset({0, 1, 3}, 7);
    REQUIRE(d.size() == 6);
    for (int v = 1; v <= 6; ++v) CHECK(d.at(v) == 1);
  }
  SECTION("singleton has no differences") { CHECK(difference_multiset({5}, 9).empty()); }
  SECTION("{0,1,2} mod 6 repeats 1 and 5") {
    const auto d = difference_multiset({0, 1, 2}, 6);
    CHECK(d.at(1) == 2);
    CHECK(d.at(5) == 2);
    CHECK(d.at(2) == 1);
    CHECK(d.at(4) == 1);
    CHECK(d.count(3) == 0);
  }
}

TEST_CASE("is_collision_free", "[signal]") {
  CHECK(is_collision_free({0, 1, 3}, 7));
  CHECK_FALSE(is_collision_free({0, 1, 2}, 6));
  CHECK(is_collision_free({4}, 13));
  CHECK(is_collision_free({}, 13));
}

TEST_CASE("is_collision_free agrees with pairwise brute force for L <= 10, M <= 4", "[signal][property]") {
  long checked = 0;
  for (int L = 1; L <= 10; ++L)
    for (int m = 0; m <= std::min(4, L); ++m)
      for_each_support(L, m, [&](const std::vector<int>& s) {
        REQUIRE(is_collision_free(s, L) == collision_free_by_pairs(s, L));
        ++checked;
      });
  CHECK(checked > 1000);
}

TEST_CASE("collision-freeness is invariant under shifting the support", "[signal][property]") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 4 + static_cast<int>(rng.uniform_index(20));
    const int m = 1 + static_cast<int>(rng.uniform_index(std::min(L, 5)));
    const auto x = sample_fixed_sparsity(L, m, rng);
    const long s = rng.uniform_index(L);
    const SparseSignal shifted(circular_shift(x.values(), s));
    REQUIRE(is_collision_free(x.support(), L) == is_collision_free(shifted.support(), L));
    REQUIRE(difference_multiset(x.support(), L) == difference_multiset(shifted.support(), L));
  }
}

TEST_CASE("embed_atoms", "[signal]") {
  CHECK(embed_atoms({2}, AtomProfile::delta(5), 5) == vec({0, 0, 1, 0, 0}));
  CHECK(embed_atoms({0, 1}, AtomProfile(vec({1, 1, 0, 0})), 4) == vec({1, 2, 1, 0}));
  CHECK(embed_atoms({}, AtomProfile(vec({0.5, 2, 1})), 3) == RealVector::Zero(3));
  CHECK_THROWS_AS(embed_atoms({0}, AtomProfile::delta(4), 5), ParameterError);

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = sample_fixed_sparsity(16, 5, rng);
    CHECK(embed_atoms(x.support(), AtomProfile::delta(16), 16) == x.values());
  }
}

TEST_CASE("AtomProfile delta transform is all ones", "[signal]") {
  const auto a = AtomProfile::delta(6);
  CHECK(a.is_delta());
  CHECK((a.transform() - ComplexVector::Ones(6)).norm() < 1e-15);
}

TEST_CASE("generate_observations", "[signal]") {
  Rng rng(8);
  const auto x = sample_fixed_sparsity(10, 3, rng);
  const auto atom = AtomProfile::delta(10);

  SECTION("n = 0 gives an empty set") {
    const auto obs = generate_observations(x, atom, 0, 1.0, Rng(1));
    CHECK(obs.size() == 0);
    CHECK(obs.length == 10);
  }
  SECTION("noiseless observations lie in the orbit") {
    const auto obs = generate_observations(x, atom, 100, 0.0, Rng(1));
    REQUIRE(obs.size() == 100);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      CHECK(obs.observations[i] == circular_shift(x.values(), obs.true_shifts[i]));
      CHECK(align_to_orbit(obs.observations[i], x.values(), false).relative_error < 1e-12);
    }
  }
  SECTION("grand mean of noisy observations is M / L") {
    const int n = 100000;
    const auto obs = generate_observations(x, atom, n, 1.0, Rng(99));
    double sum = 0.0;
    for (const auto& y : obs.observations) sum += y.sum();
    const double mean = sum / (static_cast<double>(n) * 10);
    const double sigma_total = std::sqrt(0.3 * 0.7 + 1.0);
    CHECK(std::abs(mean - 0.3) < 3.0 * sigma_total / std::sqrt(n * 10.0));
  }
  SECTION("shifts are uniform over {0..L-1}") {
    const auto obs = generate_observations(x, atom, 20000, 0.0, Rng(4));
    std::vector<int> counts(10, 0);
    for (int s : obs.true_shifts) {
      REQUIRE(s >= 0);
      REQUIRE(s < 10);
      ++counts[s];
    }
    // 5 standard deviations of a Binomial(20000, 0.1) count
    for (int c : counts) CHECK(std::abs(c - 2000) < 5 * std::sqrt(20000 * 0.1 * 0.9));
  }
  SECTION("observation i depends only on the seed and i") {
    const auto a = generate_observations(x, atom, 50, 0.7, Rng(123));
    const auto b = generate_observations(x, atom, 10, 0.7, Rng(123));
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(a.observations[i] == b.observations[i]);
  }
  SECTION("negative sigma is rejected") {
    CHECK_THROWS_AS(generate_observations(x, atom, 1, -1.0, Rng(1)), ParameterError);
  }
}
