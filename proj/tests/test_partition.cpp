#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "setrec/errors.hpp"
#include "setrec/partition.hpp"

using namespace setrec;

namespace {

Rational R(long long n, long long d = 1) { return Rational(n, d); }

PartitionSchedule random_schedule(std::mt19937_64& rng) {
  const std::size_t c = 2 + rng() % 4;
  std::vector<long long> w(c);
  long long total = 0;
  for (auto& x : w) {
    x = 1 + static_cast<long long>(rng() % 17);
    total += x;
  }
  std::vector<Rational> p;
  for (auto x : w) p.emplace_back(x, total);
  return PartitionSchedule(p);
}

void collect_leaves(const PartitionInterval& node, const PartitionSchedule& s, std::size_t depth,
                    std::vector<PartitionInterval>& out) {
  if (depth == 0) {
    out.push_back(node);
    return;
  }
  for (const auto& child : split(node, s)) collect_leaves(child, s, depth - 1, out);
}

double log_multinomial_pmf(const std::vector<int>& counts, const std::vector<double>& p) {
  int n = 0;
  double lp = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    n += counts[j];
    lp += counts[j] * std::log(p[j]) - std::lgamma(counts[j] + 1.0);
  }
  return lp + std::lgamma(n + 1.0);
}

void enumerate_compositions(int n, std::size_t parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (cur.size() + 1 == parts) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= n; ++k) {
    cur.push_back(k);
    enumerate_compositions(n - k, parts, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST_CASE("split examples") {
  auto kids = split(PartitionInterval::root(), PartitionSchedule::fair(2));
  REQUIRE(kids.size() == 2);
  CHECK(kids[0].lo == 0);
  CHECK(kids[0].hi == R(1, 2));
  CHECK(kids[1].lo == R(1, 2));
  CHECK(kids[1].hi == 1);
  CHECK(kids[1].path == Path{1});

  kids = split(PartitionInterval::root(), PartitionSchedule({R(1, 2), R(1, 4), R(1, 4)}));
  REQUIRE(kids.size() == 3);
  CHECK(kids[0].hi == R(1, 2));
  CHECK(kids[1].lo == R(1, 2));
  CHECK(kids[1].hi == R(3, 4));
  CHECK(kids[2].lo == R(3, 4));
  CHECK(kids[2].hi == 1);

  PartitionInterval half{R(1, 2), R(1), Path{1}};
  kids = split(half, PartitionSchedule::fair(2));
  CHECK(kids[0].lo == R(1, 2));
  CHECK(kids[0].hi == R(3, 4));
  CHECK(kids[1].lo == R(3, 4));
  CHECK(kids[1].hi == 1);
  CHECK(kids[1].path == Path{1, 1});
}

TEST_CASE("round-optimal schedules") {
  CHECK(round_optimal_probs(2).probs() == std::vector<Rational>{R(1, 2), R(1, 2)});
  CHECK(round_optimal_probs(4).probs() == std::vector<Rational>{R(1, 2), R(1, 4), R(1, 8), R(1, 8)});
  for (std::size_t c = 2; c <= 32; ++c) {
    const auto s = round_optimal_probs(c);
    CHECK(s.c() == c);
    Rational sum = 0;
    for (const auto& p : s.probs()) sum += p;
    CHECK(sum == 1);
  }
  CHECK_THROWS_AS(round_optimal_probs(1), ConfigError);
}

TEST_CASE("schedule validation and parsing") {
  CHECK_THROWS_AS(PartitionSchedule({R(1)}), ConfigError);
  CHECK_THROWS_AS(PartitionSchedule({R(1, 2), R(1, 3)}), ConfigError);
  CHECK_THROWS_AS(PartitionSchedule({R(0), R(1)}), ConfigError);
  CHECK_THROWS_AS(PartitionSchedule({R(3, 2), R(-1, 2)}), ConfigError);
  const auto s = PartitionSchedule::parse("0.15,0.1,0.25,0.2,0.3");
  CHECK(s.probs() == std::vector<Rational>{R(3, 20), R(1, 10), R(1, 4), R(1, 5), R(3, 10)});
  CHECK(PartitionSchedule::parse("1/3, 2/3").probs()[1] == R(2, 3));
  CHECK(PartitionSchedule::parse("0.5,0.5").is_fair());
  CHECK_FALSE(s.is_fair());
  CHECK_THROWS_AS(PartitionSchedule::parse("0.5,abc"), ConfigError);
  CHECK_THROWS_AS(PartitionSchedule::parse("0.5,0.4"), ConfigError);
}

TEST_CASE("property: leaves tile [0,1) exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    const auto s = random_schedule(rng);
    // keep the leaf count bounded while still reaching depth 12 for c = 2
    std::size_t depth = 1;
    while (depth < 12 && std::pow(double(s.c()), double(depth + 1)) <= 5000) ++depth;
    std::vector<PartitionInterval> leaves;
    collect_leaves(PartitionInterval::root(), s, depth, leaves);
    std::sort(leaves.begin(), leaves.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
    CHECK(leaves.front().lo == 0);
    CHECK(leaves.back().hi == 1);
    Rational total = 0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      REQUIRE(leaves[i].lo < leaves[i].hi);
      if (i) REQUIRE(leaves[i - 1].hi == leaves[i].lo);
      total += leaves[i].measure();
      // measure ratio along the path is the product of p_j
      Rational expected = 1;
      for (auto j : leaves[i].path) expected *= s.probs()[j];
      REQUIRE(leaves[i].measure() == expected);
    }
    CHECK(total == 1);
    // integer key ranges tile the whole 64-bit key space
    u128 prev = 0;
    for (const auto& leaf : leaves) {
      const auto [a, b] = leaf.key_range();
      REQUIRE(a == prev);
      prev = b;
    }
    CHECK(prev == (u128(1) << 64));
  }
}

TEST_CASE("property: path and interval round-trip") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_schedule(rng);
    Path p(rng() % 14);
    for (auto& j : p) j = static_cast<std::uint32_t>(rng() % s.c());
    const auto iv = interval_of(p, s);
    CHECK(iv.path == p);
    CHECK(path_of(iv.lo, iv.hi, s) == p);
    CHECK(path_from_string(path_to_string(p)) == p);
  }
  const auto s = PartitionSchedule::fair(2);
  CHECK_THROWS_AS(path_of(R(1, 4), R(3, 4), s), DomainError);
  CHECK_THROWS_AS(interval_of(Path{2}, s), DomainError);
  CHECK(path_to_string({}) == "-");
  CHECK(path_to_string({0, 1, 1}) == "0.1.1");
}

TEST_CASE("key_of determinism and seed sensitivity") {
  CHECK(key_of(12345, 7) == key_of(12345, 7));
  std::vector<Element> set(64);
  std::iota(set.begin(), set.end(), Element{1000});
  const auto s = PartitionSchedule::fair(2);
  auto sides = [&](std::uint64_t seed) {
    std::vector<std::size_t> out;
    for (auto e : set) out.push_back(child_index(key_of(e, seed), PartitionInterval::root(), s));
    return out;
  };
  CHECK(sides(1) != sides(2));
}

TEST_CASE("key membership matches rational comparison") {
  std::mt19937_64 rng(13);
  const auto s = PartitionSchedule::parse("0.15,0.1,0.25,0.2,0.3");
  for (int trial = 0; trial < 2000; ++trial) {
    const Key k{rng()};
    const auto kids = split(PartitionInterval::root(), s);
    int hits = 0;
    for (const auto& kid : kids) {
      const bool rational_in = k.as_rational() >= kid.lo && k.as_rational() < kid.hi;
      REQUIRE(kid.contains(k) == rational_in);
      hits += rational_in;
    }
    REQUIRE(hits == 1);
  }
}

TEST_CASE("property: keys are uniform (Kolmogorov-Smirnov, 1% level)") {
  constexpr std::size_t n = 1000000;
  std::mt19937_64 rng(14);
  std::vector<double> keys(n);
  for (auto& k : keys) k = key_of(rng(), 99).as_double();
  std::sort(keys.begin(), keys.end());
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max(d, std::max(double(i + 1) / n - keys[i], keys[i] - double(i) / n));
  }
  // asymptotic 1% critical value of the KS statistic
  CHECK(d < 1.6276 / std::sqrt(double(n)));
  CHECK(keys.front() >= 0.0);
  CHECK(keys.back() < 1.0);
}

TEST_CASE("property: one split yields multinomial child counts (chi-square, 1% level)") {
  const std::vector<PartitionSchedule> schedules = {PartitionSchedule::fair(2),
                                                    PartitionSchedule({R(1, 2), R(1, 4), R(1, 4)}),
                                                    PartitionSchedule::parse("0.15,0.1,0.25,0.2,0.3")};
  const std::vector<int> deltas = {9, 6, 3};
  std::mt19937_64 rng(15);
  for (std::size_t si = 0; si < schedules.size(); ++si) {
    const auto& s = schedules[si];
    const int delta = deltas[si];
    constexpr int trials = 10000;
    std::map<std::vector<int>, int> observed;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = rng();
      std::vector<int> counts(s.c(), 0);
      for (int e = 0; e < delta; ++e) ++counts[child_index(key_of(rng(), seed), PartitionInterval::root(), s)];
      ++observed[counts];
    }
    std::vector<std::vector<int>> outcomes;
    std::vector<int> cur;
    enumerate_compositions(delta, s.c(), cur, outcomes);
    const auto p = s.probs_double();
    // pool outcomes with small expectations into one bin
    double stat = 0, pooled_e = 0, pooled_o = 0;
    int bins = 0;
    for (const auto& o : outcomes) {
      const double e = trials * std::exp(log_multinomial_pmf(o, p));
      const double obs = observed.count(o) ? observed.at(o) : 0;
      if (e < 5) {
        pooled_e += e;
        pooled_o += obs;
        continue;
      }
      stat += (obs - e) * (obs - e) / e;
      ++bins;
    }
    if (pooled_e > 0) {
      stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
      ++bins;
    }
    const boost::math::chi_squared dist(bins - 1);
    INFO("schedule " << s.to_string() << " stat " << stat << " bins " << bins);
    CHECK(stat < boost::math::quantile(dist, 0.99));
  }
}
