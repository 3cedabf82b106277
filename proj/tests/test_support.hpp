#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "setrec/sketch.hpp"

namespace setrec::testing {

struct SetPair {
  std::vector<Element> a;
  std::vector<Element> b;
  std::vector<Element> only_a;  // sorted
  std::vector<Element> only_b;  // sorted
};

/// Random sets over an ℓ-bit universe sharing `shared` elements, with
/// `diff_a` + `diff_b` elements on exactly one side.
inline SetPair random_set_pair(std::mt19937_64& rng, unsigned bits, std::size_t shared, std::size_t diff_a,
                               std::size_t diff_b) {
  const std::uint64_t mask = bits >= 64 ? ~0ULL : ((1ULL << bits) - 1);
  std::set<Element> used;
  auto draw = [&] {
    for (;;) {
      const Element e = rng() & mask;
      if (used.insert(e).second) return e;
    }
  };
  SetPair p;
  for (std::size_t i = 0; i < shared; ++i) {
    const Element e = draw();
    p.a.push_back(e);
    p.b.push_back(e);
  }
  for (std::size_t i = 0; i < diff_a; ++i) {
    const Element e = draw();
    p.a.push_back(e);
    p.only_a.push_back(e);
  }
  for (std::size_t i = 0; i < diff_b; ++i) {
    const Element e = draw();
    p.b.push_back(e);
    p.only_b.push_back(e);
  }
  std::sort(p.only_a.begin(), p.only_a.end());
  std::sort(p.only_b.begin(), p.only_b.end());
  std::shuffle(p.a.begin(), p.a.end(), rng);
  std::shuffle(p.b.begin(), p.b.end(), rng);
  return p;
}

/// Brute-force one-sided differences.
inline std::pair<std::vector<Element>, std::vector<Element>> brute_force_difference(std::vector<Element> a,
                                                                                     std::vector<Element> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::pair<std::vector<Element>, std::vector<Element>> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.first));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(out.second));
  return out;
}

}  // namespace setrec::testing
