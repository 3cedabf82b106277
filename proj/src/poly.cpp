#include "setrec/poly.hpp"

#include <algorithm>

#include "setrec/errors.hpp"

namespace setrec {

namespace {

// Reduce `a` in place modulo the monic polynomial `m`.
void reduce_monic(const PrimeField& f, Poly& a, const Poly& m) {
  const int dm = degree(m);
  for (int i = degree(a); i >= dm; --i) {
    const u128 lead = a[i];
    if (lead == 0) continue;
    const int shift = i - dm;
    for (int k = 0; k < dm; ++k) a[shift + k] = f.sub(a[shift + k], f.mul(lead, m[k]));
    a[i] = 0;
  }
  trim(a);
}

Poly mulmod(const PrimeField& f, const Poly& a, const Poly& b, const Poly& m) {
  Poly r = poly_mul(f, a, b);
  reduce_monic(f, r, m);
  return r;
}

void split_into(const PrimeField& f, const Poly& p, std::mt19937_64& rng, std::vector<u128>& out, int& budget) {
  const int d = degree(p);
  if (d <= 0) return;
  if (d == 1) {
    out.push_back(f.neg(p[0]));
    return;
  }
  const u128 q = f.modulus();
  std::uniform_int_distribution<std::uint64_t> lo;
  while (budget-- > 0) {
    const u128 raw = ((static_cast<u128>(lo(rng)) << 64) | lo(rng)) % q;
    Poly shifted{f.to_mont(raw), f.one()};  // Z + a
    Poly w = poly_powmod(f, shifted, (q - 1) / 2, p);
    w = poly_sub(f, w, Poly{f.one()});
    Poly g = poly_gcd(f, p, w);
    const int dg = degree(g);
    if (dg > 0 && dg < d) {
      auto [quot, rem] = poly_divmod(f, p, g);
      split_into(f, g, rng, out, budget);
      split_into(f, quot, rng, out, budget);
      return;
    }
  }
}

}  // namespace

void trim(Poly& p) noexcept {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

u128 poly_eval(const PrimeField& f, const Poly& p, u128 x) noexcept {
  u128 acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = f.add(f.mul(acc, x), *it);
  return acc;
}

Poly poly_add(const PrimeField& f, const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = f.add(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  }
  trim(r);
  return r;
}

Poly poly_sub(const PrimeField& f, const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = f.sub(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  }
  trim(r);
  return r;
}

Poly poly_mul(const PrimeField& f, const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = f.add(r[i + j], f.mul(a[i], b[j]));
  }
  trim(r);
  return r;
}

std::pair<Poly, Poly> poly_divmod(const PrimeField& f, const Poly& a, const Poly& b) {
  if (b.empty()) throw ArithmeticError("poly_divmod: division by the zero polynomial");
  const int db = degree(b);
  Poly rem = a;
  trim(rem);
  if (degree(rem) < db) return {Poly{}, rem};
  const u128 lead_inv = f.inv(b.back());
  Poly quot(rem.size() - b.size() + 1, 0);
  for (int i = degree(rem); i >= db; --i) {
    const u128 c = f.mul(rem[i], lead_inv);
    quot[i - db] = c;
    if (c == 0) continue;
    for (int k = 0; k <= db; ++k) rem[i - db + k] = f.sub(rem[i - db + k], f.mul(c, b[k]));
  }
  trim(rem);
  trim(quot);
  return {quot, rem};
}

Poly poly_mod(const PrimeField& f, const Poly& a, const Poly& b) { return poly_divmod(f, a, b).second; }

Poly make_monic(const PrimeField& f, Poly p) {
  trim(p);
  if (p.empty() || p.back() == f.one()) return p;
  const u128 inv = f.inv(p.back());
  for (auto& c : p) c = f.mul(c, inv);
  return p;
}

Poly poly_gcd(const PrimeField& f, Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_mod(f, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return make_monic(f, std::move(a));
}

Poly poly_powmod(const PrimeField& f, const Poly& base, u128 exponent, const Poly& modulus) {
  Poly b = base;
  reduce_monic(f, b, modulus);
  Poly result{f.one()};
  reduce_monic(f, result, modulus);
  while (exponent != 0) {
    if (exponent & 1) result = mulmod(f, result, b, modulus);
    exponent >>= 1;
    if (exponent != 0) b = mulmod(f, b, b, modulus);
  }
  return result;
}

Poly poly_from_roots(const PrimeField& f, const std::vector<u128>& roots) {
  Poly p{f.one()};
  for (u128 r : roots) {
    Poly next(p.size() + 1, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i + 1] = f.add(next[i + 1], p[i]);
      next[i] = f.sub(next[i], f.mul(p[i], r));
    }
    p = std::move(next);
  }
  return p;
}

std::optional<std::vector<u128>> find_distinct_roots(const PrimeField& f, const Poly& monic, std::mt19937_64& rng) {
  const Poly p = make_monic(f, monic);
  const int d = degree(p);
  if (d < 0) return std::nullopt;
  if (d == 0) return std::vector<u128>{};
  const Poly z{0, f.one()};
  // p | Z^q - Z  <=>  p splits over F_q into distinct linear factors.
  Poly zq = poly_powmod(f, z, f.modulus(), p);
  if (!poly_sub(f, zq, poly_mod(f, z, p)).empty()) return std::nullopt;

  std::vector<u128> roots;
  roots.reserve(static_cast<std::size_t>(d));
  int budget = 64 * d + 64;
  split_into(f, p, rng, roots, budget);
  if (static_cast<int>(roots.size()) != d) return std::nullopt;
  std::sort(roots.begin(), roots.end(),
            [&f](u128 a, u128 b) { return f.from_mont(a) < f.from_mont(b); });
  return roots;
}

}  // namespace setrec
