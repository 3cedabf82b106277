#include "setrec/field.hpp"

#include <algorithm>
#include <array>

#include "setrec/errors.hpp"

namespace setrec {

namespace {

using u64 = std::uint64_t;

// Largest n for which the fixed-base Miller-Rabin below is proven exact.
const u128 kMillerRabinExactBound = static_cast<u128>(3317044064679887ULL) * 1000000000ULL + 385961981ULL;

constexpr std::array<u64, 13> kWitnesses{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

}  // namespace

unsigned bit_length(u128 x) noexcept {
  unsigned n = 0;
  while (x != 0) {
    ++n;
    x >>= 1;
  }
  return n;
}

std::string to_string(u128 x) {
  if (x == 0) return "0";
  std::string s;
  while (x != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(x % 10)));
    x /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

PrimeField::PrimeField(u128 modulus) : q_(modulus) {
  if (modulus < 3 || (modulus & 1) == 0 || bit_length(modulus) > 127) {
    throw ConfigError("PrimeField: modulus must be odd, >= 3 and below 2^127");
  }
  q0_ = static_cast<u64>(q_);
  q1_ = static_cast<u64>(q_ >> 64);
  // Newton iteration for q0^{-1} mod 2^64; each step doubles the correct bits.
  u64 inv = q0_;
  for (int i = 0; i < 6; ++i) inv *= 2 - q0_ * inv;
  qinv_neg_ = ~inv + 1;
  r1_ = (~q_ + 1) % q_;  // 2^128 mod q
  u128 r = r1_;
  for (int i = 0; i < 128; ++i) r = add(r, r);
  r2_ = r;
}

u128 PrimeField::mul(u128 a, u128 b) const noexcept {
  // Two-word CIOS Montgomery multiplication.
  const u64 a0 = static_cast<u64>(a);
  const u64 a1 = static_cast<u64>(a >> 64);
  const u64 bw[2] = {static_cast<u64>(b), static_cast<u64>(b >> 64)};
  u64 t0 = 0, t1 = 0, t2 = 0;
  for (u64 bi : bw) {
    u128 cs = static_cast<u128>(a0) * bi + t0;
    t0 = static_cast<u64>(cs);
    cs = static_cast<u128>(a1) * bi + t1 + static_cast<u64>(cs >> 64);
    t1 = static_cast<u64>(cs);
    cs = static_cast<u128>(t2) + static_cast<u64>(cs >> 64);
    t2 = static_cast<u64>(cs);
    const u64 t3 = static_cast<u64>(cs >> 64);

    const u64 m = t0 * qinv_neg_;
    cs = static_cast<u128>(m) * q0_ + t0;
    cs = static_cast<u128>(m) * q1_ + t1 + static_cast<u64>(cs >> 64);
    t0 = static_cast<u64>(cs);
    cs = static_cast<u128>(t2) + static_cast<u64>(cs >> 64);
    t1 = static_cast<u64>(cs);
    t2 = t3 + static_cast<u64>(cs >> 64);
  }
  u128 res = (static_cast<u128>(t1) << 64) | t0;
  if (t2 != 0 || res >= q_) res -= q_;
  return res;
}

u128 PrimeField::pow(u128 base, u128 exponent) const noexcept {
  u128 result = r1_;
  while (exponent != 0) {
    if (exponent & 1) result = mul(result, base);
    base = mul(base, base);
    exponent >>= 1;
  }
  return result;
}

u128 PrimeField::inv(u128 a) const {
  if (a == 0) throw ArithmeticError("PrimeField::inv: zero has no inverse");
  return pow(a, q_ - 2);
}

bool is_prime(u128 n) {
  if (n < 2) return false;
  for (u64 p : kWitnesses) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  if (n > kMillerRabinExactBound) {
    throw ConfigError("is_prime: " + to_string(n) + " exceeds the deterministic Miller-Rabin range");
  }
  const PrimeField f(n);
  u128 d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  const u128 one = f.one();
  const u128 minus_one = f.neg(one);
  for (u64 a : kWitnesses) {
    u128 x = f.pow(f.to_mont(a), d);
    if (x == one || x == minus_one) continue;
    bool composite = true;
    for (unsigned r = 1; r < s; ++r) {
      x = f.sqr(x);
      if (x == minus_one) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

u128 next_prime(u128 n) {
  if (n <= 2) return 2;
  u128 c = n | 1;
  while (!is_prime(c)) c += 2;
  return c;
}

}  // namespace setrec
