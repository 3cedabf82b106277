#pragma once

#include <cstdint>
#include <string>

namespace setrec {

using u128 = unsigned __int128;

/// Number of significant bits in `x` (0 for x == 0).
unsigned bit_length(u128 x) noexcept;

std::string to_string(u128 x);

/// Deterministic Miller-Rabin; exact for every n below 3.3e24 (> 2^81).
bool is_prime(u128 n);

/// Smallest prime >= n. Throws ConfigError when the search would leave the
/// range where `is_prime` is exact.
u128 next_prime(u128 n);

/// Arithmetic modulo an odd prime q < 2^127 in Montgomery form (R = 2^128).
///
/// Every operation except `to_mont`, `from_mont` and `mul_canonical` takes and
/// returns Montgomery residues. Callers that only need a handful of products on
/// canonical values use `mul_canonical`.
class PrimeField {
 public:
  explicit PrimeField(u128 modulus);

  u128 modulus() const noexcept { return q_; }

  u128 zero() const noexcept { return 0; }
  u128 one() const noexcept { return r1_; }

  u128 to_mont(u128 x) const noexcept { return mul(x % q_, r2_); }
  u128 from_mont(u128 x) const noexcept { return mul(x, 1); }

  u128 add(u128 a, u128 b) const noexcept {
    u128 s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  u128 sub(u128 a, u128 b) const noexcept { return a >= b ? a - b : a + (q_ - b); }
  u128 neg(u128 a) const noexcept { return a == 0 ? 0 : q_ - a; }

  u128 mul(u128 a, u128 b) const noexcept;
  u128 sqr(u128 a) const noexcept { return mul(a, a); }

  u128 pow(u128 base, u128 exponent) const noexcept;
  u128 inv(u128 a) const;

  /// a*b mod q on canonical representatives.
  u128 mul_canonical(u128 a, u128 b) const noexcept { return mul(mul(a, b), r2_); }

  friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept { return a.q_ == b.q_; }

 private:
  u128 q_;
  std::uint64_t q0_;
  std::uint64_t q1_;
  std::uint64_t qinv_neg_;  // -q^{-1} mod 2^64
  u128 r1_;                 // R mod q
  u128 r2_;                 // R^2 mod q
};

}  // namespace setrec
