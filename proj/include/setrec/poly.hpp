#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "setrec/field.hpp"

namespace setrec {

/// Dense univariate polynomial over a PrimeField. Coefficients are Montgomery
/// residues, lowest degree first, with no trailing zeros (the zero polynomial
/// is empty).
using Poly = std::vector<u128>;

void trim(Poly& p) noexcept;

/// Degree, or -1 for the zero polynomial.
inline int degree(const Poly& p) noexcept { return static_cast<int>(p.size()) - 1; }

u128 poly_eval(const PrimeField& f, const Poly& p, u128 x) noexcept;

Poly poly_add(const PrimeField& f, const Poly& a, const Poly& b);
Poly poly_sub(const PrimeField& f, const Poly& a, const Poly& b);
Poly poly_mul(const PrimeField& f, const Poly& a, const Poly& b);

/// Quotient and remainder of a / b; b must be nonzero.
std::pair<Poly, Poly> poly_divmod(const PrimeField& f, const Poly& a, const Poly& b);
Poly poly_mod(const PrimeField& f, const Poly& a, const Poly& b);

Poly make_monic(const PrimeField& f, Poly p);

/// Monic greatest common divisor (zero only when both inputs are zero).
Poly poly_gcd(const PrimeField& f, Poly a, Poly b);

/// base^exponent mod `modulus` (modulus monic, degree >= 1).
Poly poly_powmod(const PrimeField& f, const Poly& base, u128 exponent, const Poly& modulus);

/// Monic polynomial with the given (Montgomery) roots.
Poly poly_from_roots(const PrimeField& f, const std::vector<u128>& roots);

/// All roots of the monic polynomial `p` if it splits into distinct linear
/// factors over the field, else nullopt. Roots are Montgomery residues, sorted
/// by canonical value. Uses gcd with Z^q - Z followed by randomized
/// equal-degree splitting driven by `rng`.
std::optional<std::vector<u128>> find_distinct_roots(const PrimeField& f, const Poly& p, std::mt19937_64& rng);

}  // namespace setrec
