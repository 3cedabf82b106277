#pragma once

// Characteristic-polynomial set sketch: a set S is represented by the values
// of prod_{s in S} (z - s) at m̄+γ+1 fixed points of a prime field. Sketches of
// two sets divide pointwise into a rational function whose numerator and
// denominator roots are the one-sided differences.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "setrec/field.hpp"

namespace setrec {

using Element = std::uint64_t;

/// Field and evaluation points shared by every sketch of one configuration.
struct FieldConfig {
  unsigned element_bits = 0;  // ℓ
  std::uint32_t mbar = 0;     // recovery capacity
  std::uint32_t gamma = 0;    // extra verification points
  PrimeField field;
  std::vector<u128> eval_points;  // canonical, z_i = 2^ℓ + i

  std::size_t size() const noexcept { return eval_points.size(); }
  u128 universe() const noexcept { return static_cast<u128>(1) << element_bits; }
  bool same_shape(const FieldConfig& o) const noexcept {
    return element_bits == o.element_bits && mbar == o.mbar && gamma == o.gamma;
  }
};

using FieldConfigPtr = std::shared_ptr<const FieldConfig>;

/// q is the smallest prime >= 2^ℓ + m̄ + γ + 1 and z_i = 2^ℓ + i.
/// Throws ConfigError for ℓ outside [1, 64], m̄ outside [1, 65535] or γ above 65535.
FieldConfigPtr field_setup(unsigned element_bits, std::uint32_t mbar, std::uint32_t gamma);

/// Immutable sketch value.
class Sketch {
 public:
  Sketch(FieldConfigPtr config, std::vector<u128> values, std::int32_t count);

  const FieldConfig& config() const noexcept { return *config_; }
  const FieldConfigPtr& config_ptr() const noexcept { return config_; }
  std::span<const u128> values() const noexcept { return values_; }
  std::int32_t count() const noexcept { return count_; }

  friend bool operator==(const Sketch& a, const Sketch& b) noexcept {
    return a.config_->same_shape(*b.config_) && a.count_ == b.count_ && a.values_ == b.values_;
  }

 private:
  FieldConfigPtr config_;
  std::vector<u128> values_;
  std::int32_t count_;
};

struct RecoveryOutcome {
  bool flag = false;
  std::vector<Element> recovered_a;  // present only on the minuend side, sorted
  std::vector<Element> recovered_b;  // present only on the subtrahend side, sorted
};

Sketch sketch_init(FieldConfigPtr config);
Sketch sketch_insert(const Sketch& sketch, Element element);
/// Elements must be distinct and inside the universe (DomainError otherwise).
Sketch sketch_insert_set(const Sketch& sketch, std::span<const Element> elements);
Sketch sketch_subtract(const Sketch& za, const Sketch& zb);
RecoveryOutcome sketch_recover(const Sketch& sketch);

/// Accounting size in bits: (m̄+γ+1)(ℓ+1) - 1.
std::uint64_t sketch_wire_cost(std::uint64_t mbar, std::uint64_t gamma, std::uint64_t element_bits) noexcept;

/// Little-endian: u16 ℓ, u16 m̄, u16 γ, i32 count, then each value in
/// ceil(bits(q)/8) bytes.
std::vector<std::uint8_t> serialize(const Sketch& sketch);
/// Parses a serialized sketch; the header must match `config` (ProtocolError otherwise).
Sketch deserialize(std::span<const std::uint8_t> bytes, const FieldConfigPtr& config);
/// Parses a serialized sketch, building its configuration from the header.
Sketch deserialize(std::span<const std::uint8_t> bytes);

std::string hex_dump(std::span<const std::uint8_t> bytes);

}  // namespace setrec
