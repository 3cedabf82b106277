#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "setrec/field.hpp"
#include "setrec/sketch.hpp"

namespace setrec {

using Rational = boost::multiprecision::cpp_rational;

/// Child indices from the root, 0-based.
using Path = std::vector<std::uint32_t>;

std::string path_to_string(const Path& path);  // "-" for the root, else "0.1.1"
Path path_from_string(const std::string& text);

/// Hashed position of an element in [0,1), stored as bits / 2^64.
struct Key {
  std::uint64_t bits = 0;

  Rational as_rational() const;
  double as_double() const noexcept { return static_cast<double>(bits) * 0x1p-64; }
  friend auto operator<=>(const Key&, const Key&) = default;
};

/// Keyed mixing of (element, seed). For a fixed seed the map is a bijection of
/// 64-bit values, so distinct elements never share a key.
Key key_of(Element element, std::uint64_t seed) noexcept;

/// Branching factor and split probabilities p_1..p_c.
class PartitionSchedule {
 public:
  /// Throws ConfigError unless c >= 2, every p_j > 0 and the p_j sum to 1.
  explicit PartitionSchedule(std::vector<Rational> probs);

  static PartitionSchedule fair(std::size_t c);
  /// Parses a comma-separated list of exact decimals or fractions ("0.15,1/4,...").
  static PartitionSchedule parse(const std::string& text);

  std::size_t c() const noexcept { return probs_.size(); }
  const std::vector<Rational>& probs() const noexcept { return probs_; }
  std::vector<double> probs_double() const;
  bool is_fair() const;
  std::string to_string() const;

  friend bool operator==(const PartitionSchedule&, const PartitionSchedule&) = default;

 private:
  std::vector<Rational> probs_;
};

/// p_j = 2^-j for j < c and p_c = 2^-(c-1).
PartitionSchedule round_optimal_probs(std::size_t c);

/// Half-open [lo, hi) of the key space plus the path that produced it.
struct PartitionInterval {
  Rational lo{0};
  Rational hi{1};
  Path path;

  static PartitionInterval root() { return {}; }
  Rational measure() const { return hi - lo; }
  /// Integer key range [ceil(lo 2^64), ceil(hi 2^64)); exact membership test.
  std::pair<u128, u128> key_range() const;
  bool contains(Key k) const;
};

std::vector<PartitionInterval> split(const PartitionInterval& interval, const PartitionSchedule& schedule);

/// Interval reached by following `path` from the root.
PartitionInterval interval_of(const Path& path, const PartitionSchedule& schedule);

/// Inverse of interval_of: recovers the path of a tree interval from its bounds.
/// Throws DomainError when [lo, hi) is not a node of the partition tree.
Path path_of(const Rational& lo, const Rational& hi, const PartitionSchedule& schedule, std::size_t max_depth = 64);

/// Index of the child of `interval` containing `key` (key must lie in interval).
std::size_t child_index(Key key, const PartitionInterval& interval, const PartitionSchedule& schedule);

}  // namespace setrec
