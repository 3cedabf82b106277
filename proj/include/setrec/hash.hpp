#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace setrec {

/// 64-bit FNV-1a, fed incrementally.
class Fnv1a {
 public:
  Fnv1a& bytes(std::span<const std::uint8_t> data) noexcept {
    for (auto b : data) byte(b);
    return *this;
  }
  Fnv1a& text(std::string_view s) noexcept {
    for (char ch : s) byte(static_cast<std::uint8_t>(ch));
    return *this;
  }
  Fnv1a& u64(std::uint64_t x) noexcept {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(x >> (8 * i)));
    return *this;
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  void byte(std::uint8_t b) noexcept {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace setrec
