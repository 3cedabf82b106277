#include "setrec/partition.hpp"

#include <algorithm>
#include <sstream>

#include "setrec/errors.hpp"

namespace setrec {

namespace {

using boost::multiprecision::cpp_int;

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

const cpp_int& two_pow_64() {
  static const cpp_int v = cpp_int(1) << 64;
  return v;
}

u128 ceil_scaled(const Rational& r) {
  const cpp_int num = boost::multiprecision::numerator(r) * two_pow_64();
  const cpp_int den = boost::multiprecision::denominator(r);
  cpp_int c = num / den;
  if (c * den < num) c += 1;
  const cpp_int lo = c & cpp_int(0xffffffffffffffffULL);
  const cpp_int hi = c >> 64;
  return (static_cast<u128>(static_cast<std::uint64_t>(hi)) << 64) | static_cast<std::uint64_t>(lo);
}

cpp_int parse_digits(std::string d) {
  if (d.empty() || d.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("bad number");
  // cpp_int treats a leading 0 as an octal prefix
  d.erase(0, std::min(d.find_first_not_of('0'), d.size() - 1));
  return cpp_int(d);
}

Rational parse_exact(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (ch != ' ') s.push_back(ch);
  if (s.empty()) throw ConfigError("empty probability");
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      const cpp_int den = parse_digits(s.substr(slash + 1));
      if (den == 0) throw ConfigError("zero denominator");
      return Rational(parse_digits(s.substr(0, slash)), den);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(parse_digits(s));
    cpp_int den = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    return Rational(parse_digits(s.substr(0, dot) + s.substr(dot + 1)), den);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse probability '" + raw + "'");
  }
}

}  // namespace

std::string path_to_string(const Path& path) {
  if (path.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(path[i]);
  }
  return out;
}

Path path_from_string(const std::string& text) {
  Path p;
  if (text == "-" || text.empty()) return p;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw DomainError("malformed path '" + text + "'");
    }
    p.push_back(static_cast<std::uint32_t>(std::stoul(part)));
  }
  return p;
}

Rational Key::as_rational() const { return Rational(cpp_int(bits), two_pow_64()); }

Key key_of(Element element, std::uint64_t seed) noexcept {
  return Key{mix64(element ^ mix64(seed ^ 0x9e3779b97f4a7c15ULL))};
}

PartitionSchedule::PartitionSchedule(std::vector<Rational> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw ConfigError("partition schedule needs c >= 2");
  Rational sum = 0;
  for (const auto& p : probs_) {
    if (p <= 0) throw ConfigError("partition probabilities must be positive");
    sum += p;
  }
  if (sum != 1) throw ConfigError("partition probabilities must sum to 1 (got " + sum.str() + ")");
}

PartitionSchedule PartitionSchedule::fair(std::size_t c) {
  if (c < 2) throw ConfigError("partition schedule needs c >= 2");
  return PartitionSchedule(std::vector<Rational>(c, Rational(1, static_cast<long long>(c))));
}

PartitionSchedule PartitionSchedule::parse(const std::string& text) {
  std::vector<Rational> probs;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) probs.push_back(parse_exact(part));
  return PartitionSchedule(std::move(probs));
}

std::vector<double> PartitionSchedule::probs_double() const {
  std::vector<double> out;
  out.reserve(probs_.size());
  for (const auto& p : probs_) out.push_back(static_cast<double>(p));
  return out;
}

bool PartitionSchedule::is_fair() const {
  for (const auto& p : probs_)
    if (p != probs_.front()) return false;
  return true;
}

std::string PartitionSchedule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (i) out += ',';
    out += probs_[i].str();
  }
  return out;
}

PartitionSchedule round_optimal_probs(std::size_t c) {
  if (c < 2) throw ConfigError("partition schedule needs c >= 2");
  std::vector<Rational> probs;
  cpp_int den = 1;
  for (std::size_t j = 1; j < c; ++j) {
    den *= 2;
    probs.emplace_back(cpp_int(1), den);
  }
  probs.push_back(probs.back());
  return PartitionSchedule(std::move(probs));
}

std::pair<u128, u128> PartitionInterval::key_range() const { return {ceil_scaled(lo), ceil_scaled(hi)}; }

bool PartitionInterval::contains(Key k) const {
  const auto [a, b] = key_range();
  return k.bits >= a && k.bits < b;
}

std::vector<PartitionInterval> split(const PartitionInterval& interval, const PartitionSchedule& schedule) {
  std::vector<PartitionInterval> out;
  out.reserve(schedule.c());
  const Rational width = interval.measure();
  Rational cum = 0;
  for (std::size_t j = 0; j < schedule.c(); ++j) {
    PartitionInterval child;
    child.lo = interval.lo + cum * width;
    cum += schedule.probs()[j];
    child.hi = (j + 1 == schedule.c()) ? interval.hi : interval.lo + cum * width;
    child.path = interval.path;
    child.path.push_back(static_cast<std::uint32_t>(j));
    out.push_back(std::move(child));
  }
  return out;
}

PartitionInterval interval_of(const Path& path, const PartitionSchedule& schedule) {
  PartitionInterval cur = PartitionInterval::root();
  for (std::uint32_t j : path) {
    if (j >= schedule.c()) throw DomainError("path index exceeds the branching factor");
    Rational cum = 0;
    for (std::uint32_t i = 0; i < j; ++i) cum += schedule.probs()[i];
    const Rational width = cur.measure();
    Rational lo = cur.lo + cum * width;
    Rational hi = (j + 1 == schedule.c()) ? cur.hi : lo + schedule.probs()[j] * width;
    cur.lo = std::move(lo);
    cur.hi = std::move(hi);
    cur.path.push_back(j);
  }
  return cur;
}

Path path_of(const Rational& lo, const Rational& hi, const PartitionSchedule& schedule, std::size_t max_depth) {
  PartitionInterval cur = PartitionInterval::root();
  while (!(cur.lo == lo && cur.hi == hi)) {
    if (cur.path.size() >= max_depth || lo < cur.lo || hi > cur.hi) {
      throw DomainError("interval is not a node of the partition tree");
    }
    bool found = false;
    for (auto& child : split(cur, schedule)) {
      if (lo >= child.lo && hi <= child.hi) {
        cur = std::move(child);
        found = true;
        break;
      }
    }
    if (!found) throw DomainError("interval straddles a partition boundary");
  }
  return cur.path;
}

std::size_t child_index(Key key, const PartitionInterval& interval, const PartitionSchedule& schedule) {
  const auto children = split(interval, schedule);
  for (std::size_t j = 0; j < children.size(); ++j) {
    if (children[j].contains(key)) return j;
  }
  throw DomainError("key lies outside the interval");
}

}  // namespace setrec
