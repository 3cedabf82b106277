#include "setrec/sketch.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "setrec/errors.hpp"
#include "setrec/hash.hpp"
#include "setrec/poly.hpp"

namespace setrec {

namespace {

constexpr std::size_t kHeaderBytes = 2 + 2 + 2 + 4;

std::size_t value_bytes(const FieldConfig& cfg) { return (bit_length(cfg.field.modulus()) + 7) / 8; }

void check_same_config(const Sketch& a, const Sketch& b, const char* op) {
  if (!a.config().same_shape(b.config())) throw UsageError(std::string(op) + ": sketches use different field configurations");
}

std::int32_t checked_count(std::int64_t c) {
  if (c > std::numeric_limits<std::int32_t>::max() || c < std::numeric_limits<std::int32_t>::min()) {
    throw DomainError("sketch count leaves the signed 32-bit range");
  }
  return static_cast<std::int32_t>(c);
}

// Seed for the root-splitting RNG, derived from sketch content only.
std::uint64_t content_seed(const Sketch& s) {
  Fnv1a h;
  h.u64(static_cast<std::uint32_t>(s.count()));
  for (u128 v : s.values()) h.u64(static_cast<std::uint64_t>(v)).u64(static_cast<std::uint64_t>(v >> 64));
  return h.value();
}

// Solves the square system `rows` (each row: k coefficients then rhs) with
// free variables set to zero. Returns false when inconsistent.
bool solve_linear(const PrimeField& f, std::vector<std::vector<u128>>& rows, std::size_t k, std::vector<u128>& x) {
  const std::size_t n = rows.size();
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t col = 0; col < k && r < n; ++col) {
    std::size_t piv = r;
    while (piv < n && rows[piv][col] == 0) ++piv;
    if (piv == n) continue;
    std::swap(rows[piv], rows[r]);
    const u128 inv = f.inv(rows[r][col]);
    for (std::size_t j = col; j <= k; ++j) rows[r][j] = f.mul(rows[r][j], inv);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == r || rows[i][col] == 0) continue;
      const u128 factor = rows[i][col];
      for (std::size_t j = col; j <= k; ++j) rows[i][j] = f.sub(rows[i][j], f.mul(factor, rows[r][j]));
    }
    pivot_col.push_back(col);
    ++r;
  }
  for (std::size_t i = r; i < n; ++i) {
    if (rows[i][k] != 0) return false;
  }
  x.assign(k, 0);
  for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = rows[i][k];
  return true;
}

bool roots_to_elements(const FieldConfig& cfg, const std::vector<u128>& roots, std::vector<Element>& out) {
  out.clear();
  out.reserve(roots.size());
  for (u128 r : roots) {
    const u128 v = cfg.field.from_mont(r);
    if (v >= cfg.universe()) return false;
    out.push_back(static_cast<Element>(v));
  }
  std::sort(out.begin(), out.end());
  return true;
}

}  // namespace

FieldConfigPtr field_setup(unsigned element_bits, std::uint32_t mbar, std::uint32_t gamma) {
  if (element_bits < 1 || element_bits > 64) {
    throw ConfigError("field_setup: element_bits must be in [1, 64] (64-bit element type)");
  }
  if (mbar < 1 || mbar > 0xffff) throw ConfigError("field_setup: mbar must be in [1, 65535]");
  if (gamma > 0xffff) throw ConfigError("field_setup: gamma must be at most 65535");

  const u128 base = static_cast<u128>(1) << element_bits;
  const std::size_t n = static_cast<std::size_t>(mbar) + gamma + 1;
  const u128 q = next_prime(base + n);
  std::vector<u128> points(n);
  for (std::size_t i = 0; i < n; ++i) points[i] = base + i;
  return std::make_shared<const FieldConfig>(FieldConfig{element_bits, mbar, gamma, PrimeField(q), std::move(points)});
}

Sketch::Sketch(FieldConfigPtr config, std::vector<u128> values, std::int32_t count)
    : config_(std::move(config)), values_(std::move(values)), count_(count) {
  if (!config_) throw UsageError("Sketch: null configuration");
  if (values_.size() != config_->size()) throw UsageError("Sketch: value count does not match configuration");
  const u128 q = config_->field.modulus();
  for (u128 v : values_) {
    if (v >= q) throw DomainError("Sketch: value outside the field");
  }
}

Sketch sketch_init(FieldConfigPtr config) {
  const std::size_t n = config->size();
  return Sketch(std::move(config), std::vector<u128>(n, 1), 0);
}

Sketch sketch_insert(const Sketch& sketch, Element element) {
  const FieldConfig& cfg = sketch.config();
  if (element >= cfg.universe()) throw DomainError("sketch_insert: element outside the universe");
  std::vector<u128> v(sketch.values().begin(), sketch.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cfg.field.mul_canonical(v[i], cfg.eval_points[i] - element);
  return Sketch(sketch.config_ptr(), std::move(v), checked_count(static_cast<std::int64_t>(sketch.count()) + 1));
}

Sketch sketch_insert_set(const Sketch& sketch, std::span<const Element> elements) {
  const FieldConfig& cfg = sketch.config();
  const PrimeField& f = cfg.field;
  std::vector<Element> sorted(elements.begin(), elements.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("sketch_insert_set: duplicate element");
  }
  if (!sorted.empty() && sorted.back() >= cfg.universe()) {
    throw DomainError("sketch_insert_set: element outside the universe");
  }
  const std::int32_t count = checked_count(static_cast<std::int64_t>(sketch.count()) + static_cast<std::int64_t>(sorted.size()));
  if (sorted.empty()) return sketch;

  // Chained Montgomery products on canonical factors accumulate R^{-k};
  // one final product by R^{k+1} restores the canonical value.
  const u128 fixup = f.pow(f.to_mont(f.one()), sorted.size());
  std::vector<u128> v(sketch.values().begin(), sketch.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const u128 z = cfg.eval_points[i];
    u128 acc = v[i];
    for (Element s : sorted) acc = f.mul(acc, z - s);
    v[i] = f.mul(acc, fixup);
  }
  return Sketch(sketch.config_ptr(), std::move(v), count);
}

Sketch sketch_subtract(const Sketch& za, const Sketch& zb) {
  check_same_config(za, zb, "sketch_subtract");
  const PrimeField& f = za.config().field;
  const auto a = za.values();
  const auto b = zb.values();
  const std::size_t n = a.size();

  // Batch inversion of b.
  std::vector<u128> prefix(n);
  u128 acc = f.one();
  for (std::size_t i = 0; i < n; ++i) {
    if (b[i] == 0) throw ArithmeticError("sketch_subtract: subtrahend has a zero evaluation");
    prefix[i] = acc;
    acc = f.mul(acc, f.to_mont(b[i]));
  }
  u128 inv_acc = f.inv(acc);
  std::vector<u128> out(n);
  for (std::size_t i = n; i-- > 0;) {
    const u128 bm = f.to_mont(b[i]);
    const u128 inv_i = f.mul(inv_acc, prefix[i]);  // Montgomery form of b_i^{-1}
    inv_acc = f.mul(inv_acc, bm);
    out[i] = f.mul(a[i], inv_i);  // canonical a_i * b_i^{-1}
  }
  return Sketch(za.config_ptr(), std::move(out),
                checked_count(static_cast<std::int64_t>(za.count()) - static_cast<std::int64_t>(zb.count())));
}

RecoveryOutcome sketch_recover(const Sketch& sketch) {
  const FieldConfig& cfg = sketch.config();
  const PrimeField& f = cfg.field;
  const std::int64_t mbar = cfg.mbar;
  const std::int64_t delta = sketch.count();
  RecoveryOutcome fail;
  if (delta > mbar || -delta > mbar) return fail;

  // Degree split: m_A - m_B = Δ, m_A + m_B ∈ {m̄, m̄+1}.
  const std::int64_t ma = (mbar + delta + 1) / 2;
  const std::int64_t mb = ma - delta;
  const std::size_t k = static_cast<std::size_t>(ma + mb);
  const std::size_t n = cfg.size();

  std::vector<u128> z(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = f.to_mont(cfg.eval_points[i]);
    v[i] = f.to_mont(sketch.values()[i]);
  }

  // Row i: sum_j p_j z^j - v_i sum_j q_j z^j = v_i z^{m_B} - z^{m_A}.
  std::vector<std::vector<u128>> rows(k, std::vector<u128>(k + 1, 0));
  for (std::size_t i = 0; i < k; ++i) {
    auto& row = rows[i];
    u128 zp = f.one();
    for (std::int64_t j = 0; j < std::max(ma, mb); ++j) {
      if (j < ma) row[static_cast<std::size_t>(j)] = zp;
      if (j < mb) row[static_cast<std::size_t>(ma + j)] = f.neg(f.mul(v[i], zp));
      zp = f.mul(zp, z[i]);
    }
    row[k] = f.sub(f.mul(v[i], f.pow(z[i], static_cast<u128>(mb))), f.pow(z[i], static_cast<u128>(ma)));
  }
  std::vector<u128> x;
  if (!solve_linear(f, rows, k, x)) return fail;

  Poly p(x.begin(), x.begin() + ma);
  p.push_back(f.one());
  Poly q(x.begin() + ma, x.end());
  q.push_back(f.one());

  const Poly g = poly_gcd(f, p, q);
  if (degree(g) > 0) {
    p = poly_divmod(f, p, g).first;
    q = poly_divmod(f, q, g).first;
  }

  // Capacity gate: the odd-parity split can fit m̄+1 differences; those are
  // reported as failures so success is exactly |D| <= m̄ (barring false success).
  if (degree(p) + degree(q) > mbar) return fail;

  for (std::size_t i = 0; i < n; ++i) {
    if (poly_eval(f, p, z[i]) != f.mul(v[i], poly_eval(f, q, z[i]))) return fail;
  }

  std::mt19937_64 rng(content_seed(sketch));
  const auto roots_p = find_distinct_roots(f, p, rng);
  if (!roots_p) return fail;
  const auto roots_q = find_distinct_roots(f, q, rng);
  if (!roots_q) return fail;

  RecoveryOutcome out;
  if (!roots_to_elements(cfg, *roots_p, out.recovered_a)) return fail;
  if (!roots_to_elements(cfg, *roots_q, out.recovered_b)) return fail;
  out.flag = true;
  return out;
}

std::uint64_t sketch_wire_cost(std::uint64_t mbar, std::uint64_t gamma, std::uint64_t element_bits) noexcept {
  return (mbar + gamma + 1) * (element_bits + 1) - 1;
}

std::vector<std::uint8_t> serialize(const Sketch& sketch) {
  const FieldConfig& cfg = sketch.config();
  const std::size_t w = value_bytes(cfg);
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + w * cfg.size());
  auto put = [&out](std::uint64_t x, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  put(cfg.element_bits, 2);
  put(cfg.mbar, 2);
  put(cfg.gamma, 2);
  put(static_cast<std::uint32_t>(sketch.count()), 4);
  for (u128 v : sketch.values()) {
    for (std::size_t i = 0; i < w; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

namespace {

struct Header {
  unsigned bits;
  std::uint32_t mbar;
  std::uint32_t gamma;
  std::int32_t count;
};

Header read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw ProtocolError("deserialize: truncated header");
  auto get = [&bytes](std::size_t off, std::size_t len) {
    std::uint64_t x = 0;
    for (std::size_t i = 0; i < len; ++i) x |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
    return x;
  };
  return Header{static_cast<unsigned>(get(0, 2)), static_cast<std::uint32_t>(get(2, 2)),
                static_cast<std::uint32_t>(get(4, 2)), static_cast<std::int32_t>(static_cast<std::uint32_t>(get(6, 4)))};
}

Sketch read_body(std::span<const std::uint8_t> bytes, const FieldConfigPtr& cfg, std::int32_t count) {
  const std::size_t w = value_bytes(*cfg);
  if (bytes.size() != kHeaderBytes + w * cfg->size()) throw ProtocolError("deserialize: payload size mismatch");
  std::vector<u128> values(cfg->size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    u128 v = 0;
    for (std::size_t b = 0; b < w; ++b) v |= static_cast<u128>(bytes[kHeaderBytes + i * w + b]) << (8 * b);
    if (v >= cfg->field.modulus()) throw ProtocolError("deserialize: value outside the field");
    values[i] = v;
  }
  return Sketch(cfg, std::move(values), count);
}

}  // namespace

Sketch deserialize(std::span<const std::uint8_t> bytes, const FieldConfigPtr& config) {
  const Header h = read_header(bytes);
  if (h.bits != config->element_bits || h.mbar != config->mbar || h.gamma != config->gamma) {
    throw ProtocolError("deserialize: header does not match the expected configuration");
  }
  return read_body(bytes, config, h.count);
}

Sketch deserialize(std::span<const std::uint8_t> bytes) {
  const Header h = read_header(bytes);
  FieldConfigPtr cfg;
  try {
    cfg = field_setup(h.bits, h.mbar, h.gamma);
  } catch (const ConfigError& e) {
    throw ProtocolError(std::string("deserialize: invalid header: ") + e.what());
  }
  return read_body(bytes, cfg, h.count);
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size() * 3);
  char buf[4];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%02x", bytes[i]);
    out += buf;
    if (i + 1 < bytes.size()) out += (i % 16 == 15) ? '\n' : ' ';
  }
  return out;
}

}  // namespace setrec
