#include "setrec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <thread>

#include "setrec/errors.hpp"
#include "setrec/sketch.hpp"

namespace setrec {

namespace {

using boost::multiprecision::cpp_int;
using ld = long double;

constexpr ld kLogSkip = -700.0L;

std::vector<ld> log_factorials(std::size_t n) {
  std::vector<ld> lf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) lf[k] = std::lgamma(static_cast<ld>(k) + 1.0L);
  return lf;
}

ld to_ld(const Rational& r) { return r.convert_to<ld>(); }

struct Mix {
  ld n = 0, t = 0, u = 0;
};

// sum_{i<δ} C(δ,i) p^i (1-p)^{δ-i} v[i] for the three tables at once. The
// weights are unimodal in i: start at the mode and step outwards with the
// ratio w_{i+1}/w_i = (δ-i)/(i+1) * p/(1-p) until they drop below e^-700.
Mix binomial_mix(std::size_t delta, ld p, ld lp, ld lq, const std::vector<ld>& lf, const RecursionTable& tab) {
  std::size_t mode = static_cast<std::size_t>(std::floor((delta + 1) * p));
  mode = std::min(mode, delta - 1);
  const ld log_start = lf[delta] - lf[mode] - lf[delta - mode] + static_cast<ld>(mode) * lp +
                       static_cast<ld>(delta - mode) * lq;
  Mix m;
  if (log_start < kLogSkip) return m;
  const ld floor_w = std::exp(kLogSkip);
  const ld odds = std::exp(lp - lq);
  auto add = [&](std::size_t i, ld w) {
    m.n += w * tab.n_bar[i];
    m.t += w * tab.t_bar[i];
    m.u += w * tab.u_bar[i];
  };
  const ld start = std::exp(log_start);
  add(mode, start);
  ld w = start;
  for (std::size_t i = mode; i > 0;) {
    w *= static_cast<ld>(i) / (static_cast<ld>(delta - i + 1) * odds);
    --i;
    if (w < floor_w) break;
    add(i, w);
  }
  w = start;
  for (std::size_t i = mode; i + 1 < delta;) {
    w *= static_cast<ld>(delta - i) / static_cast<ld>(i + 1) * odds;
    ++i;
    if (w < floor_w) break;
    add(i, w);
  }
  return m;
}

// P(Binomial(δ, 1-F) <= m̄) summed over F = F_1..F_{c-2}.
ld early_stop_mass(std::size_t delta, std::uint32_t mbar, const std::vector<ld>& lf, const std::vector<ld>& log_f,
                   const std::vector<ld>& log_1mf) {
  ld total = 0;
  for (std::size_t j = 0; j < log_f.size(); ++j) {
    for (std::size_t i = 0; i <= std::min<std::size_t>(mbar, delta); ++i) {
      const ld w = lf[delta] - lf[i] - lf[delta - i] + static_cast<ld>(i) * log_1mf[j] +
                   static_cast<ld>(delta - i) * log_f[j];
      if (w >= kLogSkip) total += std::exp(w);
    }
  }
  return total;
}

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

TreeSample sample_node(std::uint64_t delta, std::uint32_t mbar, const std::vector<double>& p, std::mt19937_64& rng) {
  if (delta <= mbar) return {};
  const std::size_t c = p.size();
  std::vector<std::uint64_t> counts(c);
  std::uint64_t left = delta;
  double mass = 1.0;
  for (std::size_t j = 0; j + 1 < c; ++j) {
    const double q = std::clamp(p[j] / mass, 0.0, 1.0);
    counts[j] = left ? std::binomial_distribution<std::uint64_t>(left, q)(rng) : 0;
    left -= counts[j];
    mass -= p[j];
  }
  counts[c - 1] = left;

  const std::size_t h = h_index(counts, mbar, delta);
  TreeSample s{1, 0, 0, 0};
  for (std::size_t j = 0; j < c; ++j) {
    const TreeSample child = sample_node(counts[j], mbar, p, rng);
    s.n += child.n;
    s.depth = std::max(s.depth, child.depth + 1);
    if (j < h) {
      s.t += child.t;
      s.u += child.u;
    }
  }
  s.t += (h < c) ? 1 : 0;
  s.u += (h < c) ? 1 : 0;
  s.u += h - (h == c ? 1 : 0);
  return s;
}

}  // namespace

RecursionTable recursion_table(std::size_t delta_max, std::uint32_t mbar, const PartitionSchedule& schedule) {
  RecursionTable tab{schedule, mbar, delta_max, {}, {}, {}};
  tab.n_bar.assign(delta_max + 1, 1.0);
  tab.t_bar.assign(delta_max + 1, 1.0);
  tab.u_bar.assign(delta_max + 1, 1.0);
  if (delta_max <= mbar) return tab;

  const std::size_t c = schedule.c();
  const auto lf = log_factorials(delta_max);
  std::vector<ld> pj(c), lp(c), lq(c);
  for (std::size_t j = 0; j < c; ++j) {
    pj[j] = to_ld(schedule.probs()[j]);
    lp[j] = std::log(to_ld(schedule.probs()[j]));
    lq[j] = std::log(to_ld(1 - schedule.probs()[j]));
  }
  std::vector<ld> log_f, log_1mf;
  Rational f = 0;
  for (std::size_t j = 0; j + 2 < c; ++j) {
    f += schedule.probs()[j];
    log_f.push_back(std::log(to_ld(f)));
    log_1mf.push_back(std::log(to_ld(1 - f)));
  }

  for (std::size_t d = mbar + 1; d <= delta_max; ++d) {
    ld self = 0, sn = 0, st = 0, su = 0;
    for (std::size_t j = 0; j < c; ++j) {
      self += std::exp(static_cast<ld>(d) * lp[j]);
      const Mix m = binomial_mix(d, pj[j], lp[j], lq[j], lf, tab);
      sn += m.n;
      st += m.t;
      su += m.u;
    }
    const ld denom = 1.0L - self;
    const ld e = early_stop_mass(d, mbar, lf, log_f, log_1mf);
    tab.n_bar[d] = static_cast<double>((1.0L + sn) / denom);
    tab.t_bar[d] = static_cast<double>((st - e) / denom);
    tab.u_bar[d] = static_cast<double>((su + static_cast<ld>(c - 1) - 2.0L * e) / denom);
  }
  return tab;
}

std::vector<double> psr_expected_recoveries(std::size_t delta_max, std::uint32_t mbar,
                                            const PartitionSchedule& schedule) {
  return recursion_table(delta_max, mbar, schedule).n_bar;
}

std::vector<double> epsr_expected_sketches(std::size_t delta_max, std::uint32_t mbar,
                                           const PartitionSchedule& schedule) {
  return recursion_table(delta_max, mbar, schedule).t_bar;
}

std::vector<double> epsr_expected_recoveries(std::size_t delta_max, std::uint32_t mbar,
                                             const PartitionSchedule& schedule) {
  return recursion_table(delta_max, mbar, schedule).u_bar;
}

std::vector<double> psr_expected_recoveries_fair(std::size_t delta_max, std::uint32_t mbar, std::size_t c) {
  if (c < 2) throw ConfigError("partition schedule needs c >= 2");
  std::vector<double> n(delta_max + 1, 1.0);
  const auto lf = log_factorials(delta_max);
  const ld lc = std::log(static_cast<ld>(c));
  const ld lc1 = std::log(static_cast<ld>(c - 1));
  for (std::size_t d = mbar + 1; d <= delta_max; ++d) {
    const ld scale = -static_cast<ld>(d - 1) * lc;
    ld sum = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const ld w = lf[d] - lf[i] - lf[d - i] + static_cast<ld>(d - i) * lc1 + scale;
      if (w >= kLogSkip) sum += std::exp(w) * n[i];
    }
    n[d] = static_cast<double>((1.0L + sum) / (1.0L - std::exp(scale)));
  }
  return n;
}

ExactRecursionTable recursion_table_exact(std::size_t delta_max, std::uint32_t mbar,
                                          const PartitionSchedule& schedule) {
  if (delta_max > 64) throw ConfigError("exact evaluation is limited to delta <= 64");
  const std::size_t c = schedule.c();
  ExactRecursionTable tab;
  tab.n_bar.assign(delta_max + 1, Rational(1));
  tab.t_bar.assign(delta_max + 1, Rational(1));
  tab.u_bar.assign(delta_max + 1, Rational(1));

  std::vector<std::vector<cpp_int>> binom(delta_max + 1);
  for (std::size_t d = 0; d <= delta_max; ++d) {
    binom[d].assign(d + 1, 1);
    for (std::size_t i = 1; i < d; ++i) binom[d][i] = binom[d - 1][i - 1] + binom[d - 1][i];
  }
  auto powers = [&](const Rational& x) {
    std::vector<Rational> out(delta_max + 1, Rational(1));
    for (std::size_t k = 1; k <= delta_max; ++k) out[k] = out[k - 1] * x;
    return out;
  };
  std::vector<std::vector<Rational>> pp, qp, fp, gp;
  for (const auto& p : schedule.probs()) {
    pp.push_back(powers(p));
    qp.push_back(powers(1 - p));
  }
  Rational f = 0;
  for (std::size_t j = 0; j + 2 < c; ++j) {
    f += schedule.probs()[j];
    fp.push_back(powers(f));
    gp.push_back(powers(1 - f));
  }

  for (std::size_t d = mbar + 1; d <= delta_max; ++d) {
    Rational self = 0, sn = 0, st = 0, su = 0, e = 0;
    for (std::size_t j = 0; j < c; ++j) {
      self += pp[j][d];
      for (std::size_t i = 0; i < d; ++i) {
        const Rational w = Rational(binom[d][i]) * pp[j][i] * qp[j][d - i];
        sn += w * tab.n_bar[i];
        st += w * tab.t_bar[i];
        su += w * tab.u_bar[i];
      }
    }
    for (std::size_t j = 0; j < fp.size(); ++j) {
      for (std::size_t i = 0; i <= std::min<std::size_t>(mbar, d); ++i) {
        e += Rational(binom[d][i]) * gp[j][i] * fp[j][d - i];
      }
    }
    const Rational denom = 1 - self;
    tab.n_bar[d] = (1 + sn) / denom;
    tab.t_bar[d] = (st - e) / denom;
    tab.u_bar[d] = (su + Rational(static_cast<long long>(c - 1)) - 2 * e) / denom;
  }
  return tab;
}

double psr_bound(std::uint64_t delta, std::uint32_t mbar, std::size_t c) {
  return 8.0 * std::numbers::e * static_cast<double>(c + 1) * static_cast<double>(delta) / (mbar + 1.0);
}

std::size_t h_index(const std::vector<std::uint64_t>& counts, std::uint32_t mbar, std::uint64_t delta) {
  std::uint64_t total = 0;
  for (auto k : counts) total += k;
  if (counts.empty() || total != delta) throw DomainError("child counts do not sum to delta");
  const std::uint64_t need = delta > mbar ? delta - mbar : 0;
  std::uint64_t acc = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    acc += counts[j];
    if (acc >= need) return j + 1;
  }
  return counts.size();
}

TreeSample mc_tree_sample(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                          std::mt19937_64& rng) {
  return sample_node(delta, mbar, schedule.probs_double(), rng);
}

McSummary mc_summary(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                     std::size_t samples, std::uint64_t seed, std::size_t workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(samples, 1));
  const auto p = schedule.probs_double();
  std::vector<TreeSample> draws(samples);
  auto job = [&](std::size_t w) {
    for (std::size_t k = w; k < samples; k += workers) {
      std::mt19937_64 rng(splitmix(seed ^ splitmix(k)));
      draws[k] = sample_node(delta, mbar, p, rng);
    }
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(job, w);
  }

  McSummary s;
  s.samples = samples;
  if (samples == 0) return s;
  auto stats = [&](auto field, double& mean, double& se) {
    double sum = 0;
    for (const auto& d : draws) sum += static_cast<double>(field(d));
    mean = sum / samples;
    double ss = 0;
    for (const auto& d : draws) ss += (field(d) - mean) * (field(d) - mean);
    se = samples > 1 ? std::sqrt(ss / (samples - 1) / samples) : 0.0;
  };
  stats([](const TreeSample& d) { return double(d.n); }, s.mean_n, s.se_n);
  stats([](const TreeSample& d) { return double(d.t); }, s.mean_t, s.se_t);
  stats([](const TreeSample& d) { return double(d.u); }, s.mean_u, s.se_u);
  stats([](const TreeSample& d) { return double(d.depth); }, s.mean_depth, s.se_depth);
  return s;
}

double redundancy(double expected_sketches, std::uint64_t delta, std::uint32_t mbar, std::uint32_t gamma,
                  unsigned element_bits) {
  if (delta == 0) throw DomainError("redundancy is undefined at delta = 0");
  return expected_sketches * static_cast<double>(sketch_wire_cost(mbar, gamma, element_bits)) /
         (static_cast<double>(delta) * element_bits);
}

double normalized_complexity(double expected_recoveries, std::uint64_t delta, std::uint32_t mbar) {
  if (delta == 0) throw DomainError("normalized complexity is undefined at delta = 0");
  return expected_recoveries * mbar / static_cast<double>(delta);
}

RoundBoundParams round_bounds(const PartitionSchedule& schedule) {
  RoundBoundParams r;
  const auto p = schedule.probs_double();
  r.lambda = -1.0 / std::log(*std::max_element(p.begin(), p.end()));
  Rational used = 0;
  for (std::size_t i = 0; i + 1 < schedule.c(); ++i) {
    const double ps = static_cast<double>(schedule.probs()[i] / (1 - used));
    used += schedule.probs()[i];
    r.p_star.push_back(ps);
    r.q_max = std::max(r.q_max, std::max(ps, 1.0 - ps));
  }
  r.lambda_star = -1.0 / std::log(r.q_max);
  return r;
}

void write_analysis_csv(std::ostream& out, const RecursionTable& table, std::uint32_t gamma, unsigned element_bits) {
  out << "delta,n_bar,t_bar,u_bar,redundancy_psr,redundancy_epsr,norm_complexity_psr,norm_complexity_epsr\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (std::size_t d = 1; d <= table.delta_max; ++d) {
    out << d << ',' << num(table.n_bar[d]) << ',' << num(table.t_bar[d]) << ',' << num(table.u_bar[d]) << ','
        << num(redundancy(table.n_bar[d], d, table.mbar, gamma, element_bits)) << ','
        << num(redundancy(table.t_bar[d], d, table.mbar, gamma, element_bits)) << ','
        << num(normalized_complexity(table.n_bar[d], d, table.mbar)) << ','
        << num(normalized_complexity(table.u_bar[d], d, table.mbar)) << '\n';
  }
}

}  // namespace setrec
