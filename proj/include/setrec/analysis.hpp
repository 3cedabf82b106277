#pragma once
// Expected costs of the partitioned protocols as functions of the number of
// differences δ: recovery calls of PSR (N̄), sketches sent by EPSR (T̄) and
// recovery calls of EPSR (Ū). All three obey recursions over the multinomial
// placement of δ differences into c children.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "setrec/partition.hpp"

namespace setrec {

struct RecursionTable {
  PartitionSchedule schedule;
  std::uint32_t mbar = 0;
  std::size_t delta_max = 0;
  std::vector<double> n_bar;  // index δ = 0..delta_max
  std::vector<double> t_bar;
  std::vector<double> u_bar;
};

/// Evaluates all three recursions up to delta_max. Binomial weights are taken
/// in log space and terms below e^-700 are dropped.
RecursionTable recursion_table(std::size_t delta_max, std::uint32_t mbar, const PartitionSchedule& schedule);

std::vector<double> psr_expected_recoveries(std::size_t delta_max, std::uint32_t mbar,
                                            const PartitionSchedule& schedule);
std::vector<double> epsr_expected_sketches(std::size_t delta_max, std::uint32_t mbar,
                                           const PartitionSchedule& schedule);
std::vector<double> epsr_expected_recoveries(std::size_t delta_max, std::uint32_t mbar,
                                             const PartitionSchedule& schedule);

/// N̄ for p_j = 1/c through the specialised fair recursion.
std::vector<double> psr_expected_recoveries_fair(std::size_t delta_max, std::uint32_t mbar, std::size_t c);

struct ExactRecursionTable {
  std::vector<Rational> n_bar;
  std::vector<Rational> t_bar;
  std::vector<Rational> u_bar;
};

/// Same recursions in exact rational arithmetic; delta_max <= 64 (ConfigError otherwise).
ExactRecursionTable recursion_table_exact(std::size_t delta_max, std::uint32_t mbar,
                                          const PartitionSchedule& schedule);

/// 8e(c+1)δ/(m̄+1), an upper bound on N̄_δ for fair schedules and δ > m̄.
double psr_bound(std::uint64_t delta, std::uint32_t mbar, std::size_t c);

/// 1-based index of the first child at which the running count reaches δ - m̄.
/// DomainError when counts do not sum to delta.
std::size_t h_index(const std::vector<std::uint64_t>& counts, std::uint32_t mbar, std::uint64_t delta);

struct TreeSample {
  std::uint64_t n = 1;      // PSR recovery calls
  std::uint64_t t = 1;      // EPSR sketches sent
  std::uint64_t u = 1;      // EPSR recovery calls
  std::uint64_t depth = 0;  // levels below the root
};

/// Draws one placement tree for δ differences and evaluates N, T, U and depth on it.
TreeSample mc_tree_sample(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                          std::mt19937_64& rng);

struct McSummary {
  std::size_t samples = 0;
  double mean_n = 0, mean_t = 0, mean_u = 0, mean_depth = 0;
  double se_n = 0, se_t = 0, se_u = 0, se_depth = 0;  // standard errors of the means
};

/// Sample k draws from its own stream seeded by (seed, k), so the result does
/// not depend on the worker count. workers = 0 picks the hardware concurrency.
McSummary mc_summary(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                     std::size_t samples, std::uint64_t seed, std::size_t workers = 1);

/// Transmitted bits over δℓ. DomainError at δ = 0.
double redundancy(double expected_sketches, std::uint64_t delta, std::uint32_t mbar, std::uint32_t gamma,
                  unsigned element_bits);
/// Recovery calls over δ/m̄. DomainError at δ = 0.
double normalized_complexity(double expected_recoveries, std::uint64_t delta, std::uint32_t mbar);

struct RoundBoundParams {
  double lambda = 0;       // -1/log(p_max)
  double lambda_star = 0;  // -1/log(q_max)
  double q_max = 0;
  std::vector<double> p_star;  // p_i / (1 - sum_{j<i} p_j), i = 1..c-1
};

RoundBoundParams round_bounds(const PartitionSchedule& schedule);

/// Columns: delta, n_bar, t_bar, u_bar, redundancy_psr, redundancy_epsr,
/// norm_complexity_psr, norm_complexity_epsr; rows δ = 1..delta_max.
void write_analysis_csv(std::ostream& out, const RecursionTable& table, std::uint32_t gamma, unsigned element_bits);

}  // namespace setrec
