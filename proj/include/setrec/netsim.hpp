#pragma once
// Discrete-event model of one reconciliation between A and B: requests travel
// A->B in latency L, replies share a FIFO B->A link of finite rate and then
// travel L, and every recovery is a fixed-length job on A's pool of cores.
// Virtual time is kept in integer nanoseconds.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "setrec/partition.hpp"
#include "setrec/protocol.hpp"

namespace setrec {

struct ScenarioConfig {
  std::string name = "custom";
  double latency_ms = 10;
  std::uint64_t throughput_bps = 100000000;
  double recovery_ms = 12.3;
  std::size_t n_cores = 1;
  unsigned element_bits = 256;
  std::uint32_t mbar = 50;
  std::uint32_t gamma = 1;
  PartitionSchedule schedule = PartitionSchedule::fair(2);
  std::size_t samples = 100;

  /// "I", "II" or "III" (ConfigError otherwise).
  static ScenarioConfig preset(const std::string& name);
  /// key = value lines; '#' starts a comment. Unset keys keep the defaults above.
  static ScenarioConfig parse(std::istream& in);

  void validate() const;  // ConfigError unless every quantity is positive
  std::int64_t latency_ns() const;
  std::int64_t recovery_ns() const;
  std::uint64_t wire_bits() const noexcept;
  std::int64_t transmit_ns() const;  // wire_bits / rate, rounded up
};

/// Difference counts of every partition the protocols may visit. A node is
/// expanded into c children iff its count exceeds m̄.
class PlacementTree {
 public:
  struct Node {
    std::uint64_t count = 0;
    std::vector<std::size_t> children;
  };

  static PlacementTree sample(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                              std::mt19937_64& rng);
  /// Tree induced by hashed keys of the actual differences.
  static PlacementTree from_keys(const std::vector<Key>& keys, std::uint32_t mbar, const PartitionSchedule& schedule);

  const Node& node(const Path& path) const;  // DomainError for a path outside the tree
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::uint32_t mbar() const noexcept { return mbar_; }

 private:
  std::vector<Node> nodes_;
  std::uint32_t mbar_ = 0;
};

/// Decides the outcome of each recovery the simulator schedules.
class RecoveryModel {
 public:
  virtual ~RecoveryModel() = default;
  virtual bool node_succeeds(const Path& node) = 0;
  /// Recovery on the node's sketch after subtracting children 0..upto.
  virtual bool residual_succeeds(const Path& node, std::size_t upto) = 0;
};

/// Success iff the partition holds at most m̄ differences.
class AbstractRecovery final : public RecoveryModel {
 public:
  explicit AbstractRecovery(const PlacementTree& tree) : tree_(tree) {}
  bool node_succeeds(const Path& node) override;
  bool residual_succeeds(const Path& node, std::size_t upto) override;

 private:
  const PlacementTree& tree_;
};

/// Runs real sketch recovery on the two sets, placed by HashPlacement.
class ConcreteRecovery final : public RecoveryModel {
 public:
  ConcreteRecovery(ProtocolConfig config, std::vector<Element> set_a, std::vector<Element> set_b);
  bool node_succeeds(const Path& node) override;
  bool residual_succeeds(const Path& node, std::size_t upto) override;

 private:
  const Sketch& diff_sketch(const Path& node);

  ProtocolConfig config_;
  std::vector<Element> set_a_;
  HashPlacement placement_;
  Responder responder_;
  std::map<Path, Sketch> cache_;
};

enum class SimEventKind { request_sent, reply_enqueued, reply_delivered, recovery_started, recovery_finished };

std::string to_string(SimEventKind kind);

struct SimEvent {
  std::int64_t time_ns = 0;
  SimEventKind kind = SimEventKind::request_sent;
  Path path;
  int residual = -1;  // for recovery events: -1 = the node itself, i = minus children 0..i
  bool success = false;  // recovery_finished only
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

/// Lines "time_ns kind path residual success".
void write_event_log(std::ostream& out, const std::vector<SimEvent>& log);

struct TrialResult {
  std::int64_t total_ns = 0;  // completion of the last recovery
  std::uint64_t sketches = 0;
  std::uint64_t recoveries = 0;
  std::uint64_t bits = 0;
  std::vector<SimEvent> log;  // sorted by time, then creation order

  double total_ms() const noexcept { return static_cast<double>(total_ns) * 1e-6; }
};

TrialResult run_trial(ProtocolKind protocol, RecoveryModel& model, const ScenarioConfig& scenario);
TrialResult run_trial(ProtocolKind protocol, const PlacementTree& tree, const ScenarioConfig& scenario);

struct ScenarioResult {
  double mean_ms = 0;
  double stderr_ms = 0;
  std::size_t samples = 0;
};

/// Averages scenario.samples trials; trial k uses a tree drawn from a stream
/// seeded by (seed, k), so PSR and EPSR see the same trees.
ScenarioResult run_scenario(ProtocolKind protocol, std::uint64_t delta, const ScenarioConfig& scenario,
                            std::uint64_t seed);

}  // namespace setrec
