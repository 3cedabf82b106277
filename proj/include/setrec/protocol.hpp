#pragma once
// Partitioned reconciliation engines. Node A drives the recursion and asks
// node B for sketches of partitions through a Transport; A->B requests are
// free, B->A replies are counted.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "setrec/partition.hpp"
#include "setrec/sketch.hpp"

namespace setrec {

enum class ProtocolKind { psr, epsr };

std::string to_string(ProtocolKind kind);
ProtocolKind parse_protocol_kind(const std::string& text);  // "psr" / "epsr", ConfigError otherwise

class ProtocolConfig {
 public:
  ProtocolConfig(unsigned element_bits, std::uint32_t mbar, std::uint32_t gamma, PartitionSchedule schedule,
                 std::uint64_t hash_seed, ProtocolKind protocol = ProtocolKind::psr);

  unsigned element_bits() const noexcept { return field_->element_bits; }
  std::uint32_t mbar() const noexcept { return field_->mbar; }
  std::uint32_t gamma() const noexcept { return field_->gamma; }
  const PartitionSchedule& schedule() const noexcept { return schedule_; }
  std::uint64_t hash_seed() const noexcept { return hash_seed_; }
  ProtocolKind protocol() const noexcept { return protocol_; }
  const FieldConfigPtr& field() const noexcept { return field_; }
  std::uint64_t wire_cost() const noexcept;

  /// Hash of everything both parties must agree on (not the protocol kind).
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  ProtocolConfig with_protocol(ProtocolKind kind) const;

  /// Recursion depth after which the engines give up with ProtocolError.
  std::size_t max_depth = 256;

 private:
  FieldConfigPtr field_;
  PartitionSchedule schedule_;
  std::uint64_t hash_seed_;
  ProtocolKind protocol_;
  std::uint64_t fingerprint_;
};

struct ReconcileMetrics {
  std::uint64_t sketches_transmitted = 0;
  std::uint64_t recovery_calls = 0;
  std::uint64_t rounds = 0;
  std::uint64_t bits_b_to_a = 0;
  std::uint64_t splits = 0;

  /// Counters add, rounds take the maximum.
  ReconcileMetrics& operator+=(const ReconcileMetrics& o) noexcept;
  friend bool operator==(const ReconcileMetrics&, const ReconcileMetrics&) = default;
};

/// Decides which elements lie in a given partition.
class PlacementOracle {
 public:
  virtual ~PlacementOracle() = default;
  virtual std::vector<Element> select(std::span<const Element> set, const PartitionInterval& node) const = 0;
};

/// Default placement: an element lies in a node iff its hashed key does.
class HashPlacement final : public PlacementOracle {
 public:
  explicit HashPlacement(std::uint64_t seed) : seed_(seed) {}
  std::vector<Element> select(std::span<const Element> set, const PartitionInterval& node) const override;

 private:
  std::uint64_t seed_;
};

/// Explicit placement: each element is given its full path word. An element
/// lies in a node iff the node's path is a prefix of its word.
class TablePlacement final : public PlacementOracle {
 public:
  explicit TablePlacement(std::map<Element, Path> words) : words_(std::move(words)) {}
  std::vector<Element> select(std::span<const Element> set, const PartitionInterval& node) const override;

 private:
  std::map<Element, Path> words_;
};

struct Request {
  std::uint64_t fingerprint = 0;
  Path path;
};

std::vector<std::uint8_t> encode_request(const Request& request);
Request decode_request(std::span<const std::uint8_t> bytes);  // ProtocolError on malformed input

/// Node B: answers a request with the serialized sketch of S_B restricted to the partition.
class Responder {
 public:
  Responder(ProtocolConfig config, std::vector<Element> set_b, std::shared_ptr<const PlacementOracle> placement);

  /// ProtocolError when the request was built for another configuration.
  std::vector<std::uint8_t> handle(std::span<const std::uint8_t> request) const;
  Sketch respond(const PartitionInterval& node) const;

 private:
  ProtocolConfig config_;
  std::vector<Element> set_b_;
  std::shared_ptr<const PlacementOracle> placement_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<std::uint8_t> exchange(std::span<const std::uint8_t> request) = 0;
};

class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(const Responder& responder) : responder_(responder) {}
  std::vector<std::uint8_t> exchange(std::span<const std::uint8_t> request) override {
    return responder_.handle(request);
  }

 private:
  const Responder& responder_;
};

/// Counts messages and payload bytes in each direction.
class CountingTransport final : public Transport {
 public:
  explicit CountingTransport(Transport& inner) : inner_(inner) {}
  std::vector<std::uint8_t> exchange(std::span<const std::uint8_t> request) override;

  std::uint64_t requests = 0;
  std::uint64_t replies = 0;
  std::uint64_t bytes_a_to_b = 0;
  std::uint64_t bytes_b_to_a = 0;

 private:
  Transport& inner_;
};

enum class Direction { a_to_b, b_to_a };

struct TraceEntry {
  Direction direction = Direction::a_to_b;
  std::uint64_t round = 0;  // 1 + depth of the requested partition
  Path path;
  std::uint64_t bytes = 0;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Records every exchange; lines look like "B>A 3 0.1 14".
class TraceRecorder final : public Transport {
 public:
  explicit TraceRecorder(Transport& inner) : inner_(inner) {}
  std::vector<std::uint8_t> exchange(std::span<const std::uint8_t> request) override;
  const std::vector<TraceEntry>& entries() const noexcept { return entries_; }

 private:
  Transport& inner_;
  std::vector<TraceEntry> entries_;
};

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace);
std::vector<TraceEntry> read_trace(std::istream& in);  // ProtocolError on malformed lines

/// 1 + maximum depth of any partition whose sketch crossed the network.
/// UsageError on an empty trace.
std::uint64_t round_count(const std::vector<TraceEntry>& trace);

struct ReconcileResult {
  std::vector<Element> only_a;  // sorted
  std::vector<Element> only_b;  // sorted
  ReconcileMetrics metrics;
};

ReconcileResult psr_reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                              const PlacementOracle& placement);
ReconcileResult epsr_reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                               const PlacementOracle& placement);
/// Dispatches on config.protocol().
ReconcileResult reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                          const PlacementOracle& placement);

/// Nine differences, m̄ = 2, c = 2, placed so the partition tree is
///   root 9 -> l 5 (ll 2, lr 3 (lrl 2, lrr 1)), r 4 (rl 0, rr 4 (rrl 2, rrr 2)).
struct TreeFixture {
  ProtocolConfig config;
  std::vector<Element> set_a;
  std::vector<Element> set_b;
  std::shared_ptr<const TablePlacement> placement;
};
TreeFixture nine_difference_fixture();

}  // namespace setrec
