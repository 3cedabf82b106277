#include "setrec/protocol.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "setrec/errors.hpp"
#include "setrec/hash.hpp"

namespace setrec {

std::string to_string(ProtocolKind kind) { return kind == ProtocolKind::psr ? "psr" : "epsr"; }

ProtocolKind parse_protocol_kind(const std::string& text) {
  if (text == "psr" || text == "PSR") return ProtocolKind::psr;
  if (text == "epsr" || text == "EPSR") return ProtocolKind::epsr;
  throw ConfigError("unknown protocol '" + text + "'");
}

ProtocolConfig::ProtocolConfig(unsigned element_bits, std::uint32_t mbar, std::uint32_t gamma,
                               PartitionSchedule schedule, std::uint64_t hash_seed, ProtocolKind protocol)
    : field_(field_setup(element_bits, mbar, gamma)),
      schedule_(std::move(schedule)),
      hash_seed_(hash_seed),
      protocol_(protocol) {
  Fnv1a h;
  h.u64(element_bits).u64(mbar).u64(gamma).u64(hash_seed).text(schedule_.to_string());
  fingerprint_ = h.value();
}

std::uint64_t ProtocolConfig::wire_cost() const noexcept { return sketch_wire_cost(mbar(), gamma(), element_bits()); }

ProtocolConfig ProtocolConfig::with_protocol(ProtocolKind kind) const {
  ProtocolConfig c = *this;
  c.protocol_ = kind;
  return c;
}

ReconcileMetrics& ReconcileMetrics::operator+=(const ReconcileMetrics& o) noexcept {
  sketches_transmitted += o.sketches_transmitted;
  recovery_calls += o.recovery_calls;
  rounds = std::max(rounds, o.rounds);
  bits_b_to_a += o.bits_b_to_a;
  splits += o.splits;
  return *this;
}

std::vector<Element> HashPlacement::select(std::span<const Element> set, const PartitionInterval& node) const {
  const auto [lo, hi] = node.key_range();
  std::vector<Element> out;
  for (Element e : set) {
    const u128 k = key_of(e, seed_).bits;
    if (k >= lo && k < hi) out.push_back(e);
  }
  return out;
}

std::vector<Element> TablePlacement::select(std::span<const Element> set, const PartitionInterval& node) const {
  std::vector<Element> out;
  for (Element e : set) {
    auto it = words_.find(e);
    if (it == words_.end()) throw ProtocolError("element missing from placement table");
    const Path& w = it->second;
    const std::size_t n = std::min(w.size(), node.path.size());
    if (!std::equal(w.begin(), w.begin() + n, node.path.begin())) continue;
    if (w.size() < node.path.size()) throw ProtocolError("placement word shorter than the requested path");
    out.push_back(e);
  }
  return out;
}

// u64 fingerprint, u16 depth, u32 per index; all little-endian.
std::vector<std::uint8_t> encode_request(const Request& request) {
  if (request.path.size() > 0xffff) throw ProtocolError("request path too long");
  std::vector<std::uint8_t> out;
  auto put = [&out](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(request.fingerprint, 8);
  put(request.path.size(), 2);
  for (auto j : request.path) put(j, 4);
  return out;
}

Request decode_request(std::span<const std::uint8_t> bytes) {
  auto get = [&bytes](std::size_t at, int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  if (bytes.size() < 10) throw ProtocolError("truncated request");
  Request r;
  r.fingerprint = get(0, 8);
  const std::size_t depth = get(8, 2);
  if (bytes.size() != 10 + 4 * depth) throw ProtocolError("request length does not match its path depth");
  for (std::size_t i = 0; i < depth; ++i) r.path.push_back(static_cast<std::uint32_t>(get(10 + 4 * i, 4)));
  return r;
}

Responder::Responder(ProtocolConfig config, std::vector<Element> set_b,
                     std::shared_ptr<const PlacementOracle> placement)
    : config_(std::move(config)), set_b_(std::move(set_b)), placement_(std::move(placement)) {}

Sketch Responder::respond(const PartitionInterval& node) const {
  const auto members = placement_->select(set_b_, node);
  return sketch_insert_set(sketch_init(config_.field()), members);
}

std::vector<std::uint8_t> Responder::handle(std::span<const std::uint8_t> request) const {
  const Request r = decode_request(request);
  if (r.fingerprint != config_.fingerprint()) throw ProtocolError("request for an unknown configuration");
  PartitionInterval node;
  try {
    node = interval_of(r.path, config_.schedule());
  } catch (const DomainError& e) {
    throw ProtocolError(e.what());
  }
  return serialize(respond(node));
}

std::vector<std::uint8_t> CountingTransport::exchange(std::span<const std::uint8_t> request) {
  ++requests;
  bytes_a_to_b += request.size();
  auto reply = inner_.exchange(request);
  ++replies;
  bytes_b_to_a += reply.size();
  return reply;
}

std::vector<std::uint8_t> TraceRecorder::exchange(std::span<const std::uint8_t> request) {
  const Request r = decode_request(request);
  const std::uint64_t round = r.path.size() + 1;
  entries_.push_back({Direction::a_to_b, round, r.path, request.size()});
  auto reply = inner_.exchange(request);
  entries_.push_back({Direction::b_to_a, round, r.path, reply.size()});
  return reply;
}

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace) {
  for (const auto& e : trace) {
    out << (e.direction == Direction::a_to_b ? "A>B" : "B>A") << ' ' << e.round << ' ' << path_to_string(e.path)
        << ' ' << e.bytes << '\n';
  }
}

std::vector<TraceEntry> read_trace(std::istream& in) {
  std::vector<TraceEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string dir, path, extra;
    TraceEntry e;
    if (!(ls >> dir >> e.round >> path >> e.bytes) || (ls >> extra)) throw ProtocolError("malformed trace line: " + line);
    if (dir == "A>B") {
      e.direction = Direction::a_to_b;
    } else if (dir == "B>A") {
      e.direction = Direction::b_to_a;
    } else {
      throw ProtocolError("unknown trace direction: " + dir);
    }
    try {
      e.path = path_from_string(path);
    } catch (const DomainError& err) {
      throw ProtocolError(err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::uint64_t round_count(const std::vector<TraceEntry>& trace) {
  if (trace.empty()) throw UsageError("round_count of an empty trace");
  std::uint64_t depth = 0;
  bool any = false;
  for (const auto& e : trace) {
    if (e.direction != Direction::b_to_a) continue;
    depth = std::max<std::uint64_t>(depth, e.path.size());
    any = true;
  }
  if (!any) throw UsageError("trace holds no replies");
  return depth + 1;
}

namespace {

class Engine {
 public:
  Engine(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
         const PlacementOracle& placement)
      : set_a_(set_a), transport_(transport), config_(config), placement_(placement) {}

  ReconcileResult run() {
    const auto root = PartitionInterval::root();
    Sketch z = fetch(root);
    if (config_.protocol() == ProtocolKind::psr) {
      psr(root, z);
    } else {
      epsr(root, z, false);
    }
    std::sort(result_.only_a.begin(), result_.only_a.end());
    std::sort(result_.only_b.begin(), result_.only_b.end());
    result_.metrics.rounds = max_depth_ + 1;
    result_.metrics.bits_b_to_a = result_.metrics.sketches_transmitted * config_.wire_cost();
    return std::move(result_);
  }

 private:
  // Local sketch of S_A ∩ P minus the sketch B returns for P.
  Sketch fetch(const PartitionInterval& node) {
    if (node.path.size() > config_.max_depth) throw ProtocolError("partition tree exceeded the depth limit");
    const auto members = placement_.select(set_a_, node);
    const Sketch za = sketch_insert_set(sketch_init(config_.field()), members);
    const auto reply = transport_.exchange(encode_request({config_.fingerprint(), node.path}));
    const Sketch zb = deserialize(reply, config_.field());
    ++result_.metrics.sketches_transmitted;
    max_depth_ = std::max<std::uint64_t>(max_depth_, node.path.size());
    return sketch_subtract(za, zb);
  }

  bool recover(const Sketch& z) {
    ++result_.metrics.recovery_calls;
    auto r = sketch_recover(z);
    if (!r.flag) return false;
    result_.only_a.insert(result_.only_a.end(), r.recovered_a.begin(), r.recovered_a.end());
    result_.only_b.insert(result_.only_b.end(), r.recovered_b.begin(), r.recovered_b.end());
    return true;
  }

  void psr(const PartitionInterval& node, const Sketch& z) {
    if (recover(z)) return;
    ++result_.metrics.splits;
    for (const auto& child : split(node, config_.schedule())) psr(child, fetch(child));
  }

  void epsr(const PartitionInterval& node, Sketch z, bool skip) {
    if (!skip && recover(z)) return;
    ++result_.metrics.splits;
    const auto children = split(node, config_.schedule());
    for (std::size_t i = 0; i + 1 < children.size(); ++i) {
      const Sketch zi = fetch(children[i]);
      epsr(children[i], zi, false);
      z = sketch_subtract(z, zi);
      if (recover(z)) return;
    }
    epsr(children.back(), std::move(z), true);
  }

  std::span<const Element> set_a_;
  Transport& transport_;
  const ProtocolConfig& config_;
  const PlacementOracle& placement_;
  ReconcileResult result_;
  std::uint64_t max_depth_ = 0;
};

}  // namespace

ReconcileResult psr_reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                              const PlacementOracle& placement) {
  return Engine(set_a, transport, config.with_protocol(ProtocolKind::psr), placement).run();
}

ReconcileResult epsr_reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                               const PlacementOracle& placement) {
  return Engine(set_a, transport, config.with_protocol(ProtocolKind::epsr), placement).run();
}

ReconcileResult reconcile(std::span<const Element> set_a, Transport& transport, const ProtocolConfig& config,
                          const PlacementOracle& placement) {
  return config.protocol() == ProtocolKind::psr ? psr_reconcile(set_a, transport, config, placement)
                                                : epsr_reconcile(set_a, transport, config, placement);
}

TreeFixture nine_difference_fixture() {
  ProtocolConfig config(16, 2, 1, PartitionSchedule::fair(2), 0);
  // leaf words and how many differences sit there
  const std::vector<std::pair<Path, int>> leaves = {
      {{0, 0}, 2}, {{0, 1, 0}, 2}, {{0, 1, 1}, 1}, {{1, 0}, 0}, {{1, 1, 0}, 2}, {{1, 1, 1}, 2}};
  std::map<Element, Path> words;
  TreeFixture fx{config, {}, {}, nullptr};
  Element next = 100;
  bool to_a = true;
  for (const auto& [word, count] : leaves) {
    for (int i = 0; i < count; ++i) {
      words[next] = word;
      (to_a ? fx.set_a : fx.set_b).push_back(next);
      to_a = !to_a;
      ++next;
    }
  }
  // shared elements spread over the same leaves; they cancel everywhere
  for (std::size_t i = 0; i < 12; ++i) {
    const Element e = 1000 + i;
    words[e] = leaves[i % leaves.size()].first;
    fx.set_a.push_back(e);
    fx.set_b.push_back(e);
  }
  fx.placement = std::make_shared<TablePlacement>(std::move(words));
  return fx;
}

}  // namespace setrec
