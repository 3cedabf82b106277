#include "setrec/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "setrec/errors.hpp"

namespace setrec {

namespace {

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  std::string rest;
  if (!(in >> v) || (in >> rest)) throw ConfigError("bad value for " + key + ": '" + value + "'");
  return v;
}

Path child_path(const Path& p, std::size_t j) {
  Path c = p;
  c.push_back(static_cast<std::uint32_t>(j));
  return c;
}

std::vector<std::uint64_t> multinomial(std::uint64_t n, const std::vector<double>& p, std::mt19937_64& rng) {
  std::vector<std::uint64_t> counts(p.size());
  double mass = 1.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    const double q = std::clamp(p[j] / mass, 0.0, 1.0);
    counts[j] = n ? std::binomial_distribution<std::uint64_t>(n, q)(rng) : 0;
    n -= counts[j];
    mass -= p[j];
  }
  counts.back() = n;
  return counts;
}

}  // namespace

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  ScenarioConfig s;
  s.name = name;
  if (name == "I") {
    s.throughput_bps = 100000000;
    s.recovery_ms = 12.3;
  } else if (name == "II") {
    s.throughput_bps = 100000000;
    s.recovery_ms = 615;
  } else if (name == "III") {
    s.throughput_bps = 10000;
    s.recovery_ms = 12.3;
  } else {
    throw ConfigError("unknown scenario '" + name + "' (expected I, II or III)");
  }
  return s;
}

ScenarioConfig ScenarioConfig::parse(std::istream& in) {
  ScenarioConfig s;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") {
      s.name = value;
    } else if (key == "latency_ms") {
      s.latency_ms = parse_number<double>(key, value);
    } else if (key == "throughput_bps") {
      s.throughput_bps = parse_number<std::uint64_t>(key, value);
    } else if (key == "recovery_ms") {
      s.recovery_ms = parse_number<double>(key, value);
    } else if (key == "cores") {
      s.n_cores = parse_number<std::size_t>(key, value);
    } else if (key == "element_bits") {
      s.element_bits = parse_number<unsigned>(key, value);
    } else if (key == "mbar") {
      s.mbar = parse_number<std::uint32_t>(key, value);
    } else if (key == "gamma") {
      s.gamma = parse_number<std::uint32_t>(key, value);
    } else if (key == "c") {
      s.schedule = PartitionSchedule::fair(parse_number<std::size_t>(key, value));
    } else if (key == "probs") {
      s.schedule = PartitionSchedule::parse(value);
    } else if (key == "samples") {
      s.samples = parse_number<std::size_t>(key, value);
    } else {
      throw ConfigError("unknown scenario key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

void ScenarioConfig::validate() const {
  if (!(latency_ms > 0) || !(recovery_ms > 0) || throughput_bps == 0 || n_cores == 0 || element_bits == 0 ||
      mbar == 0 || gamma == 0 || samples == 0) {
    throw ConfigError("scenario quantities must all be positive");
  }
}

std::int64_t ScenarioConfig::latency_ns() const { return std::llround(latency_ms * 1e6); }
std::int64_t ScenarioConfig::recovery_ns() const { return std::llround(recovery_ms * 1e6); }
std::uint64_t ScenarioConfig::wire_bits() const noexcept { return sketch_wire_cost(mbar, gamma, element_bits); }

std::int64_t ScenarioConfig::transmit_ns() const {
  const u128 num = static_cast<u128>(wire_bits()) * 1000000000u;
  return static_cast<std::int64_t>((num + throughput_bps - 1) / throughput_bps);
}

PlacementTree PlacementTree::sample(std::uint64_t delta, std::uint32_t mbar, const PartitionSchedule& schedule,
                                    std::mt19937_64& rng) {
  PlacementTree t;
  t.mbar_ = mbar;
  t.nodes_.push_back({delta, {}});
  const auto p = schedule.probs_double();
  // breadth-first so draws happen in a fixed order
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
    if (t.nodes_[i].count <= mbar) continue;
    for (auto k : multinomial(t.nodes_[i].count, p, rng)) {
      t.nodes_[i].children.push_back(t.nodes_.size());
      t.nodes_.push_back({k, {}});
    }
  }
  return t;
}

PlacementTree PlacementTree::from_keys(const std::vector<Key>& keys, std::uint32_t mbar,
                                       const PartitionSchedule& schedule) {
  PlacementTree t;
  t.mbar_ = mbar;
  std::vector<std::pair<PartitionInterval, std::vector<Key>>> work;
  work.push_back({PartitionInterval::root(), keys});
  t.nodes_.push_back({keys.size(), {}});
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
    if (t.nodes_[i].count <= mbar) continue;
    for (auto& child : split(work[i].first, schedule)) {
      std::vector<Key> inside;
      for (const Key& k : work[i].second)
        if (child.contains(k)) inside.push_back(k);
      t.nodes_[i].children.push_back(t.nodes_.size());
      t.nodes_.push_back({inside.size(), {}});
      work.push_back({std::move(child), std::move(inside)});
    }
  }
  return t;
}

const PlacementTree::Node& PlacementTree::node(const Path& path) const {
  std::size_t at = 0;
  for (auto j : path) {
    if (j >= nodes_[at].children.size()) throw DomainError("path leaves the placement tree");
    at = nodes_[at].children[j];
  }
  return nodes_[at];
}

bool AbstractRecovery::node_succeeds(const Path& node) { return tree_.node(node).count <= tree_.mbar(); }

bool AbstractRecovery::residual_succeeds(const Path& node, std::size_t upto) {
  std::uint64_t left = tree_.node(node).count;
  for (std::size_t j = 0; j <= upto; ++j) left -= tree_.node(child_path(node, j)).count;
  return left <= tree_.mbar();
}

ConcreteRecovery::ConcreteRecovery(ProtocolConfig config, std::vector<Element> set_a, std::vector<Element> set_b)
    : config_(config),
      set_a_(std::move(set_a)),
      placement_(config.hash_seed()),
      responder_(config, std::move(set_b), std::make_shared<HashPlacement>(config.hash_seed())) {}

const Sketch& ConcreteRecovery::diff_sketch(const Path& node) {
  auto it = cache_.find(node);
  if (it != cache_.end()) return it->second;
  const auto interval = interval_of(node, config_.schedule());
  const Sketch za = sketch_insert_set(sketch_init(config_.field()), placement_.select(set_a_, interval));
  return cache_.emplace(node, sketch_subtract(za, responder_.respond(interval))).first->second;
}

bool ConcreteRecovery::node_succeeds(const Path& node) { return sketch_recover(diff_sketch(node)).flag; }

bool ConcreteRecovery::residual_succeeds(const Path& node, std::size_t upto) {
  Sketch z = diff_sketch(node);
  for (std::size_t j = 0; j <= upto; ++j) z = sketch_subtract(z, diff_sketch(child_path(node, j)));
  return sketch_recover(z).flag;
}

std::string to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::request_sent: return "request_sent";
    case SimEventKind::reply_enqueued: return "reply_enqueued";
    case SimEventKind::reply_delivered: return "reply_delivered";
    case SimEventKind::recovery_started: return "recovery_started";
    case SimEventKind::recovery_finished: return "recovery_finished";
  }
  return "?";
}

void write_event_log(std::ostream& out, const std::vector<SimEvent>& log) {
  for (const auto& e : log) {
    out << e.time_ns << ' ' << to_string(e.kind) << ' ' << path_to_string(e.path) << ' ' << e.residual << ' '
        << (e.success ? 1 : 0) << '\n';
  }
}

namespace {

class Simulator {
 public:
  Simulator(ProtocolKind protocol, RecoveryModel& model, const ScenarioConfig& scenario)
      : protocol_(protocol),
        model_(model),
        c_(scenario.schedule.c()),
        latency_(scenario.latency_ns()),
        transmit_(scenario.transmit_ns()),
        recovery_(scenario.recovery_ns()),
        wire_bits_(scenario.wire_bits()),
        cores_(scenario.n_cores, 0) {}

  TrialResult run() {
    send_request(0, {});
    while (!queue_.empty()) {
      const Pending ev = queue_.top();
      queue_.pop();
      switch (ev.type) {
        case Pending::request_arrives: on_request(ev); break;
        case Pending::reply_arrives: on_reply(ev); break;
        case Pending::job_done: on_job_done(ev); break;
      }
    }
    std::stable_sort(result_.log.begin(), result_.log.end(),
                     [](const SimEvent& a, const SimEvent& b) { return a.time_ns < b.time_ns; });
    result_.bits = result_.sketches * wire_bits_;
    return std::move(result_);
  }

 private:
  struct Pending {
    enum Type { request_arrives, reply_arrives, job_done } type;
    std::int64_t time;
    std::uint64_t seq;
    Path path;
    int residual;
    bool ok;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void push(Pending::Type type, std::int64_t time, Path path, int residual = -1, bool ok = false) {
    queue_.push({type, time, seq_++, std::move(path), residual, ok});
  }

  void log(std::int64_t t, SimEventKind kind, const Path& path, int residual = -1, bool ok = false) {
    result_.log.push_back({t, kind, path, residual, ok});
  }

  void send_request(std::int64_t now, Path path) {
    log(now, SimEventKind::request_sent, path);
    push(Pending::request_arrives, now + latency_, std::move(path));
  }

  // B answers at once; the reply waits for the link, then propagates.
  void on_request(const Pending& ev) {
    log(ev.time, SimEventKind::reply_enqueued, ev.path);
    const std::int64_t start = std::max(ev.time, link_free_);
    link_free_ = start + transmit_;
    ++result_.sketches;
    push(Pending::reply_arrives, link_free_ + latency_, ev.path);
  }

  void on_reply(const Pending& ev) {
    log(ev.time, SimEventKind::reply_delivered, ev.path);
    start_job(ev.time, ev.path, -1);
    if (protocol_ == ProtocolKind::epsr && !ev.path.empty()) {
      Path parent(ev.path.begin(), ev.path.end() - 1);
      start_job(ev.time, parent, static_cast<int>(ev.path.back()));
    }
  }

  // FIFO multi-server queue: a job takes the earliest free core.
  void start_job(std::int64_t now, const Path& path, int residual) {
    auto core = std::min_element(cores_.begin(), cores_.end());
    const std::int64_t start = std::max(now, *core);
    *core = start + recovery_;
    const bool ok = residual < 0 ? model_.node_succeeds(path) : model_.residual_succeeds(path, residual);
    ++result_.recoveries;
    log(start, SimEventKind::recovery_started, path, residual);
    push(Pending::job_done, *core, path, residual, ok);
  }

  void on_job_done(const Pending& ev) {
    log(ev.time, SimEventKind::recovery_finished, ev.path, ev.residual, ev.ok);
    result_.total_ns = std::max(result_.total_ns, ev.time);
    if (ev.ok) return;
    if (ev.residual < 0) {
      split(ev.time, ev.path);
      return;
    }
    const std::size_t next = static_cast<std::size_t>(ev.residual) + 1;
    if (next + 1 < c_) {
      send_request(ev.time, child_path(ev.path, next));
    } else {
      // last child: its sketch is the residual we already hold
      split(ev.time, child_path(ev.path, c_ - 1));
    }
  }

  void split(std::int64_t now, const Path& path) {
    if (protocol_ == ProtocolKind::psr) {
      for (std::size_t j = 0; j < c_; ++j) send_request(now, child_path(path, j));
    } else {
      send_request(now, child_path(path, 0));
    }
  }

  ProtocolKind protocol_;
  RecoveryModel& model_;
  std::size_t c_;
  std::int64_t latency_, transmit_, recovery_;
  std::uint64_t wire_bits_;
  std::vector<std::int64_t> cores_;
  std::int64_t link_free_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  TrialResult result_;
};

}  // namespace

TrialResult run_trial(ProtocolKind protocol, RecoveryModel& model, const ScenarioConfig& scenario) {
  scenario.validate();
  return Simulator(protocol, model, scenario).run();
}

TrialResult run_trial(ProtocolKind protocol, const PlacementTree& tree, const ScenarioConfig& scenario) {
  AbstractRecovery model(tree);
  return run_trial(protocol, model, scenario);
}

ScenarioResult run_scenario(ProtocolKind protocol, std::uint64_t delta, const ScenarioConfig& scenario,
                            std::uint64_t seed) {
  scenario.validate();
  std::vector<double> times;
  times.reserve(scenario.samples);
  for (std::size_t k = 0; k < scenario.samples; ++k) {
    std::mt19937_64 rng(splitmix(seed ^ splitmix(k)));
    const auto tree = PlacementTree::sample(delta, scenario.mbar, scenario.schedule, rng);
    times.push_back(run_trial(protocol, tree, scenario).total_ms());
  }
  ScenarioResult r;
  r.samples = times.size();
  double sum = 0;
  for (double t : times) sum += t;
  r.mean_ms = sum / r.samples;
  double ss = 0;
  for (double t : times) ss += (t - r.mean_ms) * (t - r.mean_ms);
  r.stderr_ms = r.samples > 1 ? std::sqrt(ss / (r.samples - 1) / r.samples) : 0.0;
  return r;
}

}  // namespace setrec
