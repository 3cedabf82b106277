#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "setrec/errors.hpp"
#include "setrec/netsim.hpp"
#include "test_support.hpp"

using namespace setrec;
using setrec::testing::random_set_pair;

namespace {

PlacementTree single_node(std::uint64_t delta, std::uint32_t mbar) {
  std::mt19937_64 rng(0);
  return PlacementTree::sample(delta, mbar, PartitionSchedule::fair(2), rng);
}

std::vector<Key> difference_keys(const testing::SetPair& p, std::uint64_t seed) {
  std::vector<Key> keys;
  for (auto e : p.only_a) keys.push_back(key_of(e, seed));
  for (auto e : p.only_b) keys.push_back(key_of(e, seed));
  return keys;
}

}  // namespace

TEST_CASE("scenario presets and derived times") {
  const auto one = ScenarioConfig::preset("I");
  CHECK(one.wire_bits() == 13363);
  CHECK(one.transmit_ns() == 133630);
  CHECK(one.latency_ns() == 10000000);
  CHECK(one.recovery_ns() == 12300000);
  CHECK(ScenarioConfig::preset("II").recovery_ns() == 615000000);
  CHECK(ScenarioConfig::preset("III").transmit_ns() == 1336300000);
  CHECK_THROWS_AS(ScenarioConfig::preset("IV"), ConfigError);
}

TEST_CASE("single-round closed forms") {
  for (std::uint64_t delta : {0u, 1u, 50u}) {
    const auto tree = single_node(delta, 50);
    for (auto kind : {ProtocolKind::psr, ProtocolKind::epsr}) {
      CHECK(run_trial(kind, tree, ScenarioConfig::preset("I")).total_ns == 32433630);
      CHECK(run_trial(kind, tree, ScenarioConfig::preset("II")).total_ns == 635133630);
      CHECK(run_trial(kind, tree, ScenarioConfig::preset("III")).total_ns == 1368600000);
    }
  }
  const auto r = run_trial(ProtocolKind::psr, single_node(3, 50), ScenarioConfig::preset("I"));
  CHECK(std::abs(r.total_ms() - 32.434) <= 0.001);
  CHECK(r.sketches == 1);
  CHECK(r.recoveries == 1);
  CHECK(r.bits == 13363);
  REQUIRE(r.log.size() == 5);
  CHECK(r.log[0].kind == SimEventKind::request_sent);
  CHECK(r.log[1].kind == SimEventKind::reply_enqueued);
  CHECK(r.log[1].time_ns == 10000000);
  CHECK(r.log[2].kind == SimEventKind::reply_delivered);
  CHECK(r.log[2].time_ns == 20133630);
  CHECK(r.log[3].kind == SimEventKind::recovery_started);
  CHECK(r.log[4].kind == SimEventKind::recovery_finished);
  CHECK(r.log[4].success);
}

TEST_CASE("scenario files") {
  std::istringstream in(
      "# same as preset I\n"
      "name = I\n"
      "latency_ms = 10\n"
      "throughput_bps = 100000000   # fast link\n"
      "recovery_ms = 12.3\n"
      "cores = 1\n"
      "element_bits = 256\n"
      "mbar = 50\n"
      "gamma = 1\n"
      "probs = 1/2, 1/2\n"
      "samples = 100\n");
  const auto custom = ScenarioConfig::parse(in);
  const auto preset = ScenarioConfig::preset("I");
  CHECK(custom.transmit_ns() == preset.transmit_ns());
  CHECK(custom.recovery_ns() == preset.recovery_ns());
  CHECK(custom.schedule == preset.schedule);
  const auto a = run_scenario(ProtocolKind::epsr, 300, custom, 5);
  const auto b = run_scenario(ProtocolKind::epsr, 300, preset, 5);
  CHECK(a.mean_ms == b.mean_ms);
  CHECK(a.stderr_ms == b.stderr_ms);

  std::istringstream bad_key("speed = 3\n");
  CHECK_THROWS_AS(ScenarioConfig::parse(bad_key), ConfigError);
  std::istringstream bad_value("cores = many\n");
  CHECK_THROWS_AS(ScenarioConfig::parse(bad_value), ConfigError);
  std::istringstream zero("cores = 0\n");
  CHECK_THROWS_AS(ScenarioConfig::parse(zero), ConfigError);
  std::istringstream no_eq("cores 4\n");
  CHECK_THROWS_AS(ScenarioConfig::parse(no_eq), ConfigError);
}

TEST_CASE("identical seeds give identical event logs") {
  auto s = ScenarioConfig::preset("I");
  s.n_cores = 2;
  for (auto kind : {ProtocolKind::psr, ProtocolKind::epsr}) {
    std::mt19937_64 r1(9), r2(9);
    const auto t1 = PlacementTree::sample(700, 50, s.schedule, r1);
    const auto t2 = PlacementTree::sample(700, 50, s.schedule, r2);
    const auto a = run_trial(kind, t1, s);
    const auto b = run_trial(kind, t2, s);
    CHECK(a.log == b.log);
    std::ostringstream oa, ob;
    write_event_log(oa, a.log);
    write_event_log(ob, b.log);
    CHECK(oa.str() == ob.str());
  }
}

TEST_CASE("event log format") {
  const auto r = run_trial(ProtocolKind::psr, single_node(0, 50), ScenarioConfig::preset("I"));
  std::ostringstream out;
  write_event_log(out, r.log);
  CHECK(out.str() ==
        "0 request_sent - -1 0\n"
        "10000000 reply_enqueued - -1 0\n"
        "20133630 reply_delivered - -1 0\n"
        "20133630 recovery_started - -1 0\n"
        "32433630 recovery_finished - -1 1\n");
}

TEST_CASE("property: link and cores serve in FIFO order") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = ScenarioConfig::preset(trial % 2 ? "III" : "I");
    s.n_cores = 1 + trial % 3;
    const auto kind = trial % 4 < 2 ? ProtocolKind::psr : ProtocolKind::epsr;
    const auto tree = PlacementTree::sample(200 + rng() % 600, 50, s.schedule, rng);
    const auto r = run_trial(kind, tree, s);
    // deliveries are spaced at least one transmission apart
    std::int64_t last_delivery = -1;
    // a job may start at the instant another finishes, so count per timestamp
    std::map<std::int64_t, long> delta_busy;
    std::vector<std::int64_t> finishes;
    for (const auto& e : r.log) {
      if (e.kind == SimEventKind::reply_delivered) {
        if (last_delivery >= 0) REQUIRE(e.time_ns - last_delivery >= s.transmit_ns());
        last_delivery = e.time_ns;
      }
      if (e.kind == SimEventKind::recovery_started) ++delta_busy[e.time_ns];
      if (e.kind == SimEventKind::recovery_finished) {
        --delta_busy[e.time_ns];
        finishes.push_back(e.time_ns);
      }
    }
    long busy = 0;
    for (const auto& [t, d] : delta_busy) {
      busy += d;
      REQUIRE(busy >= 0);
      REQUIRE(busy <= static_cast<long>(s.n_cores));
    }
    CHECK(std::is_sorted(r.log.begin(), r.log.end(),
                         [](const SimEvent& a, const SimEvent& b) { return a.time_ns < b.time_ns; }));
    CHECK(r.total_ns == finishes.back());
  }
}

TEST_CASE("property: abstract success rule matches real sketches") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t c = 2 + trial % 2;
    const ProtocolConfig cfg(64, 2, 2, PartitionSchedule::fair(c), rng());
    ScenarioConfig s = ScenarioConfig::preset("I");
    s.element_bits = 64;
    s.mbar = 2;
    s.gamma = 2;
    s.schedule = cfg.schedule();
    s.n_cores = 1 + trial % 3;
    const std::size_t delta = rng() % 21;
    const std::size_t da = rng() % (delta + 1);
    const auto pair = random_set_pair(rng, 64, 25, da, delta - da);
    const auto tree = PlacementTree::from_keys(difference_keys(pair, cfg.hash_seed()), 2, cfg.schedule());
    for (auto kind : {ProtocolKind::psr, ProtocolKind::epsr}) {
      ConcreteRecovery concrete(cfg, pair.a, pair.b);
      const auto real = run_trial(kind, concrete, s);
      const auto abstract = run_trial(kind, tree, s);
      INFO("trial " << trial << " delta " << delta << " " << to_string(kind));
      CHECK(real.log == abstract.log);

      // same totals as the protocol engine on the same placement
      auto placement = std::make_shared<HashPlacement>(cfg.hash_seed());
      Responder responder(cfg, pair.b, placement);
      LoopbackTransport loop(responder);
      const auto metrics = reconcile(pair.a, loop, cfg.with_protocol(kind), *placement).metrics;
      CHECK(abstract.bits == metrics.sketches_transmitted * s.wire_bits());
      CHECK(abstract.bits == metrics.bits_b_to_a);
      CHECK(abstract.recoveries == metrics.recovery_calls);
    }
  }
}

TEST_CASE("trees") {
  std::mt19937_64 rng(43);
  const auto s = PartitionSchedule::fair(3);
  const auto t = PlacementTree::sample(500, 10, s, rng);
  for (const auto& n : t.nodes()) {
    if (n.count <= 10) {
      CHECK(n.children.empty());
      continue;
    }
    REQUIRE(n.children.size() == 3);
    std::uint64_t sum = 0;
    for (auto k : n.children) sum += t.nodes()[k].count;
    CHECK(sum == n.count);
  }
  CHECK(t.node({}).count == 500);
  CHECK_THROWS_AS(t.node({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), DomainError);
}

TEST_CASE("scenario trends at a thousand differences") {
  auto s1 = ScenarioConfig::preset("I");
  double prev = 1e300;
  for (std::size_t cores : {1u, 2u, 4u, 8u}) {
    s1.n_cores = cores;
    s1.samples = 30;
    const double t = run_scenario(ProtocolKind::psr, 1000, s1, 3).mean_ms;
    CHECK(t < prev);
    prev = t;
  }
  auto s3 = ScenarioConfig::preset("III");
  s3.samples = 30;
  const double psr = run_scenario(ProtocolKind::psr, 1000, s3, 3).mean_ms;
  const double epsr = run_scenario(ProtocolKind::epsr, 1000, s3, 3).mean_ms;
  CHECK(psr / epsr > 1.7);
  CHECK(psr / epsr < 2.1);
}
