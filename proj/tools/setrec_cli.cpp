// setrec: command-line front end for the analysis, simulation and protocol code.
// Exit codes: 0 success, 2 usage error, 3 acceptance failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "acceptance.hpp"
#include "setrec/analysis.hpp"
#include "setrec/errors.hpp"
#include "setrec/hash.hpp"
#include "setrec/netsim.hpp"
#include "setrec/protocol.hpp"

using namespace setrec;
using json = nlohmann::ordered_json;

namespace {

constexpr int kUsage = 2;
constexpr int kAcceptance = 3;

struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint32_t mbar = 0;
  std::uint32_t gamma = 0;
  unsigned bits = 0;
  std::size_t c = 2;
  std::string probs;
  std::uint64_t seed = 1;
  std::string out;

  PartitionSchedule schedule() const {
    try {
      return probs.empty() ? PartitionSchedule::fair(c) : PartitionSchedule::parse(probs);
    } catch (const ConfigError& e) {
      throw UsageFailure(std::string("invalid --probs/--c: ") + e.what());
    }
  }
};

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Writes text to --out (or stdout) and, for files, a manifest next to it.
void emit(const std::string& text, const std::string& command, const json& params, std::uint64_t seed,
          const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageFailure("cannot write " + out);
  f << text;
  json manifest;
  manifest["command"] = command;
  manifest["params"] = params;
  manifest["seed"] = seed;
  manifest["version"] = SETREC_VERSION;
  manifest["outputs"] = json::array({{{"path", std::filesystem::path(out).filename().string()},
                                      {"fnv1a64", hex64(Fnv1a().text(text).value())},
                                      {"bytes", text.size()}}});
  std::ofstream m(out + ".manifest.json");
  m << manifest.dump(2) << "\n";
}

void add_schedule_options(CLI::App* cmd, Common& o) {
  cmd->add_option("--c", o.c, "fan-out for fair partitioning")->check(CLI::Range(2, 1 << 16));
  cmd->add_option("--probs", o.probs, "comma-separated split probabilities, e.g. 0.15,0.1,0.25,0.2,0.3");
}

json schedule_params(const Common& o) {
  const auto s = o.schedule();
  return {{"c", s.c()}, {"probs", s.to_string()}};
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts : Common {
  std::size_t delta_max = 1000;
};

void cmd_analyze(const AnalyzeOpts& o) {
  if (o.delta_max < 1 || o.delta_max > 10000) throw UsageFailure("--delta-max must be in [1, 10000]");
  const auto s = o.schedule();
  std::ostringstream csv;
  write_analysis_csv(csv, recursion_table(o.delta_max, o.mbar, s), o.gamma, o.bits);
  json params = {{"mbar", o.mbar}, {"gamma", o.gamma}, {"bits", o.bits}, {"delta_max", o.delta_max}};
  params.update(schedule_params(o));
  emit(csv.str(), "analyze", params, 0, o.out);
}

// ---------------------------------------------------------------- mc

struct McOpts : Common {
  std::vector<std::uint64_t> deltas;
  std::size_t samples = 10000;
};

void cmd_mc(McOpts o) {
  if (o.samples < 100) throw UsageFailure("--samples must be at least 100");
  if (o.deltas.empty())
    for (std::uint64_t d = 200; d <= 2000; d += 200) o.deltas.push_back(d);
  const auto s = o.schedule();
  const auto top = *std::max_element(o.deltas.begin(), o.deltas.end());
  const auto table = recursion_table(top, o.mbar, s);

  json results = json::array();
  for (std::size_t k = 0; k < o.deltas.size(); ++k) {
    const auto d = o.deltas[k];
    const auto mc = mc_summary(d, o.mbar, s, o.samples, o.seed + k, 0);
    auto stat = [](double mean, double se, double expected) {
      return json{{"mean", mean}, {"stderr", se}, {"expected", expected},
                  {"z", se > 0 ? (mean - expected) / se : 0.0}};
    };
    results.push_back({{"delta", d},
                       {"N", stat(mc.mean_n, mc.se_n, table.n_bar[d])},
                       {"T", stat(mc.mean_t, mc.se_t, table.t_bar[d])},
                       {"U", stat(mc.mean_u, mc.se_u, table.u_bar[d])},
                       {"depth", {{"mean", mc.mean_depth}, {"stderr", mc.se_depth}}}});
  }
  json params = {{"mbar", o.mbar}, {"deltas", o.deltas}, {"samples", o.samples}};
  params.update(schedule_params(o));
  json doc = {{"params", params}, {"seed", o.seed}, {"results", results}};
  emit(doc.dump(2) + "\n", "mc", params, o.seed, o.out);
}

// ---------------------------------------------------------------- reconcile

struct ReconcileOpts : Common {
  std::string protocol = "psr";
  std::uint64_t delta = 10;
  std::uint64_t shared = 1000;
  std::string fixture;
  std::string trace;
};

void cmd_reconcile(const ReconcileOpts& o) {
  const auto kind = [&] {
    try {
      return parse_protocol_kind(o.protocol);
    } catch (const ConfigError& e) {
      throw UsageFailure(e.what());
    }
  }();

  std::vector<Element> a, b;
  std::shared_ptr<const PlacementOracle> placement;
  std::unique_ptr<ProtocolConfig> cfg;
  json params;
  if (!o.fixture.empty()) {
    if (o.fixture != "fig2" && o.fixture != "fig3") throw UsageFailure("unknown fixture " + o.fixture);
    auto fx = nine_difference_fixture();
    a = fx.set_a;
    b = fx.set_b;
    placement = fx.placement;
    cfg = std::make_unique<ProtocolConfig>(fx.config.with_protocol(kind));
    params = {{"fixture", o.fixture}, {"protocol", to_string(kind)}};
  } else {
    if (o.bits < 1 || o.bits > 64) throw UsageFailure("--bits must be in [1, 64]");
    const long double universe = std::ldexp(1.0L, static_cast<int>(o.bits));
    if (static_cast<long double>(o.delta) + o.shared > universe)
      throw UsageFailure("delta + shared elements exceed the universe of 2^" + std::to_string(o.bits));
    try {
      cfg = std::make_unique<ProtocolConfig>(o.bits, o.mbar, o.gamma, o.schedule(), o.seed, kind);
    } catch (const ConfigError& e) {
      throw UsageFailure(e.what());
    }
    std::mt19937_64 rng(o.seed);
    const std::uint64_t mask = o.bits == 64 ? ~0ULL : (1ULL << o.bits) - 1;
    std::set<Element> used;
    auto draw = [&] {
      for (;;)
        if (const Element e = rng() & mask; used.insert(e).second) return e;
    };
    for (std::uint64_t i = 0; i < o.shared; ++i) {
      const auto e = draw();
      a.push_back(e);
      b.push_back(e);
    }
    for (std::uint64_t i = 0; i < o.delta; ++i) (rng() & 1 ? a : b).push_back(draw());
    placement = std::make_shared<HashPlacement>(cfg->hash_seed());
    params = {{"protocol", to_string(kind)}, {"delta", o.delta}, {"shared", o.shared}, {"bits", o.bits},
              {"mbar", o.mbar},          {"gamma", o.gamma}, {"seed", o.seed}};
    params.update(schedule_params(o));
  }

  Responder responder(*cfg, b, placement);
  LoopbackTransport loop(responder);
  TraceRecorder recorder(loop);
  const auto r = reconcile(a, recorder, *cfg, *placement);

  std::vector<Element> sa(a), sb(b), only_a, only_b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(only_a));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(only_b));
  const bool correct = r.only_a == only_a && r.only_b == only_b;

  if (!o.trace.empty()) {
    std::ofstream t(o.trace);
    if (!t) throw UsageFailure("cannot write " + o.trace);
    write_trace(t, recorder.entries());
  }
  const auto& m = r.metrics;
  json doc = {{"params", params},
              {"metrics",
               {{"sketches_transmitted", m.sketches_transmitted},
                {"recovery_calls", m.recovery_calls},
                {"rounds", m.rounds},
                {"bits_b_to_a", m.bits_b_to_a},
                {"splits", m.splits}}},
              {"differences", only_a.size() + only_b.size()},
              {"correct", correct}};
  emit(doc.dump(2) + "\n", "reconcile", params, o.seed, o.out);
}

// ---------------------------------------------------------------- netsim

struct NetsimOpts {
  std::string scenario = "I";
  std::vector<std::uint64_t> deltas;
  std::vector<std::size_t> cores;
  std::size_t samples = 0;
  std::string protocol;
  std::uint64_t seed = 1;
  std::string out;
  std::string events;
};

ScenarioConfig load_scenario(const std::string& name) {
  if (name == "I" || name == "II" || name == "III") return ScenarioConfig::preset(name);
  std::ifstream f(name);
  if (!f) throw UsageFailure("unknown scenario " + name + " (expected I, II, III or a scenario file)");
  try {
    return ScenarioConfig::parse(f);
  } catch (const ConfigError& e) {
    throw UsageFailure(name + ": " + e.what());
  }
}

void cmd_netsim(NetsimOpts o) {
  auto base = load_scenario(o.scenario);
  if (o.samples) base.samples = o.samples;
  if (o.deltas.empty())
    for (std::uint64_t d = 100; d <= 1000; d += 100) o.deltas.push_back(d);
  if (o.cores.empty()) o.cores = {base.n_cores};
  std::vector<ProtocolKind> kinds = {ProtocolKind::psr, ProtocolKind::epsr};
  if (!o.protocol.empty()) {
    try {
      kinds = {parse_protocol_kind(o.protocol)};
    } catch (const ConfigError& e) {
      throw UsageFailure(e.what());
    }
  }
  for (auto c : o.cores)
    if (c == 0) throw UsageFailure("--cores must be positive");

  std::ofstream events;
  if (!o.events.empty()) {
    events.open(o.events);
    if (!events) throw UsageFailure("cannot write " + o.events);
  }
  std::ostringstream csv;
  csv << "delta,protocol,cores,mean_ms,stderr_ms\n";
  for (auto d : o.deltas) {
    for (auto kind : kinds) {
      for (auto c : o.cores) {
        auto s = base;
        s.n_cores = c;
        const auto r = run_scenario(kind, d, s, o.seed);
        csv << d << ',' << to_string(kind) << ',' << c << ',' << format_double(r.mean_ms) << ','
            << format_double(r.stderr_ms) << '\n';
        if (events) {
          std::mt19937_64 rng(o.seed);
          const auto tree = PlacementTree::sample(d, s.mbar, s.schedule, rng);
          events << "# delta " << d << " protocol " << to_string(kind) << " cores " << c << "\n";
          write_event_log(events, run_trial(kind, tree, s).log);
        }
      }
    }
  }
  json params = {{"scenario", o.scenario},
                 {"latency_ms", base.latency_ms},
                 {"throughput_bps", base.throughput_bps},
                 {"recovery_ms", base.recovery_ms},
                 {"element_bits", base.element_bits},
                 {"mbar", base.mbar},
                 {"gamma", base.gamma},
                 {"probs", base.schedule.to_string()},
                 {"samples", base.samples},
                 {"deltas", o.deltas},
                 {"cores", o.cores}};
  emit(csv.str(), "netsim", params, o.seed, o.out);
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::vector<int>& ids) {
  auto all = acceptance::criterion_ids();
  for (int id : ids)
    if (std::find(all.begin(), all.end(), id) == all.end())
      throw UsageFailure("unknown criterion " + std::to_string(id));
  return acceptance::run_suite(ids.empty() ? all : ids, std::cout) ? 0 : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned set reconciliation: analysis, simulation and protocol runs"};
  app.set_version_flag("--version", SETREC_VERSION);
  app.require_subcommand(1);

  AnalyzeOpts an;
  an.mbar = 25;
  an.gamma = 1;
  an.bits = 64;
  auto* analyze = app.add_subcommand("analyze", "expected-cost curves as CSV");
  analyze->add_option("--mbar", an.mbar, "sketch capacity")->check(CLI::PositiveNumber);
  analyze->add_option("--gamma", an.gamma, "verification points");
  analyze->add_option("--bits", an.bits, "element size in bits")->check(CLI::PositiveNumber);
  analyze->add_option("--delta-max,--delta", an.delta_max, "largest number of differences (<= 10000)");
  add_schedule_options(analyze, an);
  analyze->add_option("--out", an.out, "output file (default stdout)");

  McOpts mc;
  mc.mbar = 33;
  auto* mcc = app.add_subcommand("mc", "Monte Carlo check of the recursions as JSON");
  mcc->add_option("--mbar", mc.mbar, "sketch capacity")->check(CLI::PositiveNumber);
  mcc->add_option("--delta", mc.deltas, "numbers of differences (default 200,400,...,2000)")->delimiter(',');
  mcc->add_option("--samples", mc.samples, "samples per delta (>= 100)");
  mcc->add_option("--seed", mc.seed, "random seed");
  add_schedule_options(mcc, mc);
  mcc->add_option("--out", mc.out, "output file (default stdout)");

  ReconcileOpts rc;
  rc.mbar = 20;
  rc.gamma = 2;
  rc.bits = 64;
  auto* rec = app.add_subcommand("reconcile", "run PSR or EPSR on random sets or a fixture");
  rec->add_option("--protocol", rc.protocol, "psr or epsr");
  rec->add_option("--delta", rc.delta, "number of differences");
  rec->add_option("--shared", rc.shared, "number of shared elements");
  rec->add_option("--mbar", rc.mbar, "sketch capacity")->check(CLI::PositiveNumber);
  rec->add_option("--gamma", rc.gamma, "verification points");
  rec->add_option("--bits", rc.bits, "element size in bits (1..64)");
  rec->add_option("--seed", rc.seed, "random seed for sets and hashing");
  rec->add_option("--fixture", rc.fixture, "fig2 or fig3: the nine-difference worked example");
  rec->add_option("--trace", rc.trace, "write the message trace to this file");
  add_schedule_options(rec, rc);
  rec->add_option("--out", rc.out, "output file (default stdout)");

  NetsimOpts ns;
  auto* net = app.add_subcommand("netsim", "simulated reconciliation time as CSV");
  net->add_option("--scenario", ns.scenario, "I, II, III or a scenario file");
  net->add_option("--delta", ns.deltas, "numbers of differences (default 100,...,1000)")->delimiter(',');
  net->add_option("--cores", ns.cores, "core counts (default from the scenario)")->delimiter(',');
  net->add_option("--samples", ns.samples, "trials per point (default from the scenario)");
  net->add_option("--protocol", ns.protocol, "psr or epsr (default both)");
  net->add_option("--seed", ns.seed, "random seed");
  net->add_option("--events", ns.events, "write one trial's event log per point to this file");
  net->add_option("--out", ns.out, "output file (default stdout)");

  std::vector<int> criteria;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--criterion", criteria, "criteria to run (default all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*analyze) cmd_analyze(an);
    if (*mcc) cmd_mc(mc);
    if (*rec) cmd_reconcile(rc);
    if (*net) cmd_netsim(ns);
    if (*verify) return cmd_verify(criteria);
  } catch (const UsageFailure& e) {
    std::cerr << "setrec: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "setrec: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "setrec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
