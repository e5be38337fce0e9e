#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paxoslease/sim/scenario.hpp"
#include "paxoslease/sim/simulator.hpp"

namespace paxoslease::sim {

struct Builtin {
  std::string_view name;
  std::string_view summary;
  std::string_view text;
};

// Canned timelines. T = 1000 ms and M = 1500 ms unless stated otherwise.
inline const std::vector<Builtin>& builtins() {
  static const std::vector<Builtin> list = {
      {"fast-path", "one proposer, no contention, fixed 10 ms links",
       R"(name = fast-path
acceptors = 3
proposers = 1
retry = none
delay_ms = 10..10
limit_ms = 5000
at = 0 p0 acquire
)"},

      // p0 plays the lower-ballot proposer whose proposal must be seen by the
      // later prepare; p1 the higher-ballot one.
      {"proof-part1", "a majority-accepted proposal blocks every later prepare majority until it expires",
       R"(name = proof-part1
acceptors = 3
proposers = 2
retry = none
delay_ms = 10..10
limit_ms = 8000
# stage A: p0's propose reaches a1 and a2 only after p1 has prepared them
rule = delay 290 p0 a1 POQ 0..100
rule = delay 290 p0 a2 POQ 0..100
at = 0 p0 acquire
at = 100 p1 acquire
# stage B: p0 holds the lease; p1's first try is outnumbered, the second
# outnumbers p0 but is turned away; p1 succeeds after expiry
at = 3000 p0 acquire
at = 3050 p1 acquire
at = 3100 p1 acquire
at = 4200 p1 acquire
)"},

      {"proof-part2", "a lower ballot's lease survives a higher prepare and an acceptor restart",
       R"(name = proof-part2
acceptors = 3
proposers = 2
retry = none
delay_ms = 10..10
limit_ms = 8000
rule = delay 40 p0 a2 POQ 0..100
at = 0 p0 acquire
at = 35 p1 acquire
crash = 200 a0 100
at = 400 p1 acquire
at = 1200 p1 acquire
)"},

      {"naive-contention", "majority-vote baseline: three proposers split the acceptors",
       R"(name = naive-contention
protocol = naive
acceptors = 3
proposers = 3
retry = immediate
delay_ms = 20..20
limit_ms = 20000
rule = delay 10 p0 a0 * *
rule = delay 10 p1 a1 * *
rule = delay 10 p2 a2 * *
rule = delay 10 a0 p0 * *
rule = delay 10 a1 p1 * *
rule = delay 10 a2 p2 * *
at = 0 p0 acquire
at = 0 p1 acquire
at = 0 p2 acquire
)"},

      {"paxos-contention", "the naive-contention schedule under PaxosLease",
       R"(name = paxos-contention
acceptors = 3
proposers = 3
retry = immediate
delay_ms = 20..20
limit_ms = 20000
rule = delay 10 p0 a0 * *
rule = delay 10 p1 a1 * *
rule = delay 10 p2 a2 * *
rule = delay 10 a0 p0 * *
rule = delay 10 a1 p1 * *
rule = delay 10 a2 p2 * *
at = 0 p0 acquire
at = 0 p1 acquire
at = 0 p2 acquire
)"},

      // Random per-message delays; run under both protocols by
      // compare_blocking().
      {"contention-random", "three simultaneous proposers with jittered links",
       R"(name = contention-random
acceptors = 3
proposers = 3
retry = immediate
delay_ms = 5..25
limit_ms = 5000
at = 0 p0 acquire
at = 0 p1 acquire
at = 0 p2 acquire
)"},

      {"duel", "two proposers retrying immediately keep preempting each other",
       R"(name = duel
acceptors = 3
proposers = 2
retry = immediate
prepare_timeout_ms = 200
delay_ms = 1..12
limit_ms = 3000
seed = 15
at = 0 p0 acquire
at = 0 p1 acquire
)"},

      {"duel-backoff", "the duel schedule with randomized backoff",
       R"(name = duel-backoff
acceptors = 3
proposers = 2
retry = backoff
prepare_timeout_ms = 200
delay_ms = 1..12
limit_ms = 3000
seed = 15
at = 0 p0 acquire
at = 0 p1 acquire
)"},

      {"extension", "the owner extends every 500 ms while a persistent contender keeps asking",
       R"(name = extension
acceptors = 3
proposers = 2
delay_ms = 10..10
limit_ms = 15000
proposer = p0 retry=backoff extend_every_ms=500
proposer = p1 retry=backoff persistent=true
at = 0 p0 acquire
at = 100 p1 acquire
)"},

      {"release", "the owner releases early and another proposer takes over before the old deadline",
       R"(name = release
acceptors = 3
proposers = 2
retry = none
delay_ms = 10..10
limit_ms = 5000
at = 0 p0 acquire
at = 300 p0 release
at = 350 p1 acquire
)"},

      {"crash-churn", "persistent proposers under aggressive acceptor crash/restart churn",
       R"(name = crash-churn
acceptors = 5
proposers = 3
retry = backoff
persistent = true
delay_ms = 0..100
drop = 0.1
duplicate = 0.05
churn = acceptors 1000 10..300
limit_ms = 20000
at = 0 p0 acquire
at = 0 p1 acquire
at = 0 p2 acquire
)"},

      // a0 promises p1's ballot, restarts and sits out M, then accepts p0's
      // lower ballot; prepare responses from a1 arrive only after the gate
      // opens, so both proposers start their timers afterwards.
      {"restart-gap", "a promise lost in a restart plus delays longer than M lets two proposers own",
       R"(name = restart-gap
acceptors = 3
proposers = 2
retry = none
delay_ms = 5..5
limit_ms = 4000
rule = delay 1600 a1 p0 PRS *
rule = delay 1650 a1 p1 PRS *
rule = delay 1700 a2 p0 PRS *
rule = drop p1 a2 PRQ *
at = 0 p0 acquire
at = 10 p1 acquire
crash = 50 a0 0
)"},

      {"liveness", "three proposers with backoff on a lossy network",
       R"(name = liveness
acceptors = 5
proposers = 3
retry = backoff
delay_ms = 0..100
drop = 0.1
duplicate = 0.05
limit_ms = 20000
at = 0 p0 acquire
at = 0 p1 acquire
at = 0 p2 acquire
)"},

      {"takeover", "a long-time owner crashes and a persistent contender takes over",
       R"(name = takeover
acceptors = 3
proposers = 2
retry = backoff
delay_ms = 5..15
limit_ms = 40000
proposer = p0 extend_every_ms=500
proposer = p1 persistent=true
at = 0 p0 acquire
at = 100 p1 acquire
crash = 30000 p0 100000
)"},
  };
  return list;
}

inline const Builtin* find_builtin(std::string_view name) {
  for (const auto& b : builtins())
    if (b.name == name) return &b;
  return nullptr;
}

// Randomized fault plan used by the large safety sweep: duplication, crash
// churn for both roles and a loss rate picked by the seed. Delays are uniform
// in [0, 2T]; with `mixedDelay` the upper bound instead cycles through T/10,
// T/2, T and 2T. A round trip under the plain plan usually outlasts T, so
// leases there are rare and the mixed plan is what exercises ownership.
// p0 extends every 500 ms; everyone is persistent.
inline Scenario acceptance_scenario(std::uint64_t seed, bool mixedDelay = false) {
  static constexpr double kDrop[] = {0.0, 0.1, 0.3, 0.5};
  static constexpr std::int64_t kDelayMaxMs[] = {100, 500, 1000, 2000};
  Scenario s;
  s.name = mixedDelay ? "acceptance-mixed" : "acceptance";
  s.acceptors = 5;
  s.proposers = 3;
  s.limit = Duration{std::chrono::seconds(30)};
  s.prepareTimeout = Duration{std::chrono::milliseconds(2000)};
  s.proposerDefaults = {RetryMode::Backoff, true, std::nullopt};
  s.proposerOverrides[0] = {RetryMode::Backoff, true, Duration{std::chrono::milliseconds(500)}};
  s.faults.seed = seed;
  s.faults.dropProbability = kDrop[seed % 4];
  s.faults.duplicateProbability = 0.05;
  s.faults.delayMin = Duration{0};
  s.faults.delayMax = Duration{std::chrono::milliseconds(mixedDelay ? kDelayMaxMs[(seed / 4) % 4] : 2 * s.timespan.count())};
  s.faults.churn.push_back({true, Duration{std::chrono::milliseconds(10000)}, Duration{std::chrono::milliseconds(10)},
                            Duration{std::chrono::milliseconds(2000)}});
  s.faults.churn.push_back({false, Duration{std::chrono::milliseconds(8000)}, Duration{std::chrono::milliseconds(10)},
                            Duration{std::chrono::milliseconds(2000)}});
  for (std::size_t i = 0; i < s.proposers; ++i)
    s.commands.push_back({TimePoint{std::chrono::milliseconds(100 * static_cast<std::int64_t>(i))}, s.proposer_node(i),
                          CommandKind::Acquire});
  return s;
}

inline Scenario load_builtin(std::string_view name) {
  if (name == "acceptance") return acceptance_scenario(0);
  if (name == "acceptance-mixed") return acceptance_scenario(0, true);
  const Builtin* b = find_builtin(name);
  if (!b) throw ScenarioError(0, "unknown builtin scenario: " + std::string(name));
  return parse_scenario(b->text);
}

// The builtin as run with a given seed. The acceptance plan derives its loss
// rate and delay bound from the seed as well.
inline Scenario builtin_for_seed(std::string_view name, std::uint64_t seed) {
  if (name == "acceptance") return acceptance_scenario(seed);
  if (name == "acceptance-mixed") return acceptance_scenario(seed, true);
  Scenario s = load_builtin(name);
  s.faults.seed = seed;
  return s;
}

inline std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& b : builtins()) out.emplace_back(b.name);
  out.emplace_back("acceptance");
  out.emplace_back("acceptance-mixed");
  return out;
}

// Known protocol mutations for negative testing.
//   expiry-disabled  acceptors answer propose requests but never hold the
//                    accepted proposal, so prepares never see a live lease
//   rejoin-zero      restarted acceptors answer immediately
//   silent-reject    acceptors drop stale requests instead of rejecting
inline const std::vector<std::string_view>& mutation_names() {
  static const std::vector<std::string_view> names{"none", "expiry-disabled", "rejoin-zero", "silent-reject"};
  return names;
}

inline void apply_mutation(Scenario& s, std::string_view mutation) {
  if (mutation == "none" || mutation.empty()) return;
  if (mutation == "expiry-disabled") {
    s.acceptorHold = false;
  } else if (mutation == "rejoin-zero") {
    s.rejoinGate = Duration{0};
  } else if (mutation == "silent-reject") {
    s.replyReject = false;
  } else {
    throw ScenarioError(0, "unknown mutation: " + std::string(mutation));
  }
}

struct ProofCase {
  std::string_view scenario;
  std::string_view mutation;
  bool expectViolation;
};

inline const std::vector<ProofCase>& proof_cases() {
  static const std::vector<ProofCase> cases = {
      {"proof-part1", "none", false},
      {"proof-part1", "expiry-disabled", true},
      {"proof-part2", "none", false},
      {"proof-part2", "expiry-disabled", true},
      {"proof-part2", "rejoin-zero", true},
  };
  return cases;
}

inline std::string acceptor_set(std::uint64_t mask, const Scenario& s) {
  std::string out = "{";
  for (std::size_t a = 0; a < s.acceptors; ++a) {
    if (!(mask & (std::uint64_t{1} << a))) continue;
    if (out.size() > 1) out += ',';
    out += s.node_name(static_cast<NodeId>(a));
  }
  return out + "}";
}

// One line per ballot that won a propose majority: its A2 set and, for every
// later ballot that reached a prepare majority, A1 and the intersection.
inline std::vector<std::string> quorum_report(const Trace& t, const Scenario& s) {
  const auto majority = static_cast<int>(s.acceptors / 2 + 1);
  std::vector<std::string> out;
  for (const auto& [b, q] : t.quorums) {
    if (std::popcount(q.proposeAccepted) < majority) continue;
    std::string l = "A2(" + to_string(b) + " " + s.node_name(q.proposer) + ")=" + acceptor_set(q.proposeAccepted, s);
    for (const auto& [b2, q2] : t.quorums) {
      if (b2 <= b || std::popcount(q2.prepareOpen) < majority) continue;
      l += " A1(" + to_string(b2) + ")=" + acceptor_set(q2.prepareOpen, s) + " common=" +
           acceptor_set(q2.prepareOpen & q.proposeAccepted, s);
    }
    out.push_back(std::move(l));
  }
  return out;
}

struct ProofOutcome {
  ProofCase c;
  Trace trace;
  bool passed = false;
};

inline ProofOutcome run_proof_case(const ProofCase& c, RunOptions options = {}) {
  Scenario s = load_builtin(c.scenario);
  apply_mutation(s, c.mutation);
  options.trackQuorums = true;
  ProofOutcome o{c, run_scenario(std::move(s), options), false};
  o.passed = o.trace.verdict.ok() != c.expectViolation;
  return o;
}

struct BatchResult {
  std::uint64_t runs = 0;
  std::uint64_t violations = 0;
  std::optional<std::uint64_t> firstViolatingSeed;
  std::uint64_t acquired = 0;  // runs with at least one acquisition
  std::uint64_t ballotRegressions = 0;
  std::uint64_t events = 0;
};

// Runs `make(seed)` for every seed in [first, last], stopping at the first
// violation when `stopOnViolation` is set.
template <class Make>
BatchResult run_batch(std::uint64_t first, std::uint64_t last, Make&& make, bool stopOnViolation = false) {
  BatchResult r;
  RunOptions opt;
  opt.recordLines = false;
  for (std::uint64_t seed = first; seed <= last; ++seed) {
    Scenario s = make(seed);
    s.faults.seed = seed;
    const Trace t = run_scenario(std::move(s), opt);
    ++r.runs;
    r.events += t.stats.events;
    r.ballotRegressions += t.stats.ballotRegressions;
    if (t.stats.acquisitions > 0) ++r.acquired;
    if (!t.verdict.ok()) {
      ++r.violations;
      if (!r.firstViolatingSeed) r.firstViolatingSeed = seed;
      if (stopOnViolation) break;
    }
    if (seed == last) break;
  }
  return r;
}

struct BlockingComparison {
  std::uint64_t runs = 0;
  // No acquisition within the first T, i.e. the first naive round failed.
  std::uint64_t naiveBlocked = 0;
  std::uint64_t paxosBlocked = 0;
  std::uint64_t paxosViolations = 0;
};

// Runs one scenario under both protocols for each seed.
inline BlockingComparison compare_blocking(const Scenario& base, std::uint64_t first, std::uint64_t count) {
  BlockingComparison r;
  RunOptions opt;
  opt.recordLines = false;
  for (std::uint64_t i = 0; i < count; ++i) {
    Scenario s = base;
    s.faults.seed = first + i;
    s.protocol = Protocol::Naive;
    const Trace naive = run_scenario(s, opt);
    s.protocol = Protocol::PaxosLease;
    const Trace paxos = run_scenario(s, opt);
    ++r.runs;
    auto blocked = [&](const Trace& t) {
      return !t.stats.firstAcquisition || t.stats.firstAcquisition->time_since_epoch() >= Duration{s.timespan};
    };
    if (blocked(naive)) ++r.naiveBlocked;
    if (blocked(paxos)) ++r.paxosBlocked;
    if (!paxos.verdict.ok()) ++r.paxosViolations;
  }
  return r;
}

struct LivenessResult {
  std::uint64_t runs = 0;
  std::uint64_t withinBound = 0;
  std::vector<std::int64_t> firstAcquisitionMs;  // -1 when none

  double fraction() const { return runs ? static_cast<double>(withinBound) / static_cast<double>(runs) : 0.0; }
};

// Fraction of seeds in which some proposer owns the lease within `bound`.
inline LivenessResult measure_liveness(const Scenario& base, std::uint64_t first, std::uint64_t count, Duration bound) {
  LivenessResult r;
  RunOptions opt;
  opt.recordLines = false;
  for (std::uint64_t i = 0; i < count; ++i) {
    Scenario s = base;
    s.faults.seed = first + i;
    const Trace t = run_scenario(std::move(s), opt);
    ++r.runs;
    const auto& fa = t.stats.firstAcquisition;
    r.firstAcquisitionMs.push_back(fa ? std::chrono::duration_cast<Millis>(fa->time_since_epoch()).count() : -1);
    if (fa && fa->time_since_epoch() <= bound) ++r.withinBound;
  }
  return r;
}

}  // namespace paxoslease::sim
