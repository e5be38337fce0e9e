#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "paxoslease/effect.hpp"
#include "paxoslease/message.hpp"
#include "paxoslease/proposer.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease::sim {

// Node naming: acceptors a0..a{n-1} are node ids 0..n-1, proposers p0..p{k-1}
// follow as n..n+k-1. Proposer pK uses proposer id K+1.

enum class Protocol : std::uint8_t { PaxosLease, Naive };

enum class CommandKind : std::uint8_t { Acquire, Extend, Release };

struct ScheduledCommand {
  TimePoint at;
  NodeId node = 0;
  CommandKind kind = CommandKind::Acquire;
};

// Deterministic per-message override, matched on send time. The first
// matching rule wins and bypasses the random drop/delay/duplicate draws.
struct MessageRule {
  enum class Action : std::uint8_t { Drop, Delay };
  Action action = Action::Delay;
  Duration delay{0};
  std::optional<NodeId> from;
  std::optional<NodeId> to;
  std::optional<MessageType> type;
  TimePoint windowStart = TimePoint::min();
  TimePoint windowEnd = TimePoint::max();

  bool matches(NodeId f, NodeId t, MessageType mt, TimePoint now) const {
    return (!from || *from == f) && (!to || *to == t) && (!type || *type == mt) && now >= windowStart &&
           now < windowEnd;
  }
};

// During [start, end) nodes in `side` cannot exchange messages with the rest.
struct Partition {
  TimePoint start;
  TimePoint end;
  std::vector<NodeId> side;

  bool separates(NodeId a, NodeId b, TimePoint now) const {
    if (now < start || now >= end) return false;
    auto in = [&](NodeId n) { return std::find(side.begin(), side.end(), n) != side.end(); };
    return in(a) != in(b);
  }
};

struct CrashSpec {
  TimePoint at;
  NodeId node = 0;
  Duration downtime{0};
};

// Random crash/restart schedule for a node group, drawn from the plan seed.
struct ChurnSpec {
  bool acceptors = true;  // else proposers
  Duration meanInterval{0};
  Duration downMin{0};
  Duration downMax{0};
};

struct FaultPlan {
  std::uint64_t seed = 0;
  double dropProbability = 0.0;
  double duplicateProbability = 0.0;
  Duration delayMin{0};
  Duration delayMax{0};
  std::vector<Partition> partitions;
  std::vector<CrashSpec> crashes;
  std::vector<ChurnSpec> churn;
  // Local clock rate per node; absent means 1.0.
  std::map<NodeId, double> drift;
  std::vector<MessageRule> rules;
};

struct ProposerOptions {
  RetryMode retry = RetryMode::Backoff;
  bool persistent = false;
  std::optional<Duration> extendEvery;
};

struct Scenario {
  std::string name = "scenario";
  Protocol protocol = Protocol::PaxosLease;
  std::size_t acceptors = 3;
  std::size_t proposers = 1;
  Millis maxLease{1500};
  Millis timespan{1000};
  Duration limit = Duration{std::chrono::seconds(20)};
  std::optional<Duration> prepareTimeout;
  bool replyReject = true;
  // Silent period of a restarted acceptor; defaults to maxLease.
  std::optional<Duration> rejoinGate;
  // Mutation hook, see AcceptorOptions::holdAccepted.
  bool acceptorHold = true;
  ProposerOptions proposerDefaults;
  std::map<std::size_t, ProposerOptions> proposerOverrides;
  std::vector<ScheduledCommand> commands;
  FaultPlan faults;

  std::size_t node_count() const { return acceptors + proposers; }
  NodeId proposer_node(std::size_t i) const { return static_cast<NodeId>(acceptors + i); }
  bool is_acceptor(NodeId n) const { return n < acceptors; }
  Duration rejoin_gate() const { return rejoinGate.value_or(Duration{maxLease}); }

  ProposerOptions proposer_options(std::size_t i) const {
    auto it = proposerOverrides.find(i);
    return it == proposerOverrides.end() ? proposerDefaults : it->second;
  }

  std::string node_name(NodeId n) const {
    return is_acceptor(n) ? "a" + std::to_string(n) : "p" + std::to_string(n - acceptors);
  }
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : std::runtime_error("scenario line " + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Line-oriented `key = value` scenario format; see docs/scenario-format.md.
class ScenarioParser {
 public:
  static Scenario parse(std::string_view text) {
    ScenarioParser p;
    std::size_t lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++lineNo;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ScenarioError(lineNo, "expected key = value");
      p.line_ = lineNo;
      p.apply(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
    }
    p.finish();
    return std::move(p.s_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ScenarioError(line_, what); }

  std::int64_t integer(const std::string& v) const {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(v, &used);
      if (used != v.size()) fail("not an integer: " + v);
      return x;
    } catch (const std::logic_error&) {
      fail("not an integer: " + v);
    }
  }

  std::uint64_t unsigned_integer(const std::string& v) const {
    if (v.empty() || v[0] == '-') fail("not a non-negative integer: " + v);
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(v, &used);
      if (used != v.size()) fail("not an integer: " + v);
      return x;
    } catch (const std::logic_error&) {
      fail("not an integer: " + v);
    }
  }

  double probability(const std::string& v) const {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size() || x < 0.0 || x > 1.0) fail("probability outside [0,1]: " + v);
      return x;
    } catch (const std::logic_error&) {
      fail("not a number: " + v);
    }
  }

  Duration ms(const std::string& v) const {
    const auto x = integer(v);
    if (x < 0) fail("negative duration: " + v);
    return Duration{std::chrono::milliseconds(x)};
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "no") return false;
    fail("not a boolean: " + v);
  }

  std::pair<Duration, Duration> range_ms(const std::string& v) const {
    const auto dots = v.find("..");
    if (dots == std::string::npos) fail("expected <min>..<max>: " + v);
    auto lo = ms(v.substr(0, dots)), hi = ms(v.substr(dots + 2));
    if (hi < lo) fail("empty range: " + v);
    return {lo, hi};
  }

  RetryMode retry(const std::string& v) const {
    if (v == "none") return RetryMode::None;
    if (v == "immediate") return RetryMode::Immediate;
    if (v == "backoff") return RetryMode::Backoff;
    fail("retry must be none|immediate|backoff: " + v);
  }

  // Node names resolve once acceptor/proposer counts are known.
  NodeId node(const std::string& name) const {
    if (name.size() < 2 || (name[0] != 'a' && name[0] != 'p')) fail("bad node name: " + name);
    const auto idx = unsigned_integer(name.substr(1));
    if (name[0] == 'a') {
      if (idx >= s_.acceptors) fail("no such acceptor: " + name);
      return static_cast<NodeId>(idx);
    }
    if (idx >= s_.proposers) fail("no such proposer: " + name);
    return s_.proposer_node(idx);
  }

  void mark_nodes_named() {
    topologyUsed_ = true;
  }

  void apply(const std::string& key, const std::string& value) {
    auto words = detail::split_ws(value);
    if (key == "name") {
      s_.name = value;
    } else if (key == "protocol") {
      if (value == "paxoslease") s_.protocol = Protocol::PaxosLease;
      else if (value == "naive") s_.protocol = Protocol::Naive;
      else fail("protocol must be paxoslease|naive");
    } else if (key == "acceptors" || key == "proposers") {
      if (topologyUsed_) fail(key + " must precede lines naming nodes");
      const auto n = unsigned_integer(value);
      if (key == "acceptors" && (n == 0 || n > kMaxAcceptors)) fail("acceptors must be in [1, 64]");
      (key == "acceptors" ? s_.acceptors : s_.proposers) = n;
    } else if (key == "max_lease_ms") {
      s_.maxLease = Millis{integer(value)};
    } else if (key == "timespan_ms") {
      s_.timespan = Millis{integer(value)};
    } else if (key == "limit_ms") {
      s_.limit = ms(value);
    } else if (key == "prepare_timeout_ms") {
      s_.prepareTimeout = ms(value);
    } else if (key == "reply_reject") {
      s_.replyReject = boolean(value);
    } else if (key == "rejoin_gate_ms") {
      s_.rejoinGate = ms(value);
    } else if (key == "acceptor_hold") {
      s_.acceptorHold = boolean(value);
    } else if (key == "retry") {
      s_.proposerDefaults.retry = retry(value);
    } else if (key == "persistent") {
      s_.proposerDefaults.persistent = boolean(value);
    } else if (key == "extend_every_ms") {
      s_.proposerDefaults.extendEvery = ms(value);
    } else if (key == "proposer") {
      // proposer = p0 [retry=<mode>] [persistent=<bool>] [extend_every_ms=<n>]
      mark_nodes_named();
      if (words.empty()) fail("proposer needs a node name");
      const NodeId n = node(words[0]);
      if (s_.is_acceptor(n)) fail("not a proposer: " + words[0]);
      ProposerOptions o = s_.proposer_options(n - s_.acceptors);
      for (std::size_t i = 1; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string::npos) fail("expected option=value: " + words[i]);
        const auto k = words[i].substr(0, eq), v = words[i].substr(eq + 1);
        if (k == "retry") o.retry = retry(v);
        else if (k == "persistent") o.persistent = boolean(v);
        else if (k == "extend_every_ms") o.extendEvery = ms(v);
        else fail("unknown proposer option: " + k);
      }
      s_.proposerOverrides[n - s_.acceptors] = o;
    } else if (key == "seed") {
      s_.faults.seed = unsigned_integer(value);
    } else if (key == "drop") {
      s_.faults.dropProbability = probability(value);
    } else if (key == "duplicate") {
      s_.faults.duplicateProbability = probability(value);
    } else if (key == "delay_ms") {
      std::tie(s_.faults.delayMin, s_.faults.delayMax) = range_ms(value);
    } else if (key == "drift") {
      // drift = a1 1.05
      mark_nodes_named();
      if (words.size() != 2) fail("drift = <node> <rate>");
      double rate = 0;
      try {
        rate = std::stod(words[1]);
      } catch (const std::logic_error&) {
        fail("bad drift rate");
      }
      if (!(rate > 0.0)) fail("drift rate must be positive");
      s_.faults.drift[node(words[0])] = rate;
    } else if (key == "partition") {
      // partition = <start>..<end> <node>,<node>,...
      mark_nodes_named();
      if (words.size() != 2) fail("partition = <start>..<end> <node,...>");
      auto [a, b] = range_ms(words[0]);
      Partition p{TimePoint{a}, TimePoint{b}, {}};
      std::istringstream names(words[1]);
      for (std::string n; std::getline(names, n, ',');) p.side.push_back(node(n));
      s_.faults.partitions.push_back(std::move(p));
    } else if (key == "crash") {
      // crash = <at> <node> <downtime>
      mark_nodes_named();
      if (words.size() != 3) fail("crash = <at_ms> <node> <downtime_ms>");
      s_.faults.crashes.push_back({TimePoint{ms(words[0])}, node(words[1]), ms(words[2])});
    } else if (key == "churn") {
      // churn = acceptors|proposers <mean_interval_ms> <down_min>..<down_max>
      if (words.size() != 3 || (words[0] != "acceptors" && words[0] != "proposers"))
        fail("churn = acceptors|proposers <mean_ms> <min>..<max>");
      auto [lo, hi] = range_ms(words[2]);
      const Duration mean = ms(words[1]);
      if (mean <= Duration{0}) fail("churn interval must be positive");
      s_.faults.churn.push_back({words[0] == "acceptors", mean, lo, hi});
    } else if (key == "at") {
      // at = <time_ms> <proposer> acquire|extend|release
      mark_nodes_named();
      if (words.size() != 3) fail("at = <time_ms> <proposer> <command>");
      const NodeId n = node(words[1]);
      if (s_.is_acceptor(n)) fail("commands go to proposers");
      CommandKind k;
      if (words[2] == "acquire") k = CommandKind::Acquire;
      else if (words[2] == "extend") k = CommandKind::Extend;
      else if (words[2] == "release") k = CommandKind::Release;
      else fail("unknown command: " + words[2]);
      s_.commands.push_back({TimePoint{ms(words[0])}, n, k});
    } else if (key == "rule") {
      // rule = drop <from> <to> <type> <window>
      // rule = delay <ms> <from> <to> <type> <window>      ('*' matches anything)
      mark_nodes_named();
      MessageRule r;
      std::size_t i = 0;
      if (words.empty()) fail("empty rule");
      if (words[0] == "drop") {
        r.action = MessageRule::Action::Drop;
        i = 1;
      } else if (words[0] == "delay") {
        if (words.size() < 2) fail("delay rule needs an amount");
        r.action = MessageRule::Action::Delay;
        r.delay = ms(words[1]);
        i = 2;
      } else {
        fail("rule action must be drop|delay");
      }
      if (words.size() != i + 4) fail("rule needs <from> <to> <type> <window>");
      if (words[i] != "*") r.from = node(words[i]);
      if (words[i + 1] != "*") r.to = node(words[i + 1]);
      if (words[i + 2] != "*") {
        auto t = parse_type_code(words[i + 2]);
        if (!t) fail("unknown message type: " + words[i + 2]);
        r.type = *t;
      }
      if (words[i + 3] != "*") {
        auto [a, b] = range_ms(words[i + 3]);
        r.windowStart = TimePoint{a};
        r.windowEnd = TimePoint{b};
      }
      s_.faults.rules.push_back(r);
    } else {
      fail("unknown key: " + key);
    }
  }

  void finish() {
    if (s_.maxLease <= Millis{0}) throw ScenarioError(0, "max_lease_ms must be positive");
    if (!valid_timespan(s_.timespan, s_.maxLease)) throw ScenarioError(0, "timespan_ms must satisfy 0 < T < M");
    if (s_.faults.delayMax < s_.faults.delayMin) throw ScenarioError(0, "empty delay range");
  }

  Scenario s_;
  std::size_t line_ = 0;
  bool topologyUsed_ = false;
};

inline Scenario parse_scenario(std::string_view text) { return ScenarioParser::parse(text); }

}  // namespace paxoslease::sim
