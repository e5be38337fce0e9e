#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "paxoslease/acceptor.hpp"
#include "paxoslease/proposer.hpp"
#include "paxoslease/state_codec.hpp"
#include "paxoslease/wire/codec.hpp"

// Bounded exhaustive exploration of one lease instance. Time advances in
// whole ticks of 1 ms; between ticks any in-flight message may be delivered
// or duplicated in any order, and clients may issue acquire, extend and
// release. A message that is never delivered models loss. Every reachable
// state is checked for two proposers that both believe they hold the lease.
//
// Responses the addressed proposer can no longer use (other ballot, wrong
// phase, acceptor already counted) are discarded when a state is stored;
// ballots are never reused, so this only merges equivalent states.
namespace paxoslease::sim {

struct ModelBounds {
  std::size_t acceptors = 3;
  std::size_t proposers = 2;
  Millis timespan{2};
  Millis maxLease{3};
  int horizon = 6;  // last tick explored
  int acquires = 2;  // per proposer
  int extends = 1;   // per proposer
  int releases = 1;  // per proposer
  int acceptorCrashes = 1;
  int proposerCrashes = 0;
  int duplicates = 1;
  std::size_t maxInFlight = 6;
  // Mutation hooks, as in Scenario.
  Duration rejoinGate{std::chrono::milliseconds(3)};
  bool acceptorHold = true;
  std::uint64_t stateLimit = 50'000'000;
  bool stopAtFirstViolation = false;
};

struct ModelResult {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t violations = 0;
  bool complete = false;  // false when stateLimit (or the first violation) stopped the search
  int deepest = 0;
  std::vector<std::string> counterexample;
  double seconds = 0;
};

class ModelChecker {
 public:
  explicit ModelChecker(ModelBounds b) : b_(b) {}

  ModelResult run() {
    const auto started = std::chrono::steady_clock::now();
    visited_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(b_.stateLimit, 1u << 24)));
    World init = initial();
    visit(init, [] { return std::string("init"); });
    ModelResult r;
    r.complete = !aborted_;
    r.states = visited_.size();
    r.transitions = transitions_;
    r.violations = violations_;
    r.deepest = deepest_;
    r.counterexample = std::move(counterexample_);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
  }

 private:
  struct Packet {
    NodeId from;
    NodeId to;
    Message message;

    friend bool operator==(const Packet&, const Packet&) = default;
  };

  struct World {
    std::vector<Proposer> proposers;
    std::vector<std::optional<Acceptor>> acceptors;  // nullopt while crashed
    std::vector<std::uint64_t> restarts;
    std::vector<std::array<std::optional<TimePoint>, kTimerCount>> timers;
    std::vector<Packet> inflight;
    int tick = 0;
    std::vector<int> acquires, extends, releases;
    int acceptorCrashes = 0, proposerCrashes = 0, duplicates = 0;

    TimePoint now() const { return TimePoint{std::chrono::milliseconds(tick)}; }
  };

  ProposerConfig proposer_config(std::size_t i) const {
    ProposerConfig c;
    c.id = static_cast<ProposerId>(i + 1);
    c.acceptorCount = b_.acceptors;
    c.maxLease = b_.maxLease;
    c.retry = RetryMode::None;
    return c;
  }

  AcceptorOptions acceptor_options() const { return AcceptorOptions{true, b_.acceptorHold}; }

  World initial() const {
    World w;
    for (std::size_t i = 0; i < b_.proposers; ++i) w.proposers.emplace_back(proposer_config(i), 1);
    for (std::size_t i = 0; i < b_.acceptors; ++i) w.acceptors.emplace_back(Acceptor(acceptor_options()));
    w.restarts.assign(b_.proposers, 1);
    w.timers.resize(b_.acceptors + b_.proposers);
    w.acquires.assign(b_.proposers, b_.acquires);
    w.extends.assign(b_.proposers, b_.extends);
    w.releases.assign(b_.proposers, b_.releases);
    w.acceptorCrashes = b_.acceptorCrashes;
    w.proposerCrashes = b_.proposerCrashes;
    w.duplicates = b_.duplicates;
    return w;
  }

  NodeId proposer_node(std::size_t i) const { return static_cast<NodeId>(b_.acceptors + i); }

  static int owners(const World& w) {
    int n = 0;
    for (const auto& p : w.proposers) n += p.is_owner(w.now()) ? 1 : 0;
    return n;
  }

  // Would a response for `b` from acceptor `a` still be counted by its proposer?
  bool awaited(const World& w, std::size_t a, const BallotNumber& b, MessageType response) const {
    if (b.proposerId == 0 || b.proposerId > w.proposers.size()) return false;
    const ProposerState& s = w.proposers[b.proposerId - 1].state();
    if (!s.ballotNumber || *s.ballotNumber != b) return false;
    const std::uint64_t bit = std::uint64_t{1} << a;
    if (response == MessageType::PrepareResponse) return s.phase == Phase::Preparing && !((s.openMask | s.closedMask) & bit);
    return s.phase == Phase::Proposing && !((s.acceptedMask | s.rejectedMask) & bit);
  }

  bool useless(const World& w, const Packet& pk) const {
    if (pk.to < b_.acceptors) {
      // Requests below an up acceptor's promise can only draw a reject; once
      // no acceptor can crash any more, that promise is permanent.
      const auto& acc = w.acceptors[pk.to];
      if (!acc || w.acceptorCrashes > 0) return false;
      const AcceptorState& st = acc->state();
      if (!st.highestPromised || !(pk.message.ballot < *st.highestPromised)) return false;
      switch (pk.message.type) {
        case MessageType::PrepareRequest: return !awaited(w, pk.to, pk.message.ballot, MessageType::PrepareResponse);
        case MessageType::ProposeRequest: return !awaited(w, pk.to, pk.message.ballot, MessageType::ProposeResponse);
        case MessageType::Release:
          return !st.acceptedProposal || st.acceptedProposal->ballot != pk.message.ballot;
        default: return true;
      }
    }
    const ProposerState& s = w.proposers[pk.to - b_.acceptors].state();
    if (!s.ballotNumber || *s.ballotNumber != pk.message.ballot || pk.from >= b_.acceptors) return true;
    const std::uint64_t bit = std::uint64_t{1} << pk.from;
    if (pk.message.type == MessageType::PrepareResponse)
      return s.phase != Phase::Preparing || ((s.openMask | s.closedMask) & bit);
    if (pk.message.type == MessageType::ProposeResponse)
      return s.phase != Phase::Proposing || ((s.acceptedMask | s.rejectedMask) & bit);
    return true;
  }

  std::string key(World& w) const {
    std::erase_if(w.inflight, [&](const Packet& pk) { return useless(w, pk); });
    std::sort(w.inflight.begin(), w.inflight.end(), [](const Packet& a, const Packet& b) {
      return std::tie(a.from, a.to) != std::tie(b.from, b.to) ? std::tie(a.from, a.to) < std::tie(b.from, b.to)
                                                              : wire::encode_body(a.message) < wire::encode_body(b.message);
    });
    StateWriter s;
    s.varint(static_cast<std::uint64_t>(w.tick));
    for (const auto& p : w.proposers) {
      ProposerState ps = p.state();
      if (ps.acquiredAt) ps.acquiredAt = TimePoint{};  // bookkeeping only
      write_state(s, ps);
    }
    for (const auto& a : w.acceptors) {
      s.flag(a.has_value());
      if (a) write_state(s, a->state());
    }
    for (const auto& node : w.timers)
      for (const auto& t : node) s.optional(t, [&](TimePoint v) { s.time(v); });
    s.varint(w.inflight.size());
    for (const auto& pk : w.inflight) {
      s.varint(pk.from);
      s.varint(pk.to);
      s.bytes(wire::encode_body(pk.message));
    }
    for (std::size_t i = 0; i < w.proposers.size(); ++i) {
      s.varint(static_cast<std::uint64_t>(w.acquires[i]));
      s.varint(static_cast<std::uint64_t>(w.extends[i]));
      s.varint(static_cast<std::uint64_t>(w.releases[i]));
      s.varint(w.restarts[i]);
    }
    s.varint(static_cast<std::uint64_t>(w.acceptorCrashes));
    s.varint(static_cast<std::uint64_t>(w.proposerCrashes));
    s.varint(static_cast<std::uint64_t>(w.duplicates));
    return s.take();
  }

  // States are stored as 128-bit fingerprints of their canonical encoding.
  struct Fingerprint {
    std::uint64_t a, b;
    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
  };
  struct FingerprintHash {
    std::size_t operator()(const Fingerprint& f) const { return static_cast<std::size_t>(f.a); }
  };

  static Fingerprint fingerprint(std::string_view k) {
    std::uint64_t fnv = 1469598103934665603ull;
    for (unsigned char c : k) fnv = (fnv ^ c) * 1099511628211ull;
    return {std::hash<std::string_view>{}(k), fnv};
  }

  template <typename Describe>
  void visit(World& w, Describe&& describe) {
    ++transitions_;
    if (aborted_) return;
    if (!visited_.insert(fingerprint(key(w))).second) return;
    path_.push_back(describe());
    deepest_ = std::max(deepest_, static_cast<int>(path_.size()) - 1);
    if (owners(w) > 1) {
      ++violations_;
      if (counterexample_.empty()) counterexample_ = path_;
      if (b_.stopAtFirstViolation) aborted_ = true;
    } else if (visited_.size() >= b_.stateLimit) {
      aborted_ = true;
    } else {
      expand(w);
    }
    path_.pop_back();
  }

  std::string name(NodeId n) const {
    return n < b_.acceptors ? "a" + std::to_string(n) : "p" + std::to_string(n - b_.acceptors);
  }

  void apply(World& w, NodeId n, const Effects& fx) const {
    for (const auto& e : fx) {
      if (const auto* bc = std::get_if<Broadcast>(&e)) {
        for (std::size_t a = 0; a < b_.acceptors; ++a) send(w, n, static_cast<NodeId>(a), bc->message);
      } else if (const auto* st = std::get_if<SendTo>(&e)) {
        send(w, n, st->to, st->message);
      } else if (const auto* set = std::get_if<SetTimer>(&e)) {
        w.timers[n][static_cast<std::size_t>(set->timer)] = w.now() + set->delay;
      } else if (const auto* cancel = std::get_if<CancelTimer>(&e)) {
        w.timers[n][static_cast<std::size_t>(cancel->timer)].reset();
      } else if (const auto* pe = std::get_if<PersistEpoch>(&e)) {
        auto& r = w.restarts[n - b_.acceptors];
        r = std::max(r, pe->restartCounter);
      }
    }
  }

  // Messages beyond the in-flight cap are lost, which the protocol tolerates.
  void send(World& w, NodeId from, NodeId to, const Message& m) const {
    if (w.inflight.size() >= b_.maxInFlight) return;
    w.inflight.push_back({from, to, m});
  }

  Effects deliver(World& w, const Packet& pk) const {
    if (pk.to < b_.acceptors) {
      auto& a = w.acceptors[pk.to];
      return a ? a->on_message(pk.from, pk.message, w.now()) : Effects{};
    }
    return w.proposers[pk.to - b_.acceptors].on_message(pk.from, pk.message, w.now());
  }

  void fire_due_timers(World& w) const {
    for (NodeId n = 0; n < w.timers.size(); ++n) {
      for (std::size_t t = 0; t < kTimerCount; ++t) {
        auto& slot = w.timers[n][t];
        if (!slot || *slot > w.now()) continue;
        slot.reset();
        const auto id = static_cast<TimerId>(t);
        Effects fx;
        if (n < b_.acceptors) {
          if (w.acceptors[n] && id == TimerId::AcceptorExpiry) fx = w.acceptors[n]->on_expiry(w.now());
        } else {
          fx = w.proposers[n - b_.acceptors].on_timer(id, w.now());
        }
        apply(w, n, fx);
      }
    }
  }

  void expand(const World& w) {
    for (std::size_t i = 0; i < w.inflight.size(); ++i) {
      if (i > 0 && w.inflight[i] == w.inflight[i - 1]) continue;
      const Packet pk = w.inflight[i];
      auto what = [&] { return name(pk.from) + "->" + name(pk.to) + " " + wire::encode_body(pk.message); };
      {
        World n = w;
        n.inflight.erase(n.inflight.begin() + static_cast<std::ptrdiff_t>(i));
        apply(n, pk.to, deliver(n, pk));
        visit(n, [&] { return "deliver " + what(); });
      }
      if (w.duplicates > 0 && w.inflight.size() < b_.maxInFlight) {
        World n = w;
        --n.duplicates;
        n.inflight.push_back(pk);
        visit(n, [&] { return "duplicate " + what(); });
      }
    }
    if (w.tick < b_.horizon) {
      World n = w;
      ++n.tick;
      fire_due_timers(n);
      visit(n, [&] { return "tick " + std::to_string(n.tick); });
    }
    for (std::size_t p = 0; p < w.proposers.size(); ++p) {
      const NodeId node = proposer_node(p);
      const bool owner = w.proposers[p].is_owner(w.now());
      if (w.acquires[p] > 0 && !owner) {
        World n = w;
        --n.acquires[p];
        apply(n, node, n.proposers[p].start_acquire(b_.timespan, n.now()));
        visit(n, [&] { return name(node) + " acquire"; });
      }
      if (w.extends[p] > 0 && owner) {
        World n = w;
        --n.extends[p];
        apply(n, node, n.proposers[p].start_extend(b_.timespan, n.now()));
        visit(n, [&] { return name(node) + " extend"; });
      }
      if (w.releases[p] > 0 && owner) {
        World n = w;
        --n.releases[p];
        apply(n, node, n.proposers[p].release());
        visit(n, [&] { return name(node) + " release"; });
      }
      if (w.proposerCrashes > 0) {
        World n = w;
        --n.proposerCrashes;
        ++n.restarts[p];
        n.proposers[p] = Proposer(proposer_config(p), n.restarts[p]);
        n.timers[node] = {};
        visit(n, [&] { return name(node) + " crash+restart"; });
      }
    }
    for (std::size_t a = 0; a < w.acceptors.size(); ++a) {
      if (w.acceptors[a] && w.acceptorCrashes > 0) {
        World n = w;
        --n.acceptorCrashes;
        n.acceptors[a].reset();
        n.timers[a] = {};
        visit(n, [&] { return name(static_cast<NodeId>(a)) + " crash"; });
      } else if (!w.acceptors[a]) {
        World n = w;
        n.acceptors[a] = Acceptor::restarted(n.now(), b_.rejoinGate, acceptor_options());
        visit(n, [&] { return name(static_cast<NodeId>(a)) + " restart"; });
      }
    }
  }

  ModelBounds b_;
  std::unordered_set<Fingerprint, FingerprintHash> visited_;
  std::vector<std::string> path_;
  std::vector<std::string> counterexample_;
  std::uint64_t transitions_ = 0;
  std::uint64_t violations_ = 0;
  bool aborted_ = false;
  int deepest_ = 0;
};

inline ModelResult model_check(const ModelBounds& bounds) { return ModelChecker(bounds).run(); }

}  // namespace paxoslease::sim
