#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "paxoslease/sim/naive.hpp"
#include "paxoslease/sim/nodes.hpp"
#include "paxoslease/sim/safety.hpp"
#include "paxoslease/sim/scenario.hpp"
#include "paxoslease/wire/codec.hpp"

namespace paxoslease::sim {

inline constexpr std::string_view kSimResource = "r";

struct RunOptions {
  bool recordLines = true;
  std::size_t maxLines = 2'000'000;
  // Keep per-ballot responder sets (A1/A2 bookkeeping).
  bool trackQuorums = false;
};

struct RunStats {
  std::uint64_t events = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t duplicated = 0;
  std::uint64_t broadcasts = 0;
  std::uint64_t crashes = 0;
  std::uint64_t acquisitions = 0;
  std::optional<TimePoint> firstAcquisition;
  NodeId firstOwner = 0;
  // Broadcasts issued by the first owner up to its acquisition.
  std::uint64_t broadcastsBeforeFirstAcquisition = 0;
  // Prepare rounds (fresh ballots) started per proposer node.
  std::map<NodeId, std::uint64_t> rounds;
  // Prepare rounds by all proposers before the first acquisition (or in total
  // when nobody acquired).
  std::uint64_t roundsBeforeFirstAcquisition = 0;
  // A proposer issued a ballot not above one it issued earlier.
  std::uint64_t ballotRegressions = 0;
};

// Responders for one ballot as seen by its proposer: prepare responses that
// counted as open (A1) and propose accepts (A2), one bit per acceptor.
struct Quorum {
  NodeId proposer = 0;
  std::uint64_t prepareOpen = 0;
  std::uint64_t proposeAccepted = 0;
};

struct Trace {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<std::string> lines;
  bool truncated = false;
  bool quiescent = false;
  TimePoint end{};
  std::vector<OwnershipEvent> ownership;
  SafetyVerdict verdict;
  RunStats stats;
  std::map<BallotNumber, Quorum> quorums;

  std::string text() const {
    std::string out;
    for (const auto& l : lines) {
      out += l;
      out += '\n';
    }
    if (truncated) out += "# truncated\n";
    return out;
  }
};

// Deterministic discrete-event simulation of one scenario. Single-threaded;
// identical (scenario, seed) pairs give identical traces.
class Simulator {
 public:
  explicit Simulator(Scenario scenario, RunOptions options = {})
      : sc_(std::move(scenario)), opt_(options), rng_(sc_.faults.seed) {
    build_nodes();
    timerGen_.resize(sc_.node_count());
    up_.assign(sc_.node_count(), true);
    maxBallot_.resize(sc_.node_count());
    broadcastsBy_.assign(sc_.node_count(), 0);
    for (const auto& c : sc_.commands) push(c.at, CommandEvent{c.node, c.kind});
    for (const auto& c : sc_.faults.crashes) push(c.at, CrashEvent{c.node, c.downtime});
    generate_churn();
  }

  Trace run() {
    trace_.scenario = sc_.name;
    trace_.seed = sc_.faults.seed;
    const TimePoint limit{sc_.limit};
    while (!queue_.empty()) {
      if (queue_.top().at > limit) break;
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.at;
      ++trace_.stats.events;
      std::visit([&](auto& p) { handle(p); }, ev.payload);
    }
    trace_.quiescent = queue_.empty();
    trace_.end = trace_.quiescent ? now_ : limit;
    trace_.verdict = check_safety(trace_.ownership, trace_.end);
    line(trace_.end, "sim", trace_.quiescent ? "quiescent" : "limit");
    for (const auto& v : trace_.verdict.violations) {
      std::string owners;
      for (NodeId n : v.owners) owners += (owners.empty() ? "" : ",") + sc_.node_name(n);
      line(trace_.end, "oracle",
           "violation " + std::to_string(to_us(v.start)) + ".." + std::to_string(to_us(v.end)) + " owners=" + owners);
    }
    if (trace_.verdict.ok()) line(trace_.end, "oracle", "pass");
    return std::move(trace_);
  }

  const Scenario& scenario() const { return sc_; }

 private:
  struct DeliverEvent {
    NodeId from;
    NodeId to;
    Message message;
  };
  struct TimerEvent {
    NodeId node;
    TimerId timer;
    std::uint64_t generation;
  };
  struct CommandEvent {
    NodeId node;
    CommandKind kind;
  };
  struct CrashEvent {
    NodeId node;
    Duration downtime;
  };
  struct RestartEvent {
    NodeId node;
  };
  using Payload = std::variant<DeliverEvent, TimerEvent, CommandEvent, CrashEvent, RestartEvent>;

  struct Event {
    TimePoint at;
    std::uint64_t seq;
    Payload payload;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void build_nodes() {
    const AcceptorOptions aopt{sc_.replyReject, sc_.acceptorHold};
    for (std::size_t i = 0; i < sc_.acceptors; ++i) {
      if (sc_.protocol == Protocol::Naive)
        nodes_.push_back(std::make_unique<NaiveAcceptorNode>(sc_.replyReject));
      else
        nodes_.push_back(std::make_unique<PaxosAcceptorNode>(aopt, sc_.rejoin_gate()));
    }
    for (std::size_t i = 0; i < sc_.proposers; ++i) {
      const ProposerOptions po = sc_.proposer_options(i);
      ProposerConfig pc;
      pc.id = static_cast<ProposerId>(i + 1);
      pc.acceptorCount = sc_.acceptors;
      pc.maxLease = sc_.maxLease;
      pc.retry = po.retry;
      pc.persistent = po.persistent;
      pc.extendEvery = po.extendEvery;
      pc.prepareTimeout = sc_.prepareTimeout;
      pc.seed = sc_.faults.seed * 0x100000001b3ULL + i;
      if (sc_.protocol == Protocol::Naive)
        nodes_.push_back(std::make_unique<NaiveProposerNode>(pc, sc_.timespan));
      else
        nodes_.push_back(std::make_unique<PaxosProposerNode>(pc, sc_.timespan));
    }
  }

  void generate_churn() {
    std::mt19937_64 churnRng(sc_.faults.seed ^ 0x5DEECE66DULL);
    const TimePoint limit{sc_.limit};
    for (const auto& spec : sc_.faults.churn) {
      std::exponential_distribution<double> gap(1.0 / static_cast<double>(spec.meanInterval.count()));
      std::uniform_int_distribution<std::int64_t> down(spec.downMin.count(), spec.downMax.count());
      const std::size_t first = spec.acceptors ? 0 : sc_.acceptors;
      const std::size_t last = spec.acceptors ? sc_.acceptors : sc_.node_count();
      for (std::size_t n = first; n < last; ++n) {
        TimePoint t{};
        while (true) {
          t += Duration{static_cast<std::int64_t>(gap(churnRng))};
          if (t > limit) break;
          const Duration d{down(churnRng)};
          push(t, CrashEvent{static_cast<NodeId>(n), d});
          t += d;
        }
      }
    }
  }

  template <class P>
  void push(TimePoint at, P payload) {
    queue_.push(Event{at, seq_++, Payload{std::move(payload)}});
  }

  double rate(NodeId n) const {
    auto it = sc_.faults.drift.find(n);
    return it == sc_.faults.drift.end() ? 1.0 : it->second;
  }

  TimePoint local(NodeId n) const {
    const double r = rate(n);
    if (r == 1.0) return now_;
    return at_us(static_cast<std::int64_t>(std::llround(static_cast<double>(to_us(now_)) * r)));
  }

  Duration to_global(NodeId n, Duration d) const {
    const double r = rate(n);
    if (r == 1.0) return d;
    return Duration{static_cast<std::int64_t>(std::ceil(static_cast<double>(d.count()) / r))};
  }

  void line(TimePoint at, std::string_view node, std::string_view what) {
    if (!opt_.recordLines) return;
    if (trace_.lines.size() >= opt_.maxLines) {
      trace_.truncated = true;
      return;
    }
    std::string s = std::to_string(to_us(at));
    s += ' ';
    s += node;
    s += ' ';
    s += what;
    trace_.lines.push_back(std::move(s));
  }

  void node_line(NodeId n, const std::string& what) {
    if (opt_.recordLines) line(now_, sc_.node_name(n), what);
  }

  void handle(DeliverEvent& d) {
    if (!up_[d.to]) {
      ++trace_.stats.dropped;
      if (opt_.recordLines) node_line(d.to, "lost-down " + sc_.node_name(d.from) + " " + wire::encode_body(d.message));
      return;
    }
    ++trace_.stats.delivered;
    if (opt_.recordLines) node_line(d.to, "recv " + sc_.node_name(d.from) + " " + wire::encode_body(d.message));
    if (opt_.trackQuorums && !sc_.is_acceptor(d.to) && d.message.answer == Answer::Accept && d.from < 64) {
      auto& q = trace_.quorums[d.message.ballot];
      q.proposer = d.to;
      if (d.message.type == MessageType::PrepareResponse && !d.message.acceptedLease)
        q.prepareOpen |= std::uint64_t{1} << d.from;
      if (d.message.type == MessageType::ProposeResponse) q.proposeAccepted |= std::uint64_t{1} << d.from;
    }
    apply(d.to, nodes_[d.to]->on_message(d.from, d.message, local(d.to)));
  }

  void handle(TimerEvent& t) {
    if (!up_[t.node] || timerGen_[t.node][static_cast<std::size_t>(t.timer)] != t.generation) return;
    node_line(t.node, std::string("timer ") + std::string(timer_name(t.timer)));
    apply(t.node, nodes_[t.node]->on_timer(t.timer, local(t.node)));
  }

  void handle(CommandEvent& c) {
    if (!up_[c.node]) return;
    static constexpr std::array<std::string_view, 3> names{"acquire", "extend", "release"};
    node_line(c.node, "cmd " + std::string(names[static_cast<std::size_t>(c.kind)]));
    apply(c.node, nodes_[c.node]->on_command(c.kind, local(c.node)));
  }

  void handle(CrashEvent& c) {
    if (!up_[c.node]) return;
    ++trace_.stats.crashes;
    node_line(c.node, "crash");
    if (nodes_[c.node]->owner()) own(c.node, false);
    nodes_[c.node]->crash();
    up_[c.node] = false;
    for (auto& g : timerGen_[c.node]) ++g;
    push(now_ + c.downtime, RestartEvent{c.node});
  }

  void handle(RestartEvent& r) {
    up_[r.node] = true;
    node_line(r.node, "restart");
    apply(r.node, nodes_[r.node]->restart(local(r.node)));
  }

  void own(NodeId n, bool owner) {
    trace_.ownership.push_back({now_, std::string(kSimResource), n, owner});
    node_line(n, owner ? "status owner" : "status not-owner");
    if (!owner) return;
    ++trace_.stats.acquisitions;
    if (!trace_.stats.firstAcquisition) {
      trace_.stats.firstAcquisition = now_;
      trace_.stats.firstOwner = n;
      trace_.stats.broadcastsBeforeFirstAcquisition = broadcastsBy_[n];
    }
  }

  void apply(NodeId n, const Effects& effects) {
    for (const auto& e : effects) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Broadcast>) {
              ++trace_.stats.broadcasts;
              ++broadcastsBy_[n];
              note_ballot(n, x.message);
              if (opt_.recordLines) node_line(n, "bcast " + wire::encode_body(x.message));
              for (std::size_t a = 0; a < sc_.acceptors; ++a) send(n, static_cast<NodeId>(a), x.message);
            } else if constexpr (std::is_same_v<T, SendTo>) {
              if (opt_.recordLines) node_line(n, "send " + sc_.node_name(x.to) + " " + wire::encode_body(x.message));
              send(n, x.to, x.message);
            } else if constexpr (std::is_same_v<T, SetTimer>) {
              const auto g = ++timerGen_[n][static_cast<std::size_t>(x.timer)];
              if (opt_.recordLines)
                node_line(n, std::string("set-timer ") + std::string(timer_name(x.timer)) + " " +
                                 std::to_string(x.delay.count()));
              push(now_ + to_global(n, x.delay), TimerEvent{n, x.timer, g});
            } else if constexpr (std::is_same_v<T, CancelTimer>) {
              ++timerGen_[n][static_cast<std::size_t>(x.timer)];
              if (opt_.recordLines) node_line(n, std::string("cancel-timer ") + std::string(timer_name(x.timer)));
            } else if constexpr (std::is_same_v<T, StatusChange>) {
              own(n, x.leaseOwner);
            } else if constexpr (std::is_same_v<T, PersistEpoch>) {
              if (opt_.recordLines) node_line(n, "persist-epoch " + std::to_string(x.restartCounter));
            }
          },
          e);
    }
  }

  void note_ballot(NodeId n, const Message& m) {
    if (m.type != MessageType::PrepareRequest && !(sc_.protocol == Protocol::Naive && m.type == MessageType::ProposeRequest))
      return;
    ++trace_.stats.rounds[n];
    if (!trace_.stats.firstAcquisition) ++trace_.stats.roundsBeforeFirstAcquisition;
    if (maxBallot_[n] && m.ballot <= *maxBallot_[n]) ++trace_.stats.ballotRegressions;
    if (!maxBallot_[n] || m.ballot > *maxBallot_[n]) maxBallot_[n] = m.ballot;
  }

  void send(NodeId from, NodeId to, const Message& m) {
    ++trace_.stats.sent;
    for (const auto& r : sc_.faults.rules) {
      if (!r.matches(from, to, m.type, now_)) continue;
      if (r.action == MessageRule::Action::Drop) {
        drop(from, to, m, "rule");
      } else {
        push(now_ + r.delay, DeliverEvent{from, to, m});
      }
      return;
    }
    for (const auto& p : sc_.faults.partitions) {
      if (p.separates(from, to, now_)) {
        drop(from, to, m, "partition");
        return;
      }
    }
    const auto& f = sc_.faults;
    if (f.dropProbability > 0.0 && std::bernoulli_distribution(f.dropProbability)(rng_)) {
      drop(from, to, m, "random");
      return;
    }
    push(now_ + draw_delay(), DeliverEvent{from, to, m});
    if (f.duplicateProbability > 0.0 && std::bernoulli_distribution(f.duplicateProbability)(rng_)) {
      ++trace_.stats.duplicated;
      if (opt_.recordLines) node_line(from, "dup " + sc_.node_name(to) + " " + wire::encode_body(m));
      push(now_ + draw_delay(), DeliverEvent{from, to, m});
    }
  }

  Duration draw_delay() {
    const auto& f = sc_.faults;
    if (f.delayMin == f.delayMax) return f.delayMin;
    return Duration{std::uniform_int_distribution<std::int64_t>(f.delayMin.count(), f.delayMax.count())(rng_)};
  }

  void drop(NodeId from, NodeId to, const Message& m, std::string_view why) {
    ++trace_.stats.dropped;
    if (opt_.recordLines)
      node_line(from, "drop " + sc_.node_name(to) + " " + wire::encode_body(m) + " (" + std::string(why) + ")");
  }

  Scenario sc_;
  RunOptions opt_;
  std::mt19937_64 rng_;
  std::vector<std::unique_ptr<SimNode>> nodes_;
  std::vector<std::array<std::uint64_t, kTimerCount>> timerGen_;
  std::vector<bool> up_;
  std::vector<std::optional<BallotNumber>> maxBallot_;
  std::vector<std::uint64_t> broadcastsBy_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  TimePoint now_{};
  Trace trace_;
};

inline Trace run_scenario(Scenario scenario, RunOptions options = {}) {
  return Simulator(std::move(scenario), options).run();
}

}  // namespace paxoslease::sim
