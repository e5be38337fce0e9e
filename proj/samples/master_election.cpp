// Three nodes elect a master for two resources over an in-memory network.
// Every node is both acceptor and proposer. The owner of "db/master" goes
// silent at 6 s; once its lease runs out another node takes over.

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include "paxoslease/multilease.hpp"

using namespace paxoslease;
using namespace std::chrono_literals;

namespace {

constexpr Millis kMaxLease{1500};
constexpr Millis kTimespan{1000};
constexpr Duration kLink = 5ms;

struct Event {
  TimePoint at;
  std::uint64_t seq;
  NodeId node;
  std::string resource;
  TableEvent event;
  std::uint64_t generation;  // timers only; stale when re-armed or cancelled

  bool operator>(const Event& o) const { return std::tie(at, seq) > std::tie(o.at, o.seq); }
};

class Cluster {
 public:
  Cluster() {
    for (NodeId n = 0; n < 3; ++n) {
      ClusterConfig c;
      c.self = n;
      c.proposerId = n + 1;
      c.acceptors = {0, 1, 2};
      c.maxLease = kMaxLease;
      c.persistent = true;
      c.extendEvery = Duration{kTimespan / 2};
      c.seed = 100 + n;
      // A fresh process waits out M before voting, like a restarted one.
      nodes_.emplace_back(c, RestartRecord{1}, now_);
    }
  }

  void at(TimePoint t, NodeId n, const std::string& r, TableEvent e) { push(t, n, r, std::move(e), 0); }

  void silence(TimePoint t, NodeId n) { silenceAt_[n] = t; }

  std::optional<NodeId> owner(const std::string& r) const {
    for (NodeId n = 0; n < 3; ++n) {
      const auto* inst = nodes_[n].find(r);
      if (!down(n) && inst && inst->proposer.state().leaseOwner) return n;
    }
    return std::nullopt;
  }

  void run_until(TimePoint end) {
    while (!queue_.empty() && queue_.top().at <= end) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.at;
      if (down(ev.node)) continue;
      if (std::holds_alternative<table_event::Timer>(ev.event)) {
        const auto key = std::tuple(ev.node, ev.resource, std::get<table_event::Timer>(ev.event).timer);
        if (timers_[key] != ev.generation) continue;
      }
      for (auto& e : nodes_[ev.node].dispatch(ev.resource, ev.event, now_)) apply(ev.node, e);
    }
  }

 private:
  bool down(NodeId n) const {
    auto it = silenceAt_.find(n);
    return it != silenceAt_.end() && now_ >= it->second;
  }

  void push(TimePoint t, NodeId n, const std::string& r, TableEvent e, std::uint64_t gen) {
    queue_.push(Event{t, seq_++, n, r, std::move(e), gen});
  }

  void apply(NodeId from, const TaggedEffect& te) {
    const auto& r = te.resource;
    std::visit(
        [&](const auto& e) {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, Broadcast>) {
            for (NodeId to = 0; to < 3; ++to) push(now_ + kLink, to, r, table_event::Inbound{from, e.message}, 0);
          } else if constexpr (std::is_same_v<E, SendTo>) {
            push(now_ + kLink, e.to, r, table_event::Inbound{from, e.message}, 0);
          } else if constexpr (std::is_same_v<E, SetTimer>) {
            const auto gen = ++timers_[std::tuple(from, r, e.timer)];
            push(now_ + e.delay, from, r, table_event::Timer{e.timer}, gen);
          } else if constexpr (std::is_same_v<E, CancelTimer>) {
            ++timers_[std::tuple(from, r, e.timer)];
          } else if constexpr (std::is_same_v<E, StatusChange>) {
            std::printf("%7.3f s  node %u %s %s\n", std::chrono::duration<double>(now_.time_since_epoch()).count(), from,
                        e.leaseOwner ? "is master of" : "lost", r.c_str());
          }
        },
        te.effect);
  }

  TimePoint now_{};
  std::uint64_t seq_ = 0;
  std::vector<LeaseTable> nodes_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::map<std::tuple<NodeId, std::string, TimerId>, std::uint64_t> timers_;
  std::map<NodeId, TimePoint> silenceAt_;
};

}  // namespace

int main() {
  Cluster cluster;
  const TimePoint start{Duration{kMaxLease}};
  for (NodeId n = 0; n < 3; ++n) {
    cluster.at(start + Duration{std::chrono::milliseconds(n)}, n, "db/master", table_event::Acquire{kTimespan});
    cluster.at(start + Duration{std::chrono::milliseconds(2 - n)}, n, "jobs/scheduler", table_event::Acquire{kTimespan});
  }
  cluster.run_until(TimePoint{6s});
  if (const auto m = cluster.owner("db/master")) {
    std::printf("  6.000 s  node %u goes silent\n", *m);
    cluster.silence(TimePoint{6s}, *m);
  }
  cluster.run_until(TimePoint{10s});
  return 0;
}
