#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "paxoslease/message.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease {

// Transport-level node address. Acceptors are addressed by their index in the
// cluster's fixed acceptor list; other peers get ids assigned by the driver.
using NodeId = std::uint32_t;

enum class TimerId : std::uint8_t {
  LeaseTimeout,    // proposer: lease (or pending acquisition) runs out
  PrepareTimeout,  // proposer: prepare round gave no verdict in time
  Backoff,         // proposer: retry after a failed round
  Extend,          // proposer: time to extend a held lease
  AcceptorExpiry,  // acceptor: accepted proposal runs out
};

inline constexpr std::size_t kTimerCount = 5;

constexpr std::string_view timer_name(TimerId t) {
  switch (t) {
    case TimerId::LeaseTimeout: return "lease";
    case TimerId::PrepareTimeout: return "prepare";
    case TimerId::Backoff: return "backoff";
    case TimerId::Extend: return "extend";
    case TimerId::AcceptorExpiry: return "expiry";
  }
  return "?";
}

// Send to every acceptor of the cluster.
struct Broadcast {
  Message message;
  friend bool operator==(const Broadcast&, const Broadcast&) = default;
};

struct SendTo {
  NodeId to = 0;
  Message message;
  friend bool operator==(const SendTo&, const SendTo&) = default;
};

// Arms (or re-arms, replacing any pending instance) the named timer.
struct SetTimer {
  TimerId timer = TimerId::LeaseTimeout;
  Duration delay{0};
  friend bool operator==(const SetTimer&, const SetTimer&) = default;
};

struct CancelTimer {
  TimerId timer = TimerId::LeaseTimeout;
  friend bool operator==(const CancelTimer&, const CancelTimer&) = default;
};

// Emitted exactly when the proposer's lease-owner flag flips.
struct StatusChange {
  bool leaseOwner = false;
  friend bool operator==(const StatusChange&, const StatusChange&) = default;
};

// The proposer moved to a new restart epoch. The driver must store at least
// this value as the restart counter before executing the effects after it.
struct PersistEpoch {
  std::uint64_t restartCounter = 0;
  friend bool operator==(const PersistEpoch&, const PersistEpoch&) = default;
};

using Effect = std::variant<Broadcast, SendTo, SetTimer, CancelTimer, StatusChange, PersistEpoch>;
using Effects = std::vector<Effect>;

}  // namespace paxoslease
