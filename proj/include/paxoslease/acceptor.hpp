#pragma once

#include <optional>

#include "paxoslease/effect.hpp"
#include "paxoslease/message.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease {

struct AcceptorOptions {
  // Answer stale requests with an explicit reject instead of staying silent.
  bool replyReject = true;
  // Fault-injection hook for the simulator's mutation tests. When false the
  // acceptor does not hold accepted proposals for their timespan: the expiry
  // is treated as already past, so prepare responses always report empty.
  bool holdAccepted = true;
};

struct AcceptorState {
  std::optional<BallotNumber> highestPromised;
  std::optional<Proposal> acceptedProposal;
  std::optional<TimePoint> expiryDeadline;
  std::optional<TimePoint> rejoinDeadline;

  bool empty() const { return !highestPromised && !acceptedProposal; }

  friend bool operator==(const AcceptorState&, const AcceptorState&) = default;
};

// Acceptor side of one lease instance. Keeps no stable storage: after a
// restart it starts blank and stays silent until `rejoinDeadline`.
class Acceptor {
 public:
  explicit Acceptor(AcceptorOptions options = {}) : options_(options) {}

  // Blank acceptor that refuses to take part before now + rejoinGate. The
  // gate must be at least the cluster's maximal lease time M.
  static Acceptor restarted(TimePoint now, Duration rejoinGate, AcceptorOptions options = {}) {
    Acceptor a(options);
    if (rejoinGate > Duration{0}) a.state_.rejoinDeadline = now + rejoinGate;
    return a;
  }

  const AcceptorState& state() const { return state_; }
  const AcceptorOptions& options() const { return options_; }

  bool gated(TimePoint now) const { return state_.rejoinDeadline && now < *state_.rejoinDeadline; }

  Effects on_message(NodeId from, const Message& m, TimePoint now) {
    switch (m.type) {
      case MessageType::PrepareRequest: return on_prepare_request(from, m, now);
      case MessageType::ProposeRequest: return on_propose_request(from, m, now);
      case MessageType::Release: return on_release(m, now);
      default: return {};
    }
  }

  Effects on_prepare_request(NodeId from, const Message& m, TimePoint now) {
    if (gated(now)) return {};
    expire_if_due(now);
    if (state_.highestPromised && m.ballot < *state_.highestPromised) {
      if (!options_.replyReject) return {};
      return {SendTo{from, Message::prepare_reject(m.ballot)}};
    }
    state_.highestPromised = m.ballot;
    std::optional<Lease> accepted;
    if (state_.acceptedProposal) accepted = state_.acceptedProposal->lease;
    return {SendTo{from, Message::prepare_accept(m.ballot, accepted)}};
  }

  Effects on_propose_request(NodeId from, const Message& m, TimePoint now) {
    if (gated(now)) return {};
    expire_if_due(now);
    if (state_.highestPromised && m.ballot < *state_.highestPromised) {
      if (!options_.replyReject) return {};
      return {SendTo{from, Message::propose_response(m.ballot, Answer::Reject)}};
    }
    Effects out;
    if (options_.holdAccepted) {
      state_.acceptedProposal = Proposal{m.ballot, m.lease};
      state_.expiryDeadline = now + Duration{m.lease.timespan};
      out.push_back(SetTimer{TimerId::AcceptorExpiry, Duration{m.lease.timespan}});
    }
    out.push_back(SendTo{from, Message::propose_response(m.ballot, Answer::Accept)});
    return out;
  }

  // Spurious firings (deadline moved by a later proposal, or state already
  // cleared by a release) are no-ops.
  Effects on_expiry(TimePoint now) {
    expire_if_due(now);
    return {};
  }

  Effects on_release(const Message& m, TimePoint now) {
    if (gated(now)) return {};
    if (!state_.acceptedProposal || state_.acceptedProposal->ballot != m.ballot) return {};
    state_.acceptedProposal.reset();
    state_.expiryDeadline.reset();
    return {CancelTimer{TimerId::AcceptorExpiry}};
  }

 private:
  void expire_if_due(TimePoint now) {
    if (state_.acceptedProposal && now >= *state_.expiryDeadline) {
      state_.acceptedProposal.reset();
      state_.expiryDeadline.reset();
    }
  }

  AcceptorOptions options_;
  AcceptorState state_;
};

}  // namespace paxoslease
