#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "paxoslease/acceptor.hpp"
#include "paxoslease/proposer.hpp"

namespace paxoslease {

// Compact binary snapshot of protocol state: LEB128 varints, one presence
// byte per optional. Used to measure the per-instance footprint and as a
// canonical key when exploring state spaces. Not a persistence format.
class StateWriter {
 public:
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<char>((v & 0x7F) | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<char>(v));
  }

  // Zigzag, so small negative offsets stay short.
  void svarint(std::int64_t v) { varint((static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63)); }

  void flag(bool b) { out_.push_back(b ? '\1' : '\0'); }

  void bytes(std::string_view s) {
    varint(s.size());
    out_.append(s);
  }

  void ballot(const BallotNumber& b) {
    varint(b.restartCounter);
    varint(b.runCounter);
    varint(b.proposerId);
  }

  void lease(const Lease& l) {
    varint(l.proposerId);
    svarint(l.timespan.count());
  }

  void time(TimePoint t) { svarint(to_us(t)); }

  template <class T, class F>
  void optional(const std::optional<T>& v, F&& write) {
    flag(v.has_value());
    if (v) write(*v);
  }

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

inline void write_state(StateWriter& w, const AcceptorState& a) {
  w.optional(a.highestPromised, [&](const BallotNumber& b) { w.ballot(b); });
  w.optional(a.acceptedProposal, [&](const Proposal& p) {
    w.ballot(p.ballot);
    w.lease(p.lease);
  });
  w.optional(a.expiryDeadline, [&](TimePoint t) { w.time(t); });
  w.optional(a.rejoinDeadline, [&](TimePoint t) { w.time(t); });
}

inline void write_state(StateWriter& w, const ProposerState& p) {
  w.varint(p.ballots.restart_counter());
  w.varint(p.ballots.run_counter());
  w.varint(p.ballots.proposer_id());
  w.optional(p.ballotNumber, [&](const BallotNumber& b) { w.ballot(b); });
  w.varint(static_cast<std::uint8_t>(p.phase));
  w.svarint(p.requestedTimespan.count());
  w.varint(p.openMask);
  w.varint(p.closedMask);
  w.varint(p.acceptedMask);
  w.varint(p.rejectedMask);
  w.flag(p.leaseOwner);
  w.optional(p.leaseDeadline, [&](TimePoint t) { w.time(t); });
  w.optional(p.pendingDeadline, [&](TimePoint t) { w.time(t); });
  w.optional(p.heldBallot, [&](const BallotNumber& b) { w.ballot(b); });
  w.flag(p.extending);
  w.flag(p.wantLease);
  w.flag(p.epochStale);
  w.optional(p.prepareDeadline, [&](TimePoint t) { w.time(t); });
  w.optional(p.retryAt, [&](TimePoint t) { w.time(t); });
  w.optional(p.extendAt, [&](TimePoint t) { w.time(t); });
  w.optional(p.acquiredAt, [&](TimePoint t) { w.time(t); });
  w.varint(p.majority);
}

inline std::string serialize(const AcceptorState& a) {
  StateWriter w;
  write_state(w, a);
  return w.take();
}

inline std::string serialize(const ProposerState& p) {
  StateWriter w;
  write_state(w, p);
  return w.take();
}

}  // namespace paxoslease
