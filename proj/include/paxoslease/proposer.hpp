#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "paxoslease/backoff.hpp"
#include "paxoslease/ballot.hpp"
#include "paxoslease/effect.hpp"
#include "paxoslease/message.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease {

class InvalidTimespan : public std::invalid_argument {
 public:
  InvalidTimespan(Millis t, Millis maxLease)
      : std::invalid_argument("lease timespan " + std::to_string(t.count()) +
                              "ms outside (0, " + std::to_string(maxLease.count()) + "ms)") {}
};

enum class Phase : std::uint8_t { Idle, Preparing, Proposing };

// What a proposer does after a failed round while it still wants the lease.
enum class RetryMode : std::uint8_t {
  None,       // give up; the caller decides
  Immediate,  // start the next round at once (livelock-prone)
  Backoff,    // wait backoff_delay() first
};

inline constexpr std::size_t kMaxAcceptors = 64;

struct ProposerConfig {
  ProposerId id = 0;
  std::size_t acceptorCount = 1;
  Millis maxLease{1000};
  RetryMode retry = RetryMode::None;
  // Re-acquire after losing the lease instead of stopping at the first success.
  bool persistent = false;
  // Extend a held lease this long after each successful (re)acquisition.
  std::optional<Duration> extendEvery;
  // Verdict deadline for the prepare phase; defaults to the requested
  // timespan. Only armed when retry != None.
  std::optional<Duration> prepareTimeout;
  std::uint64_t seed = 0;
};

struct ProposerState {
  BallotGenerator ballots;
  std::optional<BallotNumber> ballotNumber;
  Phase phase = Phase::Idle;
  Millis requestedTimespan{0};
  // Responders for the current ballot, one bit per acceptor index.
  std::uint64_t openMask = 0;      // accepting prepare responses counted as open
  std::uint64_t closedMask = 0;    // prepare rejects and non-open accepts
  std::uint64_t acceptedMask = 0;  // propose accepts
  std::uint64_t rejectedMask = 0;  // propose rejects
  bool leaseOwner = false;
  std::optional<TimePoint> leaseDeadline;
  // Extension round in flight: deadline fixed at its prepare majority, taken
  // over by leaseDeadline once the propose majority arrives.
  std::optional<TimePoint> pendingDeadline;
  std::optional<BallotNumber> heldBallot;
  bool extending = false;
  bool wantLease = false;
  // An acceptor rejected one of our ballots: it has promised a higher one,
  // which rejects do not reveal. The next round starts a new epoch.
  bool epochStale = false;
  std::optional<TimePoint> prepareDeadline;
  std::optional<TimePoint> retryAt;
  std::optional<TimePoint> extendAt;
  std::optional<TimePoint> acquiredAt;
  std::uint32_t majority = 1;

  std::uint32_t num_open() const { return static_cast<std::uint32_t>(std::popcount(openMask)); }
  std::uint32_t num_accepted() const { return static_cast<std::uint32_t>(std::popcount(acceptedMask)); }

  bool idle() const { return phase == Phase::Idle && !leaseOwner && !wantLease && !ballotNumber; }

  friend bool operator==(const ProposerState&, const ProposerState&) = default;
};

// Proposer side of one lease instance. Every handler takes the current local
// monotonic time and returns the effects to execute, in order.
class Proposer {
 public:
  Proposer(ProposerConfig config, std::uint64_t restartCounter, std::uint64_t runFloor = 0)
      : config_(std::move(config)), rng_(mix_seed(config_.seed, config_.id)) {
    if (config_.acceptorCount == 0 || config_.acceptorCount > kMaxAcceptors)
      throw std::invalid_argument("acceptor count must be in [1, 64]");
    if (config_.maxLease <= Millis{0}) throw std::invalid_argument("maximal lease time must be positive");
    state_.ballots = BallotGenerator(config_.id, restartCounter, runFloor);
    state_.majority = static_cast<std::uint32_t>(config_.acceptorCount / 2 + 1);
  }

  const ProposerState& state() const { return state_; }
  const ProposerConfig& config() const { return config_; }

  bool is_owner(TimePoint now) const { return state_.leaseOwner && now < *state_.leaseDeadline; }

  // Step 1: fresh ballot, prepare broadcast. A live owner extends instead.
  Effects start_acquire(Millis timespan, TimePoint now) {
    check_timespan(timespan);
    if (is_owner(now)) return start_extend(timespan, now);
    state_.wantLease = true;
    return begin_round(timespan, now, false);
  }

  // Like start_acquire, but prepare responses carrying this proposer's own
  // live lease count as open. Falls back to a plain acquire without a lease.
  Effects start_extend(Millis timespan, TimePoint now) {
    check_timespan(timespan);
    if (!is_owner(now)) return start_acquire(timespan, now);
    Effects out;
    if (state_.extendAt) {
      state_.extendAt.reset();
      out.push_back(CancelTimer{TimerId::Extend});
    }
    Effects round = begin_round(timespan, now, true);
    out.insert(out.end(), round.begin(), round.end());
    return out;
  }

  Effects on_message(std::size_t acceptor, const Message& m, TimePoint now) {
    switch (m.type) {
      case MessageType::PrepareResponse: return on_prepare_response(acceptor, m, now);
      case MessageType::ProposeResponse: return on_propose_response(acceptor, m, now);
      default: return {};
    }
  }

  Effects on_prepare_response(std::size_t acceptor, const Message& m, TimePoint now) {
    if (state_.phase != Phase::Preparing || !matches(m) || acceptor >= config_.acceptorCount) return {};
    const std::uint64_t bit = std::uint64_t{1} << acceptor;
    if ((state_.openMask | state_.closedMask) & bit) return {};

    if (m.answer == Answer::Reject || !counts_as_open(m, now)) {
      if (m.answer == Answer::Reject) state_.epochStale = true;
      state_.closedMask |= bit;
      if (config_.acceptorCount - std::popcount(state_.closedMask) < state_.majority) return fail_round(now);
      return {};
    }
    state_.openMask |= bit;
    if (state_.num_open() < state_.majority) return {};

    Effects out;
    if (state_.prepareDeadline) {
      state_.prepareDeadline.reset();
      out.push_back(CancelTimer{TimerId::PrepareTimeout});
    }
    const Duration span{state_.requestedTimespan};
    state_.phase = Phase::Proposing;
    // The proposer's timer starts here, before any propose request leaves.
    if (state_.extending) {
      state_.pendingDeadline = now + span;
    } else {
      state_.leaseDeadline = now + span;
      out.push_back(SetTimer{TimerId::LeaseTimeout, span});
    }
    out.push_back(Broadcast{Message::propose_request(*state_.ballotNumber, Lease{config_.id, state_.requestedTimespan})});
    return out;
  }

  Effects on_propose_response(std::size_t acceptor, const Message& m, TimePoint now) {
    if (state_.phase != Phase::Proposing || !matches(m) || acceptor >= config_.acceptorCount) return {};
    const std::uint64_t bit = std::uint64_t{1} << acceptor;
    if ((state_.acceptedMask | state_.rejectedMask) & bit) return {};

    if (m.answer == Answer::Reject) {
      state_.epochStale = true;
      state_.rejectedMask |= bit;
      if (config_.acceptorCount - std::popcount(state_.rejectedMask) < state_.majority) return fail_round(now);
      return {};
    }
    state_.acceptedMask |= bit;
    if (state_.num_accepted() != state_.majority) return {};

    Effects out;
    if (state_.extending) {
      if (!is_owner(now) || now >= *state_.pendingDeadline) return {};
      state_.leaseDeadline = state_.pendingDeadline;
      state_.pendingDeadline.reset();
      state_.extending = false;
      state_.heldBallot = state_.ballotNumber;
      out.push_back(SetTimer{TimerId::LeaseTimeout, *state_.leaseDeadline - now});
    } else {
      if (!state_.leaseDeadline || now >= *state_.leaseDeadline) return {};
      state_.leaseOwner = true;
      state_.heldBallot = state_.ballotNumber;
      state_.acquiredAt = now;
      if (!config_.persistent) state_.wantLease = false;
      out.push_back(StatusChange{true});
    }
    if (config_.extendEvery) {
      state_.extendAt = now + *config_.extendEvery;
      out.push_back(SetTimer{TimerId::Extend, *config_.extendEvery});
    }
    return out;
  }

  Effects on_timer(TimerId timer, TimePoint now) {
    switch (timer) {
      case TimerId::LeaseTimeout: return on_lease_timeout(now);
      case TimerId::PrepareTimeout: return on_prepare_timeout(now);
      case TimerId::Backoff: return on_backoff(now);
      case TimerId::Extend: return on_extend_timer(now);
      default: return {};
    }
  }

  // Lease timer for the current round. Forgets the ballot, so late responses
  // are ignored; a superseded timer (deadline moved or cleared) is a no-op.
  Effects on_lease_timeout(TimePoint now) {
    if (!state_.leaseDeadline || now < *state_.leaseDeadline) return {};
    const bool wasOwner = state_.leaseOwner;
    Effects out;
    cancel_round_timers(out);
    if (state_.extendAt) {
      state_.extendAt.reset();
      out.push_back(CancelTimer{TimerId::Extend});
    }
    reset_round();
    state_.leaseOwner = false;
    state_.leaseDeadline.reset();
    state_.heldBallot.reset();
    if (wasOwner) out.push_back(StatusChange{false});
    schedule_retry(out, now);
    return out;
  }

  // Drops the lease: owner flag first, then release messages for the held
  // ballot (and for an extension still in flight).
  Effects release() {
    if (!state_.leaseOwner) return {};
    Effects out;
    state_.leaseOwner = false;
    out.push_back(StatusChange{false});
    out.push_back(Broadcast{Message::release(*state_.heldBallot)});
    if (state_.extending && state_.phase == Phase::Proposing && state_.ballotNumber != state_.heldBallot)
      out.push_back(Broadcast{Message::release(*state_.ballotNumber)});
    out.push_back(CancelTimer{TimerId::LeaseTimeout});
    cancel_round_timers(out);
    if (state_.extendAt) {
      state_.extendAt.reset();
      out.push_back(CancelTimer{TimerId::Extend});
    }
    if (state_.retryAt) {
      state_.retryAt.reset();
      out.push_back(CancelTimer{TimerId::Backoff});
    }
    reset_round();
    state_.leaseDeadline.reset();
    state_.heldBallot.reset();
    state_.wantLease = false;
    return out;
  }

 private:
  static std::uint32_t mix_seed(std::uint64_t seed, ProposerId id) {
    std::uint64_t x = seed ^ (std::uint64_t{id} * 0x9E3779B97F4A7C15ULL);
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 29;
    // minstd_rand rejects a zero seed modulo its prime.
    return static_cast<std::uint32_t>(x % 2147483646ULL) + 1;
  }

  void check_timespan(Millis t) const {
    if (!valid_timespan(t, config_.maxLease)) throw InvalidTimespan(t, config_.maxLease);
  }

  bool matches(const Message& m) const { return state_.ballotNumber && m.ballot == *state_.ballotNumber; }

  bool counts_as_open(const Message& m, TimePoint now) const {
    if (!m.acceptedLease) return true;
    return state_.extending && is_owner(now) && m.acceptedLease->proposerId == config_.id;
  }

  Effects begin_round(Millis timespan, TimePoint now, bool extending) {
    Effects out;
    if (!state_.leaseOwner && state_.leaseDeadline) {
      // Abandoned acquisition still in its propose phase.
      state_.leaseDeadline.reset();
      out.push_back(CancelTimer{TimerId::LeaseTimeout});
    }
    if (state_.retryAt) {
      state_.retryAt.reset();
      out.push_back(CancelTimer{TimerId::Backoff});
    }
    reset_round();
    if (state_.epochStale) {
      state_.epochStale = false;
      out.push_back(PersistEpoch{state_.ballots.next_epoch()});
    }
    state_.ballotNumber = state_.ballots.next();
    state_.phase = Phase::Preparing;
    state_.requestedTimespan = timespan;
    state_.extending = extending;
    out.push_back(Broadcast{Message::prepare_request(*state_.ballotNumber)});
    if (config_.retry != RetryMode::None) {
      const Duration timeout = config_.prepareTimeout.value_or(Duration{timespan});
      state_.prepareDeadline = now + timeout;
      out.push_back(SetTimer{TimerId::PrepareTimeout, timeout});
    }
    return out;
  }

  Effects fail_round(TimePoint now) {
    Effects out;
    cancel_round_timers(out);
    const bool wasExtending = state_.extending;
    if (!state_.leaseOwner && state_.leaseDeadline) {
      state_.leaseDeadline.reset();
      out.push_back(CancelTimer{TimerId::LeaseTimeout});
    }
    reset_round();
    if (wasExtending && is_owner(now)) {
      // Try again halfway to the current deadline.
      const Duration delay = (*state_.leaseDeadline - now) / 2;
      state_.extendAt = now + delay;
      out.push_back(SetTimer{TimerId::Extend, delay});
    } else {
      schedule_retry(out, now);
    }
    return out;
  }

  Effects on_prepare_timeout(TimePoint now) {
    if (state_.phase != Phase::Preparing || !state_.prepareDeadline || now < *state_.prepareDeadline) return {};
    state_.prepareDeadline.reset();
    return fail_round(now);
  }

  Effects on_backoff(TimePoint now) {
    if (!state_.retryAt || now < *state_.retryAt) return {};
    state_.retryAt.reset();
    if (!state_.wantLease || state_.leaseOwner || state_.phase != Phase::Idle) return {};
    return begin_round(state_.requestedTimespan, now, false);
  }

  Effects on_extend_timer(TimePoint now) {
    if (!state_.extendAt || now < *state_.extendAt) return {};
    state_.extendAt.reset();
    if (!is_owner(now) || state_.extending) return {};
    return begin_round(state_.requestedTimespan, now, true);
  }

  void schedule_retry(Effects& out, TimePoint now) {
    if (!state_.wantLease || config_.retry == RetryMode::None) return;
    const Duration delay =
        config_.retry == RetryMode::Backoff ? backoff_delay(rng_, state_.requestedTimespan) : Duration{0};
    state_.retryAt = now + delay;
    out.push_back(SetTimer{TimerId::Backoff, delay});
  }

  void cancel_round_timers(Effects& out) {
    if (state_.prepareDeadline) {
      state_.prepareDeadline.reset();
      out.push_back(CancelTimer{TimerId::PrepareTimeout});
    }
  }

  void reset_round() {
    state_.ballotNumber.reset();
    state_.phase = Phase::Idle;
    state_.openMask = state_.closedMask = state_.acceptedMask = state_.rejectedMask = 0;
    state_.pendingDeadline.reset();
    state_.extending = false;
  }

  ProposerConfig config_;
  ProposerState state_;
  std::minstd_rand rng_;
};

}  // namespace paxoslease
