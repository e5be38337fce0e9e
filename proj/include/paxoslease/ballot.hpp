#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace paxoslease {

using ProposerId = std::uint32_t;

// Proposal identifier. Ordered lexicographically on
// (restartCounter, runCounter, proposerId): the restart counter is the most
// significant field so that ballots keep increasing across proposer restarts,
// and the proposer id breaks ties between proposers.
struct BallotNumber {
  std::uint64_t restartCounter = 0;
  std::uint64_t runCounter = 0;
  ProposerId proposerId = 0;

  friend constexpr auto operator<=>(const BallotNumber&, const BallotNumber&) = default;
};

inline std::string to_string(const BallotNumber& b) {
  return std::to_string(b.restartCounter) + '.' + std::to_string(b.runCounter) + '.' +
         std::to_string(b.proposerId);
}

inline std::ostream& operator<<(std::ostream& os, const BallotNumber& b) { return os << to_string(b); }

class BallotExhausted : public std::runtime_error {
 public:
  BallotExhausted() : std::runtime_error("ballot counters exhausted") {}
};

// Per-proposer ballot source for one process run. The restart counter comes
// from stable storage (see RestartRecord); the run counter starts at zero and
// is bumped before every ballot.
class BallotGenerator {
 public:
  constexpr BallotGenerator() = default;
  constexpr BallotGenerator(ProposerId id, std::uint64_t restartCounter, std::uint64_t runFloor = 0)
      : restart_(restartCounter), run_(runFloor), id_(id) {}

  BallotNumber next() {
    if (run_ == std::numeric_limits<std::uint64_t>::max()) throw BallotExhausted{};
    ++run_;
    return {restart_, run_, id_};
  }

  // Moves to the next restart epoch, as a restart would; the caller persists
  // the returned counter before using ballots from it.
  std::uint64_t next_epoch() {
    if (restart_ == std::numeric_limits<std::uint64_t>::max()) throw BallotExhausted{};
    ++restart_;
    run_ = 0;
    return restart_;
  }

  constexpr std::uint64_t restart_counter() const { return restart_; }
  constexpr std::uint64_t run_counter() const { return run_; }
  constexpr ProposerId proposer_id() const { return id_; }

  friend constexpr bool operator==(const BallotGenerator&, const BallotGenerator&) = default;

 private:
  std::uint64_t restart_ = 0;
  std::uint64_t run_ = 0;
  ProposerId id_ = 0;
};

}  // namespace paxoslease
