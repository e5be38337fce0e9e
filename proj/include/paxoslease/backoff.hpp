#pragma once

#include <cstdint>
#include <random>

#include "paxoslease/time.hpp"

namespace paxoslease {

// Randomised pause before a proposer retries a failed round: uniform in
// [T/2, 3T/2], drawn from the caller's seeded generator.
template <class Rng>
Duration backoff_delay(Rng& rng, Millis timespan) {
  const std::int64_t t = Duration{timespan}.count();
  std::uniform_int_distribution<std::int64_t> dist(t / 2, t + t / 2);
  return Duration{dist(rng)};
}

}  // namespace paxoslease
