#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <string>

#include "paxoslease/wire/codec.hpp"

namespace paxoslease::wire {

struct FuzzStats {
  std::uint64_t frames = 0;
  std::uint64_t decoded = 0;
  std::uint64_t rejected = 0;
  std::uint64_t noncanonical = 0;  // decoded but re-encoded to different bytes
};

// Alternates random byte strings with lightly mutated valid frames.
inline FuzzStats fuzz_decoder(std::uint64_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FuzzStats s;
  const std::string seeds[] = {"PL1 r PRQ 3.1.2", "PL1 r PRS 3.1.2 A 2:2000", "PL1 r PRS 3.1.2 A -",
                               "PL1 r POQ 3.1.2 2 2000", "PL1 r POS 3.1.2 R", "PL1 r REL 3.1.2"};
  for (; s.frames < frames; ++s.frames) {
    std::string f;
    if (s.frames % 2 == 0) {
      f.resize(rng() % 80);
      for (auto& c : f) c = static_cast<char>(rng() % 256);
    } else {
      f = seeds[rng() % std::size(seeds)];
      for (int e = 0, n = 1 + static_cast<int>(rng() % 4); e < n; ++e) {
        const std::size_t pos = rng() % (f.size() + 1);
        if (rng() % 2) f.insert(f.begin() + static_cast<std::ptrdiff_t>(pos), static_cast<char>(rng() % 128));
        else if (pos < f.size()) f[pos] = static_cast<char>(rng() % 128);
      }
    }
    const auto r = decode(f);
    if (!r.ok()) {
      ++s.rejected;
      continue;
    }
    ++s.decoded;
    if (encode(r.frame().message, r.frame().resource) != f) ++s.noncanonical;
  }
  return s;
}

}  // namespace paxoslease::wire
