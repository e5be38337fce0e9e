#pragma once

#include <chrono>
#include <random>
#include <string>
#include <vector>

#include "paxoslease/wire/codec.hpp"

namespace paxoslease::fixtures {

using namespace std::chrono_literals;

struct Golden {
  const char* frame;
  Message message;
};

inline const std::vector<Golden>& goldens() {
  static const std::vector<Golden> g = {
      {"PL1 db/master PRQ 3.17.2", Message::prepare_request({3, 17, 2})},
      {"PL1 db/master PRS 3.17.2 A -", Message::prepare_accept({3, 17, 2}, std::nullopt)},
      {"PL1 db/master PRS 3.17.2 A 1:4000", Message::prepare_accept({3, 17, 2}, Lease{1, 4000ms})},
      {"PL1 db/master PRS 3.17.2 R", Message::prepare_reject({3, 17, 2})},
      {"PL1 db/master POQ 3.17.2 2 4000", Message::propose_request({3, 17, 2}, Lease{2, 4000ms})},
      {"PL1 db/master POS 3.17.2 A", Message::propose_response({3, 17, 2}, Answer::Accept)},
      {"PL1 db/master POS 3.17.2 R", Message::propose_response({3, 17, 2}, Answer::Reject)},
      {"PL1 db/master REL 3.17.2", Message::release({3, 17, 2})},
      {"PL1 x PRQ 0.0.0", Message::prepare_request({0, 0, 0})},
      {"PL1 x REL 18446744073709551615.18446744073709551615.4294967295",
       Message::release({UINT64_MAX, UINT64_MAX, UINT32_MAX})},
  };
  return g;
}

inline Message random_message(std::mt19937_64& rng) {
  auto u64 = [&] {
    switch (rng() % 3) {
      case 0: return rng() % 10;
      case 1: return rng();
      default: return std::uint64_t{UINT64_MAX};
    }
  };
  const BallotNumber b{u64(), u64(), static_cast<ProposerId>(rng())};
  const Millis t{static_cast<std::int64_t>(rng() % wire::detail::kMaxTimespanMs) + 1};
  switch (rng() % 7) {
    case 0: return Message::prepare_request(b);
    case 1: return Message::prepare_accept(b, std::nullopt);
    case 2: return Message::prepare_accept(b, Lease{static_cast<ProposerId>(rng()), t});
    case 3: return Message::prepare_reject(b);
    case 4: return Message::propose_request(b, Lease{b.proposerId, t});
    case 5: return Message::propose_response(b, rng() % 2 ? Answer::Accept : Answer::Reject);
    default: return Message::release(b);
  }
}

inline std::string random_resource(std::mt19937_64& rng) {
  const std::size_t len = 1 + rng() % ResourceId::kMaxLength;
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char>(0x21 + rng() % (0x7F - 0x21)));
  return s;
}

}  // namespace paxoslease::fixtures
