#include <gtest/gtest.h>

#include <random>

#include "codec_fixtures.hpp"
#include "paxoslease/wire/fuzz.hpp"

using namespace paxoslease;
using namespace paxoslease::wire;
using namespace paxoslease::fixtures;
using namespace std::chrono_literals;


TEST(Codec, GoldenEncode) {
  for (const auto& g : goldens()) {
    const std::string_view f = g.frame;
    const auto sp = f.find(' ', 4);
    EXPECT_EQ(encode(g.message, f.substr(4, sp - 4)), g.frame);
  }
}

TEST(Codec, GoldenDecode) {
  for (const auto& g : goldens()) {
    const auto r = decode(g.frame);
    ASSERT_TRUE(r.ok()) << g.frame << ": " << reason(r.error());
    EXPECT_EQ(r.frame().message, g.message) << g.frame;
  }
}

TEST(Codec, MalformedFramesRejectedWithReason) {
  const std::vector<std::pair<std::string, DecodeError>> bad = {
      {"PL2 r PRQ 1.1.1", DecodeError::BadMagic},
      {"PL1  r PRQ 1.1.1", DecodeError::BadSpacing},
      {"PL1 r PRQ 1.1.1 ", DecodeError::BadSpacing},
      {" PL1 r PRQ 1.1.1", DecodeError::BadSpacing},
      {"PL1 r\tPRQ 1.1.1", DecodeError::BadResource},
      {"PL1 r XYZ 1.1.1", DecodeError::BadType},
      {"PL1 r PRQ", DecodeError::MissingField},
      {"PL1 r PRQ 1.1", DecodeError::BadBallot},
      {"PL1 r PRQ 01.1.1", DecodeError::BadBallot},
      {"PL1 r PRQ +1.1.1", DecodeError::BadBallot},
      {"PL1 r PRQ 1.1.4294967296", DecodeError::BadBallot},
      {"PL1 r PRQ 18446744073709551616.1.1", DecodeError::BadBallot},
      {"PL1 r PRQ 1.1.1 x", DecodeError::ExtraField},
      {"PL1 r PRS 1.1.1 X", DecodeError::BadAnswer},
      {"PL1 r PRS 1.1.1 A", DecodeError::MissingField},
      {"PL1 r PRS 1.1.1 A 1:0", DecodeError::BadLease},
      {"PL1 r PRS 1.1.1 A 1-5", DecodeError::BadLease},
      {"PL1 r PRS 1.1.1 R x", DecodeError::ExtraField},
      {"PL1 r POQ 1.1.1 1 0", DecodeError::BadLease},
      {"PL1 r POQ 1.1.1 1 -5", DecodeError::BadLease},
      {"PL1 r POQ 1.1.1 2 500", DecodeError::ProposerMismatch},
      {"PL1 r POQ 1.1.1 1", DecodeError::MissingField},
      {"PL1 r POS 1.1.1 Y", DecodeError::BadAnswer},
      {"PL1 r POQ 1.1.1 1 9223372036854776", DecodeError::BadLease},
      {"", DecodeError::BadSpacing},
      {"PL1 " + std::string(129, 'r') + " PRQ 1.1.1", DecodeError::BadResource},
      {"PL1 r PRQ 1.1.1" + std::string(600, '1'), DecodeError::TooLong},
  };
  for (const auto& [frame, err] : bad) {
    const auto r = decode(frame);
    ASSERT_FALSE(r.ok()) << frame;
    EXPECT_EQ(r.error(), err) << frame << " -> " << reason(r.error());
  }
}

TEST(Codec, EncodeRefusesUnrepresentable) {
  EXPECT_THROW(encode(Message::prepare_request({1, 1, 1}), "has space"), EncodeError);
  EXPECT_THROW(encode(Message::prepare_request({1, 1, 1}), ""), EncodeError);
  EXPECT_THROW(encode(Message::propose_request({1, 1, 1}, Lease{2, 10ms}), "r"), EncodeError);
}

TEST(Codec, RoundTripRandomMessages) {
  std::mt19937_64 rng(0xC0DEC);
  for (int i = 0; i < 100000; ++i) {
    const Message m = random_message(rng);
    const std::string resource = random_resource(rng);
    const std::string frame = encode(m, resource);
    ASSERT_LE(frame.size(), kMaxFrame);
    const auto r = decode(frame);
    ASSERT_TRUE(r.ok()) << frame;
    ASSERT_EQ(r.frame().message, m) << frame;
    ASSERT_EQ(r.frame().resource, resource);
  }
}

// Mutated valid frames must either fail cleanly or decode to something that
// re-encodes to the exact same bytes (the grammar is canonical).
TEST(Codec, MutatedFramesDecodeCanonicallyOrFail) {
  std::mt19937_64 rng(77);
  const std::string alphabet = "PL1RSOQEA-:. 0123456789xr\t";
  int decoded = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string f = encode(random_message(rng), rng() % 2 ? "r" : random_resource(rng).substr(0, 8));
    const int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = rng() % (f.size() + 1);
      switch (rng() % 3) {
        case 0: f.insert(f.begin() + static_cast<std::ptrdiff_t>(pos), alphabet[rng() % alphabet.size()]); break;
        case 1: if (pos < f.size()) f.erase(pos, 1); break;
        default: if (pos < f.size()) f[pos] = static_cast<char>(rng() % 256); break;
      }
    }
    const auto r = decode(f);
    if (!r.ok()) continue;
    ++decoded;
    ASSERT_EQ(encode(r.frame().message, r.frame().resource), f);
  }
  EXPECT_GT(decoded, 0);
}

TEST(Codec, DecoderFuzzIsCanonical) {
  const auto s = fuzz_decoder(100000, 9);
  EXPECT_EQ(s.frames, 100000u);
  EXPECT_EQ(s.decoded + s.rejected, s.frames);
  EXPECT_GT(s.decoded, 0u);
  EXPECT_EQ(s.noncanonical, 0u);
}
