#include <gtest/gtest.h>

#include <random>

#include "paxoslease/acceptor.hpp"

using namespace paxoslease;
using namespace std::chrono_literals;

namespace {

constexpr NodeId kFrom = 9;

TimePoint ms(std::int64_t v) { return TimePoint{Duration{std::chrono::milliseconds(v)}}; }

Message prepare(BallotNumber b) { return Message::prepare_request(b); }
Message propose(BallotNumber b, Millis t = 2000ms) { return Message::propose_request(b, Lease{b.proposerId, t}); }

const SendTo& only_send(const Effects& fx) {
  EXPECT_EQ(fx.size(), 1u);
  return std::get<SendTo>(fx.back());
}

}  // namespace

TEST(AcceptorPrepare, EmptyStateAcceptsWithEmptyProposal) {
  Acceptor a;
  const auto fx = a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  const auto& s = only_send(fx);
  EXPECT_EQ(s.to, kFrom);
  EXPECT_EQ(s.message, Message::prepare_accept({1, 1, 1}, std::nullopt));
  EXPECT_EQ(a.state().highestPromised, (BallotNumber{1, 1, 1}));
}

TEST(AcceptorPrepare, LowerBallotRejectedStateUnchanged) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({2, 1, 1}), ms(0));
  const AcceptorState before = a.state();
  const auto fx = a.on_prepare_request(kFrom, prepare({1, 9, 9}), ms(1));
  EXPECT_EQ(only_send(fx).message, Message::prepare_reject({1, 9, 9}));
  EXPECT_EQ(a.state(), before);
}

TEST(AcceptorPrepare, EqualBallotAccepted) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({2, 1, 1}), ms(0));
  const auto fx = a.on_prepare_request(kFrom, prepare({2, 1, 1}), ms(1));
  EXPECT_EQ(only_send(fx).message.answer, Answer::Accept);
}

TEST(AcceptorPrepare, SilentModeDropsStaleRequests) {
  Acceptor a(AcceptorOptions{.replyReject = false});
  a.on_prepare_request(kFrom, prepare({2, 1, 1}), ms(0));
  EXPECT_TRUE(a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(1)).empty());
  EXPECT_TRUE(a.on_propose_request(kFrom, propose({1, 1, 1}), ms(1)).empty());
}

TEST(AcceptorPrepare, ReportsAcceptedLease) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}, 2000ms), ms(1));
  const auto fx = a.on_prepare_request(kFrom, prepare({1, 2, 2}), ms(2));
  EXPECT_EQ(only_send(fx).message, Message::prepare_accept({1, 2, 2}, Lease{1, 2000ms}));
}

TEST(AcceptorPropose, AcceptsPromisedBallotAndArmsExpiry) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({3, 1, 1}), ms(0));
  const auto fx = a.on_propose_request(kFrom, propose({3, 1, 1}, 2000ms), ms(5));
  ASSERT_EQ(fx.size(), 2u);
  EXPECT_EQ(std::get<SetTimer>(fx[0]), (SetTimer{TimerId::AcceptorExpiry, 2000ms}));
  EXPECT_EQ(std::get<SendTo>(fx[1]).message, Message::propose_response({3, 1, 1}, Answer::Accept));
  EXPECT_EQ(a.state().acceptedProposal, (Proposal{{3, 1, 1}, {1, 2000ms}}));
  EXPECT_EQ(a.state().expiryDeadline, ms(2005));
}

TEST(AcceptorPropose, LowerBallotRejected) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({3, 1, 1}), ms(0));
  const auto fx = a.on_propose_request(kFrom, propose({2, 5, 2}), ms(1));
  EXPECT_EQ(only_send(fx).message, Message::propose_response({2, 5, 2}, Answer::Reject));
  EXPECT_FALSE(a.state().acceptedProposal);
}

TEST(AcceptorPropose, HigherBallotReplacesPreviousProposalAndTimer) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}, 1000ms), ms(0));
  a.on_prepare_request(kFrom, prepare({1, 2, 2}), ms(10));
  a.on_propose_request(kFrom, propose({1, 2, 2}, 1000ms), ms(20));
  EXPECT_EQ(a.state().acceptedProposal->ballot, (BallotNumber{1, 2, 2}));
  EXPECT_EQ(a.state().expiryDeadline, ms(1020));
  // The first proposal's timer firing is now spurious.
  a.on_expiry(ms(1000));
  EXPECT_TRUE(a.state().acceptedProposal);
  EXPECT_EQ(a.state().highestPromised, (BallotNumber{1, 2, 2}));
}

TEST(AcceptorExpiry, ClearsProposalKeepsPromise) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}, 1000ms), ms(0));
  a.on_expiry(ms(1000));
  EXPECT_FALSE(a.state().acceptedProposal);
  EXPECT_FALSE(a.state().expiryDeadline);
  EXPECT_EQ(a.state().highestPromised, (BallotNumber{1, 1, 1}));
}

TEST(AcceptorExpiry, ExpiredProposalNotReportedEvenBeforeTimerFires) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}, 1000ms), ms(0));
  const auto fx = a.on_prepare_request(kFrom, prepare({1, 2, 2}), ms(1000));
  EXPECT_EQ(only_send(fx).message, Message::prepare_accept({1, 2, 2}, std::nullopt));
}

TEST(AcceptorRelease, MatchingBallotClears) {
  Acceptor a;
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}), ms(0));
  const auto fx = a.on_release(Message::release({1, 1, 1}), ms(5));
  EXPECT_EQ(fx, (Effects{CancelTimer{TimerId::AcceptorExpiry}}));
  EXPECT_FALSE(a.state().acceptedProposal);
}

TEST(AcceptorRelease, OtherBallotOrEmptyStateIgnored) {
  Acceptor a;
  EXPECT_TRUE(a.on_release(Message::release({1, 1, 1}), ms(0)).empty());
  EXPECT_TRUE(a.state().empty());
  a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(0));
  a.on_propose_request(kFrom, propose({1, 1, 1}), ms(0));
  const AcceptorState before = a.state();
  EXPECT_TRUE(a.on_release(Message::release({1, 1, 2}), ms(5)).empty());
  EXPECT_EQ(a.state(), before);
}

TEST(AcceptorRestart, SilentUntilRejoinDeadlineInclusive) {
  Acceptor a = Acceptor::restarted(ms(0), 5000ms);
  EXPECT_TRUE(a.state().empty());
  EXPECT_TRUE(a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(4999)).empty());
  EXPECT_TRUE(a.on_propose_request(kFrom, propose({1, 1, 1}), ms(4999)).empty());
  EXPECT_FALSE(a.state().highestPromised);
  EXPECT_EQ(a.on_prepare_request(kFrom, prepare({1, 1, 1}), ms(5000)).size(), 1u);
}

TEST(AcceptorInvariants, PromiseNeverDecreasesAndProposalImpliesDeadline) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 3), small(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    Acceptor a;
    std::int64_t t = 0;
    std::optional<BallotNumber> prev;
    for (int step = 0; step < 100; ++step) {
      t += small(rng) * 100;
      const BallotNumber b{1, static_cast<std::uint64_t>(small(rng)), static_cast<ProposerId>(small(rng))};
      switch (pick(rng)) {
        case 0: a.on_prepare_request(kFrom, prepare(b), ms(t)); break;
        case 1: a.on_propose_request(kFrom, propose(b, 300ms), ms(t)); break;
        case 2: a.on_release(Message::release(b), ms(t)); break;
        case 3: a.on_expiry(ms(t)); break;
      }
      const auto& s = a.state();
      if (prev) {
        ASSERT_TRUE(s.highestPromised);
        ASSERT_GE(*s.highestPromised, *prev);
      }
      prev = s.highestPromised;
      ASSERT_EQ(s.acceptedProposal.has_value(), s.expiryDeadline.has_value());
      // Lifetime of an accepted proposal never exceeds its timespan.
      if (s.acceptedProposal) {
        ASSERT_LE(*s.expiryDeadline - ms(t), Duration{300ms});
      }
    }
  }
}
