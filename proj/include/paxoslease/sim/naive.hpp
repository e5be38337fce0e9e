#pragma once

#include <bit>
#include <optional>
#include <random>

#include "paxoslease/backoff.hpp"
#include "paxoslease/sim/nodes.hpp"

// Majority-vote lease baseline without prepare phase: a proposer starts its
// timer, asks every acceptor for the lease, and owns it on a majority of
// grants. An acceptor grants to the first request it sees and refuses all
// others until its own timer runs out. Correct, but contending proposers can
// split the acceptors and block each other until the grants expire.
//
// Requests reuse ProposeRequest (the ballot is just a request id) and grants
// reuse ProposeResponse.
namespace paxoslease::sim {

class NaiveAcceptorNode final : public SimNode {
 public:
  explicit NaiveAcceptorNode(bool replyReject) : replyReject_(replyReject) {}

  Effects on_message(NodeId from, const Message& m, TimePoint now) override {
    if (m.type != MessageType::ProposeRequest) return {};
    if (grantExpiry_ && now >= *grantExpiry_) grantExpiry_.reset();
    if (grantExpiry_) {
      if (!replyReject_) return {};
      return {SendTo{from, Message::propose_response(m.ballot, Answer::Reject)}};
    }
    grantExpiry_ = now + Duration{m.lease.timespan};
    return {SetTimer{TimerId::AcceptorExpiry, Duration{m.lease.timespan}},
            SendTo{from, Message::propose_response(m.ballot, Answer::Accept)}};
  }

  Effects on_timer(TimerId timer, TimePoint now) override {
    if (timer == TimerId::AcceptorExpiry && grantExpiry_ && now >= *grantExpiry_) grantExpiry_.reset();
    return {};
  }

  void crash() override { grantExpiry_.reset(); }
  Effects restart(TimePoint) override { return {}; }

  bool holds_grant() const { return grantExpiry_.has_value(); }

 private:
  bool replyReject_;
  std::optional<TimePoint> grantExpiry_;
};

class NaiveProposerNode final : public SimNode {
 public:
  NaiveProposerNode(ProposerConfig config, Millis timespan)
      : config_(std::move(config)),
        timespan_(timespan),
        majority_(static_cast<int>(config_.acceptorCount / 2 + 1)),
        gen_(config_.id, 1),
        rng_(static_cast<std::uint32_t>(config_.seed % 2147483646ULL) + 1) {}

  Effects on_message(NodeId from, const Message& m, TimePoint now) override {
    if (m.type != MessageType::ProposeResponse || !request_ || m.ballot != *request_ || m.answer != Answer::Accept)
      return {};
    if (from >= config_.acceptorCount) return {};
    const std::uint64_t bit = std::uint64_t{1} << from;
    if (grants_ & bit) return {};
    grants_ |= bit;
    if (std::popcount(grants_) != majority_ || owner_ || now >= *deadline_) return {};
    owner_ = true;
    if (!config_.persistent) want_ = false;
    return {StatusChange{true}};
  }

  Effects on_timer(TimerId timer, TimePoint now) override {
    if (timer == TimerId::LeaseTimeout) {
      if (!deadline_ || now < *deadline_) return {};
      Effects out;
      deadline_.reset();
      request_.reset();
      if (owner_) {
        owner_ = false;
        out.push_back(StatusChange{false});
      }
      if (want_ && config_.retry != RetryMode::None) {
        const Duration d = config_.retry == RetryMode::Backoff ? backoff_delay(rng_, timespan_) : Duration{0};
        out.push_back(SetTimer{TimerId::Backoff, d});
      }
      return out;
    }
    if (timer == TimerId::Backoff && want_ && !request_) return send_request(now);
    return {};
  }

  Effects on_command(CommandKind kind, TimePoint now) override {
    if (kind != CommandKind::Acquire || request_) return {};
    want_ = true;
    return send_request(now);
  }

  void crash() override {
    request_.reset();
    deadline_.reset();
    owner_ = false;
    want_ = false;
    grants_ = 0;
  }

  Effects restart(TimePoint now) override {
    gen_ = BallotGenerator(config_.id, gen_.restart_counter() + 1);
    if (!config_.persistent) return {};
    want_ = true;
    return send_request(now);
  }

  bool owner() const override { return owner_; }

 private:
  Effects send_request(TimePoint now) {
    request_ = gen_.next();
    grants_ = 0;
    deadline_ = now + Duration{timespan_};
    return {SetTimer{TimerId::LeaseTimeout, Duration{timespan_}},
            Broadcast{Message::propose_request(*request_, Lease{config_.id, timespan_})}};
  }

  ProposerConfig config_;
  Millis timespan_;
  int majority_;
  BallotGenerator gen_;
  std::minstd_rand rng_;
  std::optional<BallotNumber> request_;
  std::optional<TimePoint> deadline_;
  std::uint64_t grants_ = 0;
  bool owner_ = false;
  bool want_ = false;
};

}  // namespace paxoslease::sim
