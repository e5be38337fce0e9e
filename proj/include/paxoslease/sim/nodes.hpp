#pragma once

#include <algorithm>
#include <memory>
#include <optional>

#include "paxoslease/acceptor.hpp"
#include "paxoslease/proposer.hpp"
#include "paxoslease/sim/scenario.hpp"

namespace paxoslease::sim {

// A simulated process. `crash` discards all volatile state; `restart` brings
// the process back at local time `now`.
class SimNode {
 public:
  virtual ~SimNode() = default;
  virtual Effects on_message(NodeId from, const Message& m, TimePoint now) = 0;
  virtual Effects on_timer(TimerId timer, TimePoint now) = 0;
  virtual Effects on_command(CommandKind, TimePoint) { return {}; }
  virtual void crash() = 0;
  virtual Effects restart(TimePoint now) = 0;
  virtual bool owner() const { return false; }
};

class PaxosAcceptorNode final : public SimNode {
 public:
  PaxosAcceptorNode(AcceptorOptions options, Duration rejoinGate)
      : options_(options), gate_(rejoinGate), acceptor_(Acceptor(options)) {}

  Effects on_message(NodeId from, const Message& m, TimePoint now) override {
    return acceptor_->on_message(from, m, now);
  }
  Effects on_timer(TimerId timer, TimePoint now) override {
    return timer == TimerId::AcceptorExpiry ? acceptor_->on_expiry(now) : Effects{};
  }
  void crash() override { acceptor_.reset(); }
  Effects restart(TimePoint now) override {
    acceptor_ = Acceptor::restarted(now, gate_, options_);
    return {};
  }

  const Acceptor& acceptor() const { return *acceptor_; }

 private:
  AcceptorOptions options_;
  Duration gate_;
  std::optional<Acceptor> acceptor_;
};

// Proposer process with a simulated stable restart counter, which also
// records epochs the proposer moves to. Acceptor node ids
// equal acceptor indices in the simulator.
class PaxosProposerNode final : public SimNode {
 public:
  PaxosProposerNode(ProposerConfig config, Millis timespan)
      : config_(std::move(config)), timespan_(timespan), proposer_(Proposer(config_, restartCounter_)) {}

  Effects on_message(NodeId from, const Message& m, TimePoint now) override {
    return stored(proposer_->on_message(from, m, now));
  }
  Effects on_timer(TimerId timer, TimePoint now) override { return stored(proposer_->on_timer(timer, now)); }
  Effects on_command(CommandKind kind, TimePoint now) override {
    switch (kind) {
      case CommandKind::Acquire: return stored(proposer_->start_acquire(timespan_, now));
      case CommandKind::Extend: return stored(proposer_->start_extend(timespan_, now));
      case CommandKind::Release: return proposer_->release();
    }
    return {};
  }
  void crash() override { proposer_.reset(); }
  Effects restart(TimePoint now) override {
    ++restartCounter_;
    proposer_.emplace(config_, restartCounter_);
    if (config_.persistent) return stored(proposer_->start_acquire(timespan_, now));
    return {};
  }
  bool owner() const override { return proposer_ && proposer_->state().leaseOwner; }

  const Proposer& proposer() const { return *proposer_; }

 private:
  Effects stored(Effects effects) {
    for (const auto& e : effects)
      if (const auto* p = std::get_if<PersistEpoch>(&e)) restartCounter_ = std::max(restartCounter_, p->restartCounter);
    return effects;
  }

  ProposerConfig config_;
  Millis timespan_;
  std::uint64_t restartCounter_ = 1;
  std::optional<Proposer> proposer_;
};

}  // namespace paxoslease::sim
