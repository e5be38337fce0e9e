#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "paxoslease/ballot.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease {

// Who wants the lease and for how long. Valid leases satisfy 0 < timespan < M.
struct Lease {
  ProposerId proposerId = 0;
  Millis timespan{0};

  friend bool operator==(const Lease&, const Lease&) = default;
};

inline bool valid_timespan(Millis t, Millis maxLease) { return t > Millis{0} && t < maxLease; }

struct Proposal {
  BallotNumber ballot;
  Lease lease;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

enum class MessageType : std::uint8_t {
  PrepareRequest,
  PrepareResponse,
  ProposeRequest,
  ProposeResponse,
  Release,
};

enum class Answer : std::uint8_t { Accept, Reject };

constexpr std::string_view type_code(MessageType t) {
  switch (t) {
    case MessageType::PrepareRequest: return "PRQ";
    case MessageType::PrepareResponse: return "PRS";
    case MessageType::ProposeRequest: return "POQ";
    case MessageType::ProposeResponse: return "POS";
    case MessageType::Release: return "REL";
  }
  return "?";
}

constexpr std::optional<MessageType> parse_type_code(std::string_view s) {
  if (s == "PRQ") return MessageType::PrepareRequest;
  if (s == "PRS") return MessageType::PrepareResponse;
  if (s == "POQ") return MessageType::ProposeRequest;
  if (s == "POS") return MessageType::ProposeResponse;
  if (s == "REL") return MessageType::Release;
  return std::nullopt;
}

// One protocol message. Every variant carries a ballot. `answer` is meaningful
// for responses only, `acceptedLease` for accepting prepare responses only,
// and `lease` for propose requests only; constructors keep the unused fields
// at their defaults so that equality is structural.
//
// A prepare response reports the lease part of the acceptor's accepted
// proposal. That is all a proposer consumes (empty, or its own live lease when
// extending), and it is all the wire format carries.
struct Message {
  MessageType type = MessageType::PrepareRequest;
  BallotNumber ballot;
  Answer answer = Answer::Accept;
  std::optional<Lease> acceptedLease;
  Lease lease;

  static Message prepare_request(BallotNumber b) { return {MessageType::PrepareRequest, b, Answer::Accept, {}, {}}; }
  static Message prepare_accept(BallotNumber b, std::optional<Lease> accepted) {
    return {MessageType::PrepareResponse, b, Answer::Accept, accepted, {}};
  }
  static Message prepare_reject(BallotNumber b) { return {MessageType::PrepareResponse, b, Answer::Reject, {}, {}}; }
  static Message propose_request(BallotNumber b, Lease l) { return {MessageType::ProposeRequest, b, Answer::Accept, {}, l}; }
  static Message propose_response(BallotNumber b, Answer a) { return {MessageType::ProposeResponse, b, a, {}, {}}; }
  static Message release(BallotNumber b) { return {MessageType::Release, b, Answer::Accept, {}, {}}; }

  bool is_request() const {
    return type == MessageType::PrepareRequest || type == MessageType::ProposeRequest || type == MessageType::Release;
  }

  friend bool operator==(const Message&, const Message&) = default;
};

}  // namespace paxoslease
