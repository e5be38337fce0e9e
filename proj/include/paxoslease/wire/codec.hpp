#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "paxoslease/message.hpp"
#include "paxoslease/multilease.hpp"

// Datagram format, one message per frame, single spaces, no trailing space:
//
//   PL1 <resource> PRQ <b>
//   PL1 <resource> PRS <b> A <pid>:<Tms>
//   PL1 <resource> PRS <b> A -
//   PL1 <resource> PRS <b> R
//   PL1 <resource> POQ <b> <pid> <Tms>
//   PL1 <resource> POS <b> A
//   PL1 <resource> POS <b> R
//   PL1 <resource> REL <b>
//
// where <b> is `restart.run.pid` and numbers are unsigned decimal without
// sign or leading zeros.
namespace paxoslease::wire {

inline constexpr std::string_view kMagic = "PL1";
inline constexpr std::size_t kMaxFrame = 512;

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DecodeError : std::uint8_t {
  TooLong,
  BadSpacing,
  BadMagic,
  BadResource,
  BadType,
  BadBallot,
  BadAnswer,
  BadLease,
  ProposerMismatch,
  MissingField,
  ExtraField,
};

constexpr std::string_view reason(DecodeError e) {
  switch (e) {
    case DecodeError::TooLong: return "too-long";
    case DecodeError::BadSpacing: return "bad-spacing";
    case DecodeError::BadMagic: return "bad-magic";
    case DecodeError::BadResource: return "bad-resource";
    case DecodeError::BadType: return "bad-type";
    case DecodeError::BadBallot: return "bad-ballot";
    case DecodeError::BadAnswer: return "bad-answer";
    case DecodeError::BadLease: return "bad-lease";
    case DecodeError::ProposerMismatch: return "proposer-mismatch";
    case DecodeError::MissingField: return "missing-field";
    case DecodeError::ExtraField: return "extra-field";
  }
  return "?";
}

struct Frame {
  std::string resource;
  Message message;

  friend bool operator==(const Frame&, const Frame&) = default;
};

class DecodeResult {
 public:
  DecodeResult(Frame f) : value_(std::move(f)) {}
  DecodeResult(DecodeError e) : value_(e) {}

  bool ok() const { return std::holds_alternative<Frame>(value_); }
  explicit operator bool() const { return ok(); }
  const Frame& frame() const { return std::get<Frame>(value_); }
  DecodeError error() const { return std::get<DecodeError>(value_); }

 private:
  std::variant<Frame, DecodeError> value_;
};

namespace detail {

inline void append_lease(std::string& out, const Lease& l) {
  out += std::to_string(l.proposerId);
  out += ':';
  out += std::to_string(l.timespan.count());
}

// Unsigned decimal, "0" or no leading zero, no sign, within `max`.
inline bool parse_uint(std::string_view s, std::uint64_t max, std::uint64_t& out) {
  if (s.empty() || (s.size() > 1 && s[0] == '0')) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && out <= max;
}

inline bool parse_ballot(std::string_view s, BallotNumber& b) {
  const auto d1 = s.find('.');
  if (d1 == std::string_view::npos) return false;
  const auto d2 = s.find('.', d1 + 1);
  if (d2 == std::string_view::npos) return false;
  std::uint64_t pid = 0;
  return parse_uint(s.substr(0, d1), UINT64_MAX, b.restartCounter) &&
         parse_uint(s.substr(d1 + 1, d2 - d1 - 1), UINT64_MAX, b.runCounter) &&
         parse_uint(s.substr(d2 + 1), std::numeric_limits<ProposerId>::max(), pid) &&
         (b.proposerId = static_cast<ProposerId>(pid), true);
}

// Timespans must stay representable in microseconds.
inline constexpr std::uint64_t kMaxTimespanMs = static_cast<std::uint64_t>(INT64_MAX / 1000);

inline bool parse_lease(std::string_view pid, std::string_view ms, Lease& l) {
  std::uint64_t p = 0, t = 0;
  if (!parse_uint(pid, std::numeric_limits<ProposerId>::max(), p)) return false;
  if (!parse_uint(ms, kMaxTimespanMs, t) || t == 0) return false;
  l = Lease{static_cast<ProposerId>(p), Millis{static_cast<std::int64_t>(t)}};
  return true;
}

}  // namespace detail

// Message body without the `PL1 <resource>` prefix; also used in traces.
inline std::string encode_body(const Message& m) {
  std::string out(type_code(m.type));
  out += ' ';
  out += to_string(m.ballot);
  switch (m.type) {
    case MessageType::PrepareRequest:
    case MessageType::Release: break;
    case MessageType::PrepareResponse:
      if (m.answer == Answer::Reject) {
        out += " R";
      } else if (m.acceptedLease) {
        out += " A ";
        detail::append_lease(out, *m.acceptedLease);
      } else {
        out += " A -";
      }
      break;
    case MessageType::ProposeRequest:
      out += ' ';
      out += std::to_string(m.lease.proposerId);
      out += ' ';
      out += std::to_string(m.lease.timespan.count());
      break;
    case MessageType::ProposeResponse: out += m.answer == Answer::Accept ? " A" : " R"; break;
  }
  return out;
}

inline std::string encode(const Message& m, std::string_view resource) {
  if (!ResourceId::valid(resource)) throw EncodeError("resource id not encodable");
  if (m.type == MessageType::ProposeRequest &&
      (m.lease.proposerId != m.ballot.proposerId || m.lease.timespan <= Millis{0}))
    throw EncodeError("propose request lease does not match its ballot");
  if (m.type == MessageType::PrepareResponse && m.acceptedLease && m.acceptedLease->timespan <= Millis{0})
    throw EncodeError("accepted lease with non-positive timespan");
  std::string out(kMagic);
  out += ' ';
  out += resource;
  out += ' ';
  out += encode_body(m);
  if (out.size() > kMaxFrame) throw EncodeError("frame exceeds 512 bytes");
  return out;
}

inline DecodeResult decode(std::string_view frame) {
  if (frame.size() > kMaxFrame) return DecodeError::TooLong;

  std::vector<std::string_view> tok;
  std::size_t start = 0;
  while (true) {
    const auto sp = frame.find(' ', start);
    const auto piece = frame.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start);
    if (piece.empty()) return DecodeError::BadSpacing;
    tok.push_back(piece);
    if (sp == std::string_view::npos) break;
    start = sp + 1;
  }

  if (tok[0] != kMagic) return DecodeError::BadMagic;
  if (tok.size() < 2 || !ResourceId::valid(tok[1])) return DecodeError::BadResource;
  if (tok.size() < 3) return DecodeError::MissingField;
  const auto type = parse_type_code(tok[2]);
  if (!type) return DecodeError::BadType;
  if (tok.size() < 4) return DecodeError::MissingField;
  BallotNumber b;
  if (!detail::parse_ballot(tok[3], b)) return DecodeError::BadBallot;

  auto want = [&](std::size_t n) -> std::optional<DecodeError> {
    if (tok.size() < n) return DecodeError::MissingField;
    if (tok.size() > n) return DecodeError::ExtraField;
    return std::nullopt;
  };

  Frame out{std::string(tok[1]), {}};
  switch (*type) {
    case MessageType::PrepareRequest:
    case MessageType::Release:
      if (auto e = want(4)) return *e;
      out.message = *type == MessageType::Release ? Message::release(b) : Message::prepare_request(b);
      break;
    case MessageType::PrepareResponse: {
      if (tok.size() < 5) return DecodeError::MissingField;
      if (tok[4] == "R") {
        if (auto e = want(5)) return *e;
        out.message = Message::prepare_reject(b);
      } else if (tok[4] == "A") {
        if (auto e = want(6)) return *e;
        if (tok[5] == "-") {
          out.message = Message::prepare_accept(b, std::nullopt);
        } else {
          const auto colon = tok[5].find(':');
          Lease l;
          if (colon == std::string_view::npos ||
              !detail::parse_lease(tok[5].substr(0, colon), tok[5].substr(colon + 1), l))
            return DecodeError::BadLease;
          out.message = Message::prepare_accept(b, l);
        }
      } else {
        return DecodeError::BadAnswer;
      }
      break;
    }
    case MessageType::ProposeRequest: {
      if (auto e = want(6)) return *e;
      Lease l;
      if (!detail::parse_lease(tok[4], tok[5], l)) return DecodeError::BadLease;
      if (l.proposerId != b.proposerId) return DecodeError::ProposerMismatch;
      out.message = Message::propose_request(b, l);
      break;
    }
    case MessageType::ProposeResponse:
      if (auto e = want(5)) return *e;
      if (tok[4] == "A") {
        out.message = Message::propose_response(b, Answer::Accept);
      } else if (tok[4] == "R") {
        out.message = Message::propose_response(b, Answer::Reject);
      } else {
        return DecodeError::BadAnswer;
      }
      break;
  }
  return out;
}

}  // namespace paxoslease::wire
