#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "paxoslease/acceptor.hpp"
#include "paxoslease/effect.hpp"
#include "paxoslease/proposer.hpp"
#include "paxoslease/state_codec.hpp"

namespace paxoslease {

// Opaque resource key: 1..128 bytes, no whitespace or control characters.
class ResourceId {
 public:
  static constexpr std::size_t kMaxLength = 128;

  static bool valid(std::string_view s) {
    if (s.empty() || s.size() > kMaxLength) return false;
    return std::none_of(s.begin(), s.end(), [](char c) {
      const auto u = static_cast<unsigned char>(c);
      return u <= 0x20 || u == 0x7F;
    });
  }

  static std::optional<ResourceId> parse(std::string_view s) {
    if (!valid(s)) return std::nullopt;
    return ResourceId(std::string(s));
  }

  explicit ResourceId(std::string s) : value_(std::move(s)) {
    if (!valid(value_)) throw std::invalid_argument("invalid resource id");
  }

  const std::string& str() const { return value_; }

  friend auto operator<=>(const ResourceId&, const ResourceId&) = default;

 private:
  std::string value_;
};

class RestartRecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RestartRecord {
  std::uint64_t restartCounter = 0;
};

namespace detail {

inline void write_durably(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw RestartRecordError("cannot write " + tmp.string());
  const bool ok = ::write(fd, contents.data(), contents.size()) == static_cast<ssize_t>(contents.size()) &&
                  ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw RestartRecordError("short write to " + tmp.string());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RestartRecordError("cannot rename " + tmp.string() + ": " + ec.message());
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace detail

// Reads the previous restart counter (0 when the file is absent), bumps it and
// durably writes the new value before returning. The record is one ASCII
// decimal integer followed by a newline; anything else is fatal because
// ballot monotonicity could no longer be guaranteed.
inline RestartRecord load_and_bump_restart_counter(const std::filesystem::path& path) {
  std::uint64_t previous = 0;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RestartRecordError("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.size() < 2 || text.back() != '\n') throw RestartRecordError("corrupt restart record " + path.string());
    text.pop_back();
    if (text.size() > 20 || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        (text.size() > 1 && text[0] == '0'))
      throw RestartRecordError("corrupt restart record " + path.string());
    try {
      previous = std::stoull(text);
    } catch (const std::exception&) {
      throw RestartRecordError("corrupt restart record " + path.string());
    }
  }
  if (previous == UINT64_MAX) throw RestartRecordError("restart counter exhausted");
  RestartRecord record{previous + 1};
  detail::write_durably(path, std::to_string(record.restartCounter) + "\n");
  return record;
}

// Per-node cluster view shared by every instance in a table.
struct ClusterConfig {
  NodeId self = 0;
  ProposerId proposerId = 0;
  bool proposer = true;
  bool acceptor = true;
  // Node ids of the fixed acceptor set; a response's sender is mapped to its
  // position here.
  std::vector<NodeId> acceptors;
  Millis maxLease{1000};
  RetryMode retry = RetryMode::Backoff;
  bool persistent = false;
  std::optional<Duration> extendEvery;
  std::optional<Duration> prepareTimeout;
  AcceptorOptions acceptorOptions;
  std::uint64_t seed = 0;
};

namespace table_event {
struct Inbound {
  NodeId from = 0;
  Message message;
};
struct Timer {
  TimerId timer = TimerId::LeaseTimeout;
};
struct Acquire {
  Millis timespan{0};
};
struct Extend {
  Millis timespan{0};
};
struct Release {};
}  // namespace table_event

using TableEvent = std::variant<table_event::Inbound, table_event::Timer, table_event::Acquire, table_event::Extend,
                                table_event::Release>;

struct TaggedEffect {
  std::string resource;
  Effect effect;

  friend bool operator==(const TaggedEffect&, const TaggedEffect&) = default;
};

// Independent lease instances keyed by resource id. Instances are created on
// first use; a blank instance is indistinguishable from an absent one.
class LeaseTable {
 public:
  struct Instance {
    Instance(const ClusterConfig& c, std::uint64_t restartCounter, std::uint64_t runFloor, std::uint64_t seed)
        : proposer(make_proposer_config(c, seed), restartCounter, runFloor), acceptor(c.acceptorOptions) {}

    Proposer proposer;
    Acceptor acceptor;
    TimePoint lastActivity{};
  };

  // `started` arms the process-wide rejoin gate for the acceptor role: every
  // instance lost its state together, so one deadline guards them all.
  LeaseTable(ClusterConfig config, RestartRecord record, TimePoint started, std::optional<Duration> rejoinGate = {})
      : config_(std::move(config)), restartCounter_(record.restartCounter), floor_{record.restartCounter, 0} {
    if (config_.acceptors.empty() || config_.acceptors.size() > kMaxAcceptors)
      throw std::invalid_argument("acceptor list must hold 1..64 entries");
    const Duration gate = rejoinGate.value_or(Duration{config_.maxLease});
    if (config_.acceptor && gate > Duration{0}) rejoinDeadline_ = started + gate;
  }

  const ClusterConfig& config() const { return config_; }
  std::size_t size() const { return instances_.size(); }
  std::uint64_t dropped() const { return dropped_; }
  std::optional<TimePoint> rejoin_deadline() const { return rejoinDeadline_; }

  const Instance* find(std::string_view resource) const {
    auto it = instances_.find(resource);
    return it == instances_.end() ? nullptr : &it->second;
  }

  std::vector<TaggedEffect> dispatch(std::string_view resource, const TableEvent& event, TimePoint now) {
    if (!ResourceId::valid(resource)) {
      ++dropped_;
      return {};
    }
    if (const auto* in = std::get_if<table_event::Inbound>(&event)) {
      // Route before creating anything so that stray traffic cannot grow the table.
      if (in->message.is_request() ? !config_.acceptor : !config_.proposer) {
        ++dropped_;
        return {};
      }
      if (in->message.is_request() && rejoinDeadline_ && now < *rejoinDeadline_) return {};
    }

    Instance& inst = instance(resource);
    inst.lastActivity = now;
    Effects effects = std::visit([&](const auto& e) { return handle(inst, e, now); }, event);

    std::vector<TaggedEffect> out;
    out.reserve(effects.size());
    for (auto& e : effects) out.push_back({std::string(resource), std::move(e)});
    return out;
  }

  // Removes instances that are blank on both sides (no accepted proposal,
  // proposer idle) and untouched for longer than M. A dropped promise is
  // covered by the same argument as an acceptor restart followed by the M
  // wait. The ballot floor keeps ballots monotonic when an instance
  // for the same resource is recreated.
  std::size_t gc_idle_instances(TimePoint now) {
    std::size_t removed = 0;
    for (auto it = instances_.begin(); it != instances_.end();) {
      const Instance& inst = it->second;
      const bool blank = !inst.acceptor.state().acceptedProposal && inst.proposer.state().idle() &&
                         !inst.proposer.state().retryAt && !inst.proposer.state().extendAt;
      if (blank && now - inst.lastActivity > Duration{config_.maxLease}) {
        const auto& g = inst.proposer.state().ballots;
        floor_ = std::max(floor_, std::pair{g.restart_counter(), g.run_counter()});
        it = instances_.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
    return removed;
  }

  // Serialized per-instance protocol state including the resource key.
  std::size_t footprint(std::string_view resource) const {
    const Instance* inst = find(resource);
    if (!inst) return 0;
    StateWriter w;
    w.bytes(resource);
    write_state(w, inst->proposer.state());
    write_state(w, inst->acceptor.state());
    return w.str().size();
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [key, inst] : instances_) f(key, inst);
  }

 private:
  static ProposerConfig make_proposer_config(const ClusterConfig& c, std::uint64_t seed) {
    ProposerConfig p;
    p.id = c.proposerId;
    p.acceptorCount = c.acceptors.size();
    p.maxLease = c.maxLease;
    p.retry = c.retry;
    p.persistent = c.persistent;
    p.extendEvery = c.extendEvery;
    p.prepareTimeout = c.prepareTimeout;
    p.seed = seed;
    return p;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  Instance& instance(std::string_view resource) {
    auto it = instances_.find(resource);
    if (it != instances_.end()) return it->second;
    const std::uint64_t seed = config_.seed ^ fnv1a(resource) ^ (restartCounter_ << 32);
    return instances_.try_emplace(std::string(resource), config_, floor_.first, floor_.second, seed).first->second;
  }

  std::optional<std::size_t> acceptor_index(NodeId from) const {
    auto it = std::find(config_.acceptors.begin(), config_.acceptors.end(), from);
    if (it == config_.acceptors.end()) return std::nullopt;
    return static_cast<std::size_t>(it - config_.acceptors.begin());
  }

  Effects handle(Instance& inst, const table_event::Inbound& in, TimePoint now) {
    if (in.message.is_request()) return inst.acceptor.on_message(in.from, in.message, now);
    auto idx = acceptor_index(in.from);
    if (!idx) {
      ++dropped_;
      return {};
    }
    return inst.proposer.on_message(*idx, in.message, now);
  }

  Effects handle(Instance& inst, const table_event::Timer& t, TimePoint now) {
    if (t.timer == TimerId::AcceptorExpiry) return inst.acceptor.on_expiry(now);
    return inst.proposer.on_timer(t.timer, now);
  }

  Effects handle(Instance& inst, const table_event::Acquire& a, TimePoint now) {
    if (!config_.proposer) return {};
    return inst.proposer.start_acquire(a.timespan, now);
  }

  Effects handle(Instance& inst, const table_event::Extend& e, TimePoint now) {
    if (!config_.proposer) return {};
    return inst.proposer.start_extend(e.timespan, now);
  }

  Effects handle(Instance& inst, const table_event::Release&, TimePoint) { return inst.proposer.release(); }

  ClusterConfig config_;
  std::uint64_t restartCounter_ = 0;
  // (epoch, run) of the highest ballot issued by a collected instance.
  std::pair<std::uint64_t, std::uint64_t> floor_;
  std::optional<TimePoint> rejoinDeadline_;
  std::uint64_t dropped_ = 0;
  std::map<std::string, Instance, std::less<>> instances_;
};

}  // namespace paxoslease
