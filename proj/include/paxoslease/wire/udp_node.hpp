#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "paxoslease/multilease.hpp"
#include "paxoslease/wire/codec.hpp"

// One cluster member speaking the ASCII frame format over IPv4 UDP. All
// protocol work happens on the thread calling run(); other threads talk to it
// through post() and the status callback.
namespace paxoslease::wire {

struct PeerAddress {
  NodeId id = 0;
  std::string host;
  std::uint16_t port = 0;
};

// "id=host:port"
inline std::optional<PeerAddress> parse_peer(std::string_view s) {
  const auto eq = s.find('=');
  const auto colon = s.rfind(':');
  if (eq == std::string_view::npos || colon == std::string_view::npos || colon < eq) return std::nullopt;
  std::uint64_t id = 0, port = 0;
  if (!detail::parse_uint(s.substr(0, eq), UINT32_MAX, id)) return std::nullopt;
  if (!detail::parse_uint(s.substr(colon + 1), 65535, port)) return std::nullopt;
  PeerAddress p{static_cast<NodeId>(id), std::string(s.substr(eq + 1, colon - eq - 1)), static_cast<std::uint16_t>(port)};
  if (p.host.empty()) return std::nullopt;
  return p;
}

struct UdpNodeConfig {
  ClusterConfig cluster;
  // Every node this one talks to, itself included (its entry gives the bind
  // address). Datagrams from addresses not listed here are dropped.
  std::vector<PeerAddress> peers;
  std::filesystem::path restartFile;
  std::optional<Duration> rejoinGate;  // defaults to maxLease
  std::ostream* audit = nullptr;
};

struct UdpNodeStats {
  std::uint64_t received = 0;
  std::uint64_t sent = 0;
  std::uint64_t decodeErrors = 0;
  std::uint64_t unknownSenders = 0;
  std::uint64_t socketErrors = 0;
};

class UdpNode {
 public:
  using StatusCallback = std::function<void(const std::string& resource, bool owner)>;

  explicit UdpNode(UdpNodeConfig config) : config_(std::move(config)) {
    record_ = load_and_bump_restart_counter(config_.restartFile);
    for (const auto& p : config_.peers) {
      const sockaddr_in addr = resolve(p);
      addresses_[p.id] = addr;
      ids_[key(addr)] = p.id;
    }
    auto self = addresses_.find(config_.cluster.self);
    if (self == addresses_.end()) throw std::invalid_argument("own node id missing from the peer list");
    for (NodeId a : config_.cluster.acceptors)
      if (!addresses_.count(a)) throw std::invalid_argument("acceptor " + std::to_string(a) + " has no address");

    fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&self->second), sizeof(sockaddr_in)) != 0) {
      const int err = errno;
      ::close(fd_);
      throw std::system_error(err, std::generic_category(), "bind " + describe(self->second));
    }
    if (::pipe2(wake_, O_NONBLOCK | O_CLOEXEC) != 0) {
      const int err = errno;
      ::close(fd_);
      throw std::system_error(err, std::generic_category(), "pipe");
    }
    if (config_.cluster.seed == 0) config_.cluster.seed = record_.restartCounter * 0x9E3779B97F4A7C15ULL + config_.cluster.self;
    table_.emplace(config_.cluster, record_, now(), config_.rejoinGate);
  }

  ~UdpNode() {
    ::close(fd_);
    ::close(wake_[0]);
    ::close(wake_[1]);
  }

  UdpNode(const UdpNode&) = delete;
  UdpNode& operator=(const UdpNode&) = delete;

  std::uint64_t restart_counter() const { return record_.restartCounter; }
  std::optional<TimePoint> rejoin_deadline() const { return table_->rejoin_deadline(); }

  void on_status(StatusCallback cb) { status_ = std::move(cb); }

  // Thread-safe. The event is handled on the loop thread.
  void post(std::string resource, TableEvent event) {
    {
      std::lock_guard lock(mutex_);
      queue_.emplace_back(std::move(resource), std::move(event));
    }
    wake();
  }

  void stop() {
    stopping_ = true;
    wake();
  }

  bool owner(const std::string& resource) const {
    std::lock_guard lock(mutex_);
    auto it = owners_.find(resource);
    return it != owners_.end() && it->second;
  }

  UdpNodeStats stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
  }

  static TimePoint now() {
    return TimePoint{std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now().time_since_epoch())};
  }

  void run() {
    int consecutiveErrors = 0;
    TimePoint nextGc = now() + Duration{config_.cluster.maxLease};
    while (!stopping_) {
      drain_commands();
      fire_timers();
      if (now() >= nextGc) {
        table_->gc_idle_instances(now());
        nextGc = now() + Duration{config_.cluster.maxLease};
      }

      int timeoutMs = 1000;
      if (!deadlines_.empty()) {
        const auto soonest = std::min_element(deadlines_.begin(), deadlines_.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
        const auto wait = std::chrono::ceil<std::chrono::milliseconds>(soonest->second - now()).count();
        timeoutMs = static_cast<int>(std::clamp<std::int64_t>(wait, 0, 1000));
      }
      pollfd fds[2] = {{fd_, POLLIN, 0}, {wake_[0], POLLIN, 0}};
      if (::poll(fds, 2, timeoutMs) < 0) {
        if (errno == EINTR) continue;
        backoff(consecutiveErrors);
        continue;
      }
      if (fds[1].revents & POLLIN) {
        char buf[64];
        while (::read(wake_[0], buf, sizeof buf) > 0) {
        }
      }
      if (fds[0].revents & POLLIN) {
        if (receive_all()) {
          consecutiveErrors = 0;
        } else {
          backoff(consecutiveErrors);
        }
      }
    }
  }

 private:
  using AddressKey = std::uint64_t;

  static AddressKey key(const sockaddr_in& a) {
    return (static_cast<std::uint64_t>(ntohl(a.sin_addr.s_addr)) << 16) | ntohs(a.sin_port);
  }

  static std::string describe(const sockaddr_in& a) {
    char host[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &a.sin_addr, host, sizeof host);
    return std::string(host) + ":" + std::to_string(ntohs(a.sin_port));
  }

  static sockaddr_in resolve(const PeerAddress& p) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(p.host.c_str(), std::to_string(p.port).c_str(), &hints, &res);
    if (rc != 0 || !res) throw std::runtime_error("cannot resolve " + p.host + ": " + ::gai_strerror(rc));
    sockaddr_in out{};
    std::memcpy(&out, res->ai_addr, sizeof out);
    ::freeaddrinfo(res);
    return out;
  }

  void wake() {
    const char c = 1;
    [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
  }

  // Socket trouble: sleep 10 ms doubling up to 1 s.
  void backoff(int& consecutive) {
    count(&UdpNodeStats::socketErrors);
    const auto delay = std::chrono::milliseconds(10) * (1 << std::min(consecutive, 7));
    std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, std::chrono::seconds(1)));
    ++consecutive;
  }

  void audit(std::string_view dir, NodeId peer, std::string_view frame) {
    if (!config_.audit) return;
    *config_.audit << to_us(now()) << ' ' << dir << ' ' << peer << ' ' << frame << '\n';
    config_.audit->flush();
  }

  void drain_commands() {
    std::vector<std::pair<std::string, TableEvent>> batch;
    {
      std::lock_guard lock(mutex_);
      batch.swap(queue_);
    }
    for (auto& [resource, event] : batch) apply(table_->dispatch(resource, event, now()));
  }

  void fire_timers() {
    for (;;) {
      const TimePoint t = now();
      auto due = std::find_if(deadlines_.begin(), deadlines_.end(), [&](const auto& d) { return d.second <= t; });
      if (due == deadlines_.end()) return;
      const auto [resource, timer] = due->first;
      deadlines_.erase(due);
      apply(table_->dispatch(resource, table_event::Timer{timer}, t));
    }
  }

  // Returns false on a socket error other than "nothing left to read".
  bool receive_all() {
    char buf[kMaxFrame + 1];
    for (;;) {
      sockaddr_in from{};
      socklen_t len = sizeof from;
      const ssize_t n = ::recvfrom(fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
        if (errno == EINTR || errno == ECONNREFUSED) continue;
        return false;
      }
      const std::string_view frame(buf, static_cast<std::size_t>(n));
      auto id = ids_.find(key(from));
      if (id == ids_.end()) {
        count(&UdpNodeStats::unknownSenders);
        continue;
      }
      count(&UdpNodeStats::received);
      audit("rx", id->second, frame);
      const DecodeResult r = decode(frame);
      if (!r.ok()) {
        count(&UdpNodeStats::decodeErrors);
        continue;
      }
      apply(table_->dispatch(r.frame().resource, table_event::Inbound{id->second, r.frame().message}, now()));
    }
  }

  void count(std::uint64_t UdpNodeStats::*field) {
    std::lock_guard lock(mutex_);
    ++(stats_.*field);
  }

  void send(NodeId to, const std::string& resource, const Message& m) {
    const std::string frame = encode(m, resource);
    const sockaddr_in& addr = addresses_.at(to);
    audit("tx", to, frame);
    const ssize_t n = ::sendto(fd_, frame.data(), frame.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    count(n < 0 ? &UdpNodeStats::socketErrors : &UdpNodeStats::sent);
  }

  void apply(const std::vector<TaggedEffect>& effects) {
    for (const auto& [resource, effect] : effects) {
      if (const auto* b = std::get_if<Broadcast>(&effect)) {
        for (NodeId a : config_.cluster.acceptors) send(a, resource, b->message);
      } else if (const auto* s = std::get_if<SendTo>(&effect)) {
        if (addresses_.count(s->to)) send(s->to, resource, s->message);
      } else if (const auto* t = std::get_if<SetTimer>(&effect)) {
        deadlines_[{resource, t->timer}] = now() + t->delay;
      } else if (const auto* c = std::get_if<CancelTimer>(&effect)) {
        deadlines_.erase({resource, c->timer});
      } else if (const auto* st = std::get_if<StatusChange>(&effect)) {
        {
          std::lock_guard lock(mutex_);
          owners_[resource] = st->leaseOwner;
        }
        if (status_) status_(resource, st->leaseOwner);
      } else if (const auto* pe = std::get_if<PersistEpoch>(&effect)) {
        if (pe->restartCounter > record_.restartCounter) {
          paxoslease::detail::write_durably(config_.restartFile, std::to_string(pe->restartCounter) + "\n");
          record_.restartCounter = pe->restartCounter;
        }
      }
    }
  }

  UdpNodeConfig config_;
  RestartRecord record_;
  std::optional<LeaseTable> table_;
  std::map<NodeId, sockaddr_in> addresses_;
  std::map<AddressKey, NodeId> ids_;
  std::map<std::pair<std::string, TimerId>, TimePoint> deadlines_;
  int fd_ = -1;
  int wake_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  StatusCallback status_;
  mutable std::mutex mutex_;
  std::vector<std::pair<std::string, TableEvent>> queue_;
  std::map<std::string, bool> owners_;
  UdpNodeStats stats_;
};

}  // namespace paxoslease::wire
