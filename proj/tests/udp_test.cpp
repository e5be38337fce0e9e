#include <gtest/gtest.h>

#include <condition_variable>
#include <random>
#include <sstream>
#include <thread>

#include "paxoslease/wire/udp_node.hpp"

using namespace paxoslease;
using namespace paxoslease::wire;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

std::uint16_t base_port() {
  // Spread concurrent test binaries apart.
  return static_cast<std::uint16_t>(20000 + (::getpid() % 2000) * 10);
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("pl-udp-" + std::to_string(::getpid()) + "-" + std::to_string(next()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int next() {
    static int n = 0;
    return n++;
  }
};

// Thread-safe line sink for the audit stream.
class AuditLog : public std::stringbuf {
 public:
  std::vector<std::string> lines() {
    std::lock_guard lock(m_);
    std::vector<std::string> out;
    std::istringstream in(str());
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

 protected:
  int sync() override { return 0; }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    std::lock_guard lock(m_);
    return std::stringbuf::xsputn(s, n);
  }
  int_type overflow(int_type c) override {
    std::lock_guard lock(m_);
    return std::stringbuf::overflow(c);
  }

 private:
  std::recursive_mutex m_;
};

struct Running {
  std::unique_ptr<UdpNode> node;
  std::thread loop;

  ~Running() { stop(); }
  void stop() {
    if (!node) return;
    node->stop();
    loop.join();
    node.reset();
  }
};

class Cluster {
 public:
  explicit Cluster(std::size_t acceptors, std::size_t clients, Millis maxLease, std::optional<Duration> gate)
      : maxLease_(maxLease), gate_(gate) {
    for (std::size_t i = 1; i <= acceptors + clients; ++i) {
      peers_.push_back({static_cast<NodeId>(i), "127.0.0.1", static_cast<std::uint16_t>(base_port() + i)});
      if (i <= acceptors) acceptorIds_.push_back(static_cast<NodeId>(i));
    }
    for (NodeId a : acceptorIds_) start(a);
  }

  UdpNodeConfig config(NodeId id) const {
    UdpNodeConfig c;
    const bool acceptor = id <= acceptorIds_.size();
    c.cluster.self = id;
    c.cluster.proposerId = id;
    c.cluster.acceptor = acceptor;
    c.cluster.proposer = !acceptor;
    c.cluster.acceptors = acceptorIds_;
    c.cluster.maxLease = maxLease_;
    c.cluster.retry = RetryMode::Backoff;
    c.peers = peers_;
    c.restartFile = dir_.path / ("node" + std::to_string(id));
    c.rejoinGate = gate_;
    return c;
  }

  UdpNode& start(NodeId id, std::ostream* audit = nullptr, UdpNode::StatusCallback cb = {},
                 std::function<void(UdpNodeConfig&)> tweak = {}) {
    auto c = config(id);
    c.audit = audit;
    if (tweak) tweak(c);
    auto& r = nodes_[id];
    r.stop();
    r.node = std::make_unique<UdpNode>(c);
    if (cb) r.node->on_status(std::move(cb));
    r.loop = std::thread([n = r.node.get()] { n->run(); });
    return *r.node;
  }

  void stop(NodeId id) { nodes_[id].stop(); }
  UdpNode& node(NodeId id) { return *nodes_[id].node; }
  const std::vector<PeerAddress>& peers() const { return peers_; }

 private:
  TempDir dir_;
  Millis maxLease_;
  std::optional<Duration> gate_;
  std::vector<PeerAddress> peers_;
  std::vector<NodeId> acceptorIds_;
  std::map<NodeId, Running> nodes_;
};

struct StatusWaiter {
  std::mutex m;
  std::condition_variable cv;
  std::vector<std::pair<TimePoint, bool>> events;

  UdpNode::StatusCallback callback() {
    return [this](const std::string&, bool owner) {
      std::lock_guard lock(m);
      events.emplace_back(UdpNode::now(), owner);
      cv.notify_all();
    };
  }

  std::optional<TimePoint> wait_owner(std::chrono::milliseconds limit) {
    std::unique_lock lock(m);
    std::optional<TimePoint> at;
    cv.wait_for(lock, limit, [&] {
      for (const auto& [t, o] : events)
        if (o) at = t;
      return at.has_value();
    });
    return at;
  }
};

// A bare socket bound to a peer address, for speaking raw frames to a node.
struct RawPeer {
  int fd;
  explicit RawPeer(const PeerAddress& self) {
    fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(self.port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    EXPECT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a), 0);
    timeval tv{0, 20000};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  }
  ~RawPeer() { ::close(fd); }

  void send(const PeerAddress& to, const std::string& frame) const {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(to.port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::sendto(fd, frame.data(), frame.size(), 0, reinterpret_cast<sockaddr*>(&a), sizeof a);
  }

  std::optional<std::string> receive() const {
    char buf[600];
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) return std::nullopt;
    return std::string(buf, static_cast<std::size_t>(n));
  }
};

}  // namespace

TEST(PeerParse, Forms) {
  const auto p = parse_peer("7=127.0.0.1:9000");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->id, 7u);
  EXPECT_EQ(p->host, "127.0.0.1");
  EXPECT_EQ(p->port, 9000);
  EXPECT_FALSE(parse_peer("7=127.0.0.1"));
  EXPECT_FALSE(parse_peer("x=127.0.0.1:1"));
  EXPECT_FALSE(parse_peer("7=:1"));
  EXPECT_FALSE(parse_peer("7=h:70000"));
}

TEST(UdpCluster, AcquiresInTwoRoundTrips) {
  Cluster cluster(3, 1, 2000ms, Duration{0});
  AuditLog buf;
  std::ostream audit(&buf);
  StatusWaiter waiter;
  UdpNode& client = cluster.start(4, &audit, waiter.callback());
  const TimePoint posted = UdpNode::now();
  client.post("db", table_event::Acquire{1000ms});
  const auto owned = waiter.wait_owner(5s);
  ASSERT_TRUE(owned);
  // Loopback round trips are tens of microseconds; the bound is scheduling noise.
  EXPECT_LT(*owned - posted, Duration{250ms});

  // Exactly two broadcast rounds left the client before it owned the lease.
  std::vector<std::string> sent;
  for (const auto& l : buf.lines()) {
    std::istringstream in(l);
    std::int64_t at;
    std::string dir, peer, magic, res, type;
    in >> at >> dir >> peer >> magic >> res >> type;
    if (dir == "tx" && at <= to_us(*owned)) sent.push_back(type);
  }
  EXPECT_EQ(sent, (std::vector<std::string>{"PRQ", "PRQ", "PRQ", "POQ", "POQ", "POQ"}));
  EXPECT_EQ(client.stats().decodeErrors, 0u);
}

TEST(UdpCluster, RestartedAcceptorSilentForMaxLease) {
  Cluster cluster(1, 1, 600ms, std::nullopt);
  cluster.stop(1);
  RawPeer raw(cluster.peers()[1]);
  const TimePoint started = UdpNode::now();
  UdpNode& acceptor = cluster.start(1);
  EXPECT_GE(acceptor.restart_counter(), 2u);
  std::optional<TimePoint> firstReply;
  std::uint64_t ballot = 1;
  while (UdpNode::now() - started < Duration{2s} && !firstReply) {
    raw.send(cluster.peers()[0], "PL1 r PRQ 5." + std::to_string(ballot++) + ".2");
    if (auto f = raw.receive()) {
      EXPECT_EQ(f->rfind("PL1 r PRS 5.", 0), 0u) << *f;
      firstReply = UdpNode::now();
    }
  }
  ASSERT_TRUE(firstReply);
  EXPECT_GE(*firstReply - started, Duration{600ms});
  EXPECT_LT(*firstReply - started, Duration{1200ms});
}

TEST(UdpCluster, GarbageFramesCountedNotFatal) {
  Cluster cluster(1, 1, 600ms, Duration{0});
  RawPeer raw(cluster.peers()[1]);
  raw.send(cluster.peers()[0], "PL1 r PRQ 01.1.1");
  raw.send(cluster.peers()[0], std::string("\xff\x00garbage", 9));
  raw.send(cluster.peers()[0], "PL1 r PRQ 1.1.2");
  auto reply = raw.receive();
  for (int i = 0; i < 50 && !reply; ++i) reply = raw.receive();
  ASSERT_TRUE(reply);
  EXPECT_EQ(*reply, "PL1 r PRS 1.1.2 A -");
  EXPECT_EQ(cluster.node(1).stats().decodeErrors, 2u);
}

// Two extending clients on one resource while acceptors are killed and
// restarted (each waiting out M). Ownership intervals, taken from status
// callbacks on the shared monotonic clock, must never overlap by more than
// the observation tolerance.
TEST(UdpCluster, SoakWithAcceptorRestarts) {
  constexpr Millis kMaxLease{400};
  constexpr Millis kTimespan{200};
  constexpr auto kDuration = 20s;
  constexpr Duration kTolerance{10ms};
  Cluster cluster(5, 2, kMaxLease, std::nullopt);
  std::this_thread::sleep_for(kMaxLease + 50ms);  // initial rejoin gates

  std::mutex m;
  std::map<NodeId, std::vector<std::pair<TimePoint, bool>>> events;
  for (NodeId c : {6u, 7u}) {
    cluster.start(c, nullptr, [&, c](const std::string&, bool owner) {
      std::lock_guard lock(m);
      events[c].emplace_back(UdpNode::now(), owner);
    }, [&](UdpNodeConfig& cfg) {
      cfg.cluster.persistent = true;
      cfg.cluster.extendEvery = Duration{kTimespan / 2};
    });
  }

  std::mt19937_64 rng(11);
  const TimePoint end = UdpNode::now() + Duration{kDuration};
  int restarts = 0;
  std::uniform_int_distribution<int> pick(6, 7);
  while (UdpNode::now() < end) {
    const NodeId client = static_cast<NodeId>(pick(rng));
    cluster.node(client).post("soak", table_event::Acquire{kTimespan});
    std::this_thread::sleep_for(std::chrono::milliseconds(100 + rng() % 400));
    if (rng() % 3 == 0) {
      const NodeId victim = static_cast<NodeId>(1 + rng() % 5);
      cluster.stop(victim);
      std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 100));
      cluster.start(victim);
      ++restarts;
    }
    if (rng() % 5 == 0) cluster.node(client).post("soak", table_event::Release{});
  }
  cluster.stop(6);
  cluster.stop(7);

  std::vector<std::tuple<TimePoint, TimePoint, NodeId>> intervals;
  for (auto& [c, list] : events) {
    std::optional<TimePoint> open;
    for (const auto& [t, owner] : list) {
      if (owner && !open) open = t;
      if (!owner && open) {
        intervals.emplace_back(*open, t, c);
        open.reset();
      }
    }
    if (open) intervals.emplace_back(*open, UdpNode::now(), c);
  }
  std::sort(intervals.begin(), intervals.end());
  ASSERT_GT(intervals.size(), 5u);
  EXPECT_GT(restarts, 5);
  Duration worst{0};
  for (const auto& [s1, e1, c1] : intervals)
    for (const auto& [s2, e2, c2] : intervals)
      if (c1 != c2) worst = std::max(worst, std::min(e1, e2) - std::max(s1, s2));
  RecordProperty("ownership_intervals", static_cast<int>(intervals.size()));
  RecordProperty("worst_overlap_us", static_cast<int>(worst.count()));
  EXPECT_LE(worst, kTolerance);
}
