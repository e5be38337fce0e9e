#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "paxoslease/paxoslease.hpp"

using namespace paxoslease;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kRuntime = 2, kUnsafe = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes next to the target and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& contents) {
  if (path == "-") {
    std::cout << contents;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::int64_t ms_of(TimePoint t) { return std::chrono::duration_cast<Millis>(t.time_since_epoch()).count(); }

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots)), b = std::stoull(s.substr(dots + 2));
    if (b < a) throw UsageError("empty seed range: " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("bad seed range: " + s);
  }
}

// ---------------------------------------------------------------- network

struct NetOptions {
  std::uint32_t id = 0;
  std::vector<std::string> peers;
  std::string acceptors;
  std::int64_t maxLeaseMs = 5000;
  std::string store;
  std::string audit;
  std::int64_t rejoinGateMs = -1;
};

void add_net_options(CLI::App* cmd, NetOptions& o) {
  cmd->add_option("--id", o.id, "this node's id")->required();
  cmd->add_option("--peer", o.peers, "id=host:port, repeated for every cluster member including this one")->required();
  cmd->add_option("--acceptors", o.acceptors, "comma-separated acceptor node ids")->required();
  cmd->add_option("--max-lease", o.maxLeaseMs, "M in milliseconds")->check(CLI::PositiveNumber);
  cmd->add_option("--store", o.store, "directory holding the restart counter")->required();
  cmd->add_option("--audit", o.audit, "append frame audit lines here ('-' for stderr)");
}

std::vector<NodeId> parse_id_list(const std::string& s) {
  std::vector<NodeId> out;
  std::istringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(item, &used);
      if (used != item.size() || v > UINT32_MAX) throw std::invalid_argument(item);
      out.push_back(static_cast<NodeId>(v));
    } catch (const std::logic_error&) {
      throw UsageError("bad node id in acceptor list: " + item);
    }
  }
  if (out.empty()) throw UsageError("acceptor list is empty");
  return out;
}

struct AuditSink {
  std::ofstream file;
  std::ostream* stream = nullptr;

  explicit AuditSink(const std::string& path) {
    if (path.empty()) return;
    if (path == "-") {
      stream = &std::cerr;
      return;
    }
    file.open(path, std::ios::app);
    if (!file) throw std::runtime_error("cannot open audit log " + path);
    stream = &file;
  }
};

wire::UdpNodeConfig node_config(const NetOptions& o, bool proposer, bool acceptor) {
  if (o.id == 0) throw UsageError("--id must be positive");
  wire::UdpNodeConfig c;
  c.cluster.self = o.id;
  c.cluster.proposerId = o.id;
  c.cluster.proposer = proposer;
  c.cluster.acceptor = acceptor;
  c.cluster.acceptors = parse_id_list(o.acceptors);
  if (c.cluster.acceptors.size() % 2 == 0)
    std::cerr << "warning: an even number of acceptors tolerates no more failures than one fewer\n";
  c.cluster.maxLease = Millis{o.maxLeaseMs};
  c.cluster.retry = RetryMode::Backoff;
  for (const auto& p : o.peers) {
    auto peer = wire::parse_peer(p);
    if (!peer) throw UsageError("bad --peer (want id=host:port): " + p);
    c.peers.push_back(*peer);
  }
  if (o.store.empty()) throw UsageError("--store is required");
  fs::create_directories(o.store);
  c.restartFile = fs::path(o.store) / "restart";
  if (o.rejoinGateMs >= 0) c.rejoinGate = Duration{std::chrono::milliseconds(o.rejoinGateMs)};
  return c;
}

std::atomic<wire::UdpNode*> g_node{nullptr};
std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) {
  g_interrupted = true;
  if (auto* n = g_node.load()) n->stop();
}

void install_signals() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

int cmd_node(const NetOptions& o) {
  AuditSink audit(o.audit);
  auto config = node_config(o, false, true);
  config.audit = audit.stream;
  wire::UdpNode node(config);
  g_node = &node;
  install_signals();
  std::cout << "node " << o.id << " serving, restart " << node.restart_counter() << ", silent until "
            << to_us(*node.rejoin_deadline()) << std::endl;
  node.run();
  g_node = nullptr;
  const auto st = node.stats();
  std::cout << "node " << o.id << " stopped: rx " << st.received << " tx " << st.sent << " decode-errors "
            << st.decodeErrors << " unknown-senders " << st.unknownSenders << " socket-errors " << st.socketErrors
            << std::endl;
  return kOk;
}

enum class ClientMode { Acquire, Extend, Release };

struct ClientOptions {
  std::string resource = "lease";
  std::int64_t timespanMs = 2000;
  std::int64_t timeoutMs = 10000;
  std::int64_t holdMs = 0;
  std::string retry = "backoff";
};

// Ownership lines carry the shared monotonic clock so logs of several clients
// on one host can be compared directly.
int cmd_client(ClientMode mode, const NetOptions& net, const ClientOptions& o) {
  if (!valid_timespan(Millis{o.timespanMs}, Millis{net.maxLeaseMs}))
    throw UsageError("lease timespan must satisfy 0 < T < M");
  if (!ResourceId::valid(o.resource)) throw UsageError("invalid resource id: " + o.resource);
  AuditSink audit(net.audit);
  auto config = node_config(net, true, false);
  config.cluster.retry = o.retry == "none" ? RetryMode::None
                         : o.retry == "immediate" ? RetryMode::Immediate
                                                  : RetryMode::Backoff;
  config.audit = audit.stream;
  if (mode == ClientMode::Extend) config.cluster.extendEvery = Duration{std::chrono::milliseconds(o.timespanMs / 2)};
  wire::UdpNode node(config);

  std::mutex m;
  std::condition_variable cv;
  bool owner = false, lost = false;
  node.on_status([&](const std::string& r, bool own) {
    const auto at = to_us(wire::UdpNode::now());
    std::lock_guard lock(m);
    std::cout << at << (own ? " owner " : " not-owner ") << r << std::endl;
    if (own) owner = true;
    else lost = true;
    cv.notify_all();
  });
  g_node = &node;
  install_signals();
  std::thread loop([&] { node.run(); });
  auto finish = [&](int code) {
    node.stop();
    loop.join();
    g_node = nullptr;
    return code;
  };

  // Waits in short slices so a signal is noticed promptly; false on timeout.
  auto wait = [&](auto pred, std::optional<std::chrono::milliseconds> limit) {
    const auto until = std::chrono::steady_clock::now() + limit.value_or(std::chrono::hours(24 * 365));
    std::unique_lock lock(m);
    while (!pred() && !g_interrupted) {
      if (std::chrono::steady_clock::now() >= until) return false;
      cv.wait_for(lock, std::chrono::milliseconds(100));
    }
    return true;
  };

  node.post(o.resource, table_event::Acquire{Millis{o.timespanMs}});
  if (!wait([&] { return owner; }, std::chrono::milliseconds(o.timeoutMs)) || !owner) {
    std::cerr << "no lease on " << o.resource << " within " << o.timeoutMs << " ms\n";
    return finish(kRuntime);
  }
  const auto acquiredUs = to_us(wire::UdpNode::now());
  std::cout << "acquired " << o.resource << ", expires by " << acquiredUs + o.timespanMs * 1000 << std::endl;

  if (mode != ClientMode::Release) {
    auto done = [&] { return mode == ClientMode::Acquire && lost; };
    if (o.holdMs > 0) wait(done, std::chrono::milliseconds(o.holdMs));
    else if (mode == ClientMode::Extend) wait(done, std::nullopt);
    else wait(done, std::chrono::milliseconds(o.timespanMs));
  }
  node.post(o.resource, table_event::Release{});
  // Let the release datagrams leave before the loop stops.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  return finish(kOk);
}

// ---------------------------------------------------------------- simulation

json stats_json(const sim::RunStats& s) {
  json j;
  j["events"] = s.events;
  j["sent"] = s.sent;
  j["delivered"] = s.delivered;
  j["dropped"] = s.dropped;
  j["duplicated"] = s.duplicated;
  j["broadcasts"] = s.broadcasts;
  j["crashes"] = s.crashes;
  j["acquisitions"] = s.acquisitions;
  j["first_acquisition_ms"] = s.firstAcquisition ? json(ms_of(*s.firstAcquisition)) : json(nullptr);
  j["broadcasts_before_first_acquisition"] = s.broadcastsBeforeFirstAcquisition;
  j["rounds_before_first_acquisition"] = s.roundsBeforeFirstAcquisition;
  j["ballot_regressions"] = s.ballotRegressions;
  return j;
}

json violations_json(const sim::SafetyVerdict& v) {
  json arr = json::array();
  for (const auto& x : v.violations) arr.push_back({{"start_us", to_us(x.start)}, {"end_us", to_us(x.end)}, {"owners", x.owners}});
  return arr;
}

struct SimOptions {
  std::string builtin;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string mutation = "none";
  std::string trace;
  std::string summary;
};

sim::Scenario load(const SimOptions& o) {
  if (o.builtin.empty() == o.scenario.empty()) throw UsageError("give exactly one of --builtin and --scenario");
  if (!o.builtin.empty()) {
    if (o.builtin != "acceptance" && o.builtin != "acceptance-mixed" && !sim::find_builtin(o.builtin))
      throw UsageError("unknown builtin scenario: " + o.builtin);
    return sim::load_builtin(o.builtin);
  }
  std::ifstream in(o.scenario);
  if (!in) throw UsageError("cannot read scenario file " + o.scenario);
  std::stringstream text;
  text << in.rdbuf();
  try {
    return sim::parse_scenario(text.str());
  } catch (const sim::ScenarioError& e) {
    throw UsageError(o.scenario + ": " + e.what());
  }
}

sim::Scenario for_seed(const SimOptions& o, const sim::Scenario& base, std::uint64_t seed) {
  sim::Scenario s = !o.builtin.empty() ? sim::builtin_for_seed(o.builtin, seed) : base;
  s.faults.seed = seed;
  sim::apply_mutation(s, o.mutation);
  return s;
}

void emit_summary(const SimOptions& o, const std::string& human, const json& j) {
  std::cout << human;
  if (o.summary.empty()) std::cout << j.dump() << "\n";
  else write_atomic(o.summary, j.dump(2) + "\n");
}

int cmd_sim(const SimOptions& o) {
  const auto& muts = sim::mutation_names();
  if (std::find(muts.begin(), muts.end(), o.mutation) == muts.end()) throw UsageError("unknown mutation: " + o.mutation);
  const sim::Scenario base = load(o);
  std::ostringstream human;
  json j;
  j["scenario"] = base.name;
  j["protocol"] = base.protocol == sim::Protocol::Naive ? "naive" : "paxoslease";
  j["mutation"] = o.mutation;

  if (!o.seeds.empty()) {
    const auto [first, last] = parse_seed_range(o.seeds);
    const auto started = std::chrono::steady_clock::now();
    const auto r = sim::run_batch(first, last, [&](std::uint64_t seed) { return for_seed(o, base, seed); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    human << base.name << " seeds " << first << ".." << last << ": " << r.runs << " runs, " << r.acquired
          << " with an acquisition, " << r.violations << " safety violations";
    if (r.firstViolatingSeed) human << " (first at seed " << *r.firstViolatingSeed << ")";
    human << ", " << r.events << " events in " << secs << " s\n";
    j["seeds"] = {first, last};
    j["runs"] = r.runs;
    j["runs_with_acquisition"] = r.acquired;
    j["violations"] = r.violations;
    j["first_violating_seed"] = r.firstViolatingSeed ? json(*r.firstViolatingSeed) : json(nullptr);
    j["ballot_regressions"] = r.ballotRegressions;
    j["events"] = r.events;
    j["seconds"] = secs;
    emit_summary(o, human.str(), j);
    return r.violations ? kUnsafe : kOk;
  }

  const std::uint64_t seed = o.seed.value_or(base.faults.seed);
  sim::RunOptions opt;
  opt.trackQuorums = true;
  const sim::Scenario s = for_seed(o, base, seed);
  const sim::Trace t = sim::run_scenario(s, opt);
  if (!o.trace.empty()) write_atomic(o.trace, t.text());

  human << s.name << " seed " << seed << ": " << t.stats.acquisitions << " acquisitions, " << t.verdict.violations.size()
        << " safety violations, " << t.stats.events << " events, ended at " << ms_of(t.end) << " ms\n";
  if (t.stats.firstAcquisition)
    human << "first acquisition by " << s.node_name(t.stats.firstOwner) << " at " << ms_of(*t.stats.firstAcquisition)
          << " ms after " << t.stats.broadcastsBeforeFirstAcquisition << " broadcasts\n";
  else if (s.protocol == sim::Protocol::Naive)
    human << "no proposer reached a majority of acceptors\n";
  else
    human << "no acquisition\n";
  for (const auto& v : t.verdict.violations) {
    human << "VIOLATION " << ms_of(v.start) << ".." << ms_of(v.end) << " ms:";
    for (NodeId n : v.owners) human << ' ' << s.node_name(n);
    human << '\n';
  }
  for (const auto& iv : sim::ownership_intervals(t.ownership, t.end))
    human << "owner " << s.node_name(iv.node) << " [" << ms_of(iv.start) << ", " << ms_of(iv.end) << ") ms\n";

  j["seed"] = seed;
  j["end_ms"] = ms_of(t.end);
  j["truncated"] = t.truncated;
  j["stats"] = stats_json(t.stats);
  j["violations"] = violations_json(t.verdict);
  json owners = json::array();
  for (const auto& iv : sim::ownership_intervals(t.ownership, t.end))
    owners.push_back({{"node", s.node_name(iv.node)}, {"start_us", to_us(iv.start)}, {"end_us", to_us(iv.end)}});
  j["ownership"] = owners;
  emit_summary(o, human.str(), j);
  return t.verdict.ok() ? kOk : kUnsafe;
}

int cmd_proof(const std::string& summary, const std::string& traceDir) {
  std::ostringstream human;
  json cases = json::array();
  bool all = true;
  for (const auto& c : sim::proof_cases()) {
    const auto out = sim::run_proof_case(c);
    all = all && out.passed;
    human << (out.passed ? "ok   " : "FAIL ") << c.scenario << " mutation=" << c.mutation << " expect "
          << (c.expectViolation ? "violation" : "safe") << ", got " << out.trace.verdict.violations.size()
          << " violations\n";
    const sim::Scenario s = [&] {
      sim::Scenario x = sim::load_builtin(c.scenario);
      sim::apply_mutation(x, c.mutation);
      return x;
    }();
    for (const auto& line : sim::quorum_report(out.trace, s)) human << "     " << line << '\n';
    if (!traceDir.empty())
      write_atomic(fs::path(traceDir) / (std::string(c.scenario) + "." + std::string(c.mutation) + ".trace"),
                   out.trace.text());
    cases.push_back({{"scenario", c.scenario},
                     {"mutation", c.mutation},
                     {"expect_violation", c.expectViolation},
                     {"violations", violations_json(out.trace.verdict)},
                     {"passed", out.passed}});
  }
  json j{{"cases", cases}, {"passed", all}};
  std::cout << human.str();
  if (summary.empty()) std::cout << j.dump() << "\n";
  else write_atomic(summary, j.dump(2) + "\n");
  return all ? kOk : kUnsafe;
}

int cmd_check(sim::ModelBounds b, const std::string& mutation, const std::string& summary) {
  if (mutation == "expiry-disabled") b.acceptorHold = false;
  else if (mutation == "rejoin-zero") b.rejoinGate = Duration{0};
  else if (mutation != "none") throw UsageError("check supports mutations none, expiry-disabled, rejoin-zero");
  const auto r = sim::model_check(b);
  const char* status = r.complete ? "complete" : r.violations ? "stopped at violation" : "INCOMPLETE (state limit)";
  std::cout << "explored " << r.states << " states, " << r.transitions << " transitions, depth " << r.deepest << ", "
            << status << ", " << r.violations << " violating states, "
            << r.seconds << " s\n";
  for (const auto& step : r.counterexample) std::cout << "  " << step << '\n';
  json j{{"states", r.states},     {"transitions", r.transitions}, {"complete", r.complete},
         {"violations", r.violations}, {"deepest", r.deepest},    {"seconds", r.seconds},
         {"counterexample", r.counterexample}};
  if (summary.empty()) std::cout << j.dump() << "\n";
  else write_atomic(summary, j.dump(2) + "\n");
  if (r.violations) return kUnsafe;
  return r.complete ? kOk : kRuntime;
}

int cmd_fuzz(std::uint64_t frames, std::uint64_t seed) {
  const auto s = wire::fuzz_decoder(frames, seed);
  std::cout << "fuzzed " << s.frames << " frames: " << s.decoded << " decoded, " << s.rejected << " rejected, "
            << s.noncanonical << " non-canonical\n";
  std::cout << json{{"frames", s.frames}, {"decoded", s.decoded}, {"rejected", s.rejected},
                    {"noncanonical", s.noncanonical}}
                   .dump()
            << "\n";
  return s.noncanonical ? kRuntime : kOk;
}

// Every long option can also come from PAXOSLEASE_<NAME>.
void add_env_overrides(CLI::App& app, const std::string& prefix) {
  for (CLI::Option* opt : app.get_options()) {
    const std::string& name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::string env = prefix;
    for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    opt->envname(env);
  }
  for (CLI::App* sub : app.get_subcommands({})) add_env_overrides(*sub, prefix);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PaxosLease lease negotiation: cluster nodes, clients, simulator and checks"};
  app.require_subcommand(1);

  NetOptions net;
  ClientOptions client;
  auto* node = app.add_subcommand("node", "run an acceptor daemon");
  add_net_options(node, net);
  node->add_option("--rejoin-gate", net.rejoinGateMs, "silent period after start in ms (default M)");

  std::map<std::string, ClientMode> modes = {
      {"acquire", ClientMode::Acquire}, {"extend", ClientMode::Extend}, {"release", ClientMode::Release}};
  const std::map<std::string, std::string> help = {
      {"acquire", "acquire a lease, hold it, then release it"},
      {"extend", "acquire a lease and keep extending it until interrupted or --hold elapses"},
      {"release", "acquire a lease and release it at once"}};
  std::map<std::string, CLI::App*> clients;
  for (const auto& [name, mode] : modes) {
    auto* c = app.add_subcommand(name, help.at(name));
    add_net_options(c, net);
    c->add_option("--resource", client.resource, "resource id");
    c->add_option("--timespan", client.timespanMs, "lease timespan T in ms (must be below M)");
    c->add_option("--timeout", client.timeoutMs, "give up acquiring after this many ms")->check(CLI::PositiveNumber);
    c->add_option("--hold", client.holdMs, "hold (or keep extending) this many ms before releasing");
    c->add_option("--retry", client.retry, "after a failed round: none|immediate|backoff")
        ->check(CLI::IsMember({"none", "immediate", "backoff"}));
    clients[name] = c;
  }

  SimOptions so;
  auto* simc = app.add_subcommand("sim", "run simulated scenarios");
  simc->add_option("--builtin", so.builtin, "builtin scenario name");
  simc->add_option("--scenario", so.scenario, "scenario file");
  simc->add_option("--seed", so.seed, "fault seed for a single run");
  simc->add_option("--seeds", so.seeds, "seed range a..b for a batch");
  simc->add_option("--mutation", so.mutation, "none|expiry-disabled|rejoin-zero|silent-reject");
  simc->add_option("--trace", so.trace, "write the trace here ('-' for stdout)");
  simc->add_option("--summary", so.summary, "write the JSON summary here");
  bool listBuiltins = false;
  simc->add_flag("--list", listBuiltins, "list builtin scenarios");

  std::string proofSummary, proofTraces;
  auto* proof = app.add_subcommand("proof", "run the scripted proof schedules and their mutations");
  proof->add_option("--summary", proofSummary, "write the JSON summary here");
  proof->add_option("--traces", proofTraces, "directory for per-case traces");

  sim::ModelBounds mb;
  std::string checkMutation = "none", checkSummary;
  std::int64_t tMs = mb.timespan.count(), mMs = mb.maxLease.count();
  auto* check = app.add_subcommand("check", "bounded exhaustive exploration of one lease instance");
  check->add_option("--horizon", mb.horizon, "last 1 ms tick explored");
  check->add_option("--acquires", mb.acquires, "acquire commands per proposer");
  check->add_option("--extends", mb.extends, "extend commands per proposer");
  check->add_option("--releases", mb.releases, "release commands per proposer");
  check->add_option("--acceptor-crashes", mb.acceptorCrashes, "acceptor crash budget");
  check->add_option("--proposer-crashes", mb.proposerCrashes, "proposer crash budget");
  check->add_option("--duplicates", mb.duplicates, "message duplication budget");
  check->add_option("--max-in-flight", mb.maxInFlight, "messages beyond this are lost");
  check->add_option("--timespan", tMs, "T in ticks");
  check->add_option("--max-lease", mMs, "M in ticks");
  check->add_option("--state-limit", mb.stateLimit, "stop after this many distinct states");
  check->add_flag("--stop-at-violation", mb.stopAtFirstViolation, "stop at the first violating state");
  check->add_option("--mutation", checkMutation, "none|expiry-disabled|rejoin-zero");
  check->add_option("--summary", checkSummary, "write the JSON summary here");

  std::uint64_t fuzzFrames = 1'000'000, fuzzSeed = 1;
  auto* fuzz = app.add_subcommand("fuzz-codec", "feed random and mutated frames to the decoder");
  fuzz->add_option("--frames", fuzzFrames, "number of frames");
  fuzz->add_option("--seed", fuzzSeed, "random seed");

  add_env_overrides(app, "PAXOSLEASE_");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*node) return cmd_node(net);
    for (const auto& [name, c] : clients)
      if (*c) return cmd_client(modes.at(name), net, client);
    if (*simc) {
      if (listBuiltins) {
        for (const auto& b : sim::builtins()) std::cout << b.name << "  " << b.summary << '\n';
        std::cout << "acceptance  randomized safety sweep, fault plan picked by the seed\n";
        std::cout << "acceptance-mixed  the same sweep with faster delay bounds mixed in\n";
        return kOk;
      }
      return cmd_sim(so);
    }
    if (*proof) return cmd_proof(proofSummary, proofTraces);
    if (*check) {
      mb.timespan = Millis{tMs};
      mb.maxLease = Millis{mMs};
      mb.rejoinGate = Duration{mb.maxLease};
      if (!valid_timespan(mb.timespan, mb.maxLease)) throw UsageError("check needs 0 < T < M");
      return cmd_check(mb, checkMutation, checkSummary);
    }
    if (*fuzz) return cmd_fuzz(fuzzFrames, fuzzSeed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
