#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paxoslease/effect.hpp"
#include "paxoslease/time.hpp"

namespace paxoslease::sim {

// A proposer's lease-owner flag flipping at a global instant.
struct OwnershipEvent {
  TimePoint at;
  std::string resource;
  NodeId node = 0;
  bool owner = false;

  friend bool operator==(const OwnershipEvent&, const OwnershipEvent&) = default;
};

struct OwnershipInterval {
  std::string resource;
  NodeId node = 0;
  TimePoint start;
  TimePoint end;
};

// Maximal period during which two or more proposers held the same resource.
struct Violation {
  std::string resource;
  TimePoint start;
  TimePoint end;
  std::vector<NodeId> owners;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct SafetyVerdict {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Ownership as half-open intervals [owner=true, owner=false). Intervals still
// open at `end` are closed there.
inline std::vector<OwnershipInterval> ownership_intervals(std::vector<OwnershipEvent> events, TimePoint end) {
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
  std::map<std::pair<std::string, NodeId>, TimePoint> open;
  std::vector<OwnershipInterval> out;
  for (const auto& e : events) {
    const auto key = std::make_pair(e.resource, e.node);
    auto it = open.find(key);
    if (e.owner) {
      if (it == open.end()) open.emplace(key, e.at);
    } else if (it != open.end()) {
      out.push_back({e.resource, e.node, it->second, e.at});
      open.erase(it);
    }
  }
  for (const auto& [key, start] : open) out.push_back({key.first, key.second, start, std::max(start, end)});
  return out;
}

// Reports every positive-length span with two or more simultaneous owners of
// a resource. Intervals touching at an instant ([a,t) and [t,b)) do not
// overlap.
inline SafetyVerdict check_safety(const std::vector<OwnershipEvent>& events, TimePoint end) {
  struct Edge {
    TimePoint at;
    int delta;
    NodeId node;
  };
  std::map<std::string, std::vector<Edge>> edges;
  for (const auto& iv : ownership_intervals(events, end)) {
    if (iv.end <= iv.start) continue;
    edges[iv.resource].push_back({iv.start, +1, iv.node});
    edges[iv.resource].push_back({iv.end, -1, iv.node});
  }

  SafetyVerdict verdict;
  for (auto& [resource, list] : edges) {
    // Ends before starts at the same instant.
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) {
      return a.at != b.at ? a.at < b.at : a.delta < b.delta;
    });
    std::multiset<NodeId> owners;
    std::optional<Violation> current;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Edge& e = list[i];
      if (e.delta > 0) {
        owners.insert(e.node);
      } else {
        owners.erase(owners.find(e.node));
      }
      // Settle all edges at this instant before judging.
      if (i + 1 < list.size() && list[i + 1].at == e.at) continue;
      if (owners.size() >= 2) {
        if (!current) current = Violation{resource, e.at, e.at, {}};
        for (NodeId n : owners)
          if (std::find(current->owners.begin(), current->owners.end(), n) == current->owners.end())
            current->owners.push_back(n);
      } else if (current) {
        current->end = e.at;
        std::sort(current->owners.begin(), current->owners.end());
        verdict.violations.push_back(std::move(*current));
        current.reset();
      }
    }
  }
  return verdict;
}

}  // namespace paxoslease::sim
