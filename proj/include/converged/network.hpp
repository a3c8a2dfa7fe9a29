#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "converged/time.hpp"

namespace converged {

// Scenario files that are malformed or inconsistent.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeRole { EndStation, TsnSwitch, Gateway, BaseStation, UserEquipment };

inline std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::EndStation: return "end_station";
    case NodeRole::TsnSwitch: return "tsn_switch";
    case NodeRole::Gateway: return "gateway";
    case NodeRole::BaseStation: return "base_station";
    case NodeRole::UserEquipment: return "user_equipment";
  }
  return "?";
}

inline NodeRole parse_node_role(std::string_view text) {
  for (NodeRole r : {NodeRole::EndStation, NodeRole::TsnSwitch, NodeRole::Gateway,
                     NodeRole::BaseStation, NodeRole::UserEquipment}) {
    if (to_string(r) == text) return r;
  }
  throw ValidationError("unknown node role '" + std::string(text) + "'");
}

struct Node {
  std::string id;
  NodeRole role = NodeRole::TsnSwitch;
};

// Full-duplex physical link between two wired nodes.
struct WiredLink {
  std::size_t a = 0;
  std::size_t b = 0;
  std::int64_t rate_bps = 100'000'000;
  TimeNs prop_delay = 1'000;
};

enum class LinkDomain { Tsn, FiveG };

using LinkId = std::size_t;
inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

// Directed dataflow link. The single 5GS uplink has `from == kNoNode`: it
// stands for every UE's radio path into the gateway.
struct DataflowLink {
  std::size_t from = kNoNode;
  std::size_t to = kNoNode;
  LinkDomain domain = LinkDomain::Tsn;
  std::int64_t rate_bps = 0;
  TimeNs prop_delay = 0;
};

class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(std::vector<Node> nodes, std::vector<WiredLink> links)
      : nodes_(std::move(nodes)), wired_(std::move(links)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!index_.emplace(nodes_[i].id, i).second) {
        throw ValidationError("duplicate node id '" + nodes_[i].id + "'");
      }
    }
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<WiredLink>& wired_links() const { return wired_; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t node_index(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw ValidationError("unknown node '" + std::string(id) + "'");
  }

  std::optional<std::size_t> gateway() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].role == NodeRole::Gateway) return i;
    }
    return std::nullopt;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<WiredLink> wired_;
  std::map<std::string, std::size_t> index_;
};

// Every wired link (v1,v2) yields [v1,v2] then [v2,v1], in link order; the
// 5GS uplink is appended last.
inline std::vector<DataflowLink> derive_dataflow_links(const NetworkGraph& graph) {
  if (graph.wired_links().empty()) throw ValidationError("network has no wired links");
  const auto gw = graph.gateway();
  if (!gw) throw ValidationError("network has no gateway node");
  std::vector<DataflowLink> out;
  out.reserve(2 * graph.wired_links().size() + 1);
  for (const WiredLink& w : graph.wired_links()) {
    out.push_back({w.a, w.b, LinkDomain::Tsn, w.rate_bps, w.prop_delay});
    out.push_back({w.b, w.a, LinkDomain::Tsn, w.rate_bps, w.prop_delay});
  }
  out.push_back({kNoNode, *gw, LinkDomain::FiveG, 0, 0});
  return out;
}

inline LinkId uplink_id(const std::vector<DataflowLink>& links) { return links.size() - 1; }

inline std::optional<LinkId> find_dataflow_link(const std::vector<DataflowLink>& links,
                                                std::size_t from, std::size_t to) {
  for (LinkId l = 0; l < links.size(); ++l) {
    if (links[l].domain == LinkDomain::Tsn && links[l].from == from && links[l].to == to) return l;
  }
  return std::nullopt;
}

}  // namespace converged
