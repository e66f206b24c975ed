#pragma once

// Node/link/route description of a network, and the routing matrix it
// induces. Routes are inputs; nothing here computes paths except the
// sample-topology builders at the bottom.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tomogravity/network.hpp"

namespace tomo {

enum class NodeKind { edge, inner };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::edge;
};

struct Link {
  std::string id;
  std::size_t from = 0;  // node index
  std::size_t to = 0;    // node index
  LinkKind kind = LinkKind::inner;
  bool observed = true;
};

struct Route {
  std::size_t source = 0;          // node index
  std::size_t destination = 0;     // node index
  std::vector<std::size_t> links;  // link indices, in path order
};

// Returns an empty string if `route` is a contiguous path from its source to
// its destination over existing links, else a description of the problem.
std::string check_route(const std::vector<Node>& nodes, const std::vector<Link>& links,
                        const Route& route);

class Network {
 public:
  Network() = default;
  // Sources and destinations are the nodes that start and end routes, in node
  // declaration order. Every source/destination combination needs exactly one
  // route.
  Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Route> routes);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const std::vector<Route>& routes() const noexcept { return routes_; }
  const SdIndex& index() const noexcept { return index_; }
  const RoutingMatrix& routing() const noexcept { return routing_; }

  std::optional<std::size_t> find_node(const std::string& id) const;
  std::optional<std::size_t> find_link(const std::string& id) const;

  // Edge links leaving an edge node (source side) and entering one.
  bool is_inbound_edge(std::size_t link) const;
  bool is_outbound_edge(std::size_t link) const;
  std::vector<std::size_t> edge_links(bool include_self) const;

  Network with_observed(const std::vector<bool>& mask) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Route> routes_;
  SdIndex index_;
  RoutingMatrix routing_;
};

// --- sample topologies -----------------------------------------------------

// Sources s1..sm and distinct destinations d1..dn joined through one hub by
// edge links only (no inner links, no self pairs).
Network bipartite_star_network(std::size_t sources, std::size_t destinations);

// n edge nodes, each attached to its own router; routers form a star around
// a core router. The SD index is the full n x n product. With `self_links`,
// self pairs ride their own self link; otherwise they enter and leave at the
// node's router.
Network hub_network(std::size_t nodes, bool self_links);

// A 12-PoP backbone shaped like Abilene (2004): 15 bidirectional inner
// links (30 directed), 24 edge links, 12 self links. Metrics and therefore
// routes are a reconstruction, not the operator's routing matrix.
Network abilene_like_network();

// A random connected backbone for property tests: `routers` routers, each
// with one attached edge node and a self link; the spanning tree is extended
// by `extra_edges` random chords. Routes are min-hop with deterministic
// tie-breaking.
Network random_backbone_network(std::size_t routers, std::size_t extra_edges, std::uint64_t seed);

}  // namespace tomo
