#include "tomogravity/topology.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <queue>
#include <utility>

#include "tomogravity/errors.hpp"
#include "tomogravity/random.hpp"

namespace tomo {

std::string check_route(const std::vector<Node>& nodes, const std::vector<Link>& links,
                        const Route& route) {
  if (route.source >= nodes.size() || route.destination >= nodes.size())
    return "route endpoint is not a known node";
  if (nodes[route.source].kind != NodeKind::edge)
    return "route source '" + nodes[route.source].id + "' is not an edge node";
  if (nodes[route.destination].kind != NodeKind::edge)
    return "route destination '" + nodes[route.destination].id + "' is not an edge node";
  if (route.links.empty()) return "route has no links";

  std::size_t at = route.source;
  for (std::size_t k : route.links) {
    if (k >= links.size()) return "route references an unknown link";
    const Link& link = links[k];
    if (link.from != at)
      return "link '" + link.id + "' does not start at '" + nodes[at].id + "'";
    at = link.to;
  }
  if (at != route.destination)
    return "path ends at '" + nodes[at].id + "', not at '" + nodes[route.destination].id + "'";

  const bool is_self_pair = route.source == route.destination;
  const bool uses_self_link = std::any_of(route.links.begin(), route.links.end(), [&](std::size_t k) {
    return links[k].kind == LinkKind::self;
  });
  if (uses_self_link && !(is_self_pair && route.links.size() == 1))
    return "self links may only carry their own node's self traffic";
  return {};
}

Network::Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Route> routes)
    : nodes_(std::move(nodes)), links_(std::move(links)), routes_(std::move(routes)) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    if (!seen.emplace(nodes_[n].id, n).second)
      throw InvalidArgument("duplicate node '" + nodes_[n].id + "'");
  seen.clear();
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& link = links_[i];
    if (!seen.emplace(link.id, i).second)
      throw InvalidArgument("duplicate link '" + link.id + "'");
    if (link.from >= nodes_.size() || link.to >= nodes_.size())
      throw InvalidArgument("link '" + link.id + "' has an unknown endpoint");
    if (link.kind == LinkKind::self &&
        (link.from != link.to || nodes_[link.from].kind != NodeKind::edge))
      throw InvalidArgument("self link '" + link.id + "' must loop on one edge node");
  }

  std::vector<bool> is_source(nodes_.size(), false), is_destination(nodes_.size(), false);
  for (const Route& route : routes_) {
    if (auto problem = check_route(nodes_, links_, route); !problem.empty())
      throw InvalidArgument(problem);
    is_source[route.source] = true;
    is_destination[route.destination] = true;
  }
  std::vector<std::string> sources, destinations;
  std::vector<std::size_t> source_slot(nodes_.size()), destination_slot(nodes_.size());
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (is_source[n]) {
      source_slot[n] = sources.size();
      sources.push_back(nodes_[n].id);
    }
    if (is_destination[n]) {
      destination_slot[n] = destinations.size();
      destinations.push_back(nodes_[n].id);
    }
  }
  if (sources.empty()) throw InvalidArgument("network has no routes");
  index_ = SdIndex(std::move(sources), std::move(destinations));

  std::vector<std::optional<std::size_t>> route_of_pair(index_.pair_count());
  for (std::size_t r = 0; r < routes_.size(); ++r) {
    const std::size_t j = index_.pair(source_slot[routes_[r].source],
                                      destination_slot[routes_[r].destination]);
    if (route_of_pair[j])
      throw InvalidArgument("SD pair " + index_.source_id(index_.source_of(j)) + " -> " +
                            index_.destination_id(index_.destination_of(j)) +
                            " has more than one route");
    route_of_pair[j] = r;
  }
  for (std::size_t j = 0; j < route_of_pair.size(); ++j)
    if (!route_of_pair[j])
      throw InvalidArgument("SD pair " + index_.source_id(index_.source_of(j)) + " -> " +
                            index_.destination_id(index_.destination_of(j)) +
                            " has no route; sources x destinations must be a product set");

  std::vector<std::vector<std::size_t>> support(links_.size());
  for (std::size_t j = 0; j < route_of_pair.size(); ++j)
    for (std::size_t k : routes_[*route_of_pair[j]].links) support[k].push_back(j);

  std::vector<LinkInfo> info;
  info.reserve(links_.size());
  for (const Link& link : links_) info.push_back({link.id, link.kind, link.observed});
  routing_ = RoutingMatrix(index_.pair_count(), std::move(info), std::move(support),
                           index_.self_mask(), Completeness::every_pair_routed);
}

std::optional<std::size_t> Network::find_node(const std::string& id) const {
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    if (nodes_[n].id == id) return n;
  return std::nullopt;
}

std::optional<std::size_t> Network::find_link(const std::string& id) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].id == id) return i;
  return std::nullopt;
}

bool Network::is_inbound_edge(std::size_t link) const {
  const Link& l = links_.at(link);
  return l.kind == LinkKind::edge && nodes_[l.from].kind == NodeKind::edge;
}

bool Network::is_outbound_edge(std::size_t link) const {
  const Link& l = links_.at(link);
  return l.kind == LinkKind::edge && nodes_[l.to].kind == NodeKind::edge;
}

std::vector<std::size_t> Network::edge_links(bool include_self) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].kind == LinkKind::edge || (include_self && links_[i].kind == LinkKind::self))
      out.push_back(i);
  return out;
}

Network Network::with_observed(const std::vector<bool>& mask) const {
  if (mask.size() != links_.size()) throw DimensionError("observation mask has wrong length");
  Network copy = *this;
  for (std::size_t i = 0; i < mask.size(); ++i) copy.links_[i].observed = mask[i];
  copy.routing_ = routing_.with_observed(mask);
  return copy;
}

// ------------------------------------------------------ sample topologies

namespace {

// Builds edge node + router pairs around a weighted router graph and routes
// every pair over the minimum-weight router path (ties: fewest hops, then
// lowest router indices, via a deterministic Dijkstra).
struct BackboneSpec {
  std::vector<std::string> pops;
  std::vector<std::tuple<std::size_t, std::size_t, double>> trunks;  // undirected
  bool self_links = true;
};

Network build_backbone(const BackboneSpec& spec) {
  const std::size_t n = spec.pops.size();
  std::vector<Node> nodes;
  for (const auto& pop : spec.pops) nodes.push_back({pop, NodeKind::edge});
  for (const auto& pop : spec.pops) nodes.push_back({pop + "-core", NodeKind::inner});
  auto router = [n](std::size_t p) { return n + p; };

  std::vector<Link> links;
  std::vector<std::size_t> in_link(n), out_link(n), self_link(n);
  for (std::size_t p = 0; p < n; ++p) {
    in_link[p] = links.size();
    links.push_back({spec.pops[p] + ":in", p, router(p), LinkKind::edge, true});
    out_link[p] = links.size();
    links.push_back({spec.pops[p] + ":out", router(p), p, LinkKind::edge, true});
    if (spec.self_links) {
      self_link[p] = links.size();
      links.push_back({spec.pops[p] + ":self", p, p, LinkKind::self, true});
    }
  }
  // adjacency[u] = (v, weight, link index)
  std::vector<std::vector<std::tuple<std::size_t, double, std::size_t>>> adjacency(n);
  for (const auto& [a, b, w] : spec.trunks) {
    adjacency[a].emplace_back(b, w, links.size());
    links.push_back({spec.pops[a] + "-" + spec.pops[b], router(a), router(b), LinkKind::inner, true});
    adjacency[b].emplace_back(a, w, links.size());
    links.push_back({spec.pops[b] + "-" + spec.pops[a], router(b), router(a), LinkKind::inner, true});
  }
  for (auto& adj : adjacency) std::sort(adj.begin(), adj.end());

  std::vector<Route> routes;
  for (std::size_t s = 0; s < n; ++s) {
    // Dijkstra keyed on (weight, hops, predecessor) for deterministic ties.
    using Key = std::tuple<double, std::size_t, std::size_t>;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<Key> best(n, Key{inf, 0, 0});
    std::vector<std::size_t> via_link(n, 0);
    std::vector<bool> done(n, false);
    best[s] = Key{0.0, 0, s};
    for (std::size_t iter = 0; iter < n; ++iter) {
      std::size_t u = n;
      for (std::size_t v = 0; v < n; ++v)
        if (!done[v] && std::get<0>(best[v]) < inf && (u == n || best[v] < best[u])) u = v;
      if (u == n) break;
      done[u] = true;
      for (const auto& [v, w, link] : adjacency[u]) {
        Key candidate{std::get<0>(best[u]) + w, std::get<1>(best[u]) + 1, u};
        if (!done[v] && candidate < best[v]) {
          best[v] = candidate;
          via_link[v] = link;
        }
      }
    }
    for (std::size_t d = 0; d < n; ++d) {
      if (s == d) {
        // Without a self link, self traffic turns around at the router.
        if (spec.self_links)
          routes.push_back({s, s, {self_link[s]}});
        else
          routes.push_back({s, s, {in_link[s], out_link[s]}});
        continue;
      }
      if (std::get<0>(best[d]) == inf) throw InvalidArgument("backbone is not connected");
      std::vector<std::size_t> path;
      for (std::size_t at = d; at != s; at = std::get<2>(best[at])) path.push_back(via_link[at]);
      std::reverse(path.begin(), path.end());
      Route route{s, d, {in_link[s]}};
      route.links.insert(route.links.end(), path.begin(), path.end());
      route.links.push_back(out_link[d]);
      routes.push_back(std::move(route));
    }
  }
  return Network(std::move(nodes), std::move(links), std::move(routes));
}

}  // namespace

Network bipartite_star_network(std::size_t sources, std::size_t destinations) {
  if (sources == 0 || destinations == 0)
    throw InvalidArgument("bipartite star needs at least one source and one destination");
  std::vector<Node> nodes;
  for (std::size_t s = 0; s < sources; ++s) nodes.push_back({"s" + std::to_string(s + 1), NodeKind::edge});
  for (std::size_t d = 0; d < destinations; ++d)
    nodes.push_back({"d" + std::to_string(d + 1), NodeKind::edge});
  const std::size_t hub = nodes.size();
  nodes.push_back({"hub", NodeKind::inner});

  std::vector<Link> links;
  for (std::size_t s = 0; s < sources; ++s)
    links.push_back({nodes[s].id + ":in", s, hub, LinkKind::edge, true});
  for (std::size_t d = 0; d < destinations; ++d)
    links.push_back({nodes[sources + d].id + ":out", hub, sources + d, LinkKind::edge, true});

  std::vector<Route> routes;
  for (std::size_t s = 0; s < sources; ++s)
    for (std::size_t d = 0; d < destinations; ++d)
      routes.push_back({s, sources + d, {s, sources + d}});
  return Network(std::move(nodes), std::move(links), std::move(routes));
}

Network hub_network(std::size_t nodes, bool self_links) {
  if (nodes < 2) throw InvalidArgument("hub network needs at least two nodes");
  BackboneSpec spec;
  spec.self_links = self_links;
  for (std::size_t p = 0; p < nodes; ++p) spec.pops.push_back("n" + std::to_string(p + 1));
  spec.pops.push_back("core");
  for (std::size_t p = 0; p < nodes; ++p) spec.trunks.emplace_back(p, nodes, 1.0);

  // The core PoP is a pure transit router: drop its edge node, edge/self
  // links, and routes after building.
  Network full = build_backbone(spec);
  const std::size_t core_edge = nodes;
  std::vector<Node> kept_nodes;
  std::vector<std::size_t> node_map(full.nodes().size(), 0);
  for (std::size_t v = 0; v < full.nodes().size(); ++v) {
    if (v == core_edge) continue;
    node_map[v] = kept_nodes.size();
    kept_nodes.push_back(full.nodes()[v]);
  }
  std::vector<Link> kept_links;
  std::vector<std::size_t> link_map(full.links().size(), 0);
  for (std::size_t i = 0; i < full.links().size(); ++i) {
    Link link = full.links()[i];
    if (link.from == core_edge || link.to == core_edge) continue;
    link.from = node_map[link.from];
    link.to = node_map[link.to];
    link_map[i] = kept_links.size();
    kept_links.push_back(std::move(link));
  }
  std::vector<Route> kept_routes;
  for (const Route& route : full.routes()) {
    if (route.source == core_edge || route.destination == core_edge) continue;
    Route r{node_map[route.source], node_map[route.destination], {}};
    for (std::size_t k : route.links) r.links.push_back(link_map[k]);
    kept_routes.push_back(std::move(r));
  }
  return Network(std::move(kept_nodes), std::move(kept_links), std::move(kept_routes));
}

Network abilene_like_network() {
  BackboneSpec spec;
  spec.pops = {"ATLA-M5", "ATLA", "CHIN", "DNVR", "HSTN", "IPLS",
               "KSCY",    "LOSA", "NYCM", "SNVA", "STTL", "WASH"};
  enum { ATLAM5, ATLA, CHIN, DNVR, HSTN, IPLS, KSCY, LOSA, NYCM, SNVA, STTL, WASH };
  spec.trunks = {
      {ATLAM5, ATLA, 1},    {ATLA, HSTN, 1176}, {ATLA, IPLS, 587},  {ATLA, WASH, 846},
      {CHIN, IPLS, 260},    {CHIN, NYCM, 700},  {DNVR, KSCY, 639},  {DNVR, SNVA, 1295},
      {DNVR, STTL, 2095},   {HSTN, KSCY, 902},  {HSTN, LOSA, 1893}, {IPLS, KSCY, 548},
      {LOSA, SNVA, 366},    {NYCM, WASH, 233},  {SNVA, STTL, 861},
  };
  return build_backbone(spec);
}

Network random_backbone_network(std::size_t routers, std::size_t extra_edges, std::uint64_t seed) {
  if (routers < 2) throw InvalidArgument("random backbone needs at least two routers");
  Rng rng(seed);
  BackboneSpec spec;
  for (std::size_t p = 0; p < routers; ++p) spec.pops.push_back("p" + std::to_string(p + 1));
  std::vector<std::pair<std::size_t, std::size_t>> present;
  auto has = [&](std::size_t a, std::size_t b) {
    return std::find(present.begin(), present.end(),
                     std::pair<std::size_t, std::size_t>(std::minmax(a, b))) != present.end();
  };
  for (std::size_t p = 1; p < routers; ++p) {
    const std::size_t parent = rng.below(p);
    present.push_back(std::minmax(parent, p));
  }
  const std::size_t max_edges = routers * (routers - 1) / 2;
  for (std::size_t e = 0; e < extra_edges && present.size() < max_edges; ++e) {
    std::size_t a, b;
    do {
      a = rng.below(routers);
      b = rng.below(routers);
    } while (a == b || has(a, b));
    present.push_back(std::minmax(a, b));
  }
  for (const auto& [a, b] : present) spec.trunks.emplace_back(a, b, 1.0);
  return build_backbone(spec);
}

}  // namespace tomo
