#include "tomogravity/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tomogravity/errors.hpp"

namespace tomo {

namespace {

// Splits the next meaningful line into whitespace-separated tokens.
class LineReader {
 public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      tokens.clear();
      std::istringstream words(line);
      for (std::string w; words >> w;) tokens.push_back(std::move(w));
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return true;
    }
    if (in_.bad()) throw IoError(name_ + ": read failure");
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(name_, line_no_, what); }

  void expect_count(const std::vector<std::string>& tokens, std::size_t count,
                    const char* usage) const {
    if (tokens.size() != count) fail(std::string("expected '") + usage + "'");
  }

  double number(const std::string& text) const {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
      fail("'" + text + "' is not a finite number");
    return value;
  }

  const std::string& name() const noexcept { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

template <typename T>
std::map<std::string, std::size_t> id_map(const std::vector<T>& items) {
  std::map<std::string, std::size_t> out;
  for (std::size_t k = 0; k < items.size(); ++k) out.emplace(items[k].id, k);
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

// Accumulates flow lines for one traffic block.
class TrafficBuilder {
 public:
  explicit TrafficBuilder(const SdIndex& index)
      : index_(index), values_(index.pair_count(), 0.0), seen_(index.pair_count(), false) {}

  void add(const LineReader& reader, const std::vector<std::string>& tokens) {
    reader.expect_count(tokens, 4, "flow <src> <dst> <value>");
    auto j = index_.find_pair(tokens[1], tokens[2]);
    if (!j) reader.fail("unknown SD pair " + tokens[1] + " -> " + tokens[2]);
    if (seen_[*j]) reader.fail("duplicate flow for " + tokens[1] + " -> " + tokens[2]);
    const double value = reader.number(tokens[3]);
    if (value < 0.0) reader.fail("negative flow");
    values_[*j] = value;
    seen_[*j] = true;
  }

  TrafficVector finish() {
    TrafficVector out(values_);
    std::fill(values_.begin(), values_.end(), 0.0);
    std::fill(seen_.begin(), seen_.end(), false);
    return out;
  }

 private:
  const SdIndex& index_;
  std::vector<double> values_;
  std::vector<bool> seen_;
};

class LoadBuilder {
 public:
  explicit LoadBuilder(const Network& network)
      : links_(id_map(network.links())),
        values_(network.links().size(), 0.0),
        seen_(network.links().size(), false) {}

  void add(const LineReader& reader, const std::vector<std::string>& tokens) {
    reader.expect_count(tokens, 3, "load <link-id> <value>");
    auto it = links_.find(tokens[1]);
    if (it == links_.end()) reader.fail("unknown link '" + tokens[1] + "'");
    if (seen_[it->second]) reader.fail("duplicate load for link '" + tokens[1] + "'");
    const double value = reader.number(tokens[2]);
    if (value < 0.0) reader.fail("negative load");
    values_[it->second] = value;
    seen_[it->second] = true;
  }

  LinkLoads finish() {
    LinkLoads out(values_, seen_);
    std::fill(values_.begin(), values_.end(), 0.0);
    std::fill(seen_.begin(), seen_.end(), false);
    return out;
  }

 private:
  std::map<std::string, std::size_t> links_;
  std::vector<double> values_;
  std::vector<bool> seen_;
};

}  // namespace

std::string format_exact(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

Network read_network(std::istream& in, const std::string& source_name) {
  LineReader reader(in, source_name);
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Route> routes;
  std::map<std::string, std::size_t> node_ids, link_ids;

  auto node_ref = [&](const std::string& id) {
    auto it = node_ids.find(id);
    if (it == node_ids.end()) reader.fail("unknown node '" + id + "'");
    return it->second;
  };

  for (std::vector<std::string> t; reader.next(t);) {
    if (t[0] == "node") {
      reader.expect_count(t, 3, "node <id> <edge|inner>");
      NodeKind kind;
      if (t[2] == "edge")
        kind = NodeKind::edge;
      else if (t[2] == "inner")
        kind = NodeKind::inner;
      else
        reader.fail("node kind must be 'edge' or 'inner'");
      if (!node_ids.emplace(t[1], nodes.size()).second) reader.fail("duplicate node '" + t[1] + "'");
      nodes.push_back({t[1], kind});
    } else if (t[0] == "link") {
      reader.expect_count(t, 6, "link <id> <from> <to> <inner|edge|self> <observed:0|1>");
      auto kind = parse_link_kind(t[4]);
      if (!kind) reader.fail("link kind must be 'inner', 'edge' or 'self'");
      if (t[5] != "0" && t[5] != "1") reader.fail("observed flag must be 0 or 1");
      Link link{t[1], node_ref(t[2]), node_ref(t[3]), *kind, t[5] == "1"};
      if (link.kind == LinkKind::self &&
          (link.from != link.to || nodes[link.from].kind != NodeKind::edge))
        reader.fail("self link must loop on one edge node");
      if (!link_ids.emplace(t[1], links.size()).second) reader.fail("duplicate link '" + t[1] + "'");
      links.push_back(std::move(link));
    } else if (t[0] == "route") {
      if (t.size() < 4) reader.fail("expected 'route <src> <dst> <link-id> ...'");
      Route route{node_ref(t[1]), node_ref(t[2]), {}};
      for (std::size_t k = 3; k < t.size(); ++k) {
        auto it = link_ids.find(t[k]);
        if (it == link_ids.end()) reader.fail("unknown link '" + t[k] + "'");
        route.links.push_back(it->second);
      }
      if (auto problem = check_route(nodes, links, route); !problem.empty()) reader.fail(problem);
      routes.push_back(std::move(route));
    } else {
      reader.fail("unknown directive '" + t[0] + "'");
    }
  }
  try {
    return Network(std::move(nodes), std::move(links), std::move(routes));
  } catch (const InvalidArgument& e) {
    throw ParseError(source_name, 0, e.what());
  }
}

void write_network(std::ostream& out, const Network& network) {
  for (const Node& node : network.nodes())
    out << "node " << node.id << ' ' << (node.kind == NodeKind::edge ? "edge" : "inner") << '\n';
  for (const Link& link : network.links())
    out << "link " << link.id << ' ' << network.nodes()[link.from].id << ' '
        << network.nodes()[link.to].id << ' ' << to_string(link.kind) << ' '
        << (link.observed ? 1 : 0) << '\n';
  for (const Route& route : network.routes()) {
    out << "route " << network.nodes()[route.source].id << ' '
        << network.nodes()[route.destination].id;
    for (std::size_t k : route.links) out << ' ' << network.links()[k].id;
    out << '\n';
  }
}

TrafficVector read_traffic(std::istream& in, const std::string& source_name, const SdIndex& index) {
  LineReader reader(in, source_name);
  TrafficBuilder builder(index);
  for (std::vector<std::string> t; reader.next(t);) {
    if (t[0] != "flow") reader.fail("expected a 'flow' line");
    builder.add(reader, t);
  }
  return builder.finish();
}

void write_traffic(std::ostream& out, const SdIndex& index, const TrafficVector& traffic) {
  if (traffic.size() != index.pair_count()) throw DimensionError("write_traffic: size mismatch");
  for (std::size_t j = 0; j < traffic.size(); ++j)
    out << "flow " << index.source_id(index.source_of(j)) << ' '
        << index.destination_id(index.destination_of(j)) << ' ' << format_exact(traffic[j]) << '\n';
}

LinkLoads read_loads(std::istream& in, const std::string& source_name, const Network& network) {
  LineReader reader(in, source_name);
  LoadBuilder builder(network);
  for (std::vector<std::string> t; reader.next(t);) {
    if (t[0] != "load") reader.fail("expected a 'load' line");
    builder.add(reader, t);
  }
  return builder.finish();
}

void write_loads(std::ostream& out, const Network& network, const LinkLoads& loads) {
  if (loads.size() != network.links().size()) throw DimensionError("write_loads: size mismatch");
  for (std::size_t i = 0; i < loads.size(); ++i)
    if (loads.observed(i)) out << "load " << network.links()[i].id << ' ' << format_exact(loads[i]) << '\n';
}

std::vector<TrafficVector> read_traffic_series(std::istream& in, const std::string& source_name,
                                               const SdIndex& index) {
  LineReader reader(in, source_name);
  TrafficBuilder builder(index);
  std::vector<TrafficVector> series;
  bool open = false;
  for (std::vector<std::string> t; reader.next(t);) {
    if (t[0] == "snapshot") {
      reader.expect_count(t, 2, "snapshot <t>");
      if (open) series.push_back(builder.finish());
      open = true;
    } else if (t[0] == "flow") {
      if (!open) reader.fail("'flow' before the first 'snapshot' line");
      builder.add(reader, t);
    } else {
      reader.fail("expected 'snapshot' or 'flow'");
    }
  }
  if (open) series.push_back(builder.finish());
  return series;
}

void write_traffic_series(std::ostream& out, const SdIndex& index,
                          const std::vector<TrafficVector>& series) {
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << "snapshot " << t << '\n';
    write_traffic(out, index, series[t]);
  }
}

std::vector<LinkLoads> read_load_series(std::istream& in, const std::string& source_name,
                                        const Network& network) {
  LineReader reader(in, source_name);
  LoadBuilder builder(network);
  std::vector<LinkLoads> series;
  bool open = false;
  for (std::vector<std::string> t; reader.next(t);) {
    if (t[0] == "snapshot") {
      reader.expect_count(t, 2, "snapshot <t>");
      if (open) series.push_back(builder.finish());
      open = true;
    } else if (t[0] == "load") {
      if (!open) reader.fail("'load' before the first 'snapshot' line");
      builder.add(reader, t);
    } else {
      reader.fail("expected 'snapshot' or 'load'");
    }
  }
  if (open) series.push_back(builder.finish());
  return series;
}

void write_load_series(std::ostream& out, const Network& network,
                       const std::vector<LinkLoads>& series) {
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << "snapshot " << t << '\n';
    write_loads(out, network, series[t]);
  }
}

Network load_network_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_network(in, path.string());
}

TrafficVector load_traffic_file(const std::filesystem::path& path, const SdIndex& index) {
  auto in = open_input(path);
  return read_traffic(in, path.string(), index);
}

LinkLoads load_loads_file(const std::filesystem::path& path, const Network& network) {
  auto in = open_input(path);
  return read_loads(in, path.string(), network);
}

std::vector<TrafficVector> load_traffic_series_file(const std::filesystem::path& path,
                                                    const SdIndex& index) {
  auto in = open_input(path);
  return read_traffic_series(in, path.string(), index);
}

std::vector<LinkLoads> load_load_series_file(const std::filesystem::path& path,
                                             const Network& network) {
  auto in = open_input(path);
  return read_load_series(in, path.string(), network);
}

std::pair<Network, LinkLoads> apply_observation(const Network& network, const LinkLoads& loads) {
  if (loads.size() != network.links().size())
    throw DimensionError("loads do not match the topology's link count");
  std::vector<bool> mask(loads.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = network.links()[i].observed && loads.observed(i);
  return {network.with_observed(mask), loads.with_observed(mask)};
}

}  // namespace tomo
