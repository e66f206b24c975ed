#pragma once

// Line-oriented text formats. Blank lines and lines starting with '#' are
// ignored everywhere; writers emit '#' header lines for config echoes.
//
//   topology:  node <id> <edge|inner>
//              link <id> <from> <to> <inner|edge|self> <observed:0|1>
//              route <src> <dst> <link-id> <link-id> ...
//   traffic:   flow <src> <dst> <value>          (missing pairs are 0)
//   loads:     load <link-id> <value>            (absent links unobserved)
//   series:    'snapshot <t>' lines separate consecutive traffic or load
//              blocks in one file.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tomogravity/network.hpp"
#include "tomogravity/topology.hpp"

namespace tomo {

Network read_network(std::istream& in, const std::string& source_name);
void write_network(std::ostream& out, const Network& network);

TrafficVector read_traffic(std::istream& in, const std::string& source_name, const SdIndex& index);
void write_traffic(std::ostream& out, const SdIndex& index, const TrafficVector& traffic);

LinkLoads read_loads(std::istream& in, const std::string& source_name, const Network& network);
// Writes only the observed links.
void write_loads(std::ostream& out, const Network& network, const LinkLoads& loads);

std::vector<TrafficVector> read_traffic_series(std::istream& in, const std::string& source_name,
                                               const SdIndex& index);
void write_traffic_series(std::ostream& out, const SdIndex& index,
                          const std::vector<TrafficVector>& series);

std::vector<LinkLoads> read_load_series(std::istream& in, const std::string& source_name,
                                        const Network& network);
void write_load_series(std::ostream& out, const Network& network,
                       const std::vector<LinkLoads>& series);

// File wrappers; throw IoError when the file cannot be opened.
Network load_network_file(const std::filesystem::path& path);
TrafficVector load_traffic_file(const std::filesystem::path& path, const SdIndex& index);
LinkLoads load_loads_file(const std::filesystem::path& path, const Network& network);
std::vector<TrafficVector> load_traffic_series_file(const std::filesystem::path& path,
                                                    const SdIndex& index);
std::vector<LinkLoads> load_load_series_file(const std::filesystem::path& path,
                                             const Network& network);

// Effective observation: a link counts as observed when the topology marks
// it observed and the snapshot carries a load for it. Returns the network
// and loads re-masked so both agree.
std::pair<Network, LinkLoads> apply_observation(const Network& network, const LinkLoads& loads);

// Shortest decimal text that round-trips the double exactly.
std::string format_exact(double value);

}  // namespace tomo
