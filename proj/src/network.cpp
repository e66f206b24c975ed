#include "tomogravity/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tomogravity/errors.hpp"

namespace tomo {

const char* to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::inner:
      return "inner";
    case LinkKind::edge:
      return "edge";
    case LinkKind::self:
      return "self";
  }
  return "inner";
}

std::optional<LinkKind> parse_link_kind(const std::string& text) {
  if (text == "inner") return LinkKind::inner;
  if (text == "edge") return LinkKind::edge;
  if (text == "self") return LinkKind::self;
  return std::nullopt;
}

// ---------------------------------------------------------------- SdIndex

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end())
    throw InvalidArgument(std::string("duplicate ") + what + " '" + *dup + "'");
}

std::optional<std::size_t> find_id(const std::vector<std::string>& ids, const std::string& id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace

SdIndex::SdIndex(std::vector<std::string> sources, std::vector<std::string> destinations)
    : sources_(std::move(sources)), destinations_(std::move(destinations)) {
  if (sources_.empty() || destinations_.empty())
    throw InvalidArgument("SD index needs at least one source and one destination");
  require_unique(sources_, "source");
  require_unique(destinations_, "destination");
}

std::size_t SdIndex::pair(std::size_t source, std::size_t destination) const {
  if (source >= sources_.size() || destination >= destinations_.size())
    throw DimensionError("SD pair index out of range");
  return source * destinations_.size() + destination;
}

std::optional<std::size_t> SdIndex::find_source(const std::string& id) const {
  return find_id(sources_, id);
}

std::optional<std::size_t> SdIndex::find_destination(const std::string& id) const {
  return find_id(destinations_, id);
}

std::optional<std::size_t> SdIndex::find_pair(const std::string& source,
                                              const std::string& destination) const {
  auto s = find_source(source);
  auto d = find_destination(destination);
  if (!s || !d) return std::nullopt;
  return pair(*s, *d);
}

bool SdIndex::is_self(std::size_t pair) const {
  return sources_[source_of(pair)] == destinations_[destination_of(pair)];
}

std::vector<bool> SdIndex::self_mask() const {
  std::vector<bool> mask(pair_count());
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = is_self(j);
  return mask;
}

// ---------------------------------------------------------- value vectors

TrafficVector::TrafficVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j]) || values_[j] < 0.0)
      throw InvalidArgument("traffic component " + std::to_string(j) +
                            " is negative or not finite");
  }
}

double TrafficVector::total() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

LinkLoads::LinkLoads(std::vector<double> values, std::vector<bool> observed)
    : values_(std::move(values)), observed_(std::move(observed)) {
  if (values_.size() != observed_.size())
    throw DimensionError("link loads and observation mask differ in length");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (observed_[i] && (!std::isfinite(values_[i]) || values_[i] < 0.0))
      throw InvalidArgument("observed load on link " + std::to_string(i) +
                            " is negative or not finite");
  }
}

LinkLoads LinkLoads::fully_observed(std::vector<double> values) {
  std::vector<bool> mask(values.size(), true);
  return LinkLoads(std::move(values), std::move(mask));
}

std::size_t LinkLoads::observed_count() const {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), true));
}

LinkLoads LinkLoads::with_observed(std::vector<bool> mask) const {
  return LinkLoads(values_, std::move(mask));
}

// ---------------------------------------------------------- RoutingMatrix

RoutingMatrix::RoutingMatrix(std::size_t pair_count, std::vector<LinkInfo> links,
                             std::vector<std::vector<std::size_t>> row_support,
                             std::vector<bool> self_pairs, Completeness completeness)
    : pair_count_(pair_count),
      links_(std::move(links)),
      support_(std::move(row_support)),
      self_pairs_(std::move(self_pairs)) {
  if (support_.size() != links_.size())
    throw DimensionError("routing matrix: link metadata and row count differ");
  if (self_pairs_.size() != pair_count_)
    throw DimensionError("routing matrix: self-pair mask has wrong length");

  dense_.assign(links_.size() * pair_count_, 0);
  std::vector<bool> routed(pair_count_, false);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    auto& row = support_[i];
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end())
      throw InvalidArgument("link '" + links_[i].id + "' lists an SD pair twice");
    for (std::size_t j : row) {
      if (j >= pair_count_)
        throw DimensionError("link '" + links_[i].id + "' references pair " +
                             std::to_string(j) + " out of range");
      dense_[i * pair_count_ + j] = 1;
      routed[j] = true;
    }
    if (links_[i].kind == LinkKind::self) {
      if (row.size() != 1 || !self_pairs_[row.front()])
        throw InvalidArgument("self link '" + links_[i].id +
                              "' must carry exactly one self pair");
    }
  }
  if (completeness == Completeness::every_pair_routed) {
    auto it = std::find(routed.begin(), routed.end(), false);
    if (it != routed.end())
      throw InvalidArgument("SD pair " + std::to_string(it - routed.begin()) +
                            " is not routed over any link");
  }
}

std::vector<bool> RoutingMatrix::observed_mask() const {
  std::vector<bool> mask(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) mask[i] = links_[i].observed;
  return mask;
}

std::size_t RoutingMatrix::observed_count() const {
  return static_cast<std::size_t>(std::count_if(
      links_.begin(), links_.end(), [](const LinkInfo& l) { return l.observed; }));
}

RoutingMatrix RoutingMatrix::with_observed(const std::vector<bool>& mask) const {
  if (mask.size() != links_.size()) throw DimensionError("observation mask has wrong length");
  RoutingMatrix copy = *this;
  for (std::size_t i = 0; i < mask.size(); ++i) copy.links_[i].observed = mask[i];
  return copy;
}

std::vector<std::optional<std::size_t>> RoutingMatrix::self_link_of_pair() const {
  std::vector<std::optional<std::size_t>> out(pair_count_);
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].kind == LinkKind::self) out[support_[i].front()] = i;
  return out;
}

// ------------------------------------------------------------- operations

LinkLoads forward(const RoutingMatrix& routing, const TrafficVector& traffic) {
  if (traffic.size() != routing.pair_count())
    throw DimensionError("forward: routing has " + std::to_string(routing.pair_count()) +
                         " columns but traffic has " + std::to_string(traffic.size()) +
                         " components");
  std::vector<double> y(routing.link_count(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j : routing.row(i)) y[i] += traffic[j];
  return LinkLoads::fully_observed(std::move(y));
}

RoutingMatrix submatrix(const RoutingMatrix& routing, std::span<const std::size_t> rows,
                        std::span<const std::size_t> columns) {
  // columns[j_new] = j_old; build the inverse map for remapping supports.
  constexpr std::size_t absent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> new_column(routing.pair_count(), absent);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= routing.pair_count()) throw DimensionError("submatrix: column out of range");
    new_column[columns[k]] = k;
  }

  std::vector<LinkInfo> links;
  std::vector<std::vector<std::size_t>> support;
  links.reserve(rows.size());
  support.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= routing.link_count()) throw DimensionError("submatrix: row out of range");
    LinkInfo info = routing.link(i);
    info.observed = true;
    links.push_back(std::move(info));
    std::vector<std::size_t> row;
    for (std::size_t j : routing.row(i))
      if (new_column[j] != absent) row.push_back(new_column[j]);
    support.push_back(std::move(row));
  }
  std::vector<bool> self(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) self[k] = routing.is_self_pair(columns[k]);
  return RoutingMatrix(columns.size(), std::move(links), std::move(support), std::move(self),
                       Completeness::allow_unrouted);
}

ObservedSystem restrict_observed(const RoutingMatrix& routing, const LinkLoads& loads) {
  if (loads.size() != routing.link_count())
    throw DimensionError("restrict: routing has " + std::to_string(routing.link_count()) +
                         " links but loads have " + std::to_string(loads.size()));
  if (routing.observed_mask() != loads.observed_mask())
    throw InvalidArgument("restrict: observation masks of routing and loads disagree");

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < loads.size(); ++i)
    if (loads.observed(i)) rows.push_back(i);
  if (rows.empty()) throw InvalidArgument("restrict: no observed links");

  std::vector<std::size_t> all_columns(routing.pair_count());
  std::iota(all_columns.begin(), all_columns.end(), std::size_t{0});

  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t i : rows) y.push_back(loads[i]);
  return ObservedSystem{submatrix(routing, rows, all_columns),
                        LinkLoads::fully_observed(std::move(y)), rows};
}

ReducedSystem reduce_zero_loads(const RoutingMatrix& observed, const LinkLoads& loads) {
  if (loads.size() != observed.link_count())
    throw DimensionError("reduce: routing and loads differ in link count");
  if (loads.observed_count() != loads.size())
    throw InvalidArgument("reduce: expects an observed system (restrict first)");

  std::vector<bool> forced(observed.pair_count(), false);
  for (std::size_t i = 0; i < loads.size(); ++i)
    if (loads[i] == 0.0)
      for (std::size_t j : observed.row(i)) forced[j] = true;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (loads[i] == 0.0) continue;
    const auto row = observed.row(i);
    bool has_free_pair = std::any_of(row.begin(), row.end(), [&](std::size_t j) { return !forced[j]; });
    if (!has_free_pair)
      throw InfeasibleError("inconsistent loads: link '" + observed.link(i).id + "' carries " +
                            std::to_string(loads[i]) +
                            " but every SD pair routed over it is forced to zero by a "
                            "zero-load link");
    rows.push_back(i);
  }

  std::vector<std::size_t> kept, forced_zero;
  for (std::size_t j = 0; j < forced.size(); ++j) (forced[j] ? forced_zero : kept).push_back(j);
  if (kept.empty()) throw InfeasibleError("degenerate loads: every SD pair is forced to zero");
  if (rows.empty()) throw InfeasibleError("degenerate loads: all observed loads are zero");

  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t i : rows) y.push_back(loads[i]);
  return ReducedSystem{submatrix(observed, rows, kept), LinkLoads::fully_observed(std::move(y)),
                       rows, std::move(kept), std::move(forced_zero)};
}

}  // namespace tomo
