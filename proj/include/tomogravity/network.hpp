#pragma once

// Core tomographic model types: the SD-pair index space, the 0/1 routing
// matrix over it, traffic and link-load vectors, and the forward map y = Ax.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tomo {

enum class LinkKind { inner, edge, self };

const char* to_string(LinkKind kind);
std::optional<LinkKind> parse_link_kind(const std::string& text);

// Product set S x D of source and destination node identifiers. Pair j maps
// to (source j / |D|, destination j % |D|), row-major, for every module.
class SdIndex {
 public:
  SdIndex() = default;
  SdIndex(std::vector<std::string> sources, std::vector<std::string> destinations);

  std::size_t source_count() const noexcept { return sources_.size(); }
  std::size_t destination_count() const noexcept { return destinations_.size(); }
  std::size_t pair_count() const noexcept { return sources_.size() * destinations_.size(); }

  std::size_t pair(std::size_t source, std::size_t destination) const;
  std::size_t source_of(std::size_t pair) const { return pair / destinations_.size(); }
  std::size_t destination_of(std::size_t pair) const { return pair % destinations_.size(); }

  const std::string& source_id(std::size_t s) const { return sources_.at(s); }
  const std::string& destination_id(std::size_t d) const { return destinations_.at(d); }
  const std::vector<std::string>& sources() const noexcept { return sources_; }
  const std::vector<std::string>& destinations() const noexcept { return destinations_; }

  std::optional<std::size_t> find_source(const std::string& id) const;
  std::optional<std::size_t> find_destination(const std::string& id) const;
  std::optional<std::size_t> find_pair(const std::string& source, const std::string& destination) const;

  // A self pair has the same node as source and destination.
  bool is_self(std::size_t pair) const;
  std::vector<bool> self_mask() const;

 private:
  std::vector<std::string> sources_;
  std::vector<std::string> destinations_;
};

// Nonnegative SD flow vector x of length J.
class TrafficVector {
 public:
  TrafficVector() = default;
  explicit TrafficVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  const std::vector<double>& values() const noexcept { return values_; }
  double total() const;

 private:
  std::vector<double> values_;
};

// Per-link loads with an observation mask. Only observed entries are
// required to be finite and nonnegative; unobserved entries are ignored.
class LinkLoads {
 public:
  LinkLoads() = default;
  LinkLoads(std::vector<double> values, std::vector<bool> observed);
  static LinkLoads fully_observed(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  bool observed(std::size_t i) const { return observed_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<bool>& observed_mask() const noexcept { return observed_; }
  std::size_t observed_count() const;

  LinkLoads with_observed(std::vector<bool> mask) const;

 private:
  std::vector<double> values_;
  std::vector<bool> observed_;
};

struct LinkInfo {
  std::string id;
  LinkKind kind = LinkKind::inner;
  bool observed = true;
};

// Whether a routing matrix must route every SD pair. Full topologies do;
// observed or reduced sub-systems may leave columns empty.
enum class Completeness { every_pair_routed, allow_unrouted };

// 0/1 incidence of links (rows) over SD pairs (columns). Stored dense, with
// a sorted list of nonzero columns per row for sparse iteration.
class RoutingMatrix {
 public:
  RoutingMatrix() = default;
  RoutingMatrix(std::size_t pair_count, std::vector<LinkInfo> links,
                std::vector<std::vector<std::size_t>> row_support,
                std::vector<bool> self_pairs,
                Completeness completeness = Completeness::every_pair_routed);

  std::size_t link_count() const noexcept { return links_.size(); }
  std::size_t pair_count() const noexcept { return pair_count_; }

  bool entry(std::size_t link, std::size_t pair) const {
    return dense_[link * pair_count_ + pair] != 0;
  }
  std::span<const std::size_t> row(std::size_t link) const { return support_[link]; }

  const LinkInfo& link(std::size_t i) const { return links_.at(i); }
  const std::vector<LinkInfo>& links() const noexcept { return links_; }
  bool is_self_pair(std::size_t pair) const { return self_pairs_[pair]; }
  const std::vector<bool>& self_pairs() const noexcept { return self_pairs_; }

  std::vector<bool> observed_mask() const;
  std::size_t observed_count() const;
  RoutingMatrix with_observed(const std::vector<bool>& mask) const;

  // For each pair, the self link whose row pins it, if any.
  std::vector<std::optional<std::size_t>> self_link_of_pair() const;

 private:
  std::size_t pair_count_ = 0;
  std::vector<LinkInfo> links_;
  std::vector<std::vector<std::size_t>> support_;
  std::vector<std::uint8_t> dense_;
  std::vector<bool> self_pairs_;
};

// Rows `rows` and columns `columns` of `routing`, in the given order. The
// result allows unrouted columns and marks every row observed.
RoutingMatrix submatrix(const RoutingMatrix& routing, std::span<const std::size_t> rows,
                        std::span<const std::size_t> columns);

// y = A x. All links of the result are marked observed.
LinkLoads forward(const RoutingMatrix& routing, const TrafficVector& traffic);

// Rows of A and y for the observed links, order preserved.
struct ObservedSystem {
  RoutingMatrix routing;
  LinkLoads loads;
  std::vector<std::size_t> link_rows;  // original row of each retained row
};

ObservedSystem restrict_observed(const RoutingMatrix& routing, const LinkLoads& loads);

// Observed system with zero-load rows and the SD pairs they force to zero
// removed. All remaining loads are strictly positive.
struct ReducedSystem {
  RoutingMatrix routing;
  LinkLoads loads;
  std::vector<std::size_t> link_rows;    // row in the input system
  std::vector<std::size_t> kept_pairs;   // column in the input system
  std::vector<std::size_t> forced_zero;  // input columns pinned at 0
};

ReducedSystem reduce_zero_loads(const RoutingMatrix& observed, const LinkLoads& loads);

}  // namespace tomo
