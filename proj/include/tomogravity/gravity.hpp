#pragma once

// Gravity model: node totals, the simple gravity solution, Kullback-Leibler
// divergence, and the closed-form KL projection onto rank-1 probability
// matrices.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tomogravity/network.hpp"
#include "tomogravity/topology.hpp"

namespace tomo {

inline constexpr double probability_sum_tolerance = 1e-12;

// Nonnegative vector summing to one.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  // Throws InvalidArgument unless values >= 0 and |sum - 1| <= 1e-12.
  explicit ProbabilityVector(std::vector<double> values);
  // Divides by the sum; throws if the weights are all zero.
  static ProbabilityVector normalized(std::vector<double> weights);
  static ProbabilityVector uniform(std::size_t size);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

// Rank-1 factorization g_sd = p_s q_d.
struct GravityFactors {
  std::vector<double> p;  // over sources
  std::vector<double> q;  // over destinations

  ProbabilityVector product(const SdIndex& index) const;
};

// Total traffic entering the network at each source and leaving at each
// destination.
class NodeTotals {
 public:
  NodeTotals(std::vector<double> inbound, std::vector<double> outbound,
             double relative_tolerance = 1e-9);

  const std::vector<double>& inbound() const noexcept { return inbound_; }
  const std::vector<double>& outbound() const noexcept { return outbound_; }
  double total() const noexcept { return total_; }

 private:
  std::vector<double> inbound_;
  std::vector<double> outbound_;
  double total_ = 0.0;
};

// Sums observed edge-link loads per node. With `include_self`, each node's
// self-link load is added to both its inbound and outbound totals. Throws
// InvalidArgument when a needed link is unobserved.
NodeTotals node_totals(const Network& network, const LinkLoads& loads, bool include_self = true);

// x_sd = N_in(s) N_out(d) / N.
TrafficVector simple_gravity(const NodeTotals& totals, const SdIndex& index);

// Returned by kl_divergence when f puts mass where g has none.
inline constexpr double infinite_divergence = std::numeric_limits<double>::infinity();
inline bool is_infinite_divergence(double value) { return value == infinite_divergence; }

// sum_j f_j log(f_j / g_j), with 0 log(0/g) = 0.
double kl_divergence(std::span<const double> f, std::span<const double> g);
inline double kl_divergence(const ProbabilityVector& f, const ProbabilityVector& g) {
  return kl_divergence(f.values(), g.values());
}

// argmin over rank-1 g of K(f, g): the product of the row and column
// marginals of f.
GravityFactors project_to_gravity(const ProbabilityVector& f, const SdIndex& index);

// Variant that leaves self pairs out of the rank-1 structure: g_ss = f_ss and
// g_sd = a_s b_d for s != d, the KL projection onto the quasi-independence
// model, computed by iterative proportional fitting.
ProbabilityVector project_to_gravity_excluding_self(const ProbabilityVector& f,
                                                    const SdIndex& index, double tol = 1e-14,
                                                    int max_iters = 100000);

}  // namespace tomo
