#pragma once

// Error metrics, flow-level grouping, synthetic workloads, method comparison
// and the missing-edge-link robustness sweep.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tomogravity/estimators.hpp"
#include "tomogravity/network.hpp"
#include "tomogravity/topology.hpp"

namespace tomo {

// ----------------------------------------------------------------- metrics

// sum |x_hat - x| / sum x over the included pairs (self pairs dropped when
// `exclude_self`). Throws InvalidArgument for a zero denominator.
double relative_total_error(std::span<const double> x_hat, const TrafficVector& x_true,
                            const SdIndex& index, bool exclude_self = true);

struct PairTemporalErrors {
  // Per pair: sum_t |x_hat - x| / sum_t x, or nullopt when sum_t x = 0.
  std::vector<std::optional<double>> errors;
  std::vector<double> totals;            // sum_t x per pair
  std::vector<std::size_t> zero_flow;    // pairs with sum_t x = 0
};

// Uses the first `t_star` snapshots of each series.
PairTemporalErrors per_pair_temporal_error(const std::vector<std::vector<double>>& x_hat_series,
                                           const std::vector<TrafficVector>& x_true_series,
                                           std::size_t t_star);

// Flow-level grid of the backbone study, in units of 1e10 packets.
inline constexpr std::array<double, 12> flow_level_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5,
                                                           2.0, 2.5, 3.0, 4.0, 5.0, 7.0};
inline constexpr double flow_level_unit = 1e10;

struct FlowSample {
  double total = 0.0;  // already in grid units
  double error = 0.0;
};

struct FlowGroup {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_error;  // nullopt for an empty bin
};

struct FlowGrouping {
  std::vector<FlowGroup> groups;  // half-open bins [grid_k, grid_k+1)
  std::size_t outside = 0;        // samples below grid_0 or at/above the last point
};

// Throws InvalidArgument unless the grid has >= 2 strictly increasing points.
FlowGrouping group_by_flow(std::span<const FlowSample> samples, std::span<const double> grid);

// Samples from the pairs with positive total flow, totals divided by `unit`.
std::vector<FlowSample> flow_samples(const PairTemporalErrors& errors, double unit);

// --------------------------------------------------------------- synthetic

struct SyntheticSpec {
  std::vector<double> inbound_weights;   // over sources, normalized internally
  std::vector<double> outbound_weights;  // over destinations, normalized internally
  double delta = 0.0;                    // log-normal perturbation scale
  std::size_t steps = 1;
  std::uint64_t seed = 0;
  double total_flow = 1e10;              // per snapshot
  // N_t = total_flow * (1 + amplitude * sin(2 pi t / 24)).
  double diurnal_amplitude = 0.0;
};

struct SyntheticSeries {
  std::vector<TrafficVector> traffic;
  std::vector<LinkLoads> loads;  // masked by the topology's observed flags
};

// x_sd(t) = N_t p_s q_d eps_sd(t), eps ~ logN(0, delta^2) i.i.d., rescaled so
// each snapshot sums to N_t; y(t) = A x(t).
SyntheticSeries generate_synthetic(const Network& network, const SyntheticSpec& spec);

// n i.i.d. log-normal(0, sigma^2) weights.
std::vector<double> lognormal_weights(std::size_t n, double sigma, std::uint64_t seed);

// --------------------------------------------------------- method running

enum class Method { itg, stg, ertg };

const char* to_string(Method method);
std::optional<Method> parse_method(const std::string& text);

struct MethodOptions {
  ItgOptions itg;
  StgOptions stg;
  ErtgOptions ertg;
};

struct MethodEstimate {
  std::vector<double> x_hat;
  bool converged = true;
};

// STG and ERTG use the simple gravity prior from the snapshot's edge loads.
MethodEstimate run_method(Method method, const Network& network, const LinkLoads& loads,
                          const MethodOptions& options);

struct ComparisonTable {
  std::vector<Method> methods;
  std::vector<std::vector<double>> errors;     // [snapshot][method]
  std::vector<std::vector<bool>> converged;    // [snapshot][method]
  std::vector<double> mean_errors;             // [method]
  std::vector<std::vector<std::vector<double>>> estimates;  // [method][snapshot]
};

ComparisonTable compare_methods(const Network& network, std::span<const LinkLoads> loads,
                                std::span<const TrafficVector> truth,
                                std::span<const Method> methods, const MethodOptions& options,
                                unsigned threads = 1);

// ------------------------------------------------------ missing-link sweep

struct SweepOptions {
  std::size_t k_max = 5;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  ItgOptions itg;
  unsigned threads = 1;
};

struct SweepCell {
  std::size_t k = 0;
  std::size_t rep = 0;
  std::vector<std::size_t> masked_links;
  double mean_error = 0.0;  // over snapshots
  bool converged = true;
};

struct SweepRow {
  std::size_t k = 0;
  double mean_error = 0.0;  // over cells
  std::size_t cells = 0;
  std::size_t unconverged = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;  // ordered by (k, rep)
};

// Non-self edge links that are observed in the topology and may be masked.
std::vector<std::size_t> sweep_eligible_links(const Network& network);

// For each k in 0..k_max, masks `reps` uniform random k-subsets of eligible
// edge links (one cell at k = 0), runs ITG on every snapshot and averages the
// relative total error. Cell (k, rep) draws from its own derived stream, so
// results do not depend on `threads`.
SweepResult missing_link_sweep(const Network& network, std::span<const LinkLoads> loads,
                               std::span<const TrafficVector> truth, const SweepOptions& options);

}  // namespace tomo
