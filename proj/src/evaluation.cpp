#include "tomogravity/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <thread>

#include "tomogravity/errors.hpp"
#include "tomogravity/gravity.hpp"
#include "tomogravity/random.hpp"

namespace tomo {

// ----------------------------------------------------------------- metrics

double relative_total_error(std::span<const double> x_hat, const TrafficVector& x_true,
                            const SdIndex& index, bool exclude_self) {
  if (x_hat.size() != x_true.size() || x_true.size() != index.pair_count())
    throw DimensionError("relative_total_error: size mismatch");
  double numerator = 0.0, denominator = 0.0;
  for (std::size_t j = 0; j < x_true.size(); ++j) {
    if (exclude_self && index.is_self(j)) continue;
    numerator += std::abs(x_hat[j] - x_true[j]);
    denominator += x_true[j];
  }
  if (!(denominator > 0.0)) throw InvalidArgument("relative_total_error: true traffic is zero");
  return numerator / denominator;
}

PairTemporalErrors per_pair_temporal_error(const std::vector<std::vector<double>>& x_hat_series,
                                           const std::vector<TrafficVector>& x_true_series,
                                           std::size_t t_star) {
  if (t_star == 0) throw InvalidArgument("per_pair_temporal_error: window must be nonempty");
  if (x_hat_series.size() < t_star || x_true_series.size() < t_star)
    throw DimensionError("per_pair_temporal_error: series shorter than the window");
  const std::size_t pairs = x_true_series.front().size();
  std::vector<double> abs_error(pairs, 0.0), totals(pairs, 0.0);
  for (std::size_t t = 0; t < t_star; ++t) {
    if (x_hat_series[t].size() != pairs || x_true_series[t].size() != pairs)
      throw DimensionError("per_pair_temporal_error: snapshot size mismatch");
    for (std::size_t j = 0; j < pairs; ++j) {
      abs_error[j] += std::abs(x_hat_series[t][j] - x_true_series[t][j]);
      totals[j] += x_true_series[t][j];
    }
  }
  PairTemporalErrors out;
  out.errors.resize(pairs);
  for (std::size_t j = 0; j < pairs; ++j) {
    if (totals[j] > 0.0)
      out.errors[j] = abs_error[j] / totals[j];
    else
      out.zero_flow.push_back(j);
  }
  out.totals = std::move(totals);
  return out;
}

FlowGrouping group_by_flow(std::span<const FlowSample> samples, std::span<const double> grid) {
  if (grid.size() < 2) throw InvalidArgument("flow grid needs at least two points");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw InvalidArgument("flow grid must be strictly increasing");

  FlowGrouping out;
  std::vector<double> sums(grid.size() - 1, 0.0);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) out.groups.push_back({grid[k], grid[k + 1], 0, {}});
  for (const FlowSample& sample : samples) {
    // First grid point strictly above the total; its predecessor opens the bin.
    auto above = std::upper_bound(grid.begin(), grid.end(), sample.total);
    if (above == grid.begin() || above == grid.end()) {
      ++out.outside;
      continue;
    }
    const std::size_t bin = static_cast<std::size_t>(above - grid.begin()) - 1;
    ++out.groups[bin].count;
    sums[bin] += sample.error;
  }
  for (std::size_t k = 0; k < out.groups.size(); ++k)
    if (out.groups[k].count > 0) out.groups[k].mean_error = sums[k] / static_cast<double>(out.groups[k].count);
  return out;
}

std::vector<FlowSample> flow_samples(const PairTemporalErrors& errors, double unit) {
  if (!(unit > 0.0)) throw InvalidArgument("flow unit must be positive");
  std::vector<FlowSample> out;
  for (std::size_t j = 0; j < errors.errors.size(); ++j)
    if (errors.errors[j]) out.push_back({errors.totals[j] / unit, *errors.errors[j]});
  return out;
}

// --------------------------------------------------------------- synthetic

std::vector<double> lognormal_weights(std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("weight sigma must be nonnegative");
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& w : out) w = rng.lognormal(sigma);
  return out;
}

SyntheticSeries generate_synthetic(const Network& network, const SyntheticSpec& spec) {
  const SdIndex& index = network.index();
  if (spec.inbound_weights.size() != index.source_count() ||
      spec.outbound_weights.size() != index.destination_count())
    throw DimensionError("synthetic: node weights do not match the topology's sources/destinations");
  if (!(spec.delta >= 0.0) || !std::isfinite(spec.delta))
    throw InvalidArgument("synthetic: delta must be a finite nonnegative number");
  if (!(spec.total_flow > 0.0)) throw InvalidArgument("synthetic: total flow must be positive");
  if (!(std::abs(spec.diurnal_amplitude) < 1.0))
    throw InvalidArgument("synthetic: diurnal amplitude must lie in (-1, 1)");

  const ProbabilityVector p = ProbabilityVector::normalized(spec.inbound_weights);
  const ProbabilityVector q = ProbabilityVector::normalized(spec.outbound_weights);
  const std::vector<bool> observed = network.routing().observed_mask();

  SyntheticSeries out;
  Rng rng(spec.seed);
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const double n_t = spec.total_flow *
        (1.0 + spec.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0));
    std::vector<double> x(index.pair_count());
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = n_t * p[index.source_of(j)] * q[index.destination_of(j)];
    if (spec.delta > 0.0) {
      for (double& v : x) v *= rng.lognormal(spec.delta);
      const double scale = n_t / std::accumulate(x.begin(), x.end(), 0.0);
      for (double& v : x) v *= scale;
    }
    TrafficVector traffic(std::move(x));
    out.loads.push_back(forward(network.routing(), traffic).with_observed(observed));
    out.traffic.push_back(std::move(traffic));
  }
  return out;
}

// --------------------------------------------------------- method running

const char* to_string(Method method) {
  switch (method) {
    case Method::itg:
      return "itg";
    case Method::stg:
      return "stg";
    case Method::ertg:
      return "ertg";
  }
  return "itg";
}

std::optional<Method> parse_method(const std::string& text) {
  if (text == "itg") return Method::itg;
  if (text == "stg") return Method::stg;
  if (text == "ertg") return Method::ertg;
  return std::nullopt;
}

MethodEstimate run_method(Method method, const Network& network, const LinkLoads& loads,
                          const MethodOptions& options) {
  switch (method) {
    case Method::itg: {
      EstimateReport report = itg_estimate(network, loads, options.itg);
      return {report.x_hat.values(), report.converged};
    }
    case Method::stg: {
      const TrafficVector prior = simple_gravity(node_totals(network, loads), network.index());
      StgResult result = simple_tomogravity(network.routing(), loads, prior, options.stg);
      return {std::move(result.x_hat), true};
    }
    case Method::ertg: {
      const TrafficVector prior = simple_gravity(node_totals(network, loads), network.index());
      ErtgResult result = entropy_regularized_tomogravity(network.routing(), loads, prior, options.ertg);
      return {result.x_hat.values(), result.converged};
    }
  }
  throw InvalidArgument("unknown method");
}

namespace {

// Runs body(task) for task in [0, count) on up to `threads` workers. The
// first exception thrown by any task is rethrown after all workers stop.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t task = 0; task < count; ++task) body(task);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t task; (task = next.fetch_add(1)) < count;) {
        try {
          body(task);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ComparisonTable compare_methods(const Network& network, std::span<const LinkLoads> loads,
                                std::span<const TrafficVector> truth,
                                std::span<const Method> methods, const MethodOptions& options,
                                unsigned threads) {
  if (loads.size() != truth.size()) throw DimensionError("compare: loads and truth series differ in length");
  if (loads.empty()) throw InvalidArgument("compare: empty series");
  if (methods.empty()) throw InvalidArgument("compare: no methods requested");

  const std::size_t snapshots = loads.size(), m = methods.size();
  ComparisonTable table;
  table.methods.assign(methods.begin(), methods.end());
  table.errors.assign(snapshots, std::vector<double>(m, 0.0));
  table.converged.assign(snapshots, std::vector<bool>(m, true));
  table.estimates.assign(m, std::vector<std::vector<double>>(snapshots));

  parallel_for(snapshots * m, threads, [&](std::size_t task) {
    const std::size_t t = task / m, k = task % m;
    MethodEstimate estimate = run_method(methods[k], network, loads[t], options);
    table.errors[t][k] = relative_total_error(estimate.x_hat, truth[t], network.index(), true);
    table.estimates[k][t] = std::move(estimate.x_hat);
    // vector<bool> elements share words; write under the reduction below.
    if (!estimate.converged) {
      static std::mutex bit_mutex;
      std::lock_guard<std::mutex> lock(bit_mutex);
      table.converged[t][k] = false;
    }
  });

  table.mean_errors.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t t = 0; t < snapshots; ++t) table.mean_errors[k] += table.errors[t][k];
    table.mean_errors[k] /= static_cast<double>(snapshots);
  }
  return table;
}

// ------------------------------------------------------ missing-link sweep

std::vector<std::size_t> sweep_eligible_links(const Network& network) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < network.links().size(); ++i)
    if (network.links()[i].kind == LinkKind::edge && network.links()[i].observed) out.push_back(i);
  return out;
}

SweepResult missing_link_sweep(const Network& network, std::span<const LinkLoads> loads,
                               std::span<const TrafficVector> truth, const SweepOptions& options) {
  if (loads.size() != truth.size()) throw DimensionError("sweep: loads and truth series differ in length");
  if (loads.empty()) throw InvalidArgument("sweep: empty series");
  if (options.reps == 0) throw InvalidArgument("sweep: reps must be >= 1");
  const std::vector<std::size_t> eligible = sweep_eligible_links(network);
  if (options.k_max >= eligible.size())
    throw InvalidArgument("sweep: k_max = " + std::to_string(options.k_max) +
                          " must be below the number of eligible edge links (" +
                          std::to_string(eligible.size()) + ")");
  validate(options.itg);

  SweepResult result;
  for (std::size_t k = 0; k <= options.k_max; ++k) {
    const std::size_t reps = k == 0 ? 1 : options.reps;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      SweepCell cell{k, rep, {}, 0.0, true};
      if (k > 0) {
        Rng rng(derive_seed(options.seed, {k, rep}));
        for (std::size_t pick : rng.subset(eligible.size(), k)) cell.masked_links.push_back(eligible[pick]);
      }
      result.cells.push_back(std::move(cell));
    }
  }

  const std::vector<bool> base_mask = network.routing().observed_mask();
  parallel_for(result.cells.size(), options.threads, [&](std::size_t c) {
    SweepCell& cell = result.cells[c];
    std::vector<bool> mask = base_mask;
    for (std::size_t link : cell.masked_links) mask[link] = false;
    const Network masked = network.with_observed(mask);
    double total = 0.0;
    bool converged = true;
    for (std::size_t t = 0; t < loads.size(); ++t) {
      std::vector<bool> snapshot_mask = mask;
      for (std::size_t i = 0; i < mask.size(); ++i) snapshot_mask[i] = mask[i] && loads[t].observed(i);
      const EstimateReport report =
          itg_estimate(masked.with_observed(snapshot_mask), loads[t].with_observed(snapshot_mask), options.itg);
      total += relative_total_error(report.x_hat.values(), truth[t], network.index(), true);
      converged = converged && report.converged;
    }
    cell.mean_error = total / static_cast<double>(loads.size());
    cell.converged = converged;
  });

  for (const SweepCell& cell : result.cells) {
    if (result.rows.empty() || result.rows.back().k != cell.k) result.rows.push_back({cell.k, 0.0, 0, 0});
    SweepRow& row = result.rows.back();
    row.mean_error += cell.mean_error;
    ++row.cells;
    if (!cell.converged) ++row.unconverged;
  }
  for (SweepRow& row : result.rows) row.mean_error /= static_cast<double>(row.cells);
  return result;
}

}  // namespace tomo
