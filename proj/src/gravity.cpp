#include "tomogravity/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tomogravity/errors.hpp"

namespace tomo {

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void require_nonnegative(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidArgument(std::string(what) + " has a negative or non-finite entry");
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {
  require_nonnegative(values_, "probability vector");
  if (std::abs(sum(values_) - 1.0) > probability_sum_tolerance)
    throw InvalidArgument("probability vector does not sum to 1");
}

ProbabilityVector ProbabilityVector::normalized(std::vector<double> weights) {
  require_nonnegative(weights, "weight vector");
  const double total = sum(weights);
  if (!(total > 0.0)) throw InvalidArgument("cannot normalize an all-zero weight vector");
  for (double& w : weights) w /= total;
  return ProbabilityVector(std::move(weights));
}

ProbabilityVector ProbabilityVector::uniform(std::size_t size) {
  if (size == 0) throw InvalidArgument("uniform distribution over an empty set");
  return ProbabilityVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbabilityVector GravityFactors::product(const SdIndex& index) const {
  if (p.size() != index.source_count() || q.size() != index.destination_count())
    throw DimensionError("gravity factors do not match the SD index");
  std::vector<double> g(index.pair_count());
  for (std::size_t s = 0; s < p.size(); ++s)
    for (std::size_t d = 0; d < q.size(); ++d) g[index.pair(s, d)] = p[s] * q[d];
  return ProbabilityVector(std::move(g));
}

NodeTotals::NodeTotals(std::vector<double> inbound, std::vector<double> outbound,
                       double relative_tolerance)
    : inbound_(std::move(inbound)), outbound_(std::move(outbound)) {
  require_nonnegative(inbound_, "inbound totals");
  require_nonnegative(outbound_, "outbound totals");
  total_ = sum(inbound_);
  const double out_total = sum(outbound_);
  if (std::abs(total_ - out_total) > relative_tolerance * std::max(total_, out_total))
    throw InvalidArgument("inbound total " + std::to_string(total_) +
                          " does not match outbound total " + std::to_string(out_total));
}

NodeTotals node_totals(const Network& network, const LinkLoads& loads, bool include_self) {
  if (loads.size() != network.links().size())
    throw DimensionError("node_totals: loads do not match the topology");
  const SdIndex& index = network.index();
  std::vector<double> inbound(index.source_count(), 0.0), outbound(index.destination_count(), 0.0);

  auto need = [&](std::size_t i) {
    if (!loads.observed(i))
      throw InvalidArgument("node totals need every edge link observed; '" +
                            network.links()[i].id + "' is not");
    return loads[i];
  };
  for (std::size_t i = 0; i < network.links().size(); ++i) {
    const Link& link = network.links()[i];
    const std::string& from = network.nodes()[link.from].id;
    const std::string& to = network.nodes()[link.to].id;
    if (link.kind == LinkKind::self) {
      if (!include_self) continue;
      auto s = index.find_source(from);
      auto d = index.find_destination(to);
      if (s) inbound[*s] += need(i);
      if (d) outbound[*d] += need(i);
      continue;
    }
    if (network.is_inbound_edge(i))
      if (auto s = index.find_source(from)) inbound[*s] += need(i);
    if (network.is_outbound_edge(i))
      if (auto d = index.find_destination(to)) outbound[*d] += need(i);
  }
  return NodeTotals(std::move(inbound), std::move(outbound));
}

TrafficVector simple_gravity(const NodeTotals& totals, const SdIndex& index) {
  if (totals.inbound().size() != index.source_count() ||
      totals.outbound().size() != index.destination_count())
    throw DimensionError("node totals do not match the SD index");
  if (!(totals.total() > 0.0)) throw InvalidArgument("simple gravity needs a positive total flow");
  std::vector<double> x(index.pair_count());
  for (std::size_t s = 0; s < index.source_count(); ++s)
    for (std::size_t d = 0; d < index.destination_count(); ++d)
      x[index.pair(s, d)] = totals.inbound()[s] * totals.outbound()[d] / totals.total();
  return TrafficVector(std::move(x));
}

double kl_divergence(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) throw DimensionError("kl_divergence: length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (f[j] == 0.0) continue;
    if (g[j] == 0.0) return infinite_divergence;
    total += f[j] * std::log(f[j] / g[j]);
  }
  return total;
}

GravityFactors project_to_gravity(const ProbabilityVector& f, const SdIndex& index) {
  if (f.size() != index.pair_count()) throw DimensionError("project_to_gravity: size mismatch");
  GravityFactors out{std::vector<double>(index.source_count(), 0.0),
                     std::vector<double>(index.destination_count(), 0.0)};
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.p[index.source_of(j)] += f[j];
    out.q[index.destination_of(j)] += f[j];
  }
  return out;
}

ProbabilityVector project_to_gravity_excluding_self(const ProbabilityVector& f,
                                                    const SdIndex& index, double tol,
                                                    int max_iters) {
  if (f.size() != index.pair_count())
    throw DimensionError("project_to_gravity_excluding_self: size mismatch");
  const std::size_t ns = index.source_count(), nd = index.destination_count();
  const std::vector<bool> self = index.self_mask();

  std::vector<double> row(ns, 0.0), col(nd, 0.0);
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (self[j]) continue;
    row[index.source_of(j)] += f[j];
    col[index.destination_of(j)] += f[j];
  }

  std::vector<double> a(ns, 1.0), b(nd, 1.0);
  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t s = 0; s < ns; ++s) {
      double denom = 0.0;
      for (std::size_t d = 0; d < nd; ++d)
        if (!self[index.pair(s, d)]) denom += b[d];
      a[s] = denom > 0.0 ? row[s] / denom : 0.0;
    }
    double worst = 0.0;
    for (std::size_t d = 0; d < nd; ++d) {
      double denom = 0.0;
      for (std::size_t s = 0; s < ns; ++s)
        if (!self[index.pair(s, d)]) denom += a[s];
      b[d] = denom > 0.0 ? col[d] / denom : 0.0;
    }
    // Column sums now match exactly; check rows against their targets.
    for (std::size_t s = 0; s < ns; ++s) {
      double fitted = 0.0;
      for (std::size_t d = 0; d < nd; ++d)
        if (!self[index.pair(s, d)]) fitted += a[s] * b[d];
      worst = std::max(worst, std::abs(fitted - row[s]));
    }
    if (worst <= tol) break;
  }

  std::vector<double> g(f.size());
  for (std::size_t j = 0; j < f.size(); ++j)
    g[j] = self[j] ? f[j] : a[index.source_of(j)] * b[index.destination_of(j)];
  return ProbabilityVector::normalized(std::move(g));
}

}  // namespace tomo
