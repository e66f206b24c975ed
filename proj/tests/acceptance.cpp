// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Failing sub-checks are listed after the verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "support/instances.hpp"
#include "support/oracles.hpp"
#include "tomogravity/estimators.hpp"
#include "tomogravity/evaluation.hpp"
#include "tomogravity/projection.hpp"
#include "tomogravity/topology.hpp"

using namespace tomo;

namespace {

class Criterion {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& what) { notes_.push_back(what); }
  bool passed() const { return failures_.empty(); }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), pattern, a, b, c);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Abilene-like benchmark shared by criteria 4, 6 and 7.
struct Benchmark {
  Network network;
  SyntheticSeries series;
};

const Benchmark& benchmark() {
  static const Benchmark b = [] {
    Benchmark out;
    out.network = abilene_like_network();
    SyntheticSpec spec;
    spec.inbound_weights = lognormal_weights(out.network.index().source_count(), 1.0, 1);
    spec.outbound_weights = lognormal_weights(out.network.index().destination_count(), 1.0, 2);
    spec.delta = 0.5;
    spec.steps = 48;
    spec.seed = 7;
    spec.diurnal_amplitude = 0.3;
    out.series = generate_synthetic(out.network, spec);
    return out;
  }();
  return b;
}

// ------------------------------------------------------------------ 1

void projection_oracle(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  oracle::Gen gen(2024);
  const int count = 30;
  double worst = 0.0;
  for (int instance = 0; instance < count; ++instance) {
    const auto s = instances::small_system(gen, 4, 3);
    const ProjectionResult r = krupp_project(s.routing, s.loads, s.g);
    const auto expected = oracle::kl_projection(s.dense, s.y, s.g.values(), s.interior);
    worst = std::max(worst, std::abs(kl_divergence(r.f_new, s.g) - expected.divergence));
    c.check(r.converged, "instance " + std::to_string(instance) + " did not converge");
  }
  c.check(worst <= 1e-6, fmt("max |K - K_oracle| = %.3g > 1e-6", worst));
  c.note(fmt("%g instances, max |K - K_oracle| = %.3g", count, worst));

  const auto a = instances::routing_from_dense({{1, 1, 0}, {0, 1, 1}});
  const ProjectionResult r = krupp_project(a, LinkLoads::fully_observed({1, 1}), ProbabilityVector({0.5, 0.25, 0.25}));
  const double t =
      oracle::bisect([](double u) { return u * u - 2.0 * (1.0 - 2.0 * u) * (1.0 - 2.0 * u); }, 0.0, 0.5);
  const std::vector<double> expected = {t, 1.0 - 2.0 * t, t};
  const std::vector<double> quoted = {0.36939, 0.26121, 0.36939};
  for (std::size_t j = 0; j < 3; ++j) {
    c.check(std::abs(r.f_new[j] - expected[j]) <= 1e-9, fmt("worked example f[%g] off the 1-D root", j));
    c.check(std::abs(r.f_new[j] - quoted[j]) < 1e-5,
            fmt("worked example f[%g] = %.7f differs from %.5f by 1e-5 or more", j, r.f_new[j], quoted[j]));
  }
  const double elapsed = seconds_since(start);
  c.check(elapsed < 1.0, fmt("runtime %.2f s >= 1 s", elapsed));
  c.note(fmt("worked example f = (%.7f, %.7f, %.7f)", r.f_new[0], r.f_new[1], r.f_new[2]));
}

// ------------------------------------------------------------- 2 and 4

struct FidelityTally {
  int converged_runs = 0;
  double worst_load = 0.0;
  int self_mismatches = 0;
};

void record_fidelity(FidelityTally& tally, const Network& network, const LinkLoads& loads,
                     const EstimateReport& r) {
  if (!r.converged) return;
  ++tally.converged_runs;
  const RoutingMatrix& a = network.routing();
  for (std::size_t i = 0; i < a.link_count(); ++i) {
    if (!loads.observed(i) || !a.link(i).observed) continue;
    double fitted = 0.0;
    for (std::size_t j : a.row(i)) fitted += r.x_hat[j];
    const double err = loads[i] > 0.0 ? std::abs(fitted - loads[i]) / loads[i] : std::abs(fitted);
    tally.worst_load = std::max(tally.worst_load, err);
    if (a.link(i).kind == LinkKind::self && r.x_hat[a.row(i).front()] != loads[i]) ++tally.self_mismatches;
  }
}

void itg_monotone(Criterion& c, FidelityTally& tally) {
  const auto start = std::chrono::steady_clock::now();
  oracle::Gen gen(8080);
  const int count = 120;
  int violations = 0;
  double worst_rise = 0.0;
  for (int instance = 0; instance < count; ++instance) {
    const auto inst = instances::backbone_instance(gen, 12);
    c.check(inst.network.nodes().size() <= 12, "instance with more than 12 nodes");
    const EstimateReport r = itg_estimate(inst.network, inst.loads);
    for (std::size_t k = 1; k < r.kl_trajectory.size(); ++k) {
      const double rise = r.kl_trajectory[k] - r.kl_trajectory[k - 1];
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-12) ++violations;
    }
    record_fidelity(tally, inst.network, inst.loads, r);
  }
  c.check(violations == 0, fmt("%g outer iterations raised K by more than 1e-12", violations));
  c.note(fmt("%g instances, largest K increase %.3g", count, worst_rise));
  c.note(fmt("runtime %.2f s", seconds_since(start)));
}

// ------------------------------------------------------------------ 3

void exact_recovery(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  const Network net = bipartite_star_network(4, 5);
  SyntheticSpec spec;
  spec.inbound_weights = lognormal_weights(4, 1.0, 31);
  spec.outbound_weights = lognormal_weights(5, 1.0, 32);
  spec.delta = 0.0;
  spec.steps = 5;
  spec.seed = 33;
  const SyntheticSeries s = generate_synthetic(net, spec);
  double worst = 0.0;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const EstimateReport r = itg_estimate(net, s.loads[t]);
    worst = std::max(worst, relative_total_error(r.x_hat.values(), s.traffic[t], net.index()));
  }
  // The star sample of the forward example.
  const Network star = bipartite_star_network(2, 2);
  const EstimateReport r = itg_estimate(star, LinkLoads::fully_observed({3, 1, 2, 2}));
  worst = std::max(worst, relative_total_error(r.x_hat.values(), TrafficVector({1.5, 1.5, 0.5, 0.5}), star.index()));

  c.check(worst <= 1e-4, fmt("relative total error %.3g > 1e-4", worst));
  const double elapsed = seconds_since(start);
  c.check(elapsed < 1.0, fmt("runtime %.2f s >= 1 s", elapsed));
  c.note(fmt("max relative total error %.3g", worst));
}

void fidelity(Criterion& c, FidelityTally& tally) {
  const Benchmark& b = benchmark();
  for (const LinkLoads& y : b.series.loads) record_fidelity(tally, b.network, y, itg_estimate(b.network, y));
  c.check(tally.converged_runs > 0, "no converged runs");
  c.check(tally.worst_load <= 1e-6, fmt("max relative load error %.3g > 1e-6", tally.worst_load));
  c.check(tally.self_mismatches == 0, fmt("%g self pairs differ from their self-link loads", tally.self_mismatches));
  c.note(fmt("%g converged runs, max relative load error %.3g", tally.converged_runs, tally.worst_load));
}

// ------------------------------------------------------------------ 5

void baselines(Criterion& c) {
  {
    const auto a = instances::routing_from_dense({{1, 1, 0}, {0, 1, 1}});
    const StgResult r = simple_tomogravity(a, LinkLoads::fully_observed({3, 3}), TrafficVector({2, 0, 2}));
    const std::vector<double> quoted = {5.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0};
    double off = 0.0;
    for (std::size_t j = 0; j < 3; ++j) off = std::max(off, std::abs(r.x_hat[j] - quoted[j]));
    c.check(off <= 1e-10, fmt("STG example gives (%.6f, %.6f, %.6f), not (5/3, 4/3, 5/3)", r.x_hat[0], r.x_hat[1],
                              r.x_hat[2]));
    const oracle::Vec w = oracle::solve({{2, 1}, {1, 2}}, {1, 1});
    const oracle::Vec normal = {2 + w[0], w[0] + w[1], 2 + w[1]};
    double off_normal = 0.0;
    for (std::size_t j = 0; j < 3; ++j) off_normal = std::max(off_normal, std::abs(r.x_hat[j] - normal[j]));
    c.check(off_normal <= 1e-10, "STG example differs from x_tilde + A^T w with (A A^T) w = y - A x_tilde");
    c.note(fmt("STG example: x_tilde + A^T w = (%.6f, %.6f, %.6f)", normal[0], normal[1], normal[2]));
  }
  {
    oracle::Gen gen(555);
    const int count = 20;
    int beaten = 0;
    for (int instance = 0; instance < count; ++instance) {
      const auto s = instances::small_system(gen, 7, 4);
      oracle::Vec prior(s.interior.size());
      for (double& v : prior) v = gen.uniform(0.0, 3.0);
      const StgResult r = simple_tomogravity(s.routing, s.loads, TrafficVector(prior));
      const oracle::Mat basis = oracle::null_space(s.dense, s.interior.size());
      const double best = oracle::sq_dist(r.x_hat, prior);
      for (int trial = 0; trial < 1000; ++trial) {
        oracle::Vec z = s.interior;
        for (const auto& b : basis) {
          const double coef = gen.uniform(-2.0, 2.0);
          for (std::size_t j = 0; j < z.size(); ++j) z[j] += coef * b[j];
        }
        if (oracle::sq_dist(z, prior) + 1e-10 < best) ++beaten;
      }
    }
    c.check(beaten == 0, fmt("%g random feasible points closer to the prior than STG", beaten));
    c.note(fmt("STG optimality: %g instances x 1000 feasible points", count));
  }
  {
    const auto a = instances::routing_from_dense({{1}});
    ErtgOptions options;
    options.phi = 1.0;
    options.form = EntropyForm::standard;
    const ErtgResult r =
        entropy_regularized_tomogravity(a, LinkLoads::fully_observed({2}), TrafficVector({1}), options);
    const double root = oracle::bisect([](double x) { return 2.0 * (x - 2.0) + std::log(x) + 1.0; }, 0.1, 2.0);
    c.check(std::abs(r.x_hat[0] - root) <= 1e-4, fmt("ERTG gives %.6f, bisection root %.6f", r.x_hat[0], root));
    c.check(std::abs(1.5438 - root) <= 1e-4,
            fmt("quoted x = 1.5438 is not the root %.6f of 2(x-2) + log x + 1 = 0 (ERTG gives %.6f)", root,
                r.x_hat[0]));
  }
}

// ------------------------------------------------------------------ 6

void table_ordering(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  const Benchmark& b = benchmark();
  const std::vector<Method> methods = {Method::itg, Method::stg, Method::ertg};
  MethodOptions options;
  options.ertg.phi = 0.001;
  const ComparisonTable t =
      compare_methods(b.network, b.series.loads, b.series.traffic, methods, options, worker_threads());
  const double itg = t.mean_errors[0], stg = t.mean_errors[1], ertg = t.mean_errors[2];
  c.check(b.series.traffic.size() >= 48, "fewer than 48 snapshots");
  c.check(itg < stg, fmt("ITG %.6f is not below STG %.6f", itg, stg));
  c.check(std::abs(itg - ertg) / ertg <= 0.05, fmt("ITG %.6f not within 5%% of ERTG %.6f", itg, ertg));
  const double elapsed = seconds_since(start);
  c.check(elapsed < 60.0, fmt("runtime %.1f s >= 60 s", elapsed));
  c.note(fmt("mean error ITG %.6f  STG %.6f  ERTG %.6f", itg, stg, ertg));
}

// ------------------------------------------------------------------ 7

void missing_links(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  const Benchmark& b = benchmark();
  c.check(sweep_eligible_links(b.network).size() == 24, "benchmark does not have 24 eligible edge links");
  SweepOptions options;
  options.k_max = 5;
  options.reps = 10;
  options.seed = 11;
  options.threads = worker_threads();
  const SweepResult first = missing_link_sweep(b.network, b.series.loads, b.series.traffic, options);
  options.threads = 1;
  const SweepResult second = missing_link_sweep(b.network, b.series.loads, b.series.traffic, options);

  const double e0 = first.rows.front().mean_error, e5 = first.rows.back().mean_error;
  c.check(first.rows.back().k == 5, "sweep does not reach k = 5");
  c.check(e5 < 2.0 * e0, fmt("k = 5 error %.6f is not below twice the k = 0 error %.6f", e5, e0));
  bool identical = first.cells.size() == second.cells.size();
  for (std::size_t i = 0; identical && i < first.cells.size(); ++i)
    identical = first.cells[i].masked_links == second.cells[i].masked_links &&
                first.cells[i].mean_error == second.cells[i].mean_error;
  c.check(identical, "repeated sweep with the same seed differs");
  const double elapsed = seconds_since(start);
  c.check(elapsed < 120.0, fmt("runtime %.1f s >= 120 s", elapsed));
  c.note(fmt("k = 0 error %.6f, k = 5 error %.6f, ratio %.4f", e0, e5, e5 / e0));
}

// ------------------------------------------------------------------ 8

void metrics(Criterion& c) {
  const SdIndex two({"a"}, {"b", "c"});
  const TrafficVector x({2, 2});
  c.check(relative_total_error(x.values(), x, two) == 0.0, "x_hat = x does not give 0");
  const std::vector<double> zero(2, 0.0);
  c.check(relative_total_error(zero, x, two) == 1.0, "x_hat = 0 does not give 1");
  const std::vector<double> hat = {1, 3};
  c.check(relative_total_error(hat, x, two) == 0.5, "(2, 2) vs (1, 3) does not give 0.5");

  const auto constant =
      per_pair_temporal_error({{1, 2}, {1, 2}}, {TrafficVector({1, 2}), TrafficVector({1, 2})}, 2);
  c.check(*constant.errors[0] == 0.0 && *constant.errors[1] == 0.0, "constant exact series is not all zeros");
  const auto single = per_pair_temporal_error({{1.5, 4}}, {TrafficVector({1, 5})}, 1);
  c.check(*single.errors[0] == 0.5 && *single.errors[1] == 0.2, "t* = 1 is not |x_hat - x| / x");
  const auto steps = per_pair_temporal_error({{2}, {2}}, {TrafficVector({1}), TrafficVector({3})}, 2);
  c.check(*steps.errors[0] == 0.5, "two-step series does not give 0.5");

  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0};
  c.check(std::equal(grid.begin(), grid.end(), flow_level_grid.begin(), flow_level_grid.end()) &&
              flow_level_unit == 1e10,
          "default flow grid or unit differs");
  std::vector<FlowSample> on_edges;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) on_edges.push_back({grid[k], static_cast<double>(k)});
  const FlowGrouping g = group_by_flow(on_edges, flow_level_grid);
  for (std::size_t k = 0; k < g.groups.size(); ++k)
    c.check(g.groups[k].count == 1 && *g.groups[k].mean_error == static_cast<double>(k),
            fmt("boundary total %g did not land in bin [%g, ...)", grid[k], grid[k]));
  const std::vector<FlowSample> top = {{7.0, 1.0}};
  c.check(group_by_flow(top, flow_level_grid).outside == 1, "last grid point is not excluded");
  const std::vector<FlowSample> below = {{0.2499999, 1.0}};
  c.check(group_by_flow(below, flow_level_grid).groups[0].count == 1, "value below 1/4 left the first bin");
  const std::vector<FlowSample> together = {{1.1, 0.5}, {1.2, 1.5}, {1.4, 1.0}};
  const FlowGrouping one = group_by_flow(together, flow_level_grid);
  c.check(one.groups[4].count == 3 && *one.groups[4].mean_error == 1.0, "single-bin grouping");
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* title;
    std::function<void(Criterion&)> run;
  };
  FidelityTally tally;
  const std::vector<Entry> entries = {
      {1, "KL-projection oracle equivalence", projection_oracle},
      {2, "ITG monotonicity", [&](Criterion& c) { itg_monotone(c, tally); }},
      {3, "exact recovery of rank-1 traffic", exact_recovery},
      {4, "constraint fidelity", [&](Criterion& c) { fidelity(c, tally); }},
      {5, "baseline correctness", baselines},
      {6, "benchmark ordering", table_ordering},
      {7, "missing-link robustness", missing_links},
      {8, "metric arithmetic and binning", metrics},
  };
  bool all = true;
  for (const Entry& e : entries) {
    Criterion c;
    try {
      e.run(c);
    } catch (const std::exception& ex) {
      c.check(false, std::string("exception: ") + ex.what());
    }
    all = all && c.passed();
    std::printf("%s %d %s\n", c.passed() ? "PASS" : "FAIL", e.id, e.title);
    for (const std::string& n : c.notes()) std::printf("     %s\n", n.c_str());
    for (const std::string& f : c.failures()) std::printf("     failed: %s\n", f.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
