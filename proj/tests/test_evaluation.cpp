#include <cmath>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tomogravity/errors.hpp"
#include "tomogravity/evaluation.hpp"

using namespace tomo;

namespace {

SyntheticSpec benchmark_spec(const Network& net, double delta, std::size_t steps, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.inbound_weights = lognormal_weights(net.index().source_count(), 1.0, seed + 1);
  spec.outbound_weights = lognormal_weights(net.index().destination_count(), 1.0, seed + 2);
  spec.delta = delta;
  spec.steps = steps;
  spec.seed = seed;
  spec.diurnal_amplitude = 0.3;
  return spec;
}

}  // namespace

TEST_CASE("relative total error arithmetic") {
  const SdIndex index({"a", "b"}, {"c", "d"});
  const TrafficVector x({2, 2, 1, 1});
  const std::vector<double> same = x.values();
  CHECK(relative_total_error(same, x, index) == 0.0);
  const std::vector<double> zero(4, 0.0);
  CHECK(relative_total_error(zero, x, index) == 1.0);

  const SdIndex two({"a"}, {"b", "c"});
  const std::vector<double> hat = {1, 3};
  CHECK(relative_total_error(hat, TrafficVector({2, 2}), two) == 0.5);
}

TEST_CASE("relative total error skips self pairs") {
  const SdIndex index({"a", "b"}, {"a", "b"});
  const TrafficVector x({100, 2, 2, 100});
  const std::vector<double> hat = {0, 1, 3, 0};
  CHECK(relative_total_error(hat, x, index) == 0.5);
  CHECK(relative_total_error(hat, x, index, false) == doctest::Approx(202.0 / 204.0));
  CHECK_THROWS_AS(relative_total_error(hat, TrafficVector({1, 0, 0, 1}), index), InvalidArgument);
}

TEST_CASE("per-pair temporal error arithmetic") {
  SUBCASE("two-step series") {
    const auto e = per_pair_temporal_error({{2}, {2}}, {TrafficVector({1}), TrafficVector({3})}, 2);
    CHECK(*e.errors[0] == 0.5);
    CHECK(e.totals[0] == 4.0);
  }
  SUBCASE("single step reduces to |x_hat - x| / x") {
    const auto e = per_pair_temporal_error({{1.5, 4}}, {TrafficVector({1, 5})}, 1);
    CHECK(*e.errors[0] == 0.5);
    CHECK(*e.errors[1] == 0.2);
  }
  SUBCASE("exact constant series") {
    const auto e = per_pair_temporal_error({{1, 2}, {1, 2}, {1, 2}},
                                           {TrafficVector({1, 2}), TrafficVector({1, 2}), TrafficVector({1, 2})}, 3);
    CHECK(*e.errors[0] == 0.0);
    CHECK(*e.errors[1] == 0.0);
  }
  SUBCASE("zero-flow pairs are set aside") {
    const auto e = per_pair_temporal_error({{1, 0.5}}, {TrafficVector({1, 0})}, 1);
    CHECK_FALSE(e.errors[1].has_value());
    CHECK(e.zero_flow == std::vector<std::size_t>{1});
    CHECK(flow_samples(e, 1.0).size() == 1);
  }
  SUBCASE("window longer than the series") {
    CHECK_THROWS_AS(per_pair_temporal_error({{1}}, {TrafficVector({1})}, 2), DimensionError);
  }
}

TEST_CASE("error metrics are scale invariant") {
  oracle::Gen gen(6);
  const SdIndex index({"a", "b", "c"}, {"a", "b", "c"});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(9), hat(9), xs(9), hats(9);
    const double alpha = std::exp(gen.uniform(-10, 10));
    for (std::size_t j = 0; j < 9; ++j) {
      x[j] = gen.uniform(0.1, 5);
      hat[j] = gen.uniform(0, 5);
      xs[j] = alpha * x[j];
      hats[j] = alpha * hat[j];
    }
    CHECK(relative_total_error(hats, TrafficVector(xs), index) ==
          doctest::Approx(relative_total_error(hat, TrafficVector(x), index)).epsilon(1e-12));
    const auto e1 = per_pair_temporal_error({hat}, {TrafficVector(x)}, 1);
    const auto e2 = per_pair_temporal_error({hats}, {TrafficVector(xs)}, 1);
    for (std::size_t j = 0; j < 9; ++j) CHECK(*e2.errors[j] == doctest::Approx(*e1.errors[j]).epsilon(1e-12));
  }
}

TEST_CASE("flow grouping uses half-open bins") {
  CHECK(flow_level_grid.front() == 0.0);
  CHECK(flow_level_grid.back() == 7.0);
  CHECK(flow_level_grid.size() == 12);

  SUBCASE("boundary values land in the upper bin") {
    const std::vector<FlowSample> samples = {{0.25, 1.0}, {0.0, 3.0}, {0.2499, 5.0}, {5.0, 2.0}};
    const FlowGrouping g = group_by_flow(samples, flow_level_grid);
    REQUIRE(g.groups.size() == 11);
    CHECK(g.groups[0].count == 2);
    CHECK(*g.groups[0].mean_error == 4.0);
    CHECK(g.groups[1].count == 1);
    CHECK(*g.groups[1].mean_error == 1.0);
    CHECK(g.groups[10].lower == 5.0);
    CHECK(g.groups[10].count == 1);
    CHECK_FALSE(g.groups[5].mean_error.has_value());
  }
  SUBCASE("totals outside the grid are counted but not binned") {
    const std::vector<FlowSample> samples = {{7.0, 1.0}, {-1.0, 1.0}, {9.5, 1.0}};
    const FlowGrouping g = group_by_flow(samples, flow_level_grid);
    CHECK(g.outside == 3);
  }
  SUBCASE("a single bin holds everything") {
    const std::vector<FlowSample> samples = {{1.0, 0.1}, {1.2, 0.3}};
    const std::vector<double> grid = {0.0, 10.0};
    const FlowGrouping g = group_by_flow(samples, grid);
    CHECK(g.groups[0].count == 2);
    CHECK(*g.groups[0].mean_error == doctest::Approx(0.2));
  }
  SUBCASE("bad grids") {
    const std::vector<double> one = {1.0};
    const std::vector<double> flat = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(group_by_flow({}, one), InvalidArgument);
    CHECK_THROWS_AS(group_by_flow({}, flat), InvalidArgument);
  }
}

TEST_CASE("synthetic series") {
  const Network net = abilene_like_network();
  SUBCASE("no perturbation gives rank-1 snapshots") {
    const auto s = generate_synthetic(net, benchmark_spec(net, 0.0, 3, 1));
    const SdIndex& index = net.index();
    for (const TrafficVector& x : s.traffic) {
      // x_sd x_s'd' = x_sd' x_s'd for every 2x2 minor.
      for (std::size_t s1 = 0; s1 < 3; ++s1)
        for (std::size_t d1 = 0; d1 < 3; ++d1)
          CHECK(x[index.pair(s1, d1)] * x[index.pair(s1 + 1, d1 + 1)] ==
                doctest::Approx(x[index.pair(s1, d1 + 1)] * x[index.pair(s1 + 1, d1)]).epsilon(1e-12));
    }
  }
  SUBCASE("snapshots sum to the diurnal total and loads follow y = A x") {
    const auto spec = benchmark_spec(net, 0.5, 5, 2);
    const auto s = generate_synthetic(net, spec);
    REQUIRE(s.traffic.size() == 5);
    for (std::size_t t = 0; t < 5; ++t) {
      const double expected = spec.total_flow * (1.0 + 0.3 * std::sin(2.0 * M_PI * static_cast<double>(t) / 24.0));
      CHECK(s.traffic[t].total() == doctest::Approx(expected).epsilon(1e-12));
      CHECK(s.loads[t].values() == forward(net.routing(), s.traffic[t]).values());
    }
  }
  SUBCASE("same seed, same bits") {
    const auto a = generate_synthetic(net, benchmark_spec(net, 0.7, 4, 3));
    const auto b = generate_synthetic(net, benchmark_spec(net, 0.7, 4, 3));
    for (std::size_t t = 0; t < 4; ++t) CHECK(a.traffic[t].values() == b.traffic[t].values());
    const auto c = generate_synthetic(net, benchmark_spec(net, 0.7, 4, 4));
    CHECK(c.traffic[0].values() != a.traffic[0].values());
  }
  SUBCASE("unobserved topology links stay unobserved") {
    std::vector<bool> mask = net.routing().observed_mask();
    mask[0] = false;
    const auto s = generate_synthetic(net.with_observed(mask), benchmark_spec(net, 0.2, 1, 5));
    CHECK_FALSE(s.loads[0].observed(0));
  }
  SUBCASE("invalid specs") {
    auto spec = benchmark_spec(net, -0.1, 1, 0);
    CHECK_THROWS_AS(generate_synthetic(net, spec), InvalidArgument);
    spec = benchmark_spec(net, 0.1, 1, 0);
    spec.inbound_weights.pop_back();
    CHECK_THROWS_AS(generate_synthetic(net, spec), DimensionError);
  }
}

TEST_CASE("rank-1 truth on a star is recovered") {
  const Network net = bipartite_star_network(4, 5);
  SyntheticSpec spec;
  spec.inbound_weights = lognormal_weights(4, 1.0, 1);
  spec.outbound_weights = lognormal_weights(5, 1.0, 2);
  spec.steps = 3;
  const auto s = generate_synthetic(net, spec);
  for (std::size_t t = 0; t < 3; ++t) {
    const EstimateReport r = itg_estimate(net, s.loads[t]);
    CHECK(relative_total_error(r.x_hat.values(), s.traffic[t], net.index()) <= 1e-4);
  }
}

TEST_CASE("method comparison") {
  const Network net = abilene_like_network();
  const auto s = generate_synthetic(net, benchmark_spec(net, 0.5, 4, 8));
  const std::vector<Method> methods = {Method::itg, Method::stg, Method::ertg};
  const ComparisonTable table = compare_methods(net, s.loads, s.traffic, methods, {});
  REQUIRE(table.mean_errors.size() == 3);
  REQUIRE(table.errors.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    const EstimateReport direct = itg_estimate(net, s.loads[t]);
    CHECK(table.errors[t][0] == relative_total_error(direct.x_hat.values(), s.traffic[t], net.index()));
  }
  SUBCASE("thread count does not change results") {
    const ComparisonTable threaded = compare_methods(net, s.loads, s.traffic, methods, {}, 3);
    CHECK(threaded.errors == table.errors);
  }
  SUBCASE("repeating a method repeats its column") {
    const std::vector<Method> twice = {Method::stg, Method::stg};
    const ComparisonTable t2 = compare_methods(net, s.loads, s.traffic, twice, {});
    for (const auto& row : t2.errors) CHECK(row[0] == row[1]);
  }
  SUBCASE("method names") {
    CHECK(parse_method("ertg") == Method::ertg);
    CHECK_FALSE(parse_method("gtg").has_value());
    CHECK(std::string(to_string(Method::stg)) == "stg");
  }
}

TEST_CASE("missing-link sweep") {
  const Network net = abilene_like_network();
  const auto s = generate_synthetic(net, benchmark_spec(net, 0.5, 2, 12));
  SweepOptions options;
  options.k_max = 2;
  options.reps = 3;
  options.seed = 5;
  const SweepResult result = missing_link_sweep(net, s.loads, s.traffic, options);

  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].cells == 1);
  CHECK(result.rows[1].cells == 3);
  CHECK(result.cells.size() == 7);

  SUBCASE("k = 0 equals the direct full-data evaluation") {
    double direct = 0.0;
    for (std::size_t t = 0; t < 2; ++t)
      direct += relative_total_error(itg_estimate(net, s.loads[t]).x_hat.values(), s.traffic[t], net.index());
    CHECK(result.rows[0].mean_error == direct / 2.0);
    CHECK(result.cells[0].masked_links.empty());
  }
  SUBCASE("masks are distinct edge links") {
    const auto eligible = sweep_eligible_links(net);
    CHECK(eligible.size() == 24);
    for (const SweepCell& cell : result.cells) {
      CHECK(cell.masked_links.size() == cell.k);
      for (std::size_t link : cell.masked_links) {
        CHECK(net.links()[link].kind == LinkKind::edge);
      }
      CHECK(std::adjacent_find(cell.masked_links.begin(), cell.masked_links.end()) == cell.masked_links.end());
    }
  }
  SUBCASE("reproducible and independent of threads") {
    SweepOptions threaded = options;
    threaded.threads = 4;
    const SweepResult again = missing_link_sweep(net, s.loads, s.traffic, threaded);
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      CHECK(again.cells[c].masked_links == result.cells[c].masked_links);
      CHECK(again.cells[c].mean_error == result.cells[c].mean_error);
    }
  }
  SUBCASE("k_max must leave an edge link observed") {
    SweepOptions bad = options;
    bad.k_max = 24;
    CHECK_THROWS_AS(missing_link_sweep(net, s.loads, s.traffic, bad), InvalidArgument);
  }
}

TEST_CASE("sweep on identifiable rank-1 traffic") {
  const Network net = abilene_like_network();
  const auto s = generate_synthetic(net, benchmark_spec(net, 0.0, 1, 21));
  SweepOptions options;
  options.k_max = 5;
  options.reps = 4;
  options.seed = 1;
  const SweepResult result = missing_link_sweep(net, s.loads, s.traffic, options);
  CHECK(result.rows[0].mean_error <= 1e-4);
  // Growth is a trend: the top of the range sits at or above the bottom.
  CHECK(result.rows.back().mean_error >= result.rows.front().mean_error);
}
