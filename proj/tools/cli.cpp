#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tomogravity/errors.hpp"
#include "tomogravity/evaluation.hpp"
#include "tomogravity/io.hpp"
#include "tomogravity/random.hpp"

namespace tomo::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------ plumbing

std::string human(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

fs::path resolve_input(const std::string& text) {
  const fs::path path(text);
  if (path.is_absolute() || fs::exists(path)) return path;
  if (const char* dir = std::getenv(data_dir_variable); dir && *dir) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate;
  }
  return path;
}

// Files are staged in memory and written only once every computation has
// finished, each through a temporary sibling and a rename.
class Outputs {
 public:
  void add(std::string path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() const {
    for (const auto& [path, content] : files_) {
      const fs::path target(path);
      fs::path temp = target;
      temp += ".partial";
      {
        std::ofstream f(temp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + path + "' for writing");
        f << content;
        if (!f.flush()) throw IoError("write to '" + path + "' failed");
      }
      std::error_code ec;
      fs::rename(temp, target, ec);
      if (ec) {
        fs::remove(temp, ec);
        throw IoError("cannot move output into place at '" + path + "'");
      }
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

// '#' lines naming the command and every option value, so an output file
// records how it was made. Without its first line and the comment markers,
// the echo is a valid --config file.
std::string config_echo(const CLI::App& command) {
  std::ostringstream echo;
  echo << "# tomogravity " << command.get_name() << '\n';
  echo << "# [" << command.get_name() << "]\n";
  std::istringstream config(command.config_to_str(true, false));
  for (std::string line; std::getline(config, line);)
    if (!line.empty()) echo << "# " << line << '\n';
  return echo.str();
}

json config_json(const CLI::App& command) {
  json out = json::object();
  for (const CLI::Option* option : command.get_options()) {
    if (option->get_lnames().empty()) continue;
    const std::string& name = option->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto& results = option->results();
    if (option->get_expected_max() > 1 || results.size() > 1)
      out[name] = results;
    else if (!results.empty())
      out[name] = results.front();
    else if (option->get_type_size() == 0)
      out[name] = false;
    else
      out[name] = option->get_default_str();
  }
  return out;
}

std::string pair_label(const SdIndex& index, std::size_t j) {
  return index.source_id(index.source_of(j)) + "->" + index.destination_id(index.destination_of(j));
}

// Links the topology marks observed and every snapshot carries.
std::vector<bool> common_observation(const Network& network, const std::vector<LinkLoads>& series) {
  std::vector<bool> mask = network.routing().observed_mask();
  for (const LinkLoads& loads : series)
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && loads.observed(i);
  return mask;
}

// ------------------------------------------------------------- options

struct ItgFlags {
  double outer_tol = 1e-10;
  double inner_tol = 1e-12;
  int max_iters = 500;
  int starts = 1;
  std::string init = "uniform";
  bool exclude_self = false;

  void attach(CLI::App& command) {
    command.add_option("--outer-tol", outer_tol, "ITG stop: |change of K(f, g)| between outer iterations")
        ->capture_default_str();
    command.add_option("--inner-tol", inner_tol, "Tomographic projection feasibility tolerance")
        ->capture_default_str();
    command.add_option("--max-iters", max_iters, "ITG outer iteration cap")->capture_default_str();
    command.add_option("--starts", starts, "ITG restarts from perturbed initializations (best K wins)")
        ->capture_default_str();
    command.add_option("--init", init, "ITG initialization")
        ->check(CLI::IsMember({"uniform", "gravity"}))
        ->capture_default_str();
    command.add_flag("--gravity-excludes-self", exclude_self,
                     "Fit self pairs outside the rank-1 gravity structure");
  }

  ItgOptions options(std::uint64_t seed) const {
    ItgOptions o;
    o.outer_tol = outer_tol;
    o.inner_tol = inner_tol;
    o.max_outer_iters = max_iters;
    o.starts = starts;
    o.seed = seed;
    o.init = init == "gravity" ? ItgInit::gravity_seeded : ItgInit::uniform;
    o.gravity_excludes_self = exclude_self;
    validate(o);
    return o;
  }
};

struct SeriesInputs {
  std::string topology;
  std::string truth;
  std::string loads;

  void attach(CLI::App& command) {
    command.add_option("--topology", topology, "Topology file")->required();
    command.add_option("--truth-series", truth, "True traffic series file")->required();
    command.add_option("--loads-series", loads,
                       "Link-load series file (default: loads computed from the truth)");
  }

  struct Loaded {
    Network network;
    std::vector<TrafficVector> truth;
    std::vector<LinkLoads> loads;
  };

  Loaded load() const {
    Loaded in;
    const Network topo = load_network_file(resolve_input(topology));
    in.truth = load_traffic_series_file(resolve_input(truth), topo.index());
    if (in.truth.empty()) throw InvalidArgument("truth series '" + truth + "' has no snapshots");
    if (!loads.empty()) {
      in.loads = load_load_series_file(resolve_input(loads), topo);
      if (in.loads.size() != in.truth.size())
        throw DimensionError("load series has " + std::to_string(in.loads.size()) +
                             " snapshots but the truth series has " + std::to_string(in.truth.size()));
    } else {
      for (const TrafficVector& x : in.truth) in.loads.push_back(forward(topo.routing(), x));
    }
    const std::vector<bool> mask = common_observation(topo, in.loads);
    in.network = topo.with_observed(mask);
    for (LinkLoads& y : in.loads) y = y.with_observed(mask);
    return in;
  }
};

// ------------------------------------------------------------ estimate

struct EstimateCommand {
  std::string method = "itg";
  std::string topology, loads, truth, output, report;
  double phi = 1e-3;
  std::uint64_t seed = 0;
  bool clamp = false;
  ItgFlags itg;

  CLI::App* attach(CLI::App& app) {
    CLI::App* c = app.add_subcommand("estimate", "Estimate the traffic matrix of one load snapshot");
    c->add_option("--method", method, "Estimator")
        ->check(CLI::IsMember({"itg", "stg", "ertg"}))
        ->capture_default_str();
    c->add_option("--topology", topology, "Topology file")->required();
    c->add_option("--loads", loads, "Link-load file; links absent from it are unobserved")->required();
    c->add_option("--truth", truth, "True traffic file; adds the relative total error");
    c->add_option("-o,--output", output, "Write the estimate here (default: print it)");
    c->add_option("--report", report, "Write a JSON run report here");
    c->add_option("--phi", phi, "ERTG penalty weight")->capture_default_str();
    c->add_option("--seed", seed, "Seed for ITG restarts")->capture_default_str();
    c->add_flag("--clamp", clamp, "STG: clamp negative entries before scoring");
    itg.attach(*c);
    return c;
  }

  int execute(const CLI::App& command, std::ostream& out) const {
    MethodOptions options;
    options.itg = itg.options(seed);
    options.ertg.phi = phi;
    options.stg.clamp_negative = clamp;
    if (!(phi > 0.0)) throw InvalidArgument("--phi must be positive");

    const Network topo = load_network_file(resolve_input(topology));
    const LinkLoads raw = load_loads_file(resolve_input(loads), topo);
    std::optional<TrafficVector> x_true;
    if (!truth.empty()) x_true = load_traffic_file(resolve_input(truth), topo.index());
    const auto [network, y] = apply_observation(topo, raw);
    const SdIndex& index = network.index();

    json summary;
    summary["method"] = method;
    std::vector<double> x_hat;
    bool converged = true;
    std::vector<std::string> notes;

    if (method == "itg") {
      const EstimateReport r = itg_estimate(network, y, options.itg);
      x_hat = r.x_hat.values();
      converged = r.converged;
      summary["n_hat"] = r.n_hat;
      summary["outer_iters"] = r.outer_iters;
      summary["final_kl"] = r.kl_trajectory.back();
      summary["kl_trajectory"] = r.kl_trajectory;
      summary["max_relative_load_error"] = r.max_relative_load_error;
      summary["self_pin_adjustment"] = r.self_pin_adjustment;
      summary["inner_sweeps"] = r.inner_sweeps;
      summary["start"] = r.start;
      json forced = json::array();
      for (std::size_t j : r.forced_zero) forced.push_back(pair_label(index, j));
      summary["forced_zero"] = forced;
    } else {
      const TrafficVector prior = simple_gravity(node_totals(network, y), index);
      if (method == "stg") {
        const StgResult r = simple_tomogravity(network.routing(), y, prior, options.stg);
        x_hat = r.x_hat;
        summary["negative_count"] = r.negative_count;
        summary["most_negative"] = r.most_negative;
        summary["residual"] = r.residual;
        if (r.negative_count > 0 && !clamp)
          notes.push_back(std::to_string(r.negative_count) +
                          " negative entries clamped to 0 in the written estimate");
      } else {
        const ErtgResult r = entropy_regularized_tomogravity(network.routing(), y, prior, options.ertg);
        x_hat = r.x_hat.values();
        converged = r.converged;
        summary["phi"] = phi;
        summary["objective"] = r.objective;
        summary["gradient_norm"] = r.gradient_norm;
        summary["iterations"] = r.iterations;
      }
    }
    summary["converged"] = converged;
    if (x_true) summary["relative_total_error"] = relative_total_error(x_hat, *x_true, index);

    std::vector<double> written = x_hat;
    for (double& v : written) v = std::max(v, 0.0);
    const TrafficVector estimate(std::move(written));

    Outputs files;
    if (!output.empty()) {
      std::ostringstream text;
      text << config_echo(command);
      for (const std::string& note : notes) text << "# " << note << '\n';
      write_traffic(text, index, estimate);
      files.add(output, text.str());
    }
    if (!report.empty()) {
      json doc = summary;
      doc["config"] = config_json(command);
      files.add(report, doc.dump(2) + "\n");
    }
    files.commit();

    out << "method " << method << '\n';
    out << "converged " << (converged ? "yes" : "no") << '\n';
    for (const char* key : {"n_hat", "outer_iters", "final_kl", "max_relative_load_error", "negative_count",
                            "objective", "gradient_norm", "relative_total_error"}) {
      if (!summary.contains(key)) continue;
      const json& v = summary[key];
      out << key << ' ' << (v.is_number_float() ? human(v.get<double>()) : v.dump()) << '\n';
    }
    for (const std::string& note : notes) out << "note " << note << '\n';
    if (output.empty())
      for (std::size_t j = 0; j < estimate.size(); ++j)
        out << "flow " << index.source_id(index.source_of(j)) << ' '
            << index.destination_id(index.destination_of(j)) << ' ' << human(estimate[j]) << '\n';
    return converged ? ok : not_converged;
  }
};

// ------------------------------------------------------------- compare

struct CompareCommand {
  SeriesInputs inputs;
  std::vector<std::string> methods = {"itg", "stg", "ertg"};
  std::string output, json_path;
  double phi = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool clamp = false;
  bool group = false;
  std::size_t t_star = 0;
  std::vector<double> grid{flow_level_grid.begin(), flow_level_grid.end()};
  double unit = flow_level_unit;
  ItgFlags itg;

  CLI::App* attach(CLI::App& app) {
    CLI::App* c = app.add_subcommand("compare", "Score estimators against a true traffic series");
    inputs.attach(*c);
    c->add_option("--methods", methods, "Comma-separated estimators")
        ->delimiter(',')
        ->check(CLI::IsMember({"itg", "stg", "ertg"}))
        ->capture_default_str();
    c->add_option("-o,--output", output, "Write the error table here");
    c->add_option("--json", json_path, "Write the results as JSON here");
    c->add_option("--phi", phi, "ERTG penalty weight")->capture_default_str();
    c->add_option("--seed", seed, "Seed for ITG restarts")->capture_default_str();
    c->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_flag("--clamp", clamp, "STG: clamp negative entries before scoring");
    c->add_flag("--group-by-flow", group, "Also report per-pair errors grouped by total flow");
    c->add_option("--t-star", t_star, "Snapshots in the per-pair error window (default: all)");
    c->add_option("--flow-grid", grid, "Flow-level bin edges, in units of --flow-unit")
        ->delimiter(',')
        ->capture_default_str();
    c->add_option("--flow-unit", unit, "Flow-level unit")->capture_default_str();
    itg.attach(*c);
    return c;
  }

  int execute(const CLI::App& command, std::ostream& out) const {
    MethodOptions options;
    options.itg = itg.options(seed);
    options.ertg.phi = phi;
    options.stg.clamp_negative = clamp;
    if (!(phi > 0.0)) throw InvalidArgument("--phi must be positive");
    std::vector<Method> list;
    for (const std::string& m : methods) list.push_back(*parse_method(m));
    if (group) {
      // Validates the grid before any estimator runs.
      group_by_flow({}, grid);
      if (!(unit > 0.0)) throw InvalidArgument("--flow-unit must be positive");
    }

    const auto in = inputs.load();
    const ComparisonTable table = compare_methods(in.network, in.loads, in.truth, list, options, threads);
    const SdIndex& index = in.network.index();

    bool all_converged = true;
    for (const auto& row : table.converged)
      for (bool c : row) all_converged = all_converged && c;

    // Per-method flow-level grouping of per-pair errors over the window.
    const std::size_t window = t_star == 0 ? in.truth.size() : t_star;
    std::vector<FlowGrouping> groupings;
    if (group) {
      for (std::size_t k = 0; k < list.size(); ++k) {
        PairTemporalErrors errors = per_pair_temporal_error(table.estimates[k], in.truth, window);
        for (std::size_t j = 0; j < errors.errors.size(); ++j)
          if (index.is_self(j)) errors.errors[j].reset();
        const auto samples = flow_samples(errors, unit);
        groupings.push_back(group_by_flow(samples, grid));
      }
    }

    auto table_text = [&](auto&& fmt) {
      std::ostringstream t;
      t << "snapshot";
      for (const std::string& m : methods) t << ' ' << m;
      t << '\n';
      for (std::size_t s = 0; s < table.errors.size(); ++s) {
        t << s;
        for (std::size_t k = 0; k < list.size(); ++k)
          t << ' ' << fmt(table.errors[s][k]) << (table.converged[s][k] ? "" : "*");
        t << '\n';
      }
      t << "mean";
      for (double m : table.mean_errors) t << ' ' << fmt(m);
      t << '\n';
      if (group) {
        t << "lower upper count";
        for (const std::string& m : methods) t << ' ' << m;
        t << '\n';
        for (std::size_t b = 0; b + 1 < grid.size(); ++b) {
          t << fmt(grid[b]) << ' ' << fmt(grid[b + 1]) << ' ' << groupings.front().groups[b].count;
          for (const FlowGrouping& g : groupings)
            t << ' ' << (g.groups[b].mean_error ? fmt(*g.groups[b].mean_error) : std::string("-"));
          t << '\n';
        }
      }
      return t.str();
    };

    Outputs files;
    if (!output.empty()) files.add(output, config_echo(command) + table_text(format_exact));
    if (!json_path.empty()) {
      json doc;
      doc["config"] = config_json(command);
      doc["methods"] = methods;
      doc["snapshots"] = json::array();
      for (std::size_t s = 0; s < table.errors.size(); ++s) {
        json row;
        row["snapshot"] = s;
        for (std::size_t k = 0; k < list.size(); ++k) {
          row["error"][methods[k]] = table.errors[s][k];
          row["converged"][methods[k]] = static_cast<bool>(table.converged[s][k]);
        }
        doc["snapshots"].push_back(row);
      }
      for (std::size_t k = 0; k < list.size(); ++k) doc["mean_error"][methods[k]] = table.mean_errors[k];
      if (group) {
        doc["flow_groups"] = json::array();
        for (std::size_t b = 0; b + 1 < grid.size(); ++b) {
          json bin;
          bin["lower"] = grid[b];
          bin["upper"] = grid[b + 1];
          bin["count"] = groupings.front().groups[b].count;
          for (std::size_t k = 0; k < list.size(); ++k) {
            const auto& mean = groupings[k].groups[b].mean_error;
            bin["mean_error"][methods[k]] = mean ? json(*mean) : json(nullptr);
          }
          doc["flow_groups"].push_back(bin);
        }
        doc["flow_outside"] = groupings.front().outside;
        doc["t_star"] = window;
      }
      files.add(json_path, doc.dump(2) + "\n");
    }
    files.commit();

    out << table_text(human);
    if (!all_converged) out << "* did not converge\n";
    return all_converged ? ok : not_converged;
  }
};

// -------------------------------------------------------- sweep-missing

struct SweepCommand {
  SeriesInputs inputs;
  std::size_t k_max = 5;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::size_t snapshots = 0;
  unsigned threads = 1;
  std::string output, json_path;
  ItgFlags itg;

  CLI::App* attach(CLI::App& app) {
    CLI::App* c =
        app.add_subcommand("sweep-missing", "ITG error as random edge links are hidden, k = 0..k-max");
    inputs.attach(*c);
    c->add_option("--k-max", k_max, "Largest number of hidden edge links")->capture_default_str();
    c->add_option("--reps", reps, "Random patterns per k (k = 0 runs once)")->capture_default_str();
    c->add_option("--seed", seed, "Seed for the hidden-link patterns and ITG restarts")->capture_default_str();
    c->add_option("--snapshots", snapshots, "Use only the first N snapshots (default: all)");
    c->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("-o,--output", output, "Write the (k, mean error) table here");
    c->add_option("--json", json_path, "Write rows and per-pattern cells as JSON here");
    itg.attach(*c);
    return c;
  }

  int execute(const CLI::App& command, std::ostream& out) const {
    SweepOptions options;
    options.k_max = k_max;
    options.reps = reps;
    options.seed = seed;
    options.threads = threads;
    options.itg = itg.options(seed);
    if (reps == 0) throw InvalidArgument("--reps must be >= 1");

    auto in = inputs.load();
    if (snapshots > 0) {
      if (snapshots > in.truth.size())
        throw InvalidArgument("--snapshots " + std::to_string(snapshots) + " exceeds the " +
                              std::to_string(in.truth.size()) + " available");
      in.truth.resize(snapshots);
      in.loads.resize(snapshots);
    }
    const SweepResult result = missing_link_sweep(in.network, in.loads, in.truth, options);

    bool all_converged = true;
    for (const SweepRow& row : result.rows) all_converged = all_converged && row.unconverged == 0;

    auto rows_text = [&](auto&& fmt) {
      std::ostringstream t;
      t << "k mean_error cells unconverged\n";
      for (const SweepRow& row : result.rows)
        t << row.k << ' ' << fmt(row.mean_error) << ' ' << row.cells << ' ' << row.unconverged << '\n';
      return t.str();
    };

    Outputs files;
    if (!output.empty()) files.add(output, config_echo(command) + rows_text(format_exact));
    if (!json_path.empty()) {
      json doc;
      doc["config"] = config_json(command);
      doc["seed"] = seed;
      doc["rows"] = json::array();
      for (const SweepRow& row : result.rows)
        doc["rows"].push_back({{"k", row.k}, {"mean_error", row.mean_error}, {"cells", row.cells},
                               {"unconverged", row.unconverged}});
      doc["cells"] = json::array();
      for (const SweepCell& cell : result.cells) {
        json masked = json::array();
        for (std::size_t link : cell.masked_links) masked.push_back(in.network.links()[link].id);
        doc["cells"].push_back({{"k", cell.k}, {"rep", cell.rep}, {"masked_links", masked},
                                {"mean_error", cell.mean_error}, {"converged", cell.converged}});
      }
      files.add(json_path, doc.dump(2) + "\n");
    }
    files.commit();

    out << "# seed " << seed << '\n' << rows_text(human);
    return all_converged ? ok : not_converged;
  }
};

// -------------------------------------------------------- gen-synthetic

struct GenerateCommand {
  std::string topology, truth_out, loads_out;
  double delta = 0.0;
  std::size_t steps = 72;
  std::uint64_t seed = 0;
  double total = 1e10;
  double weight_sigma = 1.0;
  double diurnal = 0.0;

  CLI::App* attach(CLI::App& app) {
    CLI::App* c = app.add_subcommand("gen-synthetic", "Write a perturbed gravity traffic series and its loads");
    c->add_option("--topology", topology, "Topology file")->required();
    c->add_option("--truth-out", truth_out, "Traffic series output")->required();
    c->add_option("--loads-out", loads_out, "Load series output")->required();
    c->add_option("--delta", delta, "Log-normal perturbation scale")->capture_default_str();
    c->add_option("--steps", steps, "Number of snapshots")->capture_default_str();
    c->add_option("--seed", seed, "Seed for node weights and perturbations")->capture_default_str();
    c->add_option("--total", total, "Mean total flow per snapshot")->capture_default_str();
    c->add_option("--weight-sigma", weight_sigma, "Log-normal spread of node weights")->capture_default_str();
    c->add_option("--diurnal", diurnal, "Amplitude of the 24-step total-flow cycle")->capture_default_str();
    return c;
  }

  int execute(const CLI::App& command, std::ostream& out) const {
    if (steps == 0) throw InvalidArgument("--steps must be >= 1");
    const Network network = load_network_file(resolve_input(topology));
    SyntheticSpec spec;
    spec.inbound_weights = lognormal_weights(network.index().source_count(), weight_sigma, derive_seed(seed, {1}));
    spec.outbound_weights =
        lognormal_weights(network.index().destination_count(), weight_sigma, derive_seed(seed, {2}));
    spec.delta = delta;
    spec.steps = steps;
    spec.seed = derive_seed(seed, {3});
    spec.total_flow = total;
    spec.diurnal_amplitude = diurnal;
    const SyntheticSeries series = generate_synthetic(network, spec);

    const std::string header = config_echo(command);
    std::ostringstream truth_text, loads_text;
    truth_text << header;
    write_traffic_series(truth_text, network.index(), series.traffic);
    loads_text << header;
    write_load_series(loads_text, network, series.loads);
    Outputs files;
    files.add(truth_out, truth_text.str());
    files.add(loads_out, loads_text.str());
    files.commit();
    out << "wrote " << steps << " snapshots over " << network.index().pair_count() << " SD pairs\n";
    return ok;
  }
};

// ------------------------------------------------------------- topology

struct TopologyCommand {
  std::string kind = "abilene";
  std::size_t sources = 2, destinations = 2, nodes = 4;
  std::size_t routers = 6, chords = 3;
  std::uint64_t seed = 0;
  bool self_links = false;
  std::string output;

  CLI::App* attach(CLI::App& app) {
    CLI::App* c = app.add_subcommand("topology", "Write a built-in sample topology");
    c->add_option("--kind", kind, "Topology family")
        ->check(CLI::IsMember({"abilene", "star", "hub", "random"}))
        ->capture_default_str();
    c->add_option("--sources", sources, "star: number of sources")->capture_default_str();
    c->add_option("--destinations", destinations, "star: number of destinations")->capture_default_str();
    c->add_option("--nodes", nodes, "hub: number of edge nodes")->capture_default_str();
    c->add_flag("--self-links", self_links, "hub: give each node a self link");
    c->add_option("--routers", routers, "random: number of routers")->capture_default_str();
    c->add_option("--chords", chords, "random: extra links beyond a spanning tree")->capture_default_str();
    c->add_option("--seed", seed, "random: seed")->capture_default_str();
    c->add_option("-o,--output", output, "Write here (default: print)");
    return c;
  }

  int execute(const CLI::App& command, std::ostream& out) const {
    Network network;
    if (kind == "abilene")
      network = abilene_like_network();
    else if (kind == "star")
      network = bipartite_star_network(sources, destinations);
    else if (kind == "hub")
      network = hub_network(nodes, self_links);
    else
      network = random_backbone_network(routers, chords, seed);
    std::ostringstream text;
    text << config_echo(command);
    if (kind == "abilene") text << "# reconstructed 12-PoP backbone; metrics are approximate\n";
    write_network(text, network);
    if (output.empty()) {
      out << text.str();
    } else {
      Outputs files;
      files.add(output, text.str());
      files.commit();
    }
    return ok;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Traffic-matrix estimation from link loads", "tomogravity");
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.footer(std::string("Relative input paths are also looked up under $") + data_dir_variable + ".");

  EstimateCommand estimate;
  CompareCommand compare;
  SweepCommand sweep;
  GenerateCommand generate;
  TopologyCommand topology;
  CLI::App* estimate_app = estimate.attach(app);
  CLI::App* compare_app = compare.attach(app);
  CLI::App* sweep_app = sweep.attach(app);
  CLI::App* generate_app = generate.attach(app);
  CLI::App* topology_app = topology.attach(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (estimate_app->parsed()) return estimate.execute(*estimate_app, out);
    if (compare_app->parsed()) return compare.execute(*compare_app, out);
    if (sweep_app->parsed()) return sweep.execute(*sweep_app, out);
    if (generate_app->parsed()) return generate.execute(*generate_app, out);
    if (topology_app->parsed()) return topology.execute(*topology_app, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return parse_error;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return infeasible;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << '\n';
    return invalid_argument;
  }
  return usage;
}

}  // namespace tomo::cli
