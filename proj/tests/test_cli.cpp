#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "tomogravity/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path data_dir = TOMOGRAVITY_TEST_DATA;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = tomo::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("tomogravity_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& file) const { return (dir / file).string(); }
};

std::string star(const std::string& file) { return (data_dir / file).string(); }

// A short Abilene-like series written through gen-synthetic.
void synthetic_series(const Scratch& s, std::size_t steps) {
  const Run r = run({"gen-synthetic", "--topology", star("abilene_like.net"), "--delta", "0.5", "--steps",
                     std::to_string(steps), "--seed", "7", "--truth-out", s / "truth.tms", "--loads-out",
                     s / "loads.lds"});
  REQUIRE(r.code == tomo::cli::ok);
}

}  // namespace

TEST_CASE("estimate recovers the rank-1 star sample") {
  Scratch s("estimate");
  for (const char* method : {"itg", "stg", "ertg"}) {
    CAPTURE(method);
    const Run r = run({"estimate", "--method", method, "--topology", star("star2.net"), "--loads",
                       star("star2.load"), "-o", s / "x.tm", "--report", s / "r.json"});
    REQUIRE(r.code == tomo::cli::ok);
    const tomo::Network net = tomo::load_network_file(star("star2.net"));
    const tomo::TrafficVector x = tomo::load_traffic_file(s / "x.tm", net.index());
    const tomo::TrafficVector truth = tomo::load_traffic_file(star("star2.tm"), net.index());
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(x[j] == doctest::Approx(truth[j]).epsilon(1e-6));
    const auto report = nlohmann::json::parse(slurp(s / "r.json"));
    CHECK(report["method"] == method);
    CHECK(report["converged"] == true);
  }
}

TEST_CASE("estimate echoes its configuration") {
  Scratch s("echo");
  REQUIRE(run({"estimate", "--method", "ertg", "--topology", star("star2.net"), "--loads", star("star2.load"),
               "-o", s / "x.tm", "--report", s / "r.json"})
              .code == tomo::cli::ok);
  const std::string text = slurp(s / "x.tm");
  CHECK(text.rfind("# tomogravity estimate\n", 0) == 0);
  CHECK(text.find("# phi=0.001") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(s / "r.json"));
  CHECK(report["phi"] == 0.001);
  CHECK(report["config"]["phi"] == "0.001");
}

TEST_CASE("the echoed header works as a config file") {
  Scratch s("config");
  REQUIRE(run({"estimate", "--method", "stg", "--topology", star("star2.net"), "--loads", star("star2.load"),
               "-o", s / "x.tm"})
              .code == tomo::cli::ok);
  std::istringstream header(slurp(s / "x.tm"));
  std::ofstream cfg(s / "run.toml");
  std::string line;
  std::getline(header, line);
  while (std::getline(header, line) && line.rfind("# ", 0) == 0) {
    const std::string body = line.substr(2);
    if (body.rfind("output=", 0) == 0) continue;
    cfg << body << '\n';
  }
  cfg.close();
  const Run again = run({"--config", s / "run.toml", "estimate"});
  CHECK(again.code == tomo::cli::ok);
  CHECK(again.out.find("method stg") != std::string::npos);
}

TEST_CASE("failures leave no output and map to exit codes") {
  Scratch s("errors");
  const Run missing =
      run({"estimate", "--topology", star("star2.net"), "--loads", s / "absent.load", "-o", s / "x.tm"});
  CHECK(missing.code == tomo::cli::io_error);
  CHECK_FALSE(fs::exists(s / "x.tm"));

  std::ofstream(s / "bad.net") << "node a edge\nlink x a\n";
  const Run bad = run({"estimate", "--topology", s / "bad.net", "--loads", star("star2.load")});
  CHECK(bad.code == tomo::cli::parse_error);
  CHECK(bad.err.find("bad.net:2") != std::string::npos);

  CHECK(run({"gen-synthetic", "--topology", star("star2.net"), "--delta", "-1", "--truth-out", s / "t",
             "--loads-out", s / "l"})
            .code == tomo::cli::invalid_argument);
  CHECK_FALSE(fs::exists(s / "t"));
  CHECK(run({"estimate", "--method", "lsq", "--topology", "a", "--loads", "b"}).code == tomo::cli::usage);
  CHECK(run({}).code == tomo::cli::usage);
  CHECK(run({"--help"}).code == tomo::cli::ok);
  CHECK(run({"estimate", "--topology", star("star2.net"), "--loads", star("star2.load"), "--phi", "0"}).code ==
        tomo::cli::invalid_argument);
}

TEST_CASE("relative inputs fall back to the data directory") {
  Scratch s("datadir");
  const fs::path previous = fs::current_path();
  fs::current_path(s.dir);
  ::setenv(tomo::cli::data_dir_variable, data_dir.c_str(), 1);
  const Run found = run({"estimate", "--topology", "star2.net", "--loads", "star2.load"});
  ::unsetenv(tomo::cli::data_dir_variable);
  const Run lost = run({"estimate", "--topology", "star2.net", "--loads", "star2.load"});
  fs::current_path(previous);
  CHECK(found.code == tomo::cli::ok);
  CHECK(found.out.find("flow s1 d1 1.5") != std::string::npos);
  CHECK(lost.code == tomo::cli::io_error);
}

TEST_CASE("compare prints one column per method") {
  Scratch s("compare");
  synthetic_series(s, 3);
  const Run r = run({"compare", "--topology", star("abilene_like.net"), "--truth-series", s / "truth.tms",
                     "--loads-series", s / "loads.lds", "--json", s / "c.json"});
  REQUIRE(r.code == tomo::cli::ok);
  std::istringstream table(r.out);
  std::string header;
  std::getline(table, header);
  CHECK(header == "snapshot itg stg ertg");
  const auto doc = nlohmann::json::parse(slurp(s / "c.json"));
  CHECK(doc["snapshots"].size() == 3);
  CHECK(doc["mean_error"]["itg"].get<double>() < doc["mean_error"]["stg"].get<double>());

  const Run single = run({"compare", "--topology", star("abilene_like.net"), "--truth-series", star("star2.tms"),
                          "--methods", "itg"});
  // The star truth file does not name Abilene pairs.
  CHECK(single.code == tomo::cli::parse_error);

  const Run one = run({"compare", "--topology", star("star2.net"), "--truth-series", star("star2.tms"),
                       "--methods", "itg"});
  REQUIRE(one.code == tomo::cli::ok);
  CHECK(one.out.rfind("snapshot itg\n0 ", 0) == 0);
  CHECK(one.out.find("mean ") != std::string::npos);
}

TEST_CASE("compare groups per-pair errors by flow level") {
  Scratch s("group");
  synthetic_series(s, 4);
  const Run r = run({"compare", "--topology", star("abilene_like.net"), "--truth-series", s / "truth.tms",
                     "--methods", "itg,stg", "--group-by-flow", "--flow-unit", "1e8", "--json", s / "g.json"});
  REQUIRE(r.code == tomo::cli::ok);
  const auto doc = nlohmann::json::parse(slurp(s / "g.json"));
  std::size_t counted = doc["flow_outside"].get<std::size_t>();
  for (const auto& bin : doc["flow_groups"]) {
    counted += bin["count"].get<std::size_t>();
    if (bin["count"] == 0) CHECK(bin["mean_error"]["itg"].is_null());
  }
  // 12 PoPs: 144 pairs, 12 of them self pairs.
  CHECK(counted == 132);
  CHECK(run({"compare", "--topology", star("abilene_like.net"), "--truth-series", s / "truth.tms",
             "--group-by-flow", "--flow-grid", "1,0.5"})
            .code == tomo::cli::invalid_argument);
}

TEST_CASE("sweep-missing is reproducible and starts at the ITG error") {
  Scratch s("sweep");
  synthetic_series(s, 2);
  const std::vector<std::string> base = {"sweep-missing", "--topology", star("abilene_like.net"),
                                         "--truth-series", s / "truth.tms", "--loads-series", s / "loads.lds",
                                         "--k-max", "2", "--reps", "2", "--seed", "5"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  REQUIRE(run(with({"--json", s / "a.json"})).code == tomo::cli::ok);
  REQUIRE(run(with({"--json", s / "b.json", "--threads", "2"})).code == tomo::cli::ok);
  auto a = nlohmann::json::parse(slurp(s / "a.json"));
  auto b = nlohmann::json::parse(slurp(s / "b.json"));
  CHECK(a["rows"] == b["rows"]);
  CHECK(a["cells"] == b["cells"]);
  REQUIRE(a["rows"].size() == 3);
  CHECK(a["rows"][0]["cells"] == 1);
  CHECK(a["rows"][2]["cells"] == 2);
  CHECK(a["cells"][3]["masked_links"].size() == 2);

  REQUIRE(run({"compare", "--topology", star("abilene_like.net"), "--truth-series", s / "truth.tms",
               "--loads-series", s / "loads.lds", "--methods", "itg", "--json", s / "c.json"})
              .code == tomo::cli::ok);
  const auto c = nlohmann::json::parse(slurp(s / "c.json"));
  CHECK(a["rows"][0]["mean_error"].get<double>() == c["mean_error"]["itg"].get<double>());

  std::vector<std::string> too_many = base;
  too_many[8] = "99";
  CHECK(run(too_many).code == tomo::cli::invalid_argument);
}

TEST_CASE("gen-synthetic is deterministic in its seed") {
  Scratch s("gen");
  auto gen = [&](const std::string& seed, const std::string& tag) {
    return run({"gen-synthetic", "--topology", star("star2.net"), "--delta", "0.3", "--steps", "5", "--seed", seed,
                "--truth-out", s / ("t" + tag), "--loads-out", s / ("l" + tag)});
  };
  REQUIRE(gen("4", "a").code == tomo::cli::ok);
  REQUIRE(gen("4", "b").code == tomo::cli::ok);
  REQUIRE(gen("5", "c").code == tomo::cli::ok);
  auto body = [&](const std::string& file) {
    const std::string text = slurp(s / file);
    return text.substr(text.find("\nflow"));
  };
  CHECK(body("ta") == body("tb"));
  CHECK(body("ta") != body("tc"));
  const tomo::Network net = tomo::load_network_file(star("star2.net"));
  CHECK(tomo::load_traffic_series_file(s / "ta", net.index()).size() == 5);
  CHECK(tomo::load_load_series_file(s / "la", net).size() == 5);
}

TEST_CASE("topology writes parseable networks") {
  Scratch s("topology");
  for (const std::vector<std::string>& extra :
       std::vector<std::vector<std::string>>{{"--kind", "abilene"},
                                             {"--kind", "star", "--sources", "3", "--destinations", "2"},
                                             {"--kind", "hub", "--nodes", "4", "--self-links"},
                                             {"--kind", "random", "--routers", "5", "--seed", "2"}}) {
    std::vector<std::string> args = {"topology", "-o", s / "n.net"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run(args).code == tomo::cli::ok);
    CHECK_NOTHROW(tomo::load_network_file(s / "n.net"));
  }
  CHECK(tomo::load_network_file(s / "n.net").index().source_count() == 5);
}
