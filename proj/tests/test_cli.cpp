#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "regadj/error.hpp"
#include "regadj/experiments.hpp"
#include "regadj/format.hpp"
#include "regadj/population.hpp"
#include "regadj/scenarios.hpp"

using namespace regadj;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "regadj");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// A scratch directory removed at the end of each test case.
struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("regadj_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const Population& pop) const {
    const fs::path p = path / name;
    std::ofstream f(p);
    write_population(f, pop);
    return p.string();
  }
};

std::string line_with(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line;
  return "";
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> w;
  for (std::string s; in >> s;) w.push_back(s);
  return w;
}

/// Splits one csv line, honouring double-quoted cells.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  return cells;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("size and pair parsing") {
    CHECK(cli::parse_sizes("2,2,2", 6) == GroupSizes(2, 2, 2));
    CHECK(cli::parse_sizes("n/4, n/2 ,n/4", 800) == GroupSizes(200, 400, 200));
    CHECK(cli::parse_sizes("1,n/2,2", 6) == GroupSizes(1, 3, 2));
    CHECK_THROWS_AS(cli::parse_sizes("n/7,1,1", 6), Error);
    CHECK_THROWS_AS(cli::parse_sizes("2,2", 6), Error);
    CHECK_THROWS_AS(cli::parse_sizes("2,x,2", 6), Error);
    CHECK_THROWS_AS(cli::parse_sizes("0,3,3", 6), Error);
    CHECK(cli::parse_pair("A,C") == std::pair{Group::A, Group::C});
    CHECK(cli::parse_pair("C,B") == std::pair{Group::C, Group::B});
    CHECK_THROWS_AS(cli::parse_pair("A,A"), Error);
    CHECK_THROWS_AS(cli::parse_pair("A"), Error);
    CHECK_THROWS_AS(cli::parse_pair("A,D"), Error);
  }

  TEST_CASE("thread default honours the environment") {
    ::setenv("REGADJ_THREADS", "3", 1);
    CHECK(cli::default_threads() == 3);
    ::setenv("REGADJ_THREADS", "zero", 1);
    CHECK(cli::default_threads() >= 1);
    ::unsetenv("REGADJ_THREADS");
  }

  TEST_CASE("usage errors exit with 2, help with 0") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"analyze", "x.csv", "--bogus"}).code == cli::kExitUsage);
    const Run help = run({"--help"});
    CHECK(help.code == cli::kExitOk);
    CHECK(help.out.find("simulate") != std::string::npos);
    CHECK(run({"analyze", "/nonexistent/pop.csv", "--sizes", "1,1,1"}).code == cli::kExitUsage);
  }

  TEST_CASE("analyze the reference population") {
    TempDir dir;
    const std::string path = dir.write("table1.csv", scenarios::table1_population());
    const Run r = run({"analyze", path, "--sizes", "2,2,2"});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(words(line_with(r.out, "Q_tilde")) == std::vector<std::string>{"Q_tilde", "0.6667"});
    CHECK(words(line_with(r.out, "K ")) ==
          std::vector<std::string>{"K", "0.0000", "0.0000", "0.0000"});
    CHECK(line_with(r.out, "K_uncentered").empty());
    const Run with_k = run({"analyze", path, "--sizes", "2,2,2", "--uncentered-k"});
    CHECK_FALSE(line_with(with_k.out, "K_uncentered").empty());

    const Run bad = run({"analyze", path, "--sizes", "2,2,3"});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("size mismatch") != std::string::npos);
    CHECK(bad.out.empty());
  }

  TEST_CASE("normalization policies") {
    TempDir dir;
    const std::string path = dir.write("table1.csv", scenarios::table1_population());
    const Run req = run({"analyze", path, "--sizes", "2,2,2", "--normalize", "require"});
    CHECK(req.code == cli::kExitUsage);
    CHECK(req.err.find("not normalized") != std::string::npos);
    const Run off = run({"analyze", path, "--sizes", "2,2,2", "--normalize", "off"});
    CHECK(off.code == cli::kExitOk);
    CHECK(off.err.find("raw values") != std::string::npos);
    const std::string norm =
        dir.write("norm.csv", normalize_z(scenarios::table1_population()).population);
    const Run ok = run({"analyze", norm, "--sizes", "2,2,2", "--normalize", "require"});
    CHECK(ok.code == cli::kExitOk);
    CHECK(ok.err.empty());
    CHECK(run({"analyze", path, "--sizes", "2,2,2", "--normalize", "maybe"}).code ==
          cli::kExitUsage);
    const std::vector<double> v{1, 2, 3};
    const std::string flat = dir.write("flat.csv", Population(v, v, v, {4, 4, 4}));
    const Run constant = run({"analyze", flat, "--sizes", "1,1,1"});
    CHECK(constant.code == cli::kExitUsage);
    CHECK(constant.err.find("zero variance covariate") != std::string::npos);
  }

  TEST_CASE("analyze the identity-covariance population is neutral") {
    TempDir dir;
    const std::string path = dir.write("example2.csv", make_example2_population(800, 1.0));
    const Run r = run({"analyze", path, "--sizes", "n/4,n/2,n/4", "--pair", "A,C"});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(line_with(r.out, "verdict").find("adjustment neutral") != std::string::npos);
  }

  TEST_CASE("enumerate") {
    TempDir dir;
    const std::string path = dir.write("table1.csv", scenarios::table1_population());
    const Run all = run({"enumerate", path, "--sizes", "1,1,4", "--mode", "all", "--format", "json"});
    REQUIRE(all.code == cli::kExitOk);
    const auto j = nlohmann::json::parse(all.out);
    CHECK(j["sections"]["enumeration"]["assignment_count"] == 30);

    const Run bal = run({"enumerate", path, "--sizes", "2,2,2"});
    REQUIRE(bal.code == cli::kExitOk);
    const std::string mr = bal.out.substr(bal.out.find("== mr =="));
    CHECK(words(line_with(mr, "bias")) ==
          std::vector<std::string>{"bias", "0.0000", "0.0000", "0.0000"});

    std::vector<double> x(30);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
    const std::string big = dir.write("big.csv", Population(x, x, x, x));
    const Run guard = run({"enumerate", big, "--sizes", "10,10,10"});
    CHECK(guard.code == cli::kExitGuard);
    CHECK(guard.err.find("5550996791340") != std::string::npos);
    CHECK(run({"enumerate", path, "--sizes", "2,2,2", "--limit", "89"}).code == cli::kExitGuard);
    CHECK(run({"enumerate", path, "--sizes", "1,2,3", "--mode", "a-before-b"}).code ==
          cli::kExitUsage);
  }

  TEST_CASE("enumerate dump has one row per assignment") {
    TempDir dir;
    const std::string path = dir.write("table1.csv", scenarios::table1_population());
    const std::string dump = (dir.path / "rows.csv").string();
    REQUIRE(run({"enumerate", path, "--sizes", "1,1,4", "--dump", dump}).code == cli::kExitOk);
    std::ifstream in(dump);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line.rfind("assignment,", 0) == 0);
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 30);
    CHECK(run({"enumerate", path, "--sizes", "1,1,4", "--dump", "/nonexistent/dir/x.csv"}).code ==
          cli::kExitUsage);
  }

  TEST_CASE("simulate is deterministic across runs and thread counts") {
    TempDir dir;
    CounterRng rng(4);
    std::vector<double> a(24), b(24), c(24), z(24);
    for (std::size_t i = 0; i < 24; ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
      c[i] = rng.uniform(-2, 2);
      z[i] = rng.uniform(-2, 2);
    }
    const std::string path = dir.write("pop.csv", Population(a, b, c, z));
    const std::vector<std::string> base{"simulate", path, "--sizes", "6,8,10", "--reps", "1000",
                                        "--seed", "7"};
    auto with = [&](std::vector<std::string> extra) {
      auto args = base;
      args.insert(args.end(), extra.begin(), extra.end());
      return run(args);
    };
    for (const std::string format : {"table", "csv", "json"}) {
      const Run one = with({"--threads", "1", "--format", format});
      REQUIRE(one.code == cli::kExitOk);
      CHECK(with({"--threads", "1", "--format", format}).out == one.out);
      CHECK(with({"--threads", "3", "--format", format}).out == one.out);
      CHECK(with({"--threads", "8", "--format", format}).out == one.out);
    }
    CHECK(with({"--seed", "8"}).out != with({}).out);
    CHECK(run({"simulate", path, "--sizes", "6,8,10", "--reps", "1"}).code == cli::kExitUsage);
    CHECK(with({"--threads", "0"}).code == cli::kExitUsage);
    CHECK(run({"simulate", path, "--reps", "10"}).code == cli::kExitUsage);
  }

  TEST_CASE("replicate scales the population and the sizes") {
    TempDir dir;
    const std::string path = dir.write("table1.csv", scenarios::table1_population());
    const Run r = run({"analyze", path, "--sizes", "2,2,2", "--replicate", "10", "--format", "json"});
    REQUIRE(r.code == cli::kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["sections"]["population"]["n"] == 60);
    CHECK(j["sections"]["population"]["sizes"] == "20,20,20");
  }

  TEST_CASE("json and csv carry exact values") {
    TempDir dir;
    const Population pop = normalize_z(scenarios::table1_population()).population;
    const std::string path = dir.write("norm.csv", pop);
    const Run js = run({"simulate", path, "--sizes", "2,2,2", "--reps", "500", "--seed", "3",
                        "--format", "json"});
    const Run cs = run({"simulate", path, "--sizes", "2,2,2", "--reps", "500", "--seed", "3",
                        "--format", "csv"});
    REQUIRE(js.code == cli::kExitOk);
    REQUIRE(cs.code == cli::kExitOk);

    const MCSummary s = monte_carlo(pop, GroupSizes(2, 2, 2), {.reps = 500, .seed = 3});
    const auto j = nlohmann::json::parse(js.out);
    const auto& mr = j["sections"]["mr"];
    CHECK(mr["mean"]["A"].get<double>() == s.mr.mean[0]);
    CHECK(mr["mean"]["C"].get<double>() == s.mr.mean[2]);
    CHECK(mr["mean_z_coefficient"].get<double>() == s.mean_q_hat);
    CHECK(mr["covariance"]["rows"][1][2].get<double>() == s.mr.cov[1][2]);
    CHECK(j["sections"]["lead term"]["Q_tilde"].get<double>() == s.Q_tilde);

    // Every numeric csv cell equals the json value at the same place.
    std::istringstream in(cs.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "section,name,row,col,value");
    int numeric = 0;
    while (std::getline(in, line)) {
      const std::vector<std::string> f = split_csv(line);
      REQUIRE(f.size() == 5);
      const auto& node = j["sections"][f[0]][f[1]];
      if (f[2].empty() && f[3].empty()) {
        if (node.is_number()) {
          CHECK(parse_double(f[4]) == node.get<double>());
          ++numeric;
        }
      } else if (f[2].empty()) {
        CHECK(parse_double(f[4]) == node[f[3]].get<double>());
        ++numeric;
      } else {
        const auto& labels = node["labels"];
        std::size_t ri = 0, ci = 0;
        for (std::size_t k = 0; k < labels.size(); ++k) {
          if (labels[k] == f[2]) ri = k;
          if (labels[k] == f[3]) ci = k;
        }
        CHECK(parse_double(f[4]) == node["rows"][ri][ci].get<double>());
        ++numeric;
      }
    }
    CHECK(numeric > 50);
  }

  TEST_CASE("reproduce scenarios") {
    for (const std::string name : {"example2", "example3", "example4", "theorem5", "theorem6"}) {
      const Run r = run({"reproduce", "--scenario", name});
      REQUIRE(r.code == cli::kExitOk);
      CHECK(words(line_with(r.out, "status")) == std::vector<std::string>{"status", "pass"});
    }
    const Run ex2 = run({"reproduce", "--scenario", "example2"});
    CHECK(words(line_with(ex2.out, "true_contrast_var ")) ==
          std::vector<std::string>{"true_contrast_var", "6.0000", "6.0000", "pass"});
    CHECK(words(line_with(ex2.out, "nominal_contrast_var ")) ==
          std::vector<std::string>{"nominal_contrast_var", "8.0000", "8.0000", "pass"});
    CHECK(words(line_with(ex2.out, "nominal_contrast_var_b_1_4")) ==
          std::vector<std::string>{"nominal_contrast_var_b_1_4", "5.0000", "5.0000", "pass"});
    const Run t5 = run({"reproduce", "--scenario", "theorem5"});
    CHECK(words(line_with(t5.out, "mr_bias_A")) ==
          std::vector<std::string>{"mr_bias_A", "0.0000", "0.0000", "pass"});

    const Run t2 = run({"reproduce", "--scenario", "table2", "--format", "json"});
    REQUIRE(t2.code == cli::kExitOk);
    const auto j = nlohmann::json::parse(t2.out);
    const auto& sec = j["sections"];
    CHECK(sec["truth"]["A"]["status"] == "pass");
    CHECK(sec["mode all"]["mr_C"]["status"] == "match");
    CHECK(sec["mode all"]["z_coefficient"]["status"] == "match");
    CHECK(sec["mode a-before-b"]["assignment_count"] == 15);
    CHECK(sec["verdict"]["status"] == "discrepancy");
    CHECK(sec.contains("discrepancy"));

    const Run bad = run({"reproduce", "--scenario", "table9"});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("theorem6") != std::string::npos);
    CHECK(run({"reproduce"}).code == cli::kExitUsage);
  }

  TEST_CASE("generate writes constructed populations") {
    const Run r = run({"generate", "--kind", "example2", "--n", "16", "--var-b", "0.25"});
    REQUIRE(r.code == cli::kExitOk);
    std::istringstream in(r.out);
    const Population pop = parse_population(in);
    CHECK(pop == make_example2_population(16, 0.25));
    CHECK(run({"generate", "--kind", "example2", "--n", "12"}).code == cli::kExitUsage);
    CHECK(run({"generate", "--kind", "other", "--n", "16"}).code == cli::kExitUsage);
  }
}
