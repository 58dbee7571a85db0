// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "support/fixtures.hpp"
#include "surveykit/dataset.hpp"

namespace {

namespace fs = std::filesystem;

const std::string cli = SURVEYKIT_CLI_PATH;
const fs::path data_dir = SURVEYKIT_DATA_DIR;

struct RunResult {
  int exit_code;
  std::string stderr_text;
};

RunResult run(const std::string& args) {
  const fs::path err_file = fs::temp_directory_path() / "surveykit_cli_stderr.txt";
  const std::string command =
      cli + " " + args + " > /dev/null 2> " + err_file.string();
  const int status = std::system(command.c_str());
  std::ifstream err(err_file);
  std::string text((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
  return {WEXITSTATUS(status), text};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("surveykit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One shared small fixture generated through the CLI itself.
struct CliFixture {
  fs::path dir = fresh_dir("fixture");
  fs::path csv, vars;
  CliFixture() {
    const auto result =
        run("fixture --marginals " + (data_dir / "eusilc_liguria_2019.marginals").string() +
            " --n 260 --seed 11 --name sample --out " + dir.string());
    REQUIRE(result.exit_code == 0);
    csv = dir / "sample.csv";
    vars = dir / "sample.vars";
    // plant a coherent rare pattern so the multivariate detectors have
    // something to find
    auto data = surveykit::load_csv(csv, vars);
    const auto m = fixtures::liguria_marginals();
    fixtures::inject_pattern(data, fixtures::pick_rows(260, 10, 3), fixtures::rare_signature(m));
    surveykit::save_csv(csv, data);
  }
};

const CliFixture& fixture() {
  static CliFixture f;
  return f;
}

}  // namespace

TEST_CASE("fixture command round-trips through load_csv") {
  const auto& f = fixture();
  const auto data = surveykit::load_csv(f.csv, f.vars);
  CHECK(data.n_rows() == 260);
  CHECK(data.n_vars() == 19);
}

TEST_CASE("detect entropy emits the three reports") {
  const auto& f = fixture();
  const auto out = fresh_dir("detect_entropy");
  const auto result = run("detect --detector entropy --input " + f.csv.string() + " --spec " +
                          f.vars.string() + " --out " + out.string());
  REQUIRE(result.exit_code == 0);
  for (const char* name : {"scores.json", "labeling.json", "entropy_report.json"}) {
    INFO(name);
    CHECK(fs::exists(out / name));
  }
  const auto report = nlohmann::json::parse(slurp(out / "entropy_report.json"));
  CHECK(report.at("schema_version") == 1);
  CHECK(report.at("variables").size() == 19);
}

TEST_CASE("detect kpca emits a row labeling with a plausible atypical share") {
  const auto& f = fixture();
  const auto out = fresh_dir("detect_kpca");
  const auto result = run("detect --detector kpca --input " + f.csv.string() + " --spec " +
                          f.vars.string() + " --out " + out.string());
  REQUIRE(result.exit_code == 0);
  const auto labeling = nlohmann::json::parse(slurp(out / "labeling.json"));
  std::size_t atypical = 0;
  for (const auto& entry : labeling.at("labels")) {
    atypical += entry.at("label") == "atypical";
  }
  CHECK(atypical >= 10);
  CHECK(atypical <= 60);
}

TEST_CASE("error paths exit nonzero with machine-readable JSON") {
  SECTION("detect on a 1-row dataset") {
    const auto& f = fixture();
    const auto tiny_dir = fresh_dir("tiny");
    {
      auto data = surveykit::load_csv(f.csv, f.vars);
      const std::vector<std::size_t> one = {0};
      surveykit::save_csv(tiny_dir / "one.csv", data.subset(one));
    }
    const auto result = run("detect --detector kpca --input " + (tiny_dir / "one.csv").string() +
                            " --spec " + f.vars.string() + " --out " + tiny_dir.string());
    CHECK(result.exit_code != 0);
    const auto error = nlohmann::json::parse(result.stderr_text);
    CHECK(error.at("error") == "InvalidArgument");
  }
  SECTION("unknown category") {
    const auto& f = fixture();
    const auto dir = fresh_dir("badcat");
    std::ofstream bad(dir / "bad.csv");
    bad << "Italian citizenship\nMaybe\n";
    bad.close();
    std::ofstream vars(dir / "bad.vars");
    vars << "variable Italian citizenship\nkind binary\ncategory Yes\ncategory No\n";
    vars.close();
    const auto result = run("detect --detector entropy --input " + (dir / "bad.csv").string() +
                            " --spec " + (dir / "bad.vars").string() + " --out " + dir.string());
    CHECK(result.exit_code != 0);
    const auto error = nlohmann::json::parse(result.stderr_text);
    CHECK(error.at("error") == "UnknownCategory");
  }
  SECTION("missing scenario field is named") {
    const auto dir = fresh_dir("badscenario");
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "population_size 100\ndomain_sizes 100\nframes 1\nallocations proportional\n";
    cfg.close();
    const auto result =
        run("simulate --scenario " + (dir / "bad.cfg").string() + " --seed 1 --out " + dir.string());
    CHECK(result.exit_code != 0);
    CHECK(result.stderr_text.find("sample_size") != std::string::npos);
  }
  SECTION("stochastic commands demand a seed") {
    const auto& f = fixture();
    const auto result = run("validate --detector entropy --scheme loo --input " + f.csv.string() +
                            " --spec " + f.vars.string());
    CHECK(result.exit_code != 0);
    CHECK(result.stderr_text.find("--seed") != std::string::npos);
  }
}

TEST_CASE("validate and importance and profile emit their reports") {
  const auto& f = fixture();
  SECTION("validate entropy loo") {
    const auto out = fresh_dir("validate");
    const auto result = run("validate --detector entropy --scheme loo --seed 5 --input " +
                            f.csv.string() + " --spec " + f.vars.string() + " --out " + out.string());
    REQUIRE(result.exit_code == 0);
    const auto report = nlohmann::json::parse(slurp(out / "validation.json"));
    CHECK(report.at("scheme") == "leave_one_out");
    CHECK(report.at("mcc_mean").get<double>() >= 0.8);
  }
  SECTION("importance with reps=2 warns but runs") {
    const auto out = fresh_dir("importance");
    const auto result = run("importance --detector kpca --reps 2 --seed 5 --input " +
                            f.csv.string() + " --spec " + f.vars.string() + " --out " + out.string());
    REQUIRE(result.exit_code == 0);
    CHECK(result.stderr_text.find("warning") != std::string::npos);
    CHECK(fs::exists(out / "importance.csv"));
    const auto report = nlohmann::json::parse(slurp(out / "importance.json"));
    CHECK(report.at("permutations") == 2);
  }
  SECTION("profile emits subgroups and the medoid table") {
    const auto out = fresh_dir("profile");
    const auto result = run("profile --detector kpca --k-max 6 --seed 5 --input " + f.csv.string() +
                            " --spec " + f.vars.string() + " --out " + out.string());
    REQUIRE(result.exit_code == 0);
    CHECK(fs::exists(out / "subgroups.json"));
    CHECK(fs::exists(out / "medoids.json"));
    const auto csv = slurp(out / "medoids.csv");
    CHECK(csv.rfind("variable,subgroup_1", 0) == 0);
  }
}

TEST_CASE("simulate emits summary plus the three CSV artifacts") {
  const auto out = fresh_dir("simulate");
  const auto result = run("simulate --scenario " + (data_dir / "scenario_default.cfg").string() +
                          " --replications 60 --seed 9 --out " + out.string());
  REQUIRE(result.exit_code == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("results").size() == 6); // {proportional, optimal_cost} x {STS, SM, PML}
  for (const char* name : {"estimates.csv", "convergence_trace.csv", "rb_distribution.csv"}) {
    INFO(name);
    CHECK(fs::exists(out / name));
  }
}

TEST_CASE("reruns with the same seed are byte-identical") {
  const auto& f = fixture();
  auto compare_outputs = [](const fs::path& a, const fs::path& b) {
    for (const auto& entry : fs::directory_iterator(a)) {
      INFO(entry.path().filename());
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
  };
  SECTION("detect ae") {
    const auto out1 = fresh_dir("det_a"), out2 = fresh_dir("det_b");
    const std::string base = "detect --detector ae --epochs 80 --seed 21 --input " +
                             f.csv.string() + " --spec " + f.vars.string() + " --out ";
    REQUIRE(run(base + out1.string()).exit_code == 0);
    REQUIRE(run(base + out2.string()).exit_code == 0);
    compare_outputs(out1, out2);
  }
  SECTION("simulate") {
    const auto out1 = fresh_dir("sim_a"), out2 = fresh_dir("sim_b");
    const std::string base = "simulate --scenario " +
                             (data_dir / "scenario_default.cfg").string() +
                             " --replications 40 --seed 3 --out ";
    REQUIRE(run(base + out1.string()).exit_code == 0);
    REQUIRE(run(base + out2.string()).exit_code == 0);
    compare_outputs(out1, out2);
  }
  SECTION("fixture") {
    const auto out1 = fresh_dir("fix_a"), out2 = fresh_dir("fix_b");
    const std::string base = "fixture --marginals " +
                             (data_dir / "eusilc_liguria_2019.marginals").string() +
                             " --n 120 --seed 77 --name x --out ";
    REQUIRE(run(base + out1.string()).exit_code == 0);
    REQUIRE(run(base + out2.string()).exit_code == 0);
    compare_outputs(out1, out2);
    // different seed changes the bytes
    const auto out3 = fresh_dir("fix_c");
    REQUIRE(run("fixture --marginals " + (data_dir / "eusilc_liguria_2019.marginals").string() +
                " --n 120 --seed 78 --name x --out " + out3.string())
                .exit_code == 0);
    CHECK(slurp(out1 / "x.csv") != slurp(out3 / "x.csv"));
  }
}
