#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* env = std::getenv("MPK_CLI");
  REQUIRE_MESSAGE(env != nullptr, "MPK_CLI must point at the built binary (run through ctest)");
  return env;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "mpk_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path path = work_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::ostringstream text;
  text << in.rdbuf();
  return {WEXITSTATUS(status), text.str()};
}

const char* kTwoState = R"({
  "states": ["0", "1"],
  "mode": "ctmc",
  "generator": [[-1.0, 1.0], [1.0, -1.0]],
  "measure": [0.5, 0.5],
  "functions": {
    "u": [1.0, 0.0],
    "potential": [0.6666666666666666, 0.3333333333333333],
    "ones": [1.0, 1.0]
  }
})";

const char* kThreeState = R"({
  "states": ["a", "b", "c"],
  "mode": "ctmc",
  "generator": [[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]],
  "measure": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "functions": {"u": [1.0, 0.0, 0.0], "ones": [1.0, 1.0, 1.0]}
})";

const char* kDraining = R"({
  "states": ["0", "1"],
  "mode": "ctmc",
  "generator": [[-1.0, 1.0], [0.0, 0.0]],
  "measure": [1.0, 0.0],
  "functions": {"ones": [1.0, 1.0]}
})";

}  // namespace

TEST_CASE("check-excessive accepts the worked potential at beta 1") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r =
      run("check-excessive --model " + model.string() + " --function potential --beta 1.0");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["pass"].get<bool>());
  CHECK(j["verdicts"].size() == 2);
}

TEST_CASE("check-excessive fails the mixing indicator at beta 0") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r = run("check-excessive --model " + model.string() + " --function u --beta 0.0");
  CHECK(r.exit_code == 1);
}

TEST_CASE("decompose rejects beta = 0 as invalid input") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r = run("decompose --model " + model.string() + " --function u --beta 0");
  CHECK(r.exit_code == 2);
}

TEST_CASE("decompose emits the parts") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r = run("decompose --model " + model.string() + " --function u --beta 1.0");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  const auto& d = j["verdicts"][0]["details"];
  CHECK(d["u1"][0].get<double>() == doctest::Approx(4.0 / 3.0));
  CHECK(d["u2"][1].get<double>() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("usage errors name the problem and exit 2") {
  CHECK(run("check-excessive --function u").exit_code == 2);       // missing --model
  CHECK(run("frobnicate").exit_code == 2);                          // unknown subcommand
  const auto model = write_file("two_state.json", kTwoState);
  CHECK(run("check-excessive --model " + model.string() + " --function nope").exit_code == 2);
  CHECK(run("report --model " + model.string()).exit_code == 2);    // report wants --all
  CHECK(run("invariant-measure --model " + model.string() + " --method newton").exit_code == 2);
}

TEST_CASE("variation emits per-level vectors") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r =
      run("variation --model " + model.string() + " --function u --beta 1.0 --horizon 4");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["verdicts"][0]["details"]["levels"].size() == 5);
}

TEST_CASE("invariance-suite passes on the symmetric chain and flags the drain") {
  const auto good = write_file("three_state.json", kThreeState);
  const RunResult ok = run("invariance-suite --model " + good.string());
  CHECK(ok.exit_code == 0);
  const auto j = nlohmann::json::parse(ok.stdout_text);
  CHECK(j["sections"]["invariant_partition"]["blocks"].size() == 1);

  const auto bad = write_file("draining.json", kDraining);
  const RunResult fail = run("invariance-suite --model " + bad.string());
  CHECK(fail.exit_code == 1);  // sub-invariance verdict fails
}

TEST_CASE("invariant-measure agrees between the two methods") {
  const auto model = write_file("three_state.json", kThreeState);
  const RunResult cesaro = run("invariant-measure --model " + model.string() + " --method cesaro");
  const RunResult eigen = run("invariant-measure --model " + model.string() + " --method eigen");
  CHECK(cesaro.exit_code == 0);
  CHECK(eigen.exit_code == 0);
  const auto a = nlohmann::json::parse(cesaro.stdout_text);
  const auto b = nlohmann::json::parse(eigen.stdout_text);
  for (int i = 0; i < 3; ++i) {
    const double da = a["verdicts"][2]["details"]["rho"][i].get<double>();
    const double db = b["verdicts"][2]["details"]["rho"][i].get<double>();
    CHECK(da == doctest::Approx(db).epsilon(1e-6));
  }
}

TEST_CASE("simulate is seeded and deterministic") {
  const auto model = write_file("two_state.json", kTwoState);
  const std::string args = "simulate --model " + model.string() +
                           " --paths 2000 --seed 7 --horizon 1.0 --start 0";
  const RunResult a = run(args);
  const RunResult b = run(args);
  CHECK(a.exit_code == 0);
  CHECK(a.stdout_text == b.stdout_text);
  const auto j = nlohmann::json::parse(a.stdout_text);
  CHECK(j["seed"] == 7);
}

TEST_CASE("simulate requires a valid start state") {
  const auto model = write_file("two_state.json", kTwoState);
  CHECK(run("simulate --model " + model.string() + " --start nowhere").exit_code == 2);
}

TEST_CASE("dirichlet reports energy and the bound constant") {
  const auto model = write_file("two_state.json", kTwoState);
  const RunResult r = run("dirichlet --model " + model.string() + " --function u");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  // E(u, u) = <(1,-1), (1,0)>_m = 1/2; the bound constant is sum |(-Qu)| m = 1
  CHECK(j["verdicts"][0]["details"]["energy"].get<double>() == doctest::Approx(0.5));
  CHECK(j["verdicts"][0]["details"]["bound_constant"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("report --all emits the three analysis sections and re-parses") {
  const auto model = write_file("three_state.json", kThreeState);
  const RunResult r = run("report --all --seed 42 --model " + model.string());
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["sections"].contains("variation"));
  CHECK(j["sections"].contains("invariance"));
  CHECK(j["sections"].contains("invariant-measure"));
  CHECK(j["sections"].contains("simulate"));

  // every verdict carries its tolerance, and the exit code matches content
  bool all_pass = true;
  for (const auto& v : j["verdicts"]) {
    CHECK(v.contains("tolerance"));
    CHECK(v.contains("worst_violation"));
    all_pass = all_pass && v["pass"].get<bool>();
  }
  CHECK(all_pass);
}

TEST_CASE("report --all is byte-identical across runs") {
  const auto model = write_file("three_state.json", kThreeState);
  const RunResult a = run("report --all --seed 42 --model " + model.string());
  const RunResult b = run("report --all --seed 42 --model " + model.string());
  CHECK(a.stdout_text == b.stdout_text);
  CHECK(!a.stdout_text.empty());
}

TEST_CASE("output lands at -o and digests stay stable") {
  const auto model = write_file("two_state.json", kTwoState);
  const fs::path out = work_dir() / "report.json";
  const RunResult r =
      run("dirichlet --model " + model.string() + " --function u -o " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.empty());
  std::ifstream in(out);
  nlohmann::json j;
  in >> j;
  const std::string digest = j["model_digest"].get<std::string>();
  CHECK(digest.size() == 16);

  const RunResult again = run("dirichlet --model " + model.string() + " --function u");
  CHECK(nlohmann::json::parse(again.stdout_text)["model_digest"] == digest);
}
