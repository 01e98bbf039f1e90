#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include <etrs/io.hpp>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ETRS_CLI_PATH + "\" " + args + " 2>&1";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string data_file(const std::string& name) {
  return std::string(ETRS_DATA_DIR) + "/" + name;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("etrs_cli_" + name);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("solve reports the saddle instance", "[cli]") {
  const RunResult res = run_cli("solve -i " + data_file("indefinite_halfplane.json"));
  REQUIRE(res.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(res.out);
  CHECK(j["status"] == "optimal");
  CHECK(std::abs(j["value"].get<double>() + 1.0) < 1e-9);
  CHECK(j["trs0_solves"].get<int>() == 1);
}

TEST_CASE("solve output is deterministic", "[cli]") {
  const std::string args = "solve -i " + data_file("indefinite_tilted.json");
  const RunResult first = run_cli(args);
  const RunResult second = run_cli(args);
  REQUIRE(first.exit_code == 0);
  CHECK(first.out == second.out);
}

TEST_CASE("solve honors the text flag", "[cli]") {
  const RunResult res =
      run_cli("solve --text -i " + data_file("indefinite_halfplane.json"));
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("status: optimal") != std::string::npos);
  CHECK(res.out.find("value: -1") != std::string::npos);
}

TEST_CASE("generated instances flow back into the solver", "[cli]") {
  const auto path = temp_file("gen_random.json");
  const RunResult gen =
      run_cli("gen random -n 3 -m 2 --seed 11 -o " + path.string());
  REQUIRE(gen.exit_code == 0);
  const RunResult solve = run_cli("solve -i " + path.string());
  REQUIRE(solve.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(solve.out);
  CHECK(j["status"] == "optimal");
  std::filesystem::remove(path);
}

TEST_CASE("generation is reproducible per seed", "[cli]") {
  const RunResult a = run_cli("gen random -n 4 -m 3 --seed 7");
  const RunResult b = run_cli("gen random -n 4 -m 3 --seed 7");
  const RunResult c = run_cli("gen random -n 4 -m 3 --seed 8");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("simplex rewrite of the identity lands on one half", "[cli]") {
  const auto path = temp_file("gen_qps.json");
  const RunResult gen = run_cli("gen qps -n 2 --identity -o " + path.string());
  REQUIRE(gen.exit_code == 0);
  const RunResult solve = run_cli("solve -i " + path.string());
  REQUIRE(solve.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(solve.out);
  CHECK(std::abs(j["value"].get<double>() - 0.5) < 1e-9);
  CHECK(std::abs(j["x"][0].get<double>() - 0.5) < 1e-8);
  std::filesystem::remove(path);
}

TEST_CASE("instance files survive a parse and dump round trip", "[cli]") {
  const std::string text = read_file(data_file("indefinite_tilted.json"));
  const etrs::ProblemInstance inst = etrs::parse_instance(text);
  const std::string dumped = etrs::dump_instance(inst);
  const etrs::ProblemInstance again = etrs::parse_instance(dumped);
  CHECK((inst.Q - again.Q).norm() == 0.0);
  CHECK((inst.c - again.c).norm() == 0.0);
  CHECK((inst.A - again.A).norm() == 0.0);
  CHECK((inst.b - again.b).norm() == 0.0);
  CHECK(etrs::dump_instance(again) == dumped);
}

TEST_CASE("check and gap agree on the certified fixture", "[cli]") {
  const RunResult chk = run_cli("check -i " + data_file("indefinite_halfplane.json"));
  REQUIRE(chk.exit_code == 0);
  const nlohmann::json jc = nlohmann::json::parse(chk.out);
  CHECK(jc["newdc"] == true);
  const RunResult gap = run_cli("gap -i " + data_file("indefinite_halfplane.json"));
  REQUIRE(gap.exit_code == 0);
  const nlohmann::json jg = nlohmann::json::parse(gap.out);
  REQUIRE(jg["gap"].is_number());
  CHECK(std::abs(jg["gap"].get<double>()) < 1e-7);
}

TEST_CASE("infeasible instances exit with status two", "[cli]") {
  const auto path = temp_file("infeasible.json");
  write_file(path, R"({"n": 2, "Q": [[1, 0], [0, 1]], "c": [0, 0],
                       "A": [[1, 0]], "b": [-3]})");
  const RunResult res = run_cli("solve -i " + path.string());
  CHECK(res.exit_code == 2);
  const nlohmann::json j = nlohmann::json::parse(res.out);
  CHECK(j["status"] == "infeasible");
  CHECK(j["value"].is_null());
  std::filesystem::remove(path);
}

TEST_CASE("malformed input exits with status one", "[cli]") {
  const auto path = temp_file("broken.json");
  write_file(path, "{ this is not json");
  const RunResult res = run_cli("solve -i " + path.string());
  CHECK(res.exit_code == 1);
  CHECK(res.out.find("error:") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("unknown flags exit with status one", "[cli]") {
  const RunResult res = run_cli("solve --definitely-not-a-flag");
  CHECK(res.exit_code == 1);
}

TEST_CASE("an exhausted enumeration budget exits with status three", "[cli]") {
  const auto path = temp_file("budget.json");
  write_file(path, R"({"n": 3,
                       "Q": [[-1, 0, 0], [0, -1, 0], [0, 0, 1]],
                       "c": [0, 0, 0.5],
                       "A": [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]],
                       "b": [0.2, 0.2, 0.2, 0.2]})");
  const RunResult capped = run_cli("solve --max-vertex-enum 1 -i " + path.string());
  CHECK(capped.exit_code == 3);
  const RunResult full = run_cli("solve -i " + path.string());
  CHECK(full.exit_code == 0);
  std::filesystem::remove(path);
}

TEST_CASE("oracle subcommand matches solve", "[cli]") {
  const std::string file = data_file("indefinite_halfplane.json");
  const RunResult solve = run_cli("solve -i " + file);
  const RunResult kkt = run_cli("oracle --method kkt -i " + file);
  REQUIRE(solve.exit_code == 0);
  REQUIRE(kkt.exit_code == 0);
  const double v1 = nlohmann::json::parse(solve.out)["value"].get<double>();
  const double v2 = nlohmann::json::parse(kkt.out)["value"].get<double>();
  CHECK(std::abs(v1 - v2) < 1e-9);
}

TEST_CASE("bench emits timing fields", "[cli]") {
  const RunResult res = run_cli("bench -n 3 -m 2 --count 3 --seed 2");
  REQUIRE(res.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(res.out);
  CHECK(j["count"].get<int>() == 3);
  CHECK(j["mean_ms"].get<double>() >= 0.0);
  CHECK(j["total_trs0"].get<long long>() >= 3);
}
