#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = TASKGEMM_CLI_PATH;

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_command(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "taskgemm_cli_test_output.txt";
  const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Strips the timing column; everything else must be byte-stable across runs.
std::string without_wall_column(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run writes the output bundle and exits 0") {
  const fs::path dir = fresh_dir("taskgemm_cli_run");
  const auto result = run_command(
      "run --spins 6 --steps 100 --procedures 2 --mode tasked --seed 7 --out " + dir.string());
  CHECK(result.exit_code == 0);
  REQUIRE(fs::exists(dir / "report.json"));
  REQUIRE(fs::exists(dir / "trace.csv"));

  const std::string csv = read_file(dir / "trace.csv");
  CHECK(csv.rfind("procedure,step,entropy_nats,accepted,wall_ns\n", 0) == 0);

  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(report.contains("config"));
  CHECK(report.contains("total_wall_ns"));
  CHECK(report.contains("average_entropy_nats"));
  CHECK(report.contains("per_device"));
  CHECK(report.contains("speedup_vs"));
  CHECK(report["speedup_vs"].is_null());
  CHECK(report["config"]["spins"] == 6);
  CHECK(report["config"]["seed"] == 7);
}

TEST_CASE("same command twice reproduces the entropy columns byte-identically") {
  const fs::path dir1 = fresh_dir("taskgemm_cli_repeat1");
  const fs::path dir2 = fresh_dir("taskgemm_cli_repeat2");
  const std::string args = "run --spins 6 --steps 80 --procedures 2 --mode tasked --seed 7 --out ";
  CHECK(run_command(args + dir1.string()).exit_code == 0);
  CHECK(run_command(args + dir2.string()).exit_code == 0);
  const std::string a = without_wall_column(read_file(dir1 / "trace.csv"));
  const std::string b = without_wall_column(read_file(dir2 / "trace.csv"));
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("spins out of range exits 2 with the validation message") {
  const fs::path dir = fresh_dir("taskgemm_cli_range");
  const auto result = run_command("run --spins 40 --steps 1 --out " + dir.string());
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("spins out of range [2,30]") != std::string::npos);
}

TEST_CASE("unknown flag exits 2") {
  const auto result = run_command("run --warp-factor 9");
  CHECK(result.exit_code == 2);
}

TEST_CASE("TASKGEMM_SEED seeds the run and --seed overrides it") {
  const fs::path env_dir = fresh_dir("taskgemm_cli_envseed");
  const fs::path flag_dir = fresh_dir("taskgemm_cli_flagseed");
  const std::string base = " run --spins 6 --steps 60 --procedures 1 --mode tasked --out ";
  const std::string env_cmd = "TASKGEMM_SEED=1234 " + kCli + base + env_dir.string() +
                              " > /dev/null 2>&1";
  REQUIRE(std::system(env_cmd.c_str()) == 0);
  const std::string flag_cmd = "TASKGEMM_SEED=999 " + kCli + base + flag_dir.string() +
                               " --seed 1234 > /dev/null 2>&1";
  REQUIRE(std::system(flag_cmd.c_str()) == 0);
  CHECK(without_wall_column(read_file(env_dir / "trace.csv")) ==
        without_wall_column(read_file(flag_dir / "trace.csv")));

  const auto report = nlohmann::json::parse(read_file(env_dir / "report.json"));
  CHECK(report["config"]["seed"] == 1234);
}

TEST_CASE("baseline report feeds the speedup field") {
  const fs::path seq_dir = fresh_dir("taskgemm_cli_base_seq");
  const fs::path task_dir = fresh_dir("taskgemm_cli_base_task");
  const std::string workload = "--spins 6 --steps 60 --procedures 4 --seed 5 ";
  CHECK(run_command("run " + workload + "--mode sequential --out " + seq_dir.string())
            .exit_code == 0);
  CHECK(run_command("run " + workload + "--mode tasked --baseline " +
                    (seq_dir / "report.json").string() + " --out " + task_dir.string())
            .exit_code == 0);
  const auto report = nlohmann::json::parse(read_file(task_dir / "report.json"));
  REQUIRE(!report["speedup_vs"].is_null());
  CHECK(report["speedup_vs"]["value"].get<double>() > 0.0);

  // Mismatched workload baselines are a configuration error.
  const fs::path bad_dir = fresh_dir("taskgemm_cli_base_bad");
  const auto mismatch = run_command("run --spins 6 --steps 61 --procedures 4 --seed 5 "
                                    "--mode tasked --baseline " +
                                    (seq_dir / "report.json").string() + " --out " +
                                    bad_dir.string());
  CHECK(mismatch.exit_code == 1);
}

TEST_CASE("sweep writes a cell table and the largest cell's trace") {
  const fs::path dir = fresh_dir("taskgemm_cli_sweep");
  const auto result = run_command(
      "run --spins 6 --steps 30 --mode tasked --seed 3 --sweep-procedures 1,2 --repeats 1 "
      "--out " + dir.string());
  CHECK(result.exit_code == 0);
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  REQUIRE(report.contains("sweep"));
  REQUIRE(report["sweep"].size() == 2);
  CHECK(report["sweep"][0]["mode"] == "tasked");
  CHECK(report["sweep"][0]["procedures"] == 1);
  CHECK(report["sweep"][1]["procedures"] == 2);

  // Trace of the N_p=2 cell: procedures 0 and 1 both present.
  const std::string csv = read_file(dir / "trace.csv");
  CHECK(csv.find("\n1,0,") != std::string::npos);
}

TEST_CASE("kernel log is written on request") {
  const fs::path dir = fresh_dir("taskgemm_cli_kernels");
  const auto result = run_command(
      "run --spins 6 --steps 20 --procedures 2 --mode tasked --seed 7 --kernel-log --out " +
      dir.string());
  CHECK(result.exit_code == 0);
  REQUIRE(fs::exists(dir / "kernels.csv"));
  const std::string csv = read_file(dir / "kernels.csv");
  CHECK(csv.rfind("device,procedure,m,n,k,queue_wait_ns,exec_ns,flops\n", 0) == 0);
  CHECK(csv.find("\n0,0,8,8,8,") != std::string::npos);
}

TEST_CASE("verify passes clean and fails under fault injection") {
  const auto clean = run_command("verify --seed 11");
  CHECK(clean.exit_code == 0);
  CHECK(clean.output.find("PASS gemm") != std::string::npos);
  CHECK(clean.output.find("PASS entropy") != std::string::npos);
  CHECK(clean.output.find("PASS cross-executor") != std::string::npos);

  const auto single = run_command("verify --suite gemm --seed 11");
  CHECK(single.exit_code == 0);
  CHECK(single.output.find("gemm") != std::string::npos);
  CHECK(single.output.find("entropy") == std::string::npos);

  const auto faulty = run_command("verify --inject-fault --seed 11");
  CHECK(faulty.exit_code == 1);
  CHECK(faulty.output.find("FAIL") != std::string::npos);
}
