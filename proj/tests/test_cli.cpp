// Copyright 2026 The photonic-vqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "photonic/commands.hpp"
#include "test_support.hpp"

using namespace photonic;
using io::Json;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("photonic_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  io::write_file(p, text);
  return p;
}

Json read_json(const fs::path& p) { return io::parse_json(io::read_file(p), p.string()); }

int run_quiet(cli::Options opt) {
  std::ostringstream log;
  opt.jobs = opt.jobs.value_or(1);
  const int code = cli::run(opt, log);
  if (code != 0) UNSCOPED_INFO(log.str());
  return code;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(PHOTONIC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kFixture = testing::fixture_path("trained_cnot_w.json");

}  // namespace

TEST_CASE("configs round trip for every task", "[cli]") {
  const std::vector<std::string> configs{
      R"({"schema_version":1,"task":"train-cnot","params":{"space":"real","bound":1.5}})",
      R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"w.json"}})",
      R"({"schema_version":1,"task":"train-stochastic","mode":"sampled","shots":500,"params":{"p":0.2,"q1":0.4,"q2":0.9}})",
      R"({"schema_version":1,"task":"eval-stochastic","params":{"unitary":"u.json","validation_k":7}})",
      R"({"schema_version":1,"task":"entropy-sweep","params":{"p":[0.5],"q1":[0.1,0.5],"q2":[0.9]}})",
      R"({"schema_version":1,"task":"decompose","seed":9,"params":{"matrix":"w.json","photon_count":2}})",
      R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","qubits":2,"ancillas":1,"input":{"amplitudes":[[0.6,0],[0,0],[0,0.8],[0,0]]},"tomography":{"qubit":1,"target":[[1,0],[0,1]]}}})",
      R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","input":{"bits":"01"}}})"};
  for (const auto& text : configs) {
    INFO(text);
    const auto c = cli::config_from_json(Json::parse(text));
    const Json once = cli::config_to_json(c);
    const Json twice = cli::config_to_json(cli::config_from_json(once));
    CHECK(once == twice);
    CHECK(once["task"] == Json::parse(text)["task"]);
  }
}

TEST_CASE("shipped example configs parse", "[cli]") {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(PHOTONIC_CONFIGS)) {
    if (entry.path().extension() != ".json") continue;
    INFO(entry.path().string());
    const auto c = cli::config_from_json(read_json(entry.path()), entry.path().parent_path());
    CHECK(cli::config_from_json(cli::config_to_json(c)).task() == c.task());
    ++count;
  }
  CHECK(count == cli::task_names().size());
}

TEST_CASE("config validation rejects bad input", "[cli]") {
  auto bad = [](const std::string& text) {
    INFO(text);
    CHECK_THROWS_AS(cli::config_from_json(Json::parse(text)), ValidationError);
  };
  bad(R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"w.json"},"extra":1})");
  bad(R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"w.json","extra":1}})");
  bad(R"({"schema_version":1,"task":"train-cnot","params":{"search":{"ga":{"mutation_rte":0.1}}}})");
  bad(R"({"schema_version":2,"task":"eval-cnot","params":{"matrix":"w.json"}})");
  bad(R"({"task":"eval-cnot","params":{"matrix":"w.json"}})");
  bad(R"({"schema_version":1,"task":"fly","params":{}})");
  bad(R"({"schema_version":1,"task":"eval-cnot","params":{}})");
  bad(R"({"schema_version":1,"task":"eval-cnot","mode":"fast","params":{"matrix":"w.json"}})");
  bad(R"({"schema_version":1,"task":"eval-cnot","shots":0,"params":{"matrix":"w.json"}})");
  bad(R"({"schema_version":1,"task":"eval-cnot","seed":-1,"params":{"matrix":"w.json"}})");
  bad(R"({"schema_version":1,"task":"train-stochastic","params":{"p":1.0}})");
  bad(R"({"schema_version":1,"task":"train-stochastic","params":{"q1":1.0}})");
  bad(R"({"schema_version":1,"task":"train-cnot","params":{"space":"hex"}})");
  bad(R"({"schema_version":1,"task":"entropy-sweep","params":{"p":[]}})");
  bad(R"({"schema_version":1,"task":"decompose","params":{"matrix":"w.json","photon_count":0}})");
  bad(R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","input":{"bits":"012"}}})");
  bad(R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","input":{"bits":"01","amplitudes":[]}}})");
  bad(R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","input":{"amplitudes":[[1,0]]}}})");
  bad(R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","input":{"bits":"01"},"tomography":{"qubit":3,"target":[[1,0],[0,0]]}}})");
}

TEST_CASE("eval-cnot on the fixture", "[cli]") {
  const auto dir = fresh_dir("eval");
  fs::copy_file(kFixture, dir / "w.json");
  const auto cfg = write_config(dir, "c.json",
                                R"({"schema_version":1,"task":"eval-cnot","output":"out","params":{"matrix":"w.json"}})");
  cli::Options opt;
  opt.config = cfg;
  opt.out = (dir / "out").string();
  REQUIRE(run_quiet(opt) == 0);
  const Json s = read_json(dir / "out" / "summary.json");
  CHECK(s["l2"].get<double>() <= 5e-3);
  CHECK(s["success"].get<double>() == Approx(0.1524).margin(1e-3));
  for (const auto& [bits, p] : s["truth_table_correct_probability"].items()) CHECK(p.get<double>() > 0.9999);
  const auto table = io::parse_csv(io::read_file(dir / "out" / "truth_table.csv"));
  CHECK(table.size() == 17);
  const CMatrix ubar = io::load_matrix(dir / "out" / "ubar.json");
  CHECK(ubar.rows() == 4);
  for (const char* f : {"config.json", "metadata.json"}) CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("decompose the fixture", "[cli]") {
  const auto dir = fresh_dir("decompose");
  const auto cfg = write_config(dir, "c.json",
                                R"({"schema_version":1,"task":"decompose","params":{"matrix":")" + kFixture + R"("}})");
  cli::Options opt;
  opt.config = cfg;
  opt.out = (dir / "out").string();
  REQUIRE(run_quiet(opt) == 0);
  const Json r = read_json(dir / "out" / "report.json");
  CHECK(r["norm"].get<double>() == Approx(1.3682).margin(5e-4));
  CHECK(r["reconstruction_error"].get<double>() < 1e-12);
  CHECK(r["success_bound"].get<double>() == Approx(0.1524).margin(1e-3));
  const Json chip = read_json(dir / "out" / "chip.json");
  CHECK(chip["left_mesh"]["units"].size() == 10);
  CHECK(io::mesh_from_json(chip["right_mesh"], "right").units.size() == 10);
}

TEST_CASE("simulate maps |11> to |10> through the fixture", "[cli]") {
  const auto dir = fresh_dir("simulate");
  fs::copy_file(kFixture, dir / "w.json");
  const auto cfg = write_config(
      dir, "c.json",
      R"({"schema_version":1,"task":"simulate","params":{"matrix":"w.json","qubits":2,"ancillas":1,"input":{"bits":"11"},"tomography":{"qubit":2,"target":[[1,0],[0,0]]}}})");
  cli::Options opt;
  opt.config = cfg;
  opt.out = (dir / "exact").string();
  REQUIRE(run_quiet(opt) == 0);
  const Json s = read_json(dir / "exact" / "summary.json");
  CHECK(s["top_valid_outcome"] == "10");
  CHECK(s["logical_probabilities"]["10"].get<double>() > 0.9999);
  CHECK(s["success_probability"].get<double>() == Approx(0.1524).margin(1e-3));
  CHECK(read_json(dir / "exact" / "tomography.json")["fidelity"].get<double>() > 0.9999);
  const auto rows = io::parse_csv(io::read_file(dir / "exact" / "outcomes.csv"));
  double total = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stod(rows[i][3]);
  CHECK(total == Approx(1.0).margin(1e-12));

  opt.out = (dir / "sampled").string();
  opt.mode = "sampled";
  opt.shots = 20000;
  REQUIRE(run_quiet(opt) == 0);
  const auto counted = io::parse_csv(io::read_file(dir / "sampled" / "outcomes.csv"));
  std::uint64_t shots = 0;
  std::uint64_t to10 = 0;
  for (std::size_t i = 1; i < counted.size(); ++i) {
    shots += std::stoull(counted[i][3]);
    if (counted[i][2] == "10") to10 += std::stoull(counted[i][3]);
  }
  CHECK(shots == 20000);
  CHECK(static_cast<double>(to10) / 20000.0 == Approx(0.1524).margin(0.01));
  const Json ss = read_json(dir / "sampled" / "summary.json");
  CHECK(ss["valid_count"].get<std::uint64_t>() == to10);
  CHECK(read_json(dir / "sampled" / "tomography.json")["fidelity"].get<double>() > 0.95);
}

TEST_CASE("entropy sweep writes one table per p", "[cli]") {
  const auto dir = fresh_dir("entropy");
  const auto cfg = write_config(
      dir, "c.json",
      R"({"schema_version":1,"task":"entropy-sweep","params":{"p":[0.3,0.7],"q1":[0.2,0.6],"q2":[0.4,0.9]}})");
  cli::Options opt;
  opt.config = cfg;
  opt.out = (dir / "out").string();
  REQUIRE(run_quiet(opt) == 0);
  for (const char* f : {"entropy_p1.csv", "entropy_p2.csv"}) {
    const auto rows = io::parse_csv(io::read_file(dir / "out" / f));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"p", "q1", "q2", "Cc", "Cq", "Dq_truncated"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][4]) <= std::stod(rows[i][3]));
  }
}

TEST_CASE("training is reproducible and resumable", "[cli]") {
  const auto dir = fresh_dir("train");
  const std::string base =
      R"({"schema_version":1,"task":"train-cnot","seed":3,"output":"run","params":{"search":{"budget":9000)";
  const auto full = write_config(dir, "full.json", base + R"(}}})");
  const auto part = write_config(dir, "part.json", base + R"(,"max_rounds":1}}})");
  const auto resumed = write_config(dir, "resume.json", base + R"(},"resume":"part/checkpoint.json"}})");
  cli::Options opt;
  opt.config = full;
  opt.out = (dir / "a").string();
  REQUIRE(run_quiet(opt) == 0);
  opt.out = (dir / "b").string();
  opt.jobs = 3;
  REQUIRE(run_quiet(opt) == 0);
  opt.jobs.reset();
  opt.config = part;
  opt.out = (dir / "part").string();
  REQUIRE(run_quiet(opt) == 0);
  opt.config = resumed;
  opt.out = (dir / "c").string();
  REQUIRE(run_quiet(opt) == 0);

  const std::vector<std::string> files{"history.csv", "history.json", "summary.json",
                                       "best_w.json", "ubar.json",    "truth_table.csv"};
  for (const auto& f : files) {
    INFO(f);
    CHECK(io::read_file(dir / "a" / f) == io::read_file(dir / "b" / f));
    CHECK(io::read_file(dir / "a" / f) == io::read_file(dir / "c" / f));
  }
  CHECK(read_json(dir / "part" / "summary.json")["rounds"] == 1);
  CHECK(read_json(dir / "a" / "metadata.json")["jobs"] == 1);
  CHECK(read_json(dir / "b" / "metadata.json")["jobs"] == 3);
  CHECK(read_json(dir / "a" / "metadata.json").contains("generation_wall_seconds"));

  // A checkpoint from a different seed is refused.
  cli::Options other;
  other.config = resumed;
  other.seed = 4;
  other.out = (dir / "d").string();
  CHECK(run_quiet(other) == cli::kInputError);
}

TEST_CASE("stochastic training and evaluation agree", "[cli]") {
  const auto dir = fresh_dir("stochastic");
  const auto train = write_config(
      dir, "train.json",
      R"({"schema_version":1,"task":"train-stochastic","seed":1,"params":{"p":0.5,"q1":0.3,"q2":0.8,"search":{"budget":6000}}})");
  cli::Options opt;
  opt.config = train;
  opt.out = (dir / "train").string();
  REQUIRE(run_quiet(opt) == 0);
  const Json t = read_json(dir / "train" / "summary.json");
  CHECK(t["f1_train"].get<double>() > 0.999);
  CHECK(t["kl_stationary_weighted"].get<double>() < 1e-6);
  const auto mesh = io::mesh_from_json(
      [&] {
        Json m = read_json(dir / "train" / "mesh.json");
        m.erase("schema_version");
        return m;
      }(),
      "mesh");
  const CMatrix u = io::load_matrix(dir / "train" / "unitary.json");
  CHECK((mesh_unitary(mesh).matrix() - u).norm() < 1e-12);

  const auto eval = write_config(
      dir, "eval.json",
      R"({"schema_version":1,"task":"eval-stochastic","params":{"p":0.5,"q1":0.3,"q2":0.8,"unitary":"train/unitary.json"}})");
  opt.config = eval;
  opt.out = (dir / "eval").string();
  REQUIRE(run_quiet(opt) == 0);
  const Json e = read_json(dir / "eval" / "summary.json");
  CHECK(e["f1_train"] == t["f1_train"]);
  CHECK(e["kl_stationary_weighted"] == t["kl_stationary_weighted"]);
  CHECK(io::read_file(dir / "eval" / "fidelities.csv") == io::read_file(dir / "train" / "fidelities.csv"));

  opt.out = (dir / "sampled").string();
  opt.mode = "sampled";
  opt.shots = 20000;
  REQUIRE(run_quiet(opt) == 0);
  const auto rows = io::parse_csv(io::read_file(dir / "sampled" / "fidelities_sampled.csv"));
  REQUIRE(rows.size() == 12);
  CHECK(std::stod(rows[1][4]) > 0.97);
}

TEST_CASE("exit codes of the binary", "[cli]") {
  const auto dir = fresh_dir("exit");
  fs::copy_file(kFixture, dir / "w.json");
  const std::string out = " --out " + (dir / "out").string();
  auto cfg = [&](const std::string& name, const std::string& text) {
    return "--config " + write_config(dir, name, text).string() + out;
  };
  CHECK(run_binary(cfg("ok.json", R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"w.json"}})")) == 0);
  CHECK(run_binary("--config " + (dir / "absent.json").string()) == 3);
  CHECK(run_binary(cfg("broken.json", "{\"schema_version\": 1,")) == 2);
  CHECK(run_binary(cfg("unknown.json", R"({"schema_version":1,"task":"eval-cnot","colour":1,"params":{"matrix":"w.json"}})")) == 2);
  CHECK(run_binary(cfg("nomatrix.json", R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"gone.json"}})")) == 3);
  io::write_file(dir / "u4.json", io::dump(io::matrix_to_json(CMatrix::Identity(4, 4))));
  CHECK(run_binary(cfg("dims.json", R"({"schema_version":1,"task":"eval-cnot","params":{"matrix":"u4.json"}})")) == 2);
  io::write_file(dir / "zero.json", io::dump(io::matrix_to_json(CMatrix::Zero(3, 3))));
  CHECK(run_binary(cfg("zero.json", R"({"schema_version":1,"task":"decompose","params":{"matrix":"zero.json"}})")) == 2);
  io::write_file(dir / "half.json", io::dump(io::matrix_to_json(0.5 * CMatrix::Identity(4, 4))));
  CHECK(run_binary(cfg("nonunitary.json", R"({"schema_version":1,"task":"eval-stochastic","params":{"unitary":"half.json"}})")) == 2);
  CHECK(run_binary("") == 2);
  CHECK(run_binary("--config x.json --mode fast") == 2);
  CHECK(run_binary("--config x.json --jobs 0") == 2);
  CHECK(run_binary("--help") == 0);
}
