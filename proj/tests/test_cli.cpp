// Exercises the installed CLI binary end to end: exit codes, seed override
// determinism, and the energy/gradcheck/encode subcommands.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path self_dir() {
  char buf[4096];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  REQUIRE(n > 0);
  buf[n] = '\0';
  return fs::path(buf).parent_path();
}

fs::path cli_path() { return self_dir().parent_path() / "tools" / "srnn"; }

fs::path repo_root() {
  // build/tests -> repo
  return self_dir().parent_path().parent_path();
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "srnn_cli_out.txt";
  const std::string cmd =
      cli_path().string() + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WEXITSTATUS(status);
  std::ifstream is(out);
  std::stringstream ss;
  ss << is.rdbuf();
  res.output = ss.str();
  return res;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "srnn_cli_test";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("cli" * doctest::skip(!fs::exists(cli_path()))) {
  SUBCASE("missing config is a usage error") {
    RunResult r = run_cli("train");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("missing dataset path names the field") {
    const auto cfg = write_config("missing_data.json", R"({
      "task": "smnist",
      "data": { "images": "/nonexistent/images.idx",
                "labels": "/nonexistent/labels.idx" }
    })");
    RunResult r = run_cli("--config " + cfg.string() + " train");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("data.images") != std::string::npos);
  }
  SUBCASE("energy reproduces the LSTM table value") {
    const auto arch = repo_root() / "configs" / "energy" / "ecg_lstm.json";
    REQUIRE(fs::exists(arch));
    RunResult r = run_cli("energy --arch " + arch.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("19468.8") != std::string::npos);
  }
  SUBCASE("energy ratios against a baseline") {
    const auto arch = repo_root() / "configs" / "energy" / "ecg_lstm.json";
    const auto base = repo_root() / "configs" / "energy" / "ecg_lif_srnn.json";
    const auto scatter = fs::temp_directory_path() / "srnn_scatter.csv";
    RunResult r = run_cli("energy --arch " + arch.string() + " --baseline " +
                          base.string() + " --scatter " + scatter.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("energy ratio") != std::string::npos);
    std::ifstream sc(scatter);
    std::string header, row;
    std::getline(sc, header);
    std::getline(sc, row);
    CHECK(header == "name,energy_ratio,error_ratio");
    CHECK(row.find("ecg lstm") != std::string::npos);
  }
  SUBCASE("baseline against itself is 1x") {
    const auto base = repo_root() / "configs" / "energy" / "ecg_lif_srnn.json";
    RunResult r = run_cli("energy --arch " + base.string() + " --baseline " +
                          base.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("energy ratio: 1") != std::string::npos);
    CHECK(r.output.find("efficiency:   1") != std::string::npos);
  }
  SUBCASE("gradcheck passes on a small adaptive net and fails nowhere") {
    const auto cfg = repo_root() / "configs" / "gradcheck_adaptive.json";
    RunResult r = run_cli("--config " + cfg.string() + " gradcheck");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(r.output.find("tau_adp") != std::string::npos);
  }
  SUBCASE("train is deterministic under --seed and writes artifacts") {
    const auto cfg = write_config("tiny_train.json", R"({
      "task": "ecg_synth",
      "seed": 3,
      "network": { "hidden": [10] },
      "training": { "epochs": 2, "batch": 8, "threads": 1 },
      "data": { "synth_samples": 16, "synth_test_samples": 4,
                "synth_steps": 120 }
    })");
    const fs::path out1 = fs::temp_directory_path() / "srnn_run1";
    const fs::path out2 = fs::temp_directory_path() / "srnn_run2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    RunResult r1 = run_cli("--config " + cfg.string() +
                           " --seed 99 --out-dir " + out1.string() + " train");
    RunResult r2 = run_cli("--config " + cfg.string() +
                           " --seed 99 --out-dir " + out2.string() + " train");
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);
    auto slurp = [](const fs::path& p) {
      std::ifstream is(p);
      std::stringstream ss;
      ss << is.rdbuf();
      return ss.str();
    };
    const std::string m1 = slurp(out1 / "metrics.jsonl");
    CHECK(!m1.empty());
    CHECK(m1 == slurp(out2 / "metrics.jsonl"));
    CHECK(fs::exists(out1 / "best.ckpt"));
    CHECK(fs::exists(out1 / "summary.json"));
    CHECK(slurp(out1 / "summary.json").find("energy_pj_per_step") !=
          std::string::npos);

    // a different seed actually changes the run
    const fs::path out3 = fs::temp_directory_path() / "srnn_run3";
    fs::remove_all(out3);
    run_cli("--config " + cfg.string() + " --seed 100 --out-dir " +
            out3.string() + " train");
    CHECK(m1 != slurp(out3 / "metrics.jsonl"));
  }
  SUBCASE("encode reports compression for a constant signal") {
    const fs::path csv = fs::temp_directory_path() / "srnn_flat.csv";
    {
      std::ofstream os(csv);
      for (int t = 0; t < 50; ++t) os << t << ",0.5,0.5,TP\n";
    }
    const fs::path out = fs::temp_directory_path() / "srnn_flat.spkt";
    RunResult r = run_cli("encode --input " + csv.string() +
                          " --encoder level_crossing --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"events\": 0") != std::string::npos);
  }
}
