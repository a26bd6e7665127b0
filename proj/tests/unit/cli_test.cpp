#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string err;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(DADAGGER_CLI_PATH) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallRun = R"({
  "variant": "dadagger_dropout", "env_kind": "track", "alpha": 0.2, "ensemble_m": 4,
  "n_iters": 2, "eval_episodes": 1, "initial_dataset": "expert:1",
  "mlp": {"layer_sizes": [10, 8, 1]}, "train": {"epochs": 2}
})";

TEST(Cli, RunWritesThreeFiles) {
  const auto dir = dadagger::testing::scratch_dir("cli_run");
  write(dir / "cfg.json", kSmallRun);
  const CliResult r = cli("run --config " + (dir / "cfg.json").string() + " --out " +
                              (dir / "out").string(),
                          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"report.json", "best_policy.json", "dataset.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const CliResult rep = cli("report " + (dir / "out").string(), dir);
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("best iteration"), std::string::npos);
}

TEST(Cli, RunIsByteForByteRepeatable) {
  const auto dir = dadagger::testing::scratch_dir("cli_repeat");
  write(dir / "cfg.json", kSmallRun);
  for (const char* o : {"a", "b"}) {
    ASSERT_EQ(cli("run --config " + (dir / "cfg.json").string() + " --out " + (dir / o).string(),
                  dir)
                  .code,
              0);
  }
  for (const char* f : {"report.json", "best_policy.json", "dataset.jsonl"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, AlphaOutOfRangeIsAConfigError) {
  const auto dir = dadagger::testing::scratch_dir("cli_alpha");
  write(dir / "cfg.json", R"({"variant": "dadagger_dropout", "env_kind": "track", "alpha": 1.5})");
  const CliResult r = cli("run --config " + (dir / "cfg.json").string() + " --out " +
                              (dir / "out").string(),
                          dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("alpha out of range"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "report.json"));
}

TEST(Cli, MissingEnvKindNamesTheField) {
  const auto dir = dadagger::testing::scratch_dir("cli_env");
  write(dir / "cfg.json", R"({"variant": "dagger"})");
  const CliResult r = cli("run --config " + (dir / "cfg.json").string() + " --out " +
                              (dir / "out").string(),
                          dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("env_kind"), std::string::npos) << r.err;
}

TEST(Cli, MalformedJsonAndMissingFile) {
  const auto dir = dadagger::testing::scratch_dir("cli_bad");
  write(dir / "cfg.json", "{not json");
  EXPECT_EQ(cli("run --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir).code,
            1);
  EXPECT_EQ(cli("run --config " + (dir / "nope.json").string() + " --out " + dir.string(), dir).code,
            1);
  EXPECT_EQ(cli("run --out " + dir.string(), dir).code, 1);
}

TEST(Cli, ReportOnEmptyDirectoryFails) {
  const auto dir = dadagger::testing::scratch_dir("cli_report");
  fs::create_directories(dir / "empty");
  const CliResult r = cli("report " + (dir / "empty").string(), dir);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("report.json"), std::string::npos) << r.err;
}

TEST(Cli, SweepAndBuildDataset) {
  const auto dir = dadagger::testing::scratch_dir("cli_sweep");
  write(dir / "sweep.json", R"({
    "alphas": [0.2], "ms": [3], "variants": ["dadagger_dropout", "random"], "seeds": [0, 1],
    "base": {"env_kind": "track", "n_iters": 1, "eval_episodes": 1, "horizon": 50,
             "mlp": {"layer_sizes": [10, 6, 1]}, "train": {"epochs": 1}}
  })");
  const CliResult s = cli("sweep --spec " + (dir / "sweep.json").string() + " --out " +
                              (dir / "s").string() + " --jobs 2",
                          dir);
  ASSERT_EQ(s.code, 0) << s.err;
  for (const char* f : {"sweep.json", "sweep_cells.csv", "sweep_table.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "s" / f)) << f;
  }

  write(dir / "build.json", R"({"env_kind": "track", "n_iters": 1, "eval_episodes": 1,
    "mlp": {"layer_sizes": [10, 6, 1]}, "train": {"epochs": 1}})");
  const CliResult b = cli("build-dataset --config " + (dir / "build.json").string() + " --out " +
                              (dir / "b").string(),
                          dir);
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"report.json", "dataset.jsonl", "histogram.csv", "oneshot.json"}) {
    EXPECT_TRUE(fs::exists(dir / "b" / f)) << f;
  }
  const CliResult rep = cli("report " + (dir / "s").string() + " " + (dir / "b").string(), dir);
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("== sweep:"), std::string::npos);
  EXPECT_NE(rep.out.find("== run:"), std::string::npos);
  EXPECT_NE(rep.out.find("one-shot check"), std::string::npos);
}

}  // namespace
