#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using srtg::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("srtg_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string config(const std::string& name) { return std::string(SRTG_CONFIG_DIR) + "/" + name; }

const std::vector<std::string> kSmall = {
    "--set", "data.clip=1x4x8x8",       "--set", "data.train_samples=24",
    "--set", "data.val_samples=8",      "--set", "network.stem_channels=4",
    "--set", "network.stage_channels=4,4", "--set", "train.batch_size=8",
    "--set", "train.epochs=3",          "--set", "train.frames=4"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST(Cli, MissingConfigIsValidationError) {
  const auto r = call({"count-ops", "--config", "/nonexistent/net.cfg"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, UnknownKeyIsValidationError) {
  EXPECT_EQ(call({"count-ops", "--set", "network.depth=3"}).code, 1);
  EXPECT_EQ(call({"count-ops", "--set", "network.placement=sideways"}).code, 1);
  EXPECT_EQ(call({"count-ops", "--units", "tflops"}).code, 1);
  EXPECT_EQ(call({"frobnicate"}).code, 1);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST(Cli, UnwritableOutDirIsRuntimeError) {
  const fs::path blocker = temp_dir("blocker");
  std::ofstream(blocker) << "file";
  EXPECT_EQ(call({"count-ops", "--out", (blocker / "sub").string()}).code, 2);
}

TEST(Cli, CountOpsReport) {
  const fs::path dir = temp_dir("ops");
  const auto r = call({"count-ops", "--net", config("r3d34_srtg.cfg"), "--input", "3x16x224x224",
                       "--units", "gflops", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "op_count.json"));
  EXPECT_EQ(j["input"], "3x16x224x224");
  EXPECT_NEAR(j["totals"]["gmacs"].get<double>(), 110.48, 0.02 * 110.48);
  EXPECT_DOUBLE_EQ(j["totals"]["gflops"].get<double>(), 2.0 * j["totals"]["gmacs"].get<double>());
  EXPECT_EQ(nlohmann::json::parse(r.out), j);
  EXPECT_TRUE(fs::exists(dir / "effective.cfg"));
}

TEST(Cli, GenDataWritesSplits) {
  const fs::path dir = temp_dir("gen");
  const auto r = call(with_small({"gen-data", "--seed", "3", "--out", dir.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "train.bin"));
  EXPECT_TRUE(fs::exists(dir / "val.bin"));
  EXPECT_NE(slurp(dir / "effective.cfg").find("seed = 3"), std::string::npos);
}

TEST(Cli, SeededRunsAreByteIdentical) {
  const fs::path a = temp_dir("run_a"), b = temp_dir("run_b");
  ASSERT_EQ(call(with_small({"train", "--seed", "7", "--out", a.string()})).code, 0);
  ASSERT_EQ(call(with_small({"train", "--seed", "7", "--out", b.string()})).code, 0);
  const std::string csv = slurp(a / "metrics.csv");
  EXPECT_EQ(csv, slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));
  EXPECT_EQ(slurp(a / "seed.txt"), "7\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Cli, EchoedConfigReproducesRun) {
  const fs::path a = temp_dir("echo_a"), b = temp_dir("echo_b");
  ASSERT_EQ(call(with_small({"train", "--seed", "4", "--out", a.string()})).code, 0);
  ASSERT_EQ(call({"train", "--config", (a / "effective.cfg").string(), "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Cli, TrainFromSavedData) {
  const fs::path data = temp_dir("saved_data"), a = temp_dir("mem"), b = temp_dir("disk");
  ASSERT_EQ(call(with_small({"gen-data", "--seed", "2", "--out", data.string()})).code, 0);
  ASSERT_EQ(call(with_small({"train", "--seed", "2", "--out", a.string()})).code, 0);
  ASSERT_EQ(call(with_small({"train", "--seed", "2", "--data", data.string(), "--out", b.string()})).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Cli, StopAndResumeIsBitExact) {
  const fs::path full = temp_dir("full"), part = temp_dir("part");
  ASSERT_EQ(call(with_small({"train", "--seed", "1", "--out", full.string()})).code, 0);
  ASSERT_EQ(call(with_small({"train", "--seed", "1", "--stop-after", "1", "--out", part.string()})).code, 0);
  const auto r = call({"train", "--resume", (part / "checkpoint.bin").string(), "--out", part.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resumed after epoch 1"), std::string::npos);
  EXPECT_EQ(slurp(full / "metrics.csv"), slurp(part / "metrics.csv"));
  EXPECT_EQ(slurp(full / "checkpoint.bin"), slurp(part / "checkpoint.bin"));
}

TEST(Cli, CorruptCheckpointIsRuntimeError) {
  const fs::path dir = temp_dir("corrupt");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.bin") << "SRTGCKPT garbage";
  EXPECT_EQ(call({"evaluate", "--checkpoint", (dir / "bad.bin").string(), "--out", dir.string()}).code, 2);
}

TEST(Cli, EvaluateAndGateAnalyze) {
  const fs::path dir = temp_dir("eval");
  ASSERT_EQ(call(with_small({"train", "--seed", "5", "--out", dir.string()})).code, 0);
  const std::string ck = (dir / "checkpoint.bin").string();
  ASSERT_EQ(call({"evaluate", "--checkpoint", ck, "--out", dir.string()}).code, 0);
  const auto m = nlohmann::json::parse(slurp(dir / "metrics.json"));
  EXPECT_GE(m["top1"].get<double>(), 0.0);
  EXPECT_LE(m["top1"].get<double>(), 1.0);

  const auto r = call({"gate-analyze", "--checkpoint", ck, "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rates = nlohmann::json::parse(slurp(dir / "open_rates.json"));
  ASSERT_EQ(rates.size(), 2u);
  for (const auto& [layer, v] : rates.items()) {
    EXPECT_GE(v.get<double>(), 0.0);
    EXPECT_LE(v.get<double>(), 1.0);
  }
  std::istringstream lines(slurp(dir / "gate_log.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("verdict"));
  }
  EXPECT_EQ(n, 16u);
}

TEST(Cli, GradCheckPasses) {
  const fs::path dir = temp_dir("grad");
  const auto r = call({"grad-check", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "grad_check.json"));
  EXPECT_EQ(j["cases"].size(), 7u);
}
