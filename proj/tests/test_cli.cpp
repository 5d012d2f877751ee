#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "grasp/png_io.hpp"
#include "testutil.hpp"

#ifndef GRASPCLI_PATH
#error "GRASPCLI_PATH must be defined by the build"
#endif

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(GRASPCLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

int count_lines_with(const std::filesystem::path& p, const std::string& needle) {
  std::ifstream is(p);
  std::string line;
  int n = 0;
  while (std::getline(is, line))
    if (line.find(needle) != std::string::npos) ++n;
  return n;
}

// small, fast configuration shared by the pipeline tests
std::string fast_sets(const std::filesystem::path& out) {
  return " --set out.dir=" + out.string() +
         " --set patch.side=12"
         " --set synth.count=4 --set synth.width=96 --set synth.height=72"
         " --set train.small.k1=6 --set train.small.k2=5"
         " --set train.large.k1=10 --set train.large.k2=8"
         " --set train.max_iters=15"
         " --set detect.stride=14 --set detect.angle_step_deg=45"
         " --set detect.len_set=20,28 --set detect.wid_set=12";
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  CliResult r = run_cli("--help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("synth"), std::string::npos);
  EXPECT_NE(r.output.find("heatmap"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  grasp::testutil::TempDir tmp("cli-usage");
  CliResult r = run_cli("train --run-dir " + (tmp.path() / "r").string() +
                        " --set no.such.key=1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("no.such.key"), std::string::npos);
}

TEST(Cli, MissingDatasetPathExitsTwoNamingPath) {
  grasp::testutil::TempDir tmp("cli-missing");
  CliResult r = run_cli("train --run-dir " + (tmp.path() / "r").string() +
                        " --set data.dir=/nonexistent/dataset-dir");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("/nonexistent/dataset-dir"), std::string::npos);
}

TEST(Cli, TrainIsByteDeterministicAndEchoesConfig) {
  grasp::testutil::TempDir tmp("cli-train");
  std::string sets = fast_sets(tmp.path());
  CliResult r1 = run_cli("train --run-dir " + (tmp.path() / "a").string() + sets);
  ASSERT_EQ(r1.exit_code, 0) << r1.output;
  CliResult r2 = run_cli("train --run-dir " + (tmp.path() / "b").string() + sets);
  ASSERT_EQ(r2.exit_code, 0) << r2.output;

  for (const char* name : {"small.model", "large.model"}) {
    std::string m1 = slurp(tmp.path() / "a" / name);
    std::string m2 = slurp(tmp.path() / "b" / name);
    ASSERT_FALSE(m1.empty());
    EXPECT_EQ(m1, m2) << name;
  }
  std::string echo = slurp(tmp.path() / "a" / "config.txt");
  EXPECT_NE(echo.find("patch.side = 12"), std::string::npos);
  EXPECT_NE(echo.find("train.reg1.kind"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(tmp.path() / "a" / "train_log.jsonl"));

  // a different seed produces different models
  CliResult r3 = run_cli("train --run-dir " + (tmp.path() / "c").string() + sets +
                         " --set seed=5");
  ASSERT_EQ(r3.exit_code, 0);
  EXPECT_NE(slurp(tmp.path() / "a" / "small.model"), slurp(tmp.path() / "c" / "small.model"));
}

TEST(Cli, SynthWritesLoadableDataset) {
  grasp::testutil::TempDir tmp("cli-synth");
  std::string data = (tmp.path() / "data").string();
  CliResult r = run_cli("synth --run-dir " + (tmp.path() / "r").string() +
                        " --data-out " + data + fast_sets(tmp.path()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(data + "/pcd0000r.png"));
  EXPECT_TRUE(std::filesystem::exists(data + "/pcd0003cneg.txt"));
  EXPECT_TRUE(std::filesystem::exists(data + "/z.txt"));

  // a training run can consume the serialized dataset
  CliResult t = run_cli("train --run-dir " + (tmp.path() / "t").string() +
                        fast_sets(tmp.path()) + " --set data.dir=" + data);
  EXPECT_EQ(t.exit_code, 0) << t.output;
}

TEST(Cli, DetectWritesOverlayAndRecords) {
  grasp::testutil::TempDir tmp("cli-detect");
  std::string sets = fast_sets(tmp.path());
  ASSERT_EQ(run_cli("train --run-dir " + (tmp.path() / "m").string() + sets).exit_code, 0);

  CliResult r = run_cli("detect --models " + (tmp.path() / "m").string() + " --index 1 " +
                        "--run-dir " + (tmp.path() / "d").string() + sets);
  ASSERT_EQ(r.exit_code, 0) << r.output;

  grasp::ImageU8 overlay = grasp::read_png(tmp.path() / "d" / "overlay.png");
  EXPECT_EQ(overlay.width, 96);
  EXPECT_EQ(overlay.height, 72);

  auto records = tmp.path() / "d" / "detections.jsonl";
  EXPECT_EQ(count_lines_with(records, "\"row\":\"best\""), 1);
  EXPECT_EQ(count_lines_with(records, "\"row\":\"counters\""), 1);
  EXPECT_GT(count_lines_with(records, "\"row\":\"candidate\""), 0);

  // deterministic records
  CliResult r2 = run_cli("detect --models " + (tmp.path() / "m").string() + " --index 1 " +
                         "--run-dir " + (tmp.path() / "d2").string() + sets);
  ASSERT_EQ(r2.exit_code, 0);
  auto strip_timing = [](std::string s) {
    // wall-clock fields differ between runs; compare everything after them
    auto pos = s.find("\"stage1_sec\"");
    return pos == std::string::npos ? s : s.substr(0, pos);
  };
  std::ifstream a(records), b(tmp.path() / "d2" / "detections.jsonl");
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) EXPECT_EQ(strip_timing(la), strip_timing(lb));
}

TEST(Cli, ExhaustiveMatchesTwoStageAtHugeT) {
  grasp::testutil::TempDir tmp("cli-exh");
  std::string sets = fast_sets(tmp.path());
  ASSERT_EQ(run_cli("train --run-dir " + (tmp.path() / "m").string() + sets).exit_code, 0);

  CliResult ex = run_cli("detect --models " + (tmp.path() / "m").string() +
                         " --index 0 --exhaustive --run-dir " + (tmp.path() / "x").string() +
                         sets);
  CliResult ts = run_cli("detect --models " + (tmp.path() / "m").string() +
                         " --index 0 --run-dir " + (tmp.path() / "y").string() + sets +
                         " --set detect.T=1000000");
  ASSERT_EQ(ex.exit_code, 0);
  ASSERT_EQ(ts.exit_code, 0);

  auto best_line = [](const std::filesystem::path& p) {
    std::ifstream is(p);
    std::string line;
    while (std::getline(is, line))
      if (line.find("\"row\":\"best\"") != std::string::npos) return line;
    return std::string();
  };
  std::string bx = best_line(tmp.path() / "x" / "detections.jsonl");
  std::string by = best_line(tmp.path() / "y" / "detections.jsonl");
  ASSERT_FALSE(bx.empty());
  EXPECT_EQ(bx, by);
}

TEST(Cli, HeatmapWritesTwoGrayscalePlanes) {
  grasp::testutil::TempDir tmp("cli-hm");
  std::string sets = fast_sets(tmp.path());
  ASSERT_EQ(run_cli("train --run-dir " + (tmp.path() / "m").string() + sets).exit_code, 0);
  CliResult r = run_cli("heatmap --models " + (tmp.path() / "m").string() +
                        " --index 0 --net small --run-dir " + (tmp.path() / "h").string() +
                        sets);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* name : {"heatmap_left.png", "heatmap_right.png"}) {
    grasp::ImageU8 img = grasp::read_png(tmp.path() / "h" / name);
    EXPECT_EQ(img.width, 96);
    EXPECT_EQ(img.height, 72);
    EXPECT_EQ(img.channels, 1);
  }
}

TEST(Cli, EvalEmitsRowPerConfigAndSplitAndCaches) {
  grasp::testutil::TempDir tmp("cli-eval");
  std::string sets = fast_sets(tmp.path()) +
                     " --set eval.folds=2 --set synth.count=6 --set synth.images_per_object=2"
                     " --set train.max_iters=8";
  CliResult r = run_cli("eval --regs l1,group_l0_max --splits image_wise --cache --run-dir " +
                        (tmp.path() / "e1").string() + sets);
  ASSERT_EQ(r.exit_code, 0) << r.output;

  auto report = tmp.path() / "e1" / "report.jsonl";
  EXPECT_EQ(count_lines_with(report, "\"name\":\"overall\""), 2);  // 2 regs x 1 split
  EXPECT_EQ(count_lines_with(report, "\"name\":\"fold0\""), 2);
  EXPECT_TRUE(std::filesystem::exists(tmp.path() / "models"));

  // cached rerun skips training
  CliResult r2 = run_cli("eval --regs l1,group_l0_max --splits image_wise --cache --run-dir " +
                         (tmp.path() / "e2").string() + sets);
  ASSERT_EQ(r2.exit_code, 0);
  EXPECT_NE(r2.output.find("using cached models"), std::string::npos);
  EXPECT_EQ(slurp(tmp.path() / "e1" / "report.jsonl"), slurp(tmp.path() / "e2" / "report.jsonl"));
}
