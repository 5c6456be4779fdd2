#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "mixinfer/cli.hpp"
#include "mixinfer/merge_io.hpp"

using namespace mixinfer;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mixinfer_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), {"--log-level", "error"});
    return run_cli(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string toy_manifest() {
    std::ofstream(dir_ / "toy.txt") << "low low low lower lower\n";
    std::ofstream(dir_ / "toy.tsv") << "0\ttoy\ttoy.txt\n";
    return path("toy.tsv");
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, TrainToyManifest) {
  ASSERT_EQ(run({"train", "--manifest", toy_manifest(), "--num-merges", "3", "--out", path("m.txt")}), kExitOk)
      << err_.str();
  const auto ml = parse_merge_list(read_tokenizer_file(path("m.txt"), MergeFormat::plain));
  EXPECT_EQ(ml.rules(), (std::vector<MergeRule>{{"l", "o"}, {"lo", "w"}, {"e", "r"}}));
}

TEST_F(Cli, TrainZeroMergesWritesEmptyFile) {
  ASSERT_EQ(run({"train", "--manifest", toy_manifest(), "--num-merges", "0", "--out", path("m.txt")}), kExitOk);
  EXPECT_TRUE(read(path("m.txt")).empty());
}

TEST_F(Cli, ConfigAndUsageErrors) {
  EXPECT_EQ(run({"train", "--manifest", path("none.tsv"), "--num-merges", "3", "--out", path("m.txt")}), kExitConfig);
  EXPECT_EQ(run({"train", "--bogus-flag"}), kExitConfig);
  EXPECT_EQ(run({"no-such-command"}), kExitConfig);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(Cli, InspectListing) {
  ASSERT_EQ(run({"train", "--manifest", toy_manifest(), "--num-merges", "3", "--out", path("m.txt")}), kExitOk);
  ASSERT_EQ(run({"inspect", "--merges", path("m.txt"), "--format", "plain", "--top", "0"}), kExitOk);
  EXPECT_EQ(out_.str(), "# 3 merges (byte-level), showing 0\n");
  ASSERT_EQ(run({"inspect", "--merges", path("m.txt"), "--format", "plain", "--top", "10"}), kExitOk);
  EXPECT_EQ(out_.str(), "# 3 merges (byte-level), showing 3\n1\tl o\n2\tlo w\n3\te r\n");
}

TEST_F(Cli, InspectDisplaysSpaceAsUnderscore) {
  std::ofstream(dir_ / "hf.txt") << "#version: 0.2\n\xc4\xa0 t\n";
  ASSERT_EQ(run({"inspect", "--merges", path("hf.txt"), "--top", "1"}), kExitOk);
  EXPECT_NE(out_.str().find("1\t_ t\n"), std::string::npos) << out_.str();
}

TEST_F(Cli, GenerateTrainAttack) {
  ASSERT_EQ(run({"generate", "--categories", "3", "--bytes", "120000", "--out", path("gen")}), kExitOk) << err_.str();
  ASSERT_EQ(run({"train", "--manifest", path("gen/manifest.tsv"), "--num-merges", "200", "--out", path("m.txt")}),
            kExitOk);
  ASSERT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "200", "--cache", path("cache"), "--out", path("est.csv")}),
            kExitOk)
      << err_.str();
  const auto csv = read(path("est.csv"));
  EXPECT_EQ(csv.rfind("category,name,alpha_hat\n", 0), 0u);
  EXPECT_TRUE(fs::exists(path("est.csv.diagnostics.json")));
  EXPECT_FALSE(fs::is_empty(path("cache")));
  // Cached timelines give the same estimate.
  ASSERT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "200", "--cache", path("cache"), "--out", path("est2.csv")}),
            kExitOk);
  EXPECT_EQ(read(path("est2.csv")), csv);
  EXPECT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "201", "--out", path("est3.csv")}),
            kExitConfig);
}

TEST_F(Cli, ReplayThenAttackFromTimelines) {
  ASSERT_EQ(run({"generate", "--categories", "2", "--bytes", "60000", "--out", path("gen")}), kExitOk);
  ASSERT_EQ(run({"train", "--manifest", path("gen/manifest.tsv"), "--num-merges", "100", "--out", path("m.txt")}),
            kExitOk);
  ASSERT_EQ(run({"replay", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "100", "--out", path("tl")}),
            kExitOk);
  EXPECT_TRUE(fs::exists(path("tl/category_0.pctl")));
  ASSERT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--timelines", path("tl"), "--T", "100",
                 "--out", path("est.csv")}),
            kExitOk)
      << err_.str();
}

#ifdef MIXINFER_CLI_PATH
TEST_F(Cli, ExternalSolverRoundTrip) {
  ASSERT_EQ(run({"generate", "--categories", "2", "--bytes", "60000", "--out", path("gen")}), kExitOk);
  ASSERT_EQ(run({"train", "--manifest", path("gen/manifest.tsv"), "--num-merges", "80", "--out", path("m.txt")}),
            kExitOk);
  ASSERT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "80", "--out", path("embedded.csv")}),
            kExitOk);
  const std::string cmd = std::string(MIXINFER_CLI_PATH) + " --log-level off solve-lp --lp {lp} --out {sol}";
  ASSERT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "80", "--solver", "external-file", "--solver-command", cmd, "--out", path("external.csv")}),
            kExitOk)
      << err_.str();
  EXPECT_FALSE(read(path("external.csv")).empty());
  EXPECT_EQ(run({"attack", "--merges", path("m.txt"), "--format", "plain", "--manifest", path("gen/manifest.tsv"),
                 "--T", "80", "--solver", "external-file", "--solver-command", "false", "--out", path("x.csv")}),
            kExitData);
}
#endif

TEST_F(Cli, ExperimentEmptyAndMalformed) {
  std::ofstream(dir_ / "empty.cfg") << "trials = 0\ncategories = 2\n";
  ASSERT_EQ(run({"experiment", "--config", path("empty.cfg"), "--out", path("exp")}), kExitOk) << err_.str();
  EXPECT_EQ(read(path("exp/summary.csv")).find('\n'), read(path("exp/summary.csv")).size() - 1);
  EXPECT_EQ(read(path("exp/report.csv")), "trial,method,category,true_weight,est_weight\n");
  std::ofstream(dir_ / "bad.cfg") << "trials = 2\nnot a setting\n";
  EXPECT_EQ(run({"experiment", "--config", path("bad.cfg"), "--out", path("exp2")}), kExitConfig);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
}

TEST_F(Cli, BaselineRandom) {
  ASSERT_EQ(run({"generate", "--categories", "2", "--bytes", "20000", "--out", path("gen")}), kExitOk);
  ASSERT_EQ(run({"--seed", "4", "baseline", "--method", "random", "--manifest", path("gen/manifest.tsv"), "--out",
                 path("r.csv")}),
            kExitOk)
      << err_.str();
  EXPECT_FALSE(read(path("r.csv")).empty());
}
