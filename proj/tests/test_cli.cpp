#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace {

const std::filesystem::path kTmp = std::filesystem::temp_directory_path();

int run(const std::string& args) {
  const std::string cmd = std::string(MIBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const std::string kSmallGrid =
    "--dims 2 --mi-targets 1 --train-sizes 256 --n-seeds 1 --eval-size 256 --epochs 2 --hidden-dims 8 8";

TEST(Cli, GridSucceedsAndIsReproducible) {
  const auto a = kTmp / "mibench_cli_a.csv";
  const auto b = kTmp / "mibench_cli_b.json";
  const auto c = kTmp / "mibench_cli_c.csv";
  EXPECT_EQ(run("grid " + kSmallGrid + " --estimators 'demi,smile(1)' --no-wall-time --out " + a.string()), 0);
  EXPECT_EQ(run("grid " + kSmallGrid + " --estimators 'demi,smile(1)' --format json --out " + b.string()), 0);
  EXPECT_EQ(run("grid " + kSmallGrid + " --estimators 'demi,smile(1)' --no-wall-time --parallelism 2 --out " +
                c.string()),
            0);
  EXPECT_EQ(slurp(a), slurp(c));
  EXPECT_EQ(slurp(b).front(), '[');
  for (const auto& p : {a, b, c}) std::filesystem::remove(p);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = kTmp / "mibench_cli_grid.json";
  const auto out = kTmp / "mibench_cli_cfg.csv";
  std::ofstream(cfg) << R"json({"dims": [2], "mi_targets": [0.5], "train_sizes": [256], "estimators": ["demi(0.5)"],
                           "n_seeds": 1, "eval_size": 256, "epochs": 1, "hidden_dims": [8]})json";
  EXPECT_EQ(run("grid --config " + cfg.string() + " --mi-targets 2 --no-wall-time --out " + out.string()), 0);
  EXPECT_NE(slurp(out).find("\n2,2,256,false,demi(0.5),0,"), std::string::npos);
  std::ofstream(cfg) << R"json({"dims": [2], "bogus": 1})json";
  EXPECT_EQ(run("grid --config " + cfg.string() + " --out " + out.string()), 1);
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("grid --estimators gm --out " + (kTmp / "mibench_cli_x.csv").string()), 1);
  EXPECT_EQ(run("grid " + kSmallGrid + " --estimators mine --out /nonexistent-dir/x.csv"), 3);
  EXPECT_EQ(run("grid " + kSmallGrid + " --estimators mine --learning-rate 1e300 --out " +
                (kTmp / "mibench_cli_div.csv").string()),
            2);
  EXPECT_EQ(run("selfconsistency --images /nonexistent-dir/imgs --out " + (kTmp / "mibench_cli_sc.csv").string()), 3);
  EXPECT_EQ(run("oracle --dim 20 --mi 10 --n 2048 --seed 1"), 0);
  EXPECT_EQ(run("oracle --dim 20 --mi -1"), 1);
  EXPECT_EQ(run("gradcheck --trials 3"), 0);
  EXPECT_EQ(run("no-such-command"), 1);
  std::filesystem::remove(kTmp / "mibench_cli_div.csv");
}

TEST(Cli, LongrunWritesTrace) {
  const auto out = kTmp / "mibench_cli_trace.csv";
  EXPECT_EQ(run("longrun --dim 2 --mi 1 --steps 200 --estimators 'smile(1),demi(0.5)' --out " + out.string()), 0);
  const std::string text = slurp(out);
  EXPECT_EQ(text.substr(0, text.find('\n')), "estimator,step,estimate,smoothed");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  std::filesystem::remove(out);
}

}  // namespace
