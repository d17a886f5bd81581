#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "invrescale/cli/commands.hpp"

using namespace invrescale;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kToyConfig = R"(# small model for the command-line tests
scale = 4
coupling_hidden = 8
pse_hidden = 8
pse_dim = 8
predictor_hidden = 4
adp_tile = 4
lr = 1e-3
halve_every = 100
steps = 200
batch = 2
crop = 32
seed = 21
)";

struct CmdResult {
  int code = 0;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Shared across the suite: a synthetic dataset and one trained checkpoint.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "invrescale_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "toy.cfg") << kToyConfig;
    ASSERT_EQ(run("synth --out " + (dir_ / "data").string() + " --count 8 --size 64 --seed 4").code, 0);
    const auto r = run("train --config " + (dir_ / "toy.cfg").string() + " --data " + (dir_ / "data").string() +
                       " --out " + (dir_ / "a.ckpt").string());
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static CmdResult run(const std::string& args) {
    static int counter = 0;
    const auto out = dir_ / ("stdout_" + std::to_string(counter));
    const auto err = dir_ / ("stderr_" + std::to_string(counter++));
    const std::string cmd = std::string(INVRESCALE_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static fs::path p(const std::string& name) { return dir_ / name; }
  static std::string ps(const std::string& name) { return p(name).string(); }

  static inline fs::path dir_;
};

std::vector<std::string> log_rows(const fs::path& path) {
  std::vector<std::string> rows;
  std::ifstream f(path);
  for (std::string line; std::getline(f, line);)
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

}  // namespace

TEST(Config, ParsesEveryDocumentedKey) {
  const auto cfg = parse_run_config(kToyConfig);
  EXPECT_EQ(cfg.model.scale, 4u);
  EXPECT_EQ(cfg.model.coupling_hidden, 8u);
  EXPECT_EQ(cfg.train.steps, 200u);
  EXPECT_EQ(cfg.train.optimizer.lr, 1e-3);
  EXPECT_EQ(cfg.model.seed, 21u);
  EXPECT_EQ(cfg.train.seed, 21u);
  const auto again = parse_run_config(to_text(cfg));
  EXPECT_EQ(to_text(again), to_text(cfg));
  const auto d = parse_run_config("");
  EXPECT_EQ(d.model.scale, 4u);
  EXPECT_EQ(d.train.weights.feature, 5.0);
  EXPECT_EQ(d.train.optimizer.lr, 1e-4);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_run_config("scael = 4\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scale = 4\nscale = 2\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scale = 3\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scale 4\n"), ConfigError);
  EXPECT_THROW(parse_run_config("lr = fast\n"), ConfigError);
  EXPECT_THROW(parse_run_config("adp = gaussian\n"), ConfigError);
  EXPECT_THROW(parse_run_config("crop = 30\n"), ConfigError);
  EXPECT_NO_THROW(parse_run_config("  # comment only\n\nadp = zeros  # trailing\n"));
}

TEST(Config, ExtentParsing) {
  const auto e = cli::parse_extent("256x128");
  EXPECT_EQ(e.width, 256u);
  EXPECT_EQ(e.height, 128u);
  EXPECT_THROW(cli::parse_extent("256"), ConfigError);
  EXPECT_THROW(cli::parse_extent("0x4"), ConfigError);
}

TEST_F(Cli, TrainWritesCheckpointAndOneLogRowPerStep) {
  EXPECT_TRUE(fs::exists(p("a.ckpt")));
  const auto rows = log_rows(ps("a.ckpt") + ".log");
  ASSERT_EQ(rows.size(), 200u);
  EXPECT_EQ(slurp(p("a.ckpt.log")).substr(0, std::string(cli::kLogHeader).size()), cli::kLogHeader);
  std::istringstream first(rows.front()), last(rows.back());
  std::uint64_t s0 = 0, s1 = 0;
  first >> s0;
  last >> s1;
  EXPECT_EQ(s0, 1u);
  EXPECT_EQ(s1, 200u);
  double fields[7];
  for (double& f : fields) ASSERT_TRUE(last >> f);
  for (double f : fields) EXPECT_TRUE(std::isfinite(f));
}

TEST_F(Cli, SameSeedGivesBitwiseIdenticalCheckpoints) {
  ASSERT_EQ(run("train --config " + ps("toy.cfg") + " --data " + ps("data") + " --out " + ps("b.ckpt")).code, 0);
  EXPECT_EQ(read_file_bytes(p("a.ckpt")), read_file_bytes(p("b.ckpt")));
  EXPECT_EQ(slurp(p("a.ckpt.log")), slurp(p("b.ckpt.log")));
}

TEST_F(Cli, ResumeContinuesTheStepCounter) {
  fs::copy_file(p("a.ckpt.log"), p("resumed.log"), fs::copy_options::overwrite_existing);
  const auto r = run("train --config " + ps("toy.cfg") + " --data " + ps("data") + " --out " + ps("r.ckpt") +
                     " --resume " + ps("a.ckpt") + " --log " + ps("resumed.log"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = log_rows(p("resumed.log"));
  ASSERT_EQ(rows.size(), 400u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::uint64_t s = 0;
    std::istringstream(rows[i]) >> s;
    ASSERT_EQ(s, i + 1);
  }
  const auto lm = cli::load_model(p("r.ckpt"));
  EXPECT_EQ(lm.optimizer.step, 400u);
}

TEST_F(Cli, TrainFailsCleanlyOnBadInput) {
  std::ofstream(p("typo.cfg")) << "scael = 4\n";
  auto r = run("train --config " + ps("typo.cfg") + " --data " + ps("data") + " --out " + ps("x.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("scael"), std::string::npos);
  fs::create_directories(p("empty"));
  r = run("train --config " + ps("toy.cfg") + " --data " + ps("empty") + " --out " + ps("x.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(p("x.ckpt")));
}

TEST_F(Cli, DownscaleAndUpscaleExtents) {
  png_write(p("big.png"), from_tensor(synth_dataset<float>(1, 256, 256, 8)[0]));
  ASSERT_EQ(run("downscale --ckpt " + ps("a.ckpt") + " --in " + ps("big.png") + " --out " + ps("big_lr.png")).code, 0);
  const auto lr = png_read(p("big_lr.png"));
  EXPECT_EQ(lr.width, 64u);
  EXPECT_EQ(lr.height, 64u);
  ASSERT_EQ(run("upscale --ckpt " + ps("a.ckpt") + " --in " + ps("big_lr.png") + " --out " + ps("big_hr.png") +
                " --expect-size 256x256")
                .code,
            0);
  const auto hr = png_read(p("big_hr.png"));
  EXPECT_EQ(hr.width, 256u);
  EXPECT_EQ(hr.height, 256u);
  const auto r = run("upscale --ckpt " + ps("a.ckpt") + " --in " + ps("big_lr.png") + " --out " + ps("bad.png") +
                     " --expect-size 128x128");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("scale"), std::string::npos);
  png_write(p("odd.png"), ImageBuffer(30, 32));
  EXPECT_NE(run("downscale --ckpt " + ps("a.ckpt") + " --in " + ps("odd.png") + " --out " + ps("odd_lr.png")).code, 0);
}

TEST_F(Cli, RoundtripReportSchema) {
  const auto in = ps("data") + "/img_0000.png";
  ASSERT_EQ(run("roundtrip --ckpt " + ps("a.ckpt") + " --in " + in + " --json " + ps("rt.json")).code, 0);
  const auto j = json::parse(slurp(p("rt.json")));
  for (const char* k : {"psnr", "ssim", "lr_l2_vs_bicubic", "original_bytes", "lr_bytes", "cr", "schema_version"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_GT(j["cr"].get<double>(), 1.0);
  EXPECT_EQ(j["original_bytes"].get<std::uintmax_t>(), file_bytes(in));
}

TEST_F(Cli, RoundtripOfThePureRearrangementReflectsTheDetailPrior) {
  auto cfg = parse_run_config(kToyConfig);
  RescalerModel<float> model(cfg.model);
  model.make_pure_rearrangement();
  cli::save_model(p("ident.ckpt"), cfg, model, nullptr);
  const auto in = ps("data") + "/img_0001.png";
  ASSERT_EQ(run("roundtrip --ckpt " + ps("ident.ckpt") + " --in " + in + " --json " + ps("prior.json")).code, 0);
  ASSERT_EQ(run("roundtrip --ckpt " + ps("ident.ckpt") + " --in " + in + " --json " + ps("true.json") +
                " --debug-true-hf")
                .code,
            0);
  const double prior = json::parse(slurp(p("prior.json")))["psnr"].get<double>();
  const double truth = json::parse(slurp(p("true.json")))["psnr"].get<double>();
  // With a zero prior every phase but the three kept ones is zero.
  const auto x = to_tensor<float>(png_read(in));
  const auto lr = model.downscale(x, true).first;
  const auto expected = psnr(to_tensor<float>(from_tensor(model.reconstruct(lr))), x);
  EXPECT_NEAR(prior, expected, 1e-9);
  EXPECT_LT(prior, 15.0);
  EXPECT_GT(truth, 40.0);
}

TEST_F(Cli, EvalMeanIsTheMeanOfImages) {
  ASSERT_EQ(run("eval --ckpt " + ps("a.ckpt") + " --data " + ps("data") + " --json " + ps("eval.json")).code, 0);
  const auto j = json::parse(slurp(p("eval.json")));
  ASSERT_EQ(j["images"].size(), 8u);
  for (const char* k : {"psnr", "ssim", "bicubic_psnr", "cr"}) {
    double sum = 0.0;
    for (const auto& img : j["images"]) sum += img[k].get<double>();
    EXPECT_NEAR(j["mean"][k].get<double>(), sum / 8.0, 1e-9) << k;
  }
}

TEST_F(Cli, CheckPassesOnATrainedCheckpoint) {
  const auto r = run("check --ckpt " + ps("a.ckpt"));
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["failed"].empty());
  EXPECT_EQ(j["checks"].size(), 5u);
}

TEST_F(Cli, CheckNamesACorruptedKernel) {
  auto ts = load_checkpoint(p("a.ckpt"));
  for (auto& [name, t] : ts)
    if (name == "lrt.w") t(0, 1) += 0.01f;
  save_checkpoint(p("bad.ckpt"), ts);
  const auto r = run("check --ckpt " + ps("bad.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("orthogonality"), std::string::npos);
  EXPECT_EQ(json::parse(r.out)["failed"][0], "orthogonality");
}

TEST_F(Cli, MissingCheckpointAndUsageErrors) {
  EXPECT_NE(run("check --ckpt " + ps("nope.ckpt")).code, 0);
  std::ofstream(p("junk.ckpt")) << "FEIR";
  const auto r = run("check --ckpt " + ps("junk.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("truncated"), std::string::npos);
  EXPECT_NE(run("frobnicate").code, 0);
}
