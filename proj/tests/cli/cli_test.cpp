#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/cli.hpp"
#include "lifted/data_model.hpp"

namespace lifted {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result lifted_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("lifted_cli_") + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  // A small dataset and a small architecture so each training run is quick.
  void write_fixtures(std::size_t n = 30) {
    ASSERT_EQ(lifted_cli({"synth", "--n", std::to_string(n), "--seed", "3", "--out", path("d.jsonl")})
                  .code,
              cli::kOk);
    std::ofstream(path("cfg.json")) << R"({
      "epochs": 2, "batch_size": 8, "lr": 0.003, "vocab_size": 300, "smiles_max_len": 24,
      "encoder": {"d_model": 8, "n_layers": 1, "n_heads": 2, "d_ff": 16, "max_len": 24},
      "smoe": {"num_experts": 4, "top_k": 2, "d_expert": 8}
    })";
  }

  fs::path dir;
};

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(lifted_cli({}).code, cli::kUsage);
  EXPECT_EQ(lifted_cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(lifted_cli({"synth", "--out", path("x.jsonl")}).code, cli::kUsage);
  EXPECT_EQ(lifted_cli({"synth", "--n", "5", "--out", path("x.jsonl"), "--bogus"}).code,
            cli::kUsage);
  EXPECT_EQ(lifted_cli({"synth", "--n", "5", "--out", path("x.jsonl"), "--fidelity", "2"}).code,
            cli::kUsage);
  write_fixtures();
  EXPECT_EQ(lifted_cli({"train", "--data", path("d.jsonl"), "--out", path("r"), "--llm", "oracle"})
                .code,
            cli::kUsage);
  EXPECT_EQ(lifted_cli({"describe", "--data", path("d.jsonl"), "--llm", "replay"}).code,
            cli::kUsage);
  EXPECT_EQ(lifted_cli({"train", "--data", path("d.jsonl"), "--out", path("r"), "--seeds", "0"})
                .code,
            cli::kUsage);
  std::ofstream(path("unknown.json")) << R"({"epochz": 3})";
  const auto r =
      lifted_cli({"train", "--data", path("d.jsonl"), "--out", path("r"), "--config", path("unknown.json")});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("epochz"), std::string::npos) << r.err;
}

TEST_F(Cli, HelpExitsWithZero) {
  const auto r = lifted_cli({"--help"});
  EXPECT_EQ(r.code, cli::kOk);
  for (const char* sub : {"synth", "describe", "train", "evaluate", "ablate", "inspect"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  EXPECT_EQ(lifted_cli({"train", "--data", path("absent.jsonl"), "--out", path("r")}).code,
            cli::kDataError);
  std::ofstream(path("broken.jsonl")) << "{\"id\": \n";
  EXPECT_EQ(lifted_cli({"describe", "--data", path("broken.jsonl")}).code, cli::kDataError);
  EXPECT_EQ(lifted_cli({"inspect", "--checkpoint", path("nowhere")}).code, cli::kDataError);
  std::ofstream(path("bad_cfg.json")) << "{";
  write_fixtures();
  EXPECT_EQ(lifted_cli({"train", "--data", path("d.jsonl"), "--out", path("r"), "--config",
                        path("bad_cfg.json")})
                .code,
            cli::kDataError);
}

TEST_F(Cli, NonFiniteTrainingExitsWithThree) {
  write_fixtures();
  // Adam steps have size lr, so an enormous rate overflows within two steps.
  auto cfg = nlohmann::json::parse(slurp(path("cfg.json")));
  cfg["lr"] = 1e300;
  cfg["weight_decay"] = 0.0;
  cfg["schedule"] = "constant";
  std::ofstream(path("nan.json")) << cfg.dump();
  const auto r = lifted_cli(
      {"train", "--config", path("nan.json"), "--data", path("d.jsonl"), "--out", path("run")});
  EXPECT_EQ(r.code, cli::kNumericAbort) << r.err;
  EXPECT_TRUE(fs::exists(dir / "run" / "nan_abort.json"));
}

TEST_F(Cli, SynthIsDeterministicAndRecordsItsArguments) {
  ASSERT_EQ(lifted_cli({"synth", "--n", "12", "--seed", "5", "--out", path("a.jsonl")}).code, 0);
  ASSERT_EQ(lifted_cli({"synth", "--n", "12", "--seed", "5", "--out", path("b.jsonl")}).code, 0);
  ASSERT_EQ(lifted_cli({"synth", "--n", "12", "--seed", "6", "--out", path("c.jsonl")}).code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
  EXPECT_EQ(read_dataset(path("a.jsonl")).size(), 12u);
  const auto resolved = nlohmann::json::parse(slurp(path("a.jsonl.resolved.json")));
  EXPECT_EQ(resolved.at("n"), 12);
  EXPECT_EQ(resolved.at("seed"), 5);
  EXPECT_EQ(resolved.at("signal"), nlohmann::json::array({"diseases"}));
}

TEST_F(Cli, DescribeCachesRecordsAndReplays) {
  write_fixtures(6);
  const std::vector<std::string> base = {"describe", "--data", path("d.jsonl"), "--cache",
                                         path("cache")};
  auto first = base;
  first.insert(first.end(), {"--out", path("desc1.jsonl"), "--cassette", path("tape.jsonl")});
  const auto r1 = lifted_cli(first);
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_NE(r1.out.find("0 cache hits"), std::string::npos) << r1.out;
  EXPECT_EQ(line_count(path("desc1.jsonl")), 6u * 6u);

  auto second = base;
  second.insert(second.end(), {"--out", path("desc2.jsonl")});
  const auto r2 = lifted_cli(second);
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_NE(r2.out.find(" 0 client calls"), std::string::npos) << r2.out;
  EXPECT_EQ(slurp(path("desc1.jsonl")), slurp(path("desc2.jsonl")));

  const auto r3 = lifted_cli({"describe", "--data", path("d.jsonl"), "--llm", "replay",
                              "--cassette", path("tape.jsonl"), "--out", path("desc3.jsonl")});
  ASSERT_EQ(r3.code, 0) << r3.err;
  EXPECT_EQ(slurp(path("desc1.jsonl")), slurp(path("desc3.jsonl")));
  const auto first_line = nlohmann::json::parse(slurp(path("desc3.jsonl")).substr(0, slurp(path("desc3.jsonl")).find('\n')));
  for (const char* key : {"trial_id", "kind", "text", "provenance"}) {
    EXPECT_TRUE(first_line.contains(key)) << key;
  }
}

TEST_F(Cli, TrainEvaluateInspectRoundTrip) {
  write_fixtures();
  const auto t = lifted_cli({"train", "--config", path("cfg.json"), "--data", path("d.jsonl"),
                             "--out", path("run"), "--seed", "11", "--threshold", "0.4"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("seed 11 epoch 2"), std::string::npos) << t.out;
  for (const char* f : {"metrics.csv", "config.json", "resolved.json", "checkpoint/params.bin",
                        "checkpoint/manifest.json", "checkpoint/vocab.json", "last/params.bin"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const auto resolved = nlohmann::json::parse(slurp(path("run/resolved.json")));
  EXPECT_EQ(resolved.at("config").at("seed"), 11);
  EXPECT_EQ(resolved.at("config").at("threshold"), 0.4);

  // A resolved config reproduces the run exactly.
  const auto again =
      lifted_cli({"train", "--config", path("run/resolved.json"), "--data", path("d.jsonl"), "--out", path("run2")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(path("run/last/params.bin")), slurp(path("run2/last/params.bin")));
  EXPECT_EQ(slurp(path("run/metrics.csv")), slurp(path("run2/metrics.csv")));

  const auto e = lifted_cli({"evaluate", "--checkpoint", path("run/last"), "--data", path("d.jsonl"),
                             "--out", path("report.json"), "--dump-weights", path("analysis")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto report = nlohmann::json::parse(slurp(path("report.json")));
  for (const char* key : {"pr_auc", "f1", "roc_auc", "n", "threshold"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_EQ(report.at("n"), 30);
  EXPECT_EQ(report.at("threshold"), 0.4);
  EXPECT_EQ(line_count(path("analysis/fusion_reports.jsonl")), 30u);
  const auto routing = nlohmann::json::parse(slurp(path("analysis/routing_stats.json")));
  EXPECT_EQ(routing.size(), 6u);
  EXPECT_EQ(routing.at("diseases").size(), 4u);

  const auto i = lifted_cli({"inspect", "--checkpoint", path("run/checkpoint")});
  ASSERT_EQ(i.code, 0) << i.err;
  const auto last_line = i.out.substr(i.out.rfind('\n', i.out.size() - 2) + 1);
  const auto counts = nlohmann::json::parse(last_line);
  EXPECT_TRUE(counts.at("consistent").get<bool>());
  EXPECT_GT(counts.at("total").get<std::size_t>(), 0u);
}

TEST_F(Cli, SeedSweepWritesASummary) {
  write_fixtures();
  const auto r = lifted_cli({"train", "--config", path("cfg.json"), "--data", path("d.jsonl"),
                             "--out", path("sweep"), "--seeds", "2", "--no-aug", "--no-aux"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "sweep" / "seed_0" / "last" / "params.bin"));
  EXPECT_TRUE(fs::exists(dir / "sweep" / "seed_1" / "last" / "params.bin"));
  const auto summary = nlohmann::json::parse(slurp(path("sweep/sweep.json")));
  EXPECT_EQ(summary.at("runs").size(), 2u);
  const auto cfg = nlohmann::json::parse(slurp(path("sweep/seed_1/config.json")));
  EXPECT_TRUE(cfg.at("no_aug").get<bool>());
  EXPECT_TRUE(cfg.at("no_aux").get<bool>());
}

TEST_F(Cli, AblateWritesEveryVariant) {
  write_fixtures();
  const auto r = lifted_cli({"ablate", "--config", path("cfg.json"), "--data", path("d.jsonl"),
                             "--out", path("ab"), "--no-llm", "--gating-all"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* v : {"LIFTED", "LIFTED-aug", "LIFTED-aux", "LIFTED-LLM", "LIFTED-gating"}) {
    EXPECT_NE(r.out.find(std::string(" ") + v + " pr_auc"), std::string::npos) << v;
    EXPECT_TRUE(fs::exists(dir / "ab" / v / "last" / "params.bin")) << v;
  }
  EXPECT_TRUE(fs::exists(dir / "ab" / "ablation.csv"));
}

}  // namespace
}  // namespace lifted
