#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lifted/checkpoint.hpp"
#include "lifted/config.hpp"
#include "lifted/errors.hpp"
#include "lifted/evaluation.hpp"
#include "lifted/llm_client.hpp"
#include "lifted/random.hpp"
#include "lifted/synthetic.hpp"
#include "lifted/trainer.hpp"

namespace lifted {
namespace {

namespace fs = std::filesystem;

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.lr = 3e-3;
  c.seed = 4;
  c.vocab_size = 300;
  c.smiles_max_len = 24;
  c.encoder.d_model = 8;
  c.encoder.n_layers = 1;
  c.encoder.n_heads = 2;
  c.encoder.d_ff = 16;
  c.encoder.max_len = 24;
  c.smoe = {4, 2, 8, 0.0};
  return c;
}

const std::vector<TrialRecord>& tiny_dataset() {
  static const auto data = generate_synthetic(30, 3);
  return data;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lifted_training_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(TrainConfig, RejectsUnknownKeysAndRoundTrips) {
  auto c = tiny_train_config();
  c.no_aux = true;
  c.gating = {Modality::kDiseases, Modality::kDrugs};
  const auto j = c.to_json();
  const auto back = TrainConfig::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(TrainConfig::from_json(nlohmann::json::object()).to_json(), TrainConfig{}.to_json());
  auto bad = j;
  bad["learning_rate"] = 1.0;
  EXPECT_THROW(TrainConfig::from_json(bad), ContractError);
  auto nested = j;
  nested["encoder"]["width"] = 3;
  EXPECT_THROW(TrainConfig::from_json(nested), ContractError);
}

TEST(TrainConfig, LoadReportsMissingAndMalformedFilesAsDataErrors) {
  const auto dir = fresh_dir("config_load");
  fs::create_directories(dir);
  EXPECT_THROW(TrainConfig::load(dir / "absent.json"), DataError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(TrainConfig::load(dir / "bad.json"), DataError);
  std::ofstream(dir / "ok.json") << R"({"epochs": 3, "smoe": {"top_k": 2}})";
  const auto c = TrainConfig::load(dir / "ok.json");
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.smoe.top_k, 2u);
  EXPECT_EQ(c.smoe.num_experts, 16u);
}

TEST(TrainConfig, ValidationCatchesBadValues) {
  auto c = tiny_train_config();
  c.schedule = "linear";
  EXPECT_THROW(c.validate(), ContractError);
  c = tiny_train_config();
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ContractError);
  c = tiny_train_config();
  c.no_llm = true;
  c.gating = {Modality::kSummarization};
  EXPECT_THROW(c.validate(), ContractError);
  c.gating_all = true;
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, ModelConfigAppliesAblationFlags) {
  auto c = tiny_train_config();
  c.gating = {Modality::kDrugs, Modality::kDiseases};
  auto m = c.model_config(50);
  EXPECT_EQ(m.modalities.size(), 6u);
  EXPECT_EQ(m.gating, (std::vector<Modality>{Modality::kDiseases, Modality::kDrugs}));
  EXPECT_EQ(m.text_vocab_size, 50u);
  c.no_llm = true;
  m = c.model_config(50);
  EXPECT_EQ(m.modalities.size(), 5u);
  EXPECT_EQ(std::count(m.modalities.begin(), m.modalities.end(), Modality::kSummarization), 0);
  c.gating_all = true;
  m = c.model_config(50);
  EXPECT_EQ(m.gating, m.modalities);
}

TEST(Split, DeterministicDisjointAndComplete) {
  const auto [tr, va] = split_indices(50, 0.2, 9);
  const auto [tr2, va2] = split_indices(50, 0.2, 9);
  EXPECT_EQ(tr, tr2);
  EXPECT_EQ(va, va2);
  EXPECT_EQ(va.size(), 10u);
  std::vector<std::size_t> all = tr;
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);
  EXPECT_NE(split_indices(50, 0.2, 10).second, va);
  EXPECT_TRUE(split_indices(50, 0.0, 9).second.empty());
}

TEST(Training, SingleFullBatchStepMatchesHandComputedUpdate) {
  auto cfg = tiny_train_config();
  cfg.epochs = 1;
  cfg.batch_size = 64;
  StubLlmClient llm;
  const auto run = train(tiny_dataset(), cfg, llm);
  ASSERT_EQ(run.artifacts.steps, 1u);

  // Replay the one step independently from a fresh model.
  LiftedModel ref(run.model->config(), cfg.seed);
  std::vector<std::size_t> order(run.train.size());
  std::iota(order.begin(), order.end(), 0);
  auto batch_rng = make_rng(cfg.seed, Stream::kBatching);
  std::shuffle(order.begin(), order.end(), batch_rng);
  std::vector<PreparedTrial> batch;
  for (auto i : order) batch.push_back(run.train[i]);
  auto gate = make_rng(cfg.seed, Stream::kGateNoise);
  auto aug = make_rng(cfg.seed, Stream::kAugmentation);
  auto drop = make_rng(cfg.seed, Stream::kDropout);
  ForwardOptions fwd;
  fwd.training = true;
  fwd.augment = true;
  fwd.augmentation = cfg.augment;
  fwd.aux = true;
  fwd.eta1 = cfg.eta1;
  fwd.eta2 = cfg.eta2;
  fwd.gate_rng = &gate;
  fwd.augment_rng = &aug;
  fwd.dropout_rng = &drop;
  ref.parameters().zero_grad();
  const auto out = ref.forward(batch, fwd);
  EXPECT_EQ(out.total.item(), run.artifacts.step_losses[0]);
  out.total.backward();

  double worst = 0.0;
  std::size_t moved = 0;
  for (const auto& p : ref.parameters().all()) {
    const auto* trained = run.model->parameters().find(p.name);
    ASSERT_NE(trained, nullptr);
    const auto theta = p.tensor.data();
    const auto after = trained->tensor.data();
    const bool has_grad = p.tensor.has_grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double expected = theta[i];
      if (p.trainable && has_grad) {
        const double g = p.tensor.grad()[i];
        expected = theta[i] * (1.0 - cfg.lr * cfg.weight_decay) - cfg.lr * g / (std::abs(g) + cfg.eps);
      }
      worst = std::max(worst, std::abs(after[i] - expected));
      moved += after[i] != theta[i];
    }
  }
  EXPECT_LT(worst, 1e-15);
  EXPECT_GT(moved, 1000u);
}

TEST(Training, IdenticalSeedsGiveBitIdenticalArtifacts) {
  StubLlmClient llm;
  const auto cfg = tiny_train_config();
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  train(tiny_dataset(), cfg, llm, {.out_dir = a});
  train(tiny_dataset(), cfg, llm, {.out_dir = b});
  for (const char* f : {"metrics.csv", "config.json", "checkpoint/params.bin",
                        "checkpoint/manifest.json", "last/params.bin", "checkpoint/vocab.json"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  auto other = cfg;
  other.seed = 5;
  const auto c = fresh_dir("det_c");
  train(tiny_dataset(), other, llm, {.out_dir = c});
  EXPECT_NE(slurp(a / "last/params.bin"), slurp(c / "last/params.bin"));
}

TEST(Training, MetricsCsvHasOneRowPerEpoch) {
  StubLlmClient llm;
  auto cfg = tiny_train_config();
  cfg.epochs = 3;
  const auto dir = fresh_dir("csv");
  const auto run = train(tiny_dataset(), cfg, llm, {.out_dir = dir});
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss_c,loss_con,loss_aux,val_pr_auc,val_f1,val_roc_auc");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u) << line;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 3u);
  EXPECT_EQ(run.artifacts.history.size(), 3u);
  EXPECT_EQ(run.artifacts.step_losses.size(), 3u * 3u);
}

TEST(Training, CheckpointsReloadToTheSamePredictions) {
  StubLlmClient llm;
  const auto dir = fresh_dir("reload");
  const auto run = train(tiny_dataset(), tiny_train_config(), llm, {.out_dir = dir});
  const auto last = load_model(dir / "last");
  EXPECT_EQ(predict(*last.model, run.valid), predict(*run.model, run.valid));
  EXPECT_EQ(last.vocab.size(), run.vocab.size());
  const auto best = load_model(dir / "checkpoint");
  EXPECT_EQ(best.model->parameters().element_count(), run.model->parameters().element_count());
  EXPECT_GE(run.artifacts.best_epoch, 1u);

  // A checkpoint whose config was edited no longer matches its hash.
  fs::copy(dir / "last", dir / "tampered", fs::copy_options::recursive);
  auto manifest = read_manifest(dir / "tampered");
  manifest["config"]["threshold"] = 0.25;
  std::ofstream(dir / "tampered" / kCheckpointManifest) << manifest.dump();
  EXPECT_THROW(load_model(dir / "tampered"), LoadError);
  EXPECT_THROW(load_model(dir / "absent"), LoadError);
}

TEST(Training, NonFiniteLossAbortsWithABatchDump) {
  StubLlmClient llm;
  const auto dir = fresh_dir("nan");
  TrainOptions opts;
  opts.out_dir = dir;
  opts.before_step = [](LiftedModel& m, std::size_t step) {
    if (step == 2) Tensor(m.head().bias()).mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  };
  try {
    train(tiny_dataset(), tiny_train_config(), llm, opts);
    FAIL() << "expected NumericAbort";
  } catch (const NumericAbort& e) {
    EXPECT_EQ(fs::path(e.dump_path()), dir / "nan_abort.json");
  }
  const auto dump = nlohmann::json::parse(slurp(dir / "nan_abort.json"));
  EXPECT_EQ(dump.at("step"), 2);
  EXPECT_EQ(dump.at("epoch"), 1);
  EXPECT_EQ(dump.at("trial_ids").size(), 8u);
  EXPECT_EQ(dump.at("probabilities").size(), 8u);
}

TEST(Training, EmptySplitsAreDataErrors) {
  StubLlmClient llm;
  EXPECT_THROW(train({}, tiny_train_config(), llm), DataError);
  auto cfg = tiny_train_config();
  cfg.valid_fraction = 0.0;
  EXPECT_THROW(train(tiny_dataset(), cfg, llm), DataError);
  const std::vector<TrialRecord> valid(tiny_dataset().begin(), tiny_dataset().begin() + 5);
  EXPECT_NO_THROW(train(tiny_dataset(), cfg, llm, {.valid = &valid}));
}

TEST(Training, AblationFlagsRemoveTheirWork) {
  StubLlmClient llm;
  auto cfg = tiny_train_config();
  cfg.epochs = 1;
  const auto full = train(tiny_dataset(), cfg, llm);
  EXPECT_GT(full.artifacts.perturbed_passes, 0u);
  EXPECT_GT(full.artifacts.aux_evaluations, 0u);
  cfg.no_aug = true;
  cfg.no_aux = true;
  const auto bare = train(tiny_dataset(), cfg, llm);
  EXPECT_EQ(bare.artifacts.perturbed_passes, 0u);
  EXPECT_EQ(bare.artifacts.aux_evaluations, 0u);
  EXPECT_EQ(bare.artifacts.history[0].loss_con, 0.0);
  EXPECT_EQ(bare.artifacts.history[0].loss_aux, 0.0);
}

TEST(Training, AblationSuiteRowsHaveTheirStructure) {
  StubLlmClient llm;
  auto cfg = tiny_train_config();
  cfg.epochs = 1;
  const auto dir = fresh_dir("ablate");
  const auto rows = run_ablation_suite(tiny_dataset(), cfg, llm, {.out_dir = dir});
  ASSERT_EQ(rows.size(), 5u);
  const std::size_t d = cfg.encoder.d_model;
  const std::vector<std::string> names = {"LIFTED", "LIFTED-aug", "LIFTED-aux", "LIFTED-LLM",
                                          "LIFTED-gating"};
  const std::vector<std::size_t> modalities = {6, 6, 6, 5, 6};
  const std::vector<std::size_t> widths = {d, d, d, d, 6 * d};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].variant, names[i]);
    EXPECT_EQ(rows[i].modalities, modalities[i]) << names[i];
    EXPECT_EQ(rows[i].gating_width, widths[i]) << names[i];
  }
  EXPECT_GT(rows[0].loss_con, 0.0);
  EXPECT_EQ(rows[1].loss_con, 0.0);
  EXPECT_EQ(rows[2].loss_aux, 0.0);
  EXPECT_TRUE(fs::exists(dir / "ablation.csv"));
  EXPECT_TRUE(fs::exists(dir / "LIFTED-gating" / "last" / kCheckpointPayload));
}

TEST(Training, ClassificationLossFallsOnAConstantSchedule) {
  StubLlmClient llm;
  auto cfg = tiny_train_config();
  cfg.epochs = 8;
  cfg.schedule = "constant";
  const auto run = train(generate_synthetic(60, 5), cfg, llm);
  const auto& h = run.artifacts.history;
  EXPECT_LT(h.back().loss_c, h.front().loss_c);
  EXPECT_LT(h.back().loss_c, std::log(2.0));
}

TEST(Sweep, SummaryUsesSampleStandardDeviation) {
  MetricReport a, b;
  a.pr_auc = 0.6;
  b.pr_auc = 0.8;
  a.roc_auc = b.roc_auc = 0.7;
  const auto s = summarize_sweep({1, 2}, {a, b});
  EXPECT_NEAR(s.mean.pr_auc, 0.7, 1e-15);
  EXPECT_NEAR(s.sd.pr_auc, std::sqrt(0.02), 1e-15);
  EXPECT_EQ(s.sd.roc_auc, 0.0);
  const auto j = s.to_json();
  ASSERT_EQ(j.at("runs").size(), 2u);
  EXPECT_EQ(j["runs"][1].at("seed"), 2);
  EXPECT_NEAR(j["mean"].at("pr_auc").get<double>(), 0.7, 1e-15);
}

}  // namespace
}  // namespace lifted
