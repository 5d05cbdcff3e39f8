#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/config.hpp"
#include "lifted/data_model.hpp"
#include "lifted/llm_client.hpp"
#include "lifted/metrics.hpp"
#include "lifted/model.hpp"
#include "lifted/tokenizer.hpp"

namespace lifted {

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  double loss_c = 0.0;
  double loss_con = 0.0;
  double loss_aux = 0.0;
  // NaN when the validation split lacks a class.
  double val_pr_auc = 0.0;
  double val_f1 = 0.0;
  double val_roc_auc = 0.0;
};

struct RunArtifacts {
  std::filesystem::path out_dir;
  // Best validation PR-AUC epoch; `last` holds the final parameters.
  std::filesystem::path checkpoint_dir;
  std::filesystem::path last_checkpoint_dir;
  std::filesystem::path metrics_csv;
  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> history;
  // Total loss after every optimizer step.
  std::vector<double> step_losses;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double train_accuracy = 0.0;
  std::optional<MetricReport> valid_metrics;
  std::size_t perturbed_passes = 0;
  std::size_t aux_evaluations = 0;
};

struct TrainOptions {
  // Artifacts are written only when set.
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> cache_dir;
  // Explicit validation records; otherwise valid_fraction of the dataset.
  const std::vector<TrialRecord>* valid = nullptr;
  // Called before each optimizer step; tests use it to inject faults.
  std::function<void(LiftedModel&, std::size_t step)> before_step;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainingRun {
  RunArtifacts artifacts;
  std::unique_ptr<LiftedModel> model;
  Vocabulary vocab;
  std::vector<PreparedTrial> train;
  std::vector<PreparedTrial> valid;
};

// Deterministic split by the kSplit stream; returns (train, valid) indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             double valid_fraction,
                                                                             std::uint64_t seed);

// Texts for every record: LLM descriptions, or linearizations with no_llm.
std::vector<std::vector<ModalityText>> materialize_texts(
    std::span<const TrialRecord> records, const TrainConfig& cfg, LlmClient& llm,
    const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

Vocabulary build_text_vocabulary(const std::vector<std::vector<ModalityText>>& texts,
                                 std::size_t max_size);

std::vector<PreparedTrial> prepare_trials(std::span<const TrialRecord> records,
                                          const std::vector<std::vector<ModalityText>>& texts,
                                          const ModelConfig& model, const Vocabulary& vocab);

// Empty splits raise DataError, a non-finite loss raises NumericAbort after
// writing nan_abort.json to the output directory.
TrainingRun train(const std::vector<TrialRecord>& dataset, const TrainConfig& cfg, LlmClient& llm,
                  const TrainOptions& options = {});

struct LoadedModel {
  TrainConfig config;
  Vocabulary vocab;
  std::unique_ptr<LiftedModel> model;
};

// Checkpoint directory written by train (manifest, params.bin, vocab.json).
LoadedModel load_model(const std::filesystem::path& checkpoint_dir);

struct AblationRow {
  std::string variant;
  MetricReport metrics;
  double loss_c = 0.0;
  double loss_con = 0.0;
  double loss_aux = 0.0;
  std::size_t modalities = 0;
  std::size_t gating_width = 0;
};

// full, -aug, -aux, -LLM, -gating, all with the base seed.
std::vector<AblationRow> run_ablation_suite(const std::vector<TrialRecord>& dataset,
                                            const TrainConfig& base, LlmClient& llm,
                                            const TrainOptions& options = {});
void write_ablation_table(const std::filesystem::path& dir, std::span<const AblationRow> rows);

struct SweepSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> runs;
  MetricReport mean;
  MetricReport sd;
  nlohmann::json to_json() const;
};

SweepSummary summarize_sweep(std::vector<std::uint64_t> seeds, std::vector<MetricReport> runs);

}  // namespace lifted
