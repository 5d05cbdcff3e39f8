#include "lifted/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "lifted/checkpoint.hpp"
#include "lifted/describe.hpp"
#include "lifted/errors.hpp"
#include "lifted/evaluation.hpp"
#include "lifted/ops.hpp"
#include "lifted/optimizer.hpp"
#include "lifted/random.hpp"

namespace lifted {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVocabFile = "vocab.json";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_metrics_csv(const fs::path& path, const std::vector<EpochMetrics>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss_c,loss_con,loss_aux,val_pr_auc,val_f1,val_roc_auc\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt(r.loss_c) << ',' << fmt(r.loss_con) << ',' << fmt(r.loss_aux)
        << ',' << fmt(r.val_pr_auc) << ',' << fmt(r.val_f1) << ',' << fmt(r.val_roc_auc) << '\n';
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_run_checkpoint(const fs::path& dir, const LiftedModel& model, const TrainConfig& cfg,
                         const Vocabulary& vocab) {
  save_checkpoint(dir, model.parameters(), cfg.to_json());
  vocab.save(dir / kVocabFile);
}

std::optional<MetricReport> validation_metrics(const std::vector<double>& scores,
                                               const std::vector<PreparedTrial>& trials,
                                               double threshold) {
  std::vector<int> labels;
  for (const auto& t : trials) labels.push_back(t.label);
  try {
    return compute_metrics(scores, labels, threshold);
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
}

[[noreturn]] void abort_on_nan(const std::optional<fs::path>& out_dir, std::size_t epoch,
                               std::size_t step, std::span<const PreparedTrial> batch,
                               const BatchOutput& res) {
  nlohmann::json dump = {{"epoch", epoch},
                         {"step", step},
                         {"loss_total", fmt(res.value(res.total))},
                         {"loss_c", fmt(res.value(res.loss_c))},
                         {"loss_con", fmt(res.value(res.loss_con))},
                         {"loss_aux", fmt(res.value(res.loss_aux))},
                         {"trial_ids", nlohmann::json::array()},
                         {"probabilities", nlohmann::json::array()}};
  for (const auto& t : batch) dump["trial_ids"].push_back(t.id);
  for (double p : res.probabilities) dump["probabilities"].push_back(fmt(p));
  std::string path;
  if (out_dir) {
    fs::create_directories(*out_dir);
    path = (*out_dir / "nan_abort.json").string();
    write_json(path, dump);
  }
  throw NumericAbort("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(step) + (path.empty() ? "" : "; batch dumped to " + path),
                     path);
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             double valid_fraction,
                                                                             std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, Stream::kSplit);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_valid = valid_fraction > 0.0
                           ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                          valid_fraction * static_cast<double>(n))))
                           : 0;
  std::vector<std::size_t> valid(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_valid, n)));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_valid, n)), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {train, valid};
}

std::vector<std::vector<ModalityText>> materialize_texts(
    std::span<const TrialRecord> records, const TrainConfig& cfg, LlmClient& llm,
    const std::optional<fs::path>& cache_dir) {
  if (cfg.no_llm) {
    std::vector<std::vector<ModalityText>> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(linearized_texts(r));
    return out;
  }
  DescribeOptions opts;
  opts.cache_dir = cache_dir;
  return describe_all(llm, records, opts);
}

Vocabulary build_text_vocabulary(const std::vector<std::vector<ModalityText>>& texts,
                                 std::size_t max_size) {
  std::vector<std::string> corpus;
  for (const auto& trial : texts) {
    for (const auto& t : trial) {
      if (t.kind != Modality::kSmiles) corpus.push_back(t.text);
    }
  }
  if (corpus.empty()) throw DataError("no text to build a vocabulary from");
  return Vocabulary::build(corpus, max_size);
}

std::vector<PreparedTrial> prepare_trials(std::span<const TrialRecord> records,
                                          const std::vector<std::vector<ModalityText>>& texts,
                                          const ModelConfig& model, const Vocabulary& vocab) {
  std::vector<PreparedTrial> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(prepare_trial(records[i].id, records[i].label, texts[i], model, vocab));
  }
  return out;
}

TrainingRun train(const std::vector<TrialRecord>& dataset, const TrainConfig& cfg, LlmClient& llm,
                  const TrainOptions& options) {
  cfg.validate();
  std::vector<TrialRecord> train_records, valid_records;
  if (options.valid) {
    train_records = dataset;
    valid_records = *options.valid;
  } else {
    const auto [tr, va] = split_indices(dataset.size(), cfg.valid_fraction, cfg.seed);
    for (auto i : tr) train_records.push_back(dataset[i]);
    for (auto i : va) valid_records.push_back(dataset[i]);
  }
  if (train_records.empty()) throw DataError("training split is empty");
  if (valid_records.empty()) throw DataError("validation split is empty");

  // Every description is materialized before optimization starts.
  const auto train_texts = materialize_texts(train_records, cfg, llm, options.cache_dir);
  const auto valid_texts = materialize_texts(valid_records, cfg, llm, options.cache_dir);

  TrainingRun run;
  run.vocab = build_text_vocabulary(train_texts, cfg.vocab_size);
  const ModelConfig mcfg = cfg.model_config(run.vocab.size());
  run.train = prepare_trials(train_records, train_texts, mcfg, run.vocab);
  run.valid = prepare_trials(valid_records, valid_texts, mcfg, run.vocab);
  run.model = std::make_unique<LiftedModel>(mcfg, cfg.seed);
  LiftedModel& model = *run.model;

  RunArtifacts& art = run.artifacts;
  art.seed = cfg.seed;
  if (options.out_dir) {
    art.out_dir = *options.out_dir;
    fs::create_directories(art.out_dir);
    art.checkpoint_dir = art.out_dir / "checkpoint";
    art.last_checkpoint_dir = art.out_dir / "last";
    art.metrics_csv = art.out_dir / "metrics.csv";
    art.config_path = art.out_dir / "config.json";
    write_json(art.config_path, cfg.to_json());
  }

  Rng batch_rng = make_rng(cfg.seed, Stream::kBatching);
  Rng gate_rng = make_rng(cfg.seed, Stream::kGateNoise);
  Rng aug_rng = make_rng(cfg.seed, Stream::kAugmentation);
  Rng dropout_rng = make_rng(cfg.seed, Stream::kDropout);

  ForwardOptions fwd;
  fwd.training = true;
  fwd.augment = !cfg.no_aug;
  fwd.augmentation = cfg.augment;
  fwd.aux = !cfg.no_aux;
  fwd.eta1 = cfg.eta1;
  fwd.eta2 = cfg.eta2;
  fwd.shared_gate_noise = cfg.shared_gate_noise;
  fwd.gate_rng = &gate_rng;
  fwd.augment_rng = &aug_rng;
  fwd.dropout_rng = &dropout_rng;

  const AdamWConfig opt{cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};
  AdamWState state;
  const std::size_t per_epoch = (run.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = per_epoch * cfg.epochs;
  double best_pr = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(run.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng);
    EpochMetrics em;
    em.epoch = epoch;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<PreparedTrial> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(run.train[order[i]]);

      if (options.before_step) options.before_step(model, art.steps);
      model.parameters().zero_grad();
      const BatchOutput res = model.forward(batch, fwd);
      const double loss = res.total.item();
      if (!std::isfinite(loss)) abort_on_nan(options.out_dir, epoch, art.steps, batch, res);
      res.total.backward();
      if (cfg.grad_clip > 0.0) clip_gradients(model.parameters().all(), cfg.grad_clip);
      const double lr = cfg.schedule == "cosine" ? cosine_lr(cfg.lr, art.steps, total_steps) : cfg.lr;
      optimizer_step(model.parameters().all(), state, opt, lr);

      ++art.steps;
      art.step_losses.push_back(loss);
      art.perturbed_passes += res.perturbed_passes;
      art.aux_evaluations += res.aux_evaluations;
      em.loss_total += loss;
      em.loss_c += res.value(res.loss_c);
      em.loss_con += res.value(res.loss_con);
      em.loss_aux += res.value(res.loss_aux);
    }
    const double nb = static_cast<double>(per_epoch);
    em.loss_total /= nb;
    em.loss_c /= nb;
    em.loss_con /= nb;
    em.loss_aux /= nb;

    const auto scores = predict(model, run.valid);
    const auto vm = validation_metrics(scores, run.valid, cfg.threshold);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    em.val_pr_auc = vm ? vm->pr_auc : nan;
    em.val_f1 = vm ? vm->f1 : nan;
    em.val_roc_auc = vm ? vm->roc_auc : nan;
    art.valid_metrics = vm;
    art.history.push_back(em);

    const double pr = vm ? vm->pr_auc : -1.0;
    if (pr > best_pr) {
      best_pr = pr;
      art.best_epoch = epoch;
      if (options.out_dir) save_run_checkpoint(art.checkpoint_dir, model, cfg, run.vocab);
    }
    if (options.out_dir) write_metrics_csv(art.metrics_csv, art.history);
    if (options.on_epoch) options.on_epoch(em);
  }
  if (options.out_dir) save_run_checkpoint(art.last_checkpoint_dir, model, cfg, run.vocab);

  std::vector<int> labels;
  for (const auto& t : run.train) labels.push_back(t.label);
  art.train_accuracy = accuracy(predict(model, run.train), labels, cfg.threshold);
  return run;
}

LoadedModel load_model(const fs::path& checkpoint_dir) {
  const auto manifest = read_manifest(checkpoint_dir);
  LoadedModel out;
  try {
    out.config = TrainConfig::from_json(manifest.at("config"));
  } catch (const ContractError& e) {
    throw LoadError("checkpoint config is invalid: " + std::string(e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("checkpoint manifest lacks a config: " + std::string(e.what()));
  }
  out.vocab = Vocabulary::load(checkpoint_dir / kVocabFile);
  out.model = std::make_unique<LiftedModel>(out.config.model_config(out.vocab.size()), out.config.seed);
  load_checkpoint(checkpoint_dir, out.model->parameters(), manifest.at("config"));
  return out;
}

std::vector<AblationRow> run_ablation_suite(const std::vector<TrialRecord>& dataset,
                                            const TrainConfig& base, LlmClient& llm,
                                            const TrainOptions& options) {
  struct Variant {
    const char* name;
    void (*apply)(TrainConfig&);
  };
  const Variant variants[] = {
      {"LIFTED", [](TrainConfig&) {}},
      {"LIFTED-aug", [](TrainConfig& c) { c.no_aug = true; }},
      {"LIFTED-aux", [](TrainConfig& c) { c.no_aux = true; }},
      {"LIFTED-LLM", [](TrainConfig& c) { c.no_llm = true; }},
      {"LIFTED-gating", [](TrainConfig& c) { c.gating_all = true; }},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrainConfig cfg = base;
    v.apply(cfg);
    TrainOptions opts = options;
    if (options.out_dir) opts.out_dir = *options.out_dir / v.name;
    const auto run = train(dataset, cfg, llm, opts);
    AblationRow row;
    row.variant = v.name;
    const auto scores = predict(*run.model, run.valid);
    std::vector<int> labels;
    for (const auto& t : run.valid) labels.push_back(t.label);
    row.metrics = compute_metrics(scores, labels, cfg.threshold);
    const auto& last = run.artifacts.history.back();
    row.loss_c = last.loss_c;
    row.loss_con = last.loss_con;
    row.loss_aux = last.loss_aux;
    row.modalities = run.model->config().modalities.size();
    row.gating_width = run.model->fusion().concat_width();
    rows.push_back(row);
  }
  if (options.out_dir) write_ablation_table(*options.out_dir, rows);
  return rows;
}

void write_ablation_table(const fs::path& dir, std::span<const AblationRow> rows) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "ablation.csv", std::ios::trunc);
  if (!csv) throw Error("cannot write " + (dir / "ablation.csv").string());
  csv << "variant,pr_auc,f1,roc_auc,loss_c,loss_con,loss_aux,modalities,gating_width\n";
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    csv << r.variant << ',' << fmt(r.metrics.pr_auc) << ',' << fmt(r.metrics.f1) << ','
        << fmt(r.metrics.roc_auc) << ',' << fmt(r.loss_c) << ',' << fmt(r.loss_con) << ','
        << fmt(r.loss_aux) << ',' << r.modalities << ',' << r.gating_width << '\n';
    j.push_back({{"variant", r.variant},
                 {"metrics", r.metrics.to_json()},
                 {"loss_c", r.loss_c},
                 {"loss_con", r.loss_con},
                 {"loss_aux", r.loss_aux},
                 {"modalities", r.modalities},
                 {"gating_width", r.gating_width}});
  }
  write_json(dir / "ablation.json", j);
}

SweepSummary summarize_sweep(std::vector<std::uint64_t> seeds, std::vector<MetricReport> runs) {
  if (runs.empty() || runs.size() != seeds.size()) throw ContractError("sweep: no runs");
  SweepSummary s;
  s.seeds = std::move(seeds);
  s.runs = std::move(runs);
  const double n = static_cast<double>(s.runs.size());
  auto stat = [&](double MetricReport::*field, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& r : s.runs) mean += r.*field;
    mean /= n;
    double ss = 0.0;
    for (const auto& r : s.runs) ss += (r.*field - mean) * (r.*field - mean);
    sd = s.runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  };
  stat(&MetricReport::pr_auc, s.mean.pr_auc, s.sd.pr_auc);
  stat(&MetricReport::f1, s.mean.f1, s.sd.f1);
  stat(&MetricReport::roc_auc, s.mean.roc_auc, s.sd.roc_auc);
  s.mean.n = s.sd.n = s.runs.front().n;
  s.mean.threshold = s.sd.threshold = s.runs.front().threshold;
  return s;
}

nlohmann::json SweepSummary::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto r = runs[i].to_json();
    r["seed"] = seeds[i];
    per.push_back(r);
  }
  return {{"runs", per},
          {"mean", {{"pr_auc", mean.pr_auc}, {"f1", mean.f1}, {"roc_auc", mean.roc_auc}}},
          {"sd", {{"pr_auc", sd.pr_auc}, {"f1", sd.f1}, {"roc_auc", sd.roc_auc}}}};
}

}  // namespace lifted
