#include "lifted/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lifted/checkpoint.hpp"
#include "lifted/config.hpp"
#include "lifted/describe.hpp"
#include "lifted/errors.hpp"
#include "lifted/evaluation.hpp"
#include "lifted/llm_client.hpp"
#include "lifted/synthetic.hpp"
#include "lifted/trainer.hpp"

namespace lifted::cli {

namespace fs = std::filesystem;

namespace {

struct LlmFlags {
  std::string kind = "stub";
  std::string cassette;
  std::string cache;
};

struct Clients {
  std::unique_ptr<LlmClient> base;
  std::unique_ptr<LlmClient> recorder;
  LlmClient& get() { return recorder ? *recorder : *base; }
};

// replay reads the cassette; stub and http append to it when one is given.
Clients make_client(const LlmFlags& f) {
  Clients c;
  if (f.kind == "stub") {
    c.base = std::make_unique<StubLlmClient>();
  } else if (f.kind == "replay") {
    if (f.cassette.empty()) throw ContractError("--llm replay needs --cassette");
    c.base = std::make_unique<ReplayLlmClient>(f.cassette);
    return c;
  } else {
    c.base = std::make_unique<HttpLlmClient>(HttpLlmSettings::from_env());
  }
  if (!f.cassette.empty()) c.recorder = std::make_unique<RecordingLlmClient>(*c.base, f.cassette);
  return c;
}

void add_llm_flags(CLI::App* app, LlmFlags& f) {
  app->add_option("--llm", f.kind, "description client")
      ->check(CLI::IsMember({"stub", "replay", "http"}))
      ->capture_default_str();
  app->add_option("--cassette", f.cassette, "JSONL cassette to replay from or record to");
  app->add_option("--cache", f.cache, "description cache directory");
}

nlohmann::json llm_json(const LlmFlags& f) {
  return {{"llm", f.kind}, {"cassette", f.cassette}, {"cache", f.cache}};
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// A config file is either a TrainConfig object or a resolved-config file
// emitted by an earlier run.
nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  try {
    auto j = nlohmann::json::parse(in);
    if (j.is_object() && j.contains("command") && j.contains("config")) return j.at("config");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed config " + path + ": " + e.what());
  }
}

struct TrainFlags {
  std::string config, data, valid, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  bool no_aug = false, no_aux = false, no_llm = false, gating_all = false;
  std::size_t seeds = 1;
  LlmFlags llm;
};

void add_train_flags(CLI::App* app, TrainFlags& f, bool require_out) {
  app->add_option("--config", f.config, "TrainConfig JSON or a resolved-config file");
  app->add_option("--data", f.data, "dataset JSONL")->required();
  app->add_option("--valid", f.valid, "validation JSONL (default: split of --data)");
  auto* out = app->add_option("--out", f.out, "output directory");
  if (require_out) out->required();
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--threshold", f.threshold, "F1 decision threshold");
  app->add_flag("--no-aug", f.no_aug, "drop augmentation and the consistency loss");
  app->add_flag("--no-aux", f.no_aux, "drop the auxiliary unimodal loss");
  app->add_flag("--no-llm", f.no_llm, "use linearizations, drop the summarization modality");
  app->add_flag("--gating-all", f.gating_all, "weight modalities from all representations");
  app->add_option("--seeds", f.seeds, "number of consecutive seeds to sweep")
      ->check(CLI::PositiveNumber);
  add_llm_flags(app, f.llm);
}

TrainConfig resolve_config(const TrainFlags& f) {
  TrainConfig cfg = f.config.empty() ? TrainConfig{} : TrainConfig::from_json(read_config_file(f.config));
  if (f.seed) cfg.seed = *f.seed;
  if (f.threshold) cfg.threshold = *f.threshold;
  cfg.no_aug = cfg.no_aug || f.no_aug;
  cfg.no_aux = cfg.no_aux || f.no_aux;
  cfg.no_llm = cfg.no_llm || f.no_llm;
  cfg.gating_all = cfg.gating_all || f.gating_all;
  cfg.validate();
  return cfg;
}

nlohmann::json resolved(const std::string& command, const TrainFlags& f, const TrainConfig& cfg) {
  nlohmann::json j = llm_json(f.llm);
  j["command"] = command;
  j["data"] = f.data;
  j["valid"] = f.valid;
  j["seeds"] = f.seeds;
  j["config"] = cfg.to_json();
  return j;
}

MetricReport valid_report(const TrainingRun& run, double threshold) {
  std::vector<int> labels;
  for (const auto& t : run.valid) labels.push_back(t.label);
  return compute_metrics(predict(*run.model, run.valid), labels, threshold);
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_path,
              const std::vector<std::string>& signal, double fidelity, std::ostream& out) {
  SignalSpec spec;
  spec.modalities.clear();
  for (const auto& s : signal) spec.modalities.push_back(parse_modality(s));
  spec.fidelity = fidelity;
  const auto records = generate_synthetic(n, seed, spec);
  write_dataset(out_path, records);
  nlohmann::json sig = nlohmann::json::array();
  for (auto m : spec.modalities) sig.push_back(modality_name(m));
  write_json(out_path + ".resolved.json", {{"command", "synth"},
                                           {"n", n},
                                           {"seed", seed},
                                           {"out", out_path},
                                           {"signal", sig},
                                           {"fidelity", fidelity}});
  out << "wrote " << records.size() << " trials to " << out_path << '\n';
  return kOk;
}

int cmd_describe(const std::string& data, const std::string& out_path, const LlmFlags& llm,
                 std::size_t concurrency, std::ostream& out) {
  const auto records = read_dataset(data);
  auto clients = make_client(llm);
  DescribeOptions opts;
  opts.cache_dir = opt_path(llm.cache);
  opts.max_concurrency = concurrency;
  DescribeStats stats;
  const auto texts = describe_all(clients.get(), records, opts, &stats);
  if (!out_path.empty()) {
    const fs::path p(out_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::trunc);
    if (!f) throw DataError("cannot write " + out_path);
    for (const auto& trial : texts) {
      for (const auto& t : trial) {
        f << nlohmann::json{{"trial_id", t.trial_id},
                            {"kind", modality_name(t.kind)},
                            {"text", t.text},
                            {"provenance", provenance_name(t.provenance)}}
                 .dump()
          << '\n';
      }
    }
    nlohmann::json r = llm_json(llm);
    r["command"] = "describe";
    r["data"] = data;
    r["out"] = out_path;
    r["concurrency"] = concurrency;
    write_json(out_path + ".resolved.json", r);
  }
  out << "described " << records.size() << " trials: " << stats.client_calls << " client calls, "
      << stats.cache_hits << " cache hits, " << stats.cache_warnings << " cache warnings\n";
  return kOk;
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  TrainConfig cfg = resolve_config(f);
  const auto data = read_dataset(f.data);
  std::optional<std::vector<TrialRecord>> valid;
  if (!f.valid.empty()) valid = read_dataset(f.valid);
  auto clients = make_client(f.llm);
  const fs::path root(f.out);
  fs::create_directories(root);
  write_json(root / "resolved.json", resolved("train", f, cfg));

  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> reports;
  for (std::size_t s = 0; s < f.seeds; ++s) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + s;
    TrainOptions opts;
    opts.out_dir = f.seeds == 1 ? root : root / ("seed_" + std::to_string(c.seed));
    opts.cache_dir = opt_path(f.llm.cache);
    if (valid) opts.valid = &*valid;
    opts.on_epoch = [&](const EpochMetrics& m) {
      out << "seed " << c.seed << " epoch " << m.epoch << " loss " << m.loss_total << " val_pr_auc "
          << m.val_pr_auc << " val_roc_auc " << m.val_roc_auc << '\n';
    };
    const auto run = train(data, c, clients.get(), opts);
    out << "seed " << c.seed << " train_accuracy " << run.artifacts.train_accuracy << '\n';
    seeds.push_back(c.seed);
    reports.push_back(valid_report(run, c.threshold));
  }
  if (f.seeds > 1) {
    const auto summary = summarize_sweep(seeds, reports);
    write_json(root / "sweep.json", summary.to_json());
    out << "pr_auc " << summary.mean.pr_auc << " +- " << summary.sd.pr_auc << ", roc_auc "
        << summary.mean.roc_auc << " +- " << summary.sd.roc_auc << '\n';
  }
  return kOk;
}

int cmd_ablate(const TrainFlags& f, std::ostream& out) {
  TrainConfig cfg = resolve_config(f);
  const auto data = read_dataset(f.data);
  std::optional<std::vector<TrialRecord>> valid;
  if (!f.valid.empty()) valid = read_dataset(f.valid);
  auto clients = make_client(f.llm);
  const fs::path root(f.out);
  fs::create_directories(root);
  write_json(root / "resolved.json", resolved("ablate", f, cfg));
  nlohmann::json sweep = nlohmann::json::object();
  std::map<std::string, std::pair<std::vector<std::uint64_t>, std::vector<MetricReport>>> by_variant;
  std::vector<std::string> names;
  for (std::size_t s = 0; s < f.seeds; ++s) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + s;
    TrainOptions opts;
    opts.out_dir = f.seeds == 1 ? root : root / ("seed_" + std::to_string(c.seed));
    opts.cache_dir = opt_path(f.llm.cache);
    if (valid) opts.valid = &*valid;
    const auto rows = run_ablation_suite(data, c, clients.get(), opts);
    for (const auto& r : rows) {
      if (s == 0) names.push_back(r.variant);
      by_variant[r.variant].first.push_back(c.seed);
      by_variant[r.variant].second.push_back(r.metrics);
      out << "seed " << c.seed << ' ' << r.variant << " pr_auc " << r.metrics.pr_auc << " f1 "
          << r.metrics.f1 << " roc_auc " << r.metrics.roc_auc << '\n';
    }
  }
  if (f.seeds > 1) {
    for (const auto& name : names) {
      sweep[name] = summarize_sweep(by_variant[name].first, by_variant[name].second).to_json();
    }
    write_json(root / "sweep.json", sweep);
  }
  return kOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 const std::string& dump_dir, const std::string& out_path,
                 std::optional<double> threshold, const LlmFlags& llm, std::ostream& out) {
  auto loaded = load_model(checkpoint);
  const auto records = read_dataset(data);
  auto clients = make_client(llm);
  const auto texts = materialize_texts(records, loaded.config, clients.get(), opt_path(llm.cache));
  const auto trials = prepare_trials(records, texts, loaded.model->config(), loaded.vocab);
  EvaluationOptions opts;
  opts.threshold = threshold.value_or(loaded.config.threshold);
  opts.collect_reports = !dump_dir.empty();
  const auto result = evaluate(*loaded.model, trials, opts);
  if (!dump_dir.empty()) write_analysis(dump_dir, result);
  const auto report = result.metrics.to_json();
  if (!out_path.empty()) {
    write_json(out_path, report);
    nlohmann::json r = llm_json(llm);
    r["command"] = "evaluate";
    r["checkpoint"] = checkpoint;
    r["data"] = data;
    r["dump_weights"] = dump_dir;
    r["threshold"] = opts.threshold;
    write_json(out_path + ".resolved.json", r);
  }
  out << report.dump() << '\n';
  return kOk;
}

int cmd_inspect(const std::string& checkpoint, std::ostream& out) {
  const auto loaded = load_model(checkpoint);
  const auto& store = loaded.model->parameters();
  nlohmann::json j = nlohmann::json::object();
  std::size_t total = 0;
  bool consistent = true;
  for (const auto& [prefix, expected] : expected_parameter_counts(loaded.model->config())) {
    const std::size_t actual = store.element_count(prefix + (prefix == "positions" ? "" : "."));
    j[prefix] = {{"parameters", actual}, {"expected", expected}};
    consistent = consistent && actual == expected;
    total += actual;
    out << prefix << ' ' << actual << '\n';
  }
  out << "total " << total << '\n';
  j["total"] = total;
  j["consistent"] = consistent;
  out << j.dump() << '\n';
  return consistent ? kOk : kDataError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LIFTED: multimodal clinical trial outcome prediction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::size_t synth_n = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  std::vector<std::string> synth_signal{"diseases"};
  double synth_fidelity = 1.0;
  auto* synth = app.add_subcommand("synth", "generate a planted-signal synthetic dataset");
  synth->add_option("--n", synth_n, "number of trials")->required();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output JSONL")->required();
  synth->add_option("--signal", synth_signal, "modalities carrying the label token")
      ->capture_default_str();
  synth->add_option("--fidelity", synth_fidelity, "probability the planted token matches the label")
      ->check(CLI::Range(0.0, 1.0));

  std::string describe_data, describe_out;
  std::size_t describe_concurrency = 4;
  LlmFlags describe_llm;
  auto* describe = app.add_subcommand("describe", "generate modality descriptions");
  describe->add_option("--data", describe_data, "dataset JSONL")->required();
  describe->add_option("--out", describe_out, "write descriptions as JSONL");
  describe->add_option("--concurrency", describe_concurrency, "trials described in parallel")
      ->check(CLI::PositiveNumber);
  add_llm_flags(describe, describe_llm);

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_train_flags(train_cmd, train_flags, true);

  TrainFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "train the full model and the four ablations");
  add_train_flags(ablate, ablate_flags, true);

  std::string eval_checkpoint, eval_data, eval_dump, eval_out;
  std::optional<double> eval_threshold;
  LlmFlags eval_llm;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a dataset with a checkpoint");
  evaluate_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint directory")->required();
  evaluate_cmd->add_option("--data", eval_data, "dataset JSONL")->required();
  evaluate_cmd->add_option("--dump-weights", eval_dump,
                           "write per-trial fusion reports and routing stats here");
  evaluate_cmd->add_option("--out", eval_out, "report JSON path");
  evaluate_cmd->add_option("--threshold", eval_threshold, "F1 decision threshold");
  add_llm_flags(evaluate_cmd, eval_llm);

  std::string inspect_checkpoint;
  auto* inspect = app.add_subcommand("inspect", "parameter counts per module");
  inspect->add_option("--checkpoint", inspect_checkpoint, "checkpoint directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*synth) {
      return cmd_synth(synth_n, synth_seed, synth_out, synth_signal, synth_fidelity, out);
    }
    if (*describe) {
      return cmd_describe(describe_data, describe_out, describe_llm, describe_concurrency, out);
    }
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*ablate) return cmd_ablate(ablate_flags, out);
    if (*evaluate_cmd) {
      return cmd_evaluate(eval_checkpoint, eval_data, eval_dump, eval_out, eval_threshold,
                          eval_llm, out);
    }
    if (*inspect) return cmd_inspect(inspect_checkpoint, out);
  } catch (const NumericAbort& e) {
    err << "numeric abort: " << e.what() << '\n';
    return kNumericAbort;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace lifted::cli
