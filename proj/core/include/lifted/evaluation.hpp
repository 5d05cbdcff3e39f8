#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "lifted/fusion.hpp"
#include "lifted/metrics.hpp"
#include "lifted/model.hpp"
#include "lifted/smoe.hpp"

namespace lifted {

struct EvaluationOptions {
  double threshold = 0.5;
  bool collect_reports = false;
  std::size_t batch_size = 64;
};

struct EvaluationResult {
  MetricReport metrics;
  double accuracy = 0.0;
  std::vector<double> probabilities;
  std::vector<int> labels;
  std::vector<FusionReport> reports;
  RoutingStats routing;
};

// Noiseless gating, no dropout, no augmentation.
std::vector<double> predict(const LiftedModel& model, std::span<const PreparedTrial> trials,
                            std::size_t batch_size = 64);

EvaluationResult evaluate(const LiftedModel& model, std::span<const PreparedTrial> trials,
                          const EvaluationOptions& options = {});

// fusion_reports.jsonl (one FusionReport per line) and routing_stats.json.
void write_analysis(const std::filesystem::path& dir, const EvaluationResult& result);

}  // namespace lifted
