#pragma once

#include <cstddef>
#include <span>

#include <nlohmann/json.hpp>

namespace lifted {

struct MetricReport {
  double pr_auc = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  std::size_t n = 0;
  double threshold = 0.5;

  // {pr_auc, f1, roc_auc, n, threshold}
  nlohmann::json to_json() const;
};

// Probability that a random positive outranks a random negative; ties
// count one half. Single-class labels raise UndefinedMetricError.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum over distinct descending thresholds of
// (R_i - R_{i-1}) * P_i. No positives raises UndefinedMetricError.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

// Predictions are score >= threshold. 0 when precision + recall is 0.
double f1_score(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels,
                             double threshold = 0.5);

}  // namespace lifted
