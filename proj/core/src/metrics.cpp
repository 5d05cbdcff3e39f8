#include "lifted/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "lifted/errors.hpp"

namespace lifted {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, const char* op) {
  if (scores.size() != labels.size()) {
    throw ContractError(std::string(op) + ": " + std::to_string(scores.size()) + " scores but " +
                        std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw ContractError(std::string(op) + ": empty input");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ContractError(std::string(op) + ": labels must be 0 or 1");
  }
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  return {{"pr_auc", pr_auc}, {"f1", f1}, {"roc_auc", roc_auc}, {"n", n}, {"threshold", threshold}};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "roc_auc");
  const auto order = descending_order(scores);
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("roc_auc needs both classes");
  // Walk tie groups from the top: each positive beats every negative below
  // its group and ties half of the negatives inside it.
  double wins = 0.0;
  double neg_below = neg;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double p = 0, n = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? p : n) += 1;
      ++j;
    }
    neg_below -= n;
    wins += p * (neg_below + 0.5 * n);
    i = j;
  }
  return wins / (pos * neg);
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "pr_auc");
  const auto order = descending_order(scores);
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw UndefinedMetricError("pr_auc needs at least one positive");
  double tp = 0, fp = 0, prev_recall = 0, area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / pos;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return area;
}

double f1_score(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels, "f1_score");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i]) ++tp;
    if (pred && !labels[i]) ++fp;
    if (!pred && labels[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  return 2 * precision * recall / (precision + recall);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels, "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] >= threshold) == (labels[i] == 1);
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  MetricReport r;
  r.pr_auc = pr_auc(scores, labels);
  r.roc_auc = roc_auc(scores, labels);
  r.f1 = f1_score(scores, labels, threshold);
  r.n = scores.size();
  r.threshold = threshold;
  return r;
}

}  // namespace lifted
