#pragma once

// Exhaustive reference implementations of the ranking metrics. They share
// no code with the library and favour obviousness over speed.

#include <cstddef>
#include <functional>
#include <set>
#include <vector>

namespace lifted::testing {

// Counts every (positive, negative) pair; ties score one half.
inline double brute_roc_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Enumerates each distinct score as a threshold t (predict score >= t),
// recounting precision and recall from scratch at every step.
inline double brute_pr_auc(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0.0;
  for (int v : y) positives += v;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0;
    double predicted = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        predicted += 1.0;
        tp += y[i];
      }
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

inline double brute_f1(const std::vector<double>& s, const std::vector<int>& y, double threshold) {
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] >= threshold;
    if (pred && y[i] == 1) tp += 1.0;
    if (pred && y[i] == 0) fp += 1.0;
    if (!pred && y[i] == 1) fn += 1.0;
  }
  if (tp == 0.0) return 0.0;
  const double p = tp / (tp + fp);
  const double r = tp / (tp + fn);
  return 2.0 * p * r / (p + r);
}

}  // namespace lifted::testing
