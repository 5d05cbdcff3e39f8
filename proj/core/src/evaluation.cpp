#include "lifted/evaluation.hpp"

#include <fstream>

#include "lifted/errors.hpp"

namespace lifted {

std::vector<double> predict(const LiftedModel& model, std::span<const PreparedTrial> trials,
                            std::size_t batch_size) {
  NoGradGuard guard;
  std::vector<double> out;
  out.reserve(trials.size());
  ForwardOptions opts;
  for (std::size_t i = 0; i < trials.size(); i += batch_size) {
    const auto n = std::min(batch_size, trials.size() - i);
    const auto res = model.forward(trials.subspan(i, n), opts);
    out.insert(out.end(), res.probabilities.begin(), res.probabilities.end());
  }
  return out;
}

EvaluationResult evaluate(const LiftedModel& model, std::span<const PreparedTrial> trials,
                          const EvaluationOptions& options) {
  if (trials.empty()) throw DataError("evaluate: no trials");
  NoGradGuard guard;
  EvaluationResult r;
  ForwardOptions opts;
  opts.collect_reports = options.collect_reports;
  std::vector<RoutedDecision> routes;
  for (std::size_t i = 0; i < trials.size(); i += options.batch_size) {
    const auto n = std::min(options.batch_size, trials.size() - i);
    auto res = model.forward(trials.subspan(i, n), opts);
    r.probabilities.insert(r.probabilities.end(), res.probabilities.begin(), res.probabilities.end());
    if (options.collect_reports) {
      for (auto& rep : res.reports) r.reports.push_back(std::move(rep));
      for (auto& route : res.routes) routes.push_back(std::move(route));
    }
  }
  for (const auto& t : trials) r.labels.push_back(t.label);
  r.metrics = compute_metrics(r.probabilities, r.labels, options.threshold);
  r.accuracy = accuracy(r.probabilities, r.labels, options.threshold);
  r.routing = routing_stats(routes, model.config().modalities, model.config().smoe.num_experts);
  return r;
}

void write_analysis(const std::filesystem::path& dir, const EvaluationResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "fusion_reports.jsonl", std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "fusion_reports.jsonl").string());
    for (const auto& rep : result.reports) out << rep.to_json().dump() << '\n';
  }
  std::ofstream out(dir / "routing_stats.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "routing_stats.json").string());
  out << result.routing.to_json().dump(2) << '\n';
}

}  // namespace lifted
