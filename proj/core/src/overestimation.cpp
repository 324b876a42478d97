#include "codql/overestimation.hpp"

#include <numeric>

#include "codql/errors.hpp"
#include "codql/rng.hpp"

namespace codql::agents {

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw ContractError("arm without samples");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double single_estimator(std::span<const std::vector<double>> samples) {
  if (samples.empty()) throw ContractError("no arms");
  double best = mean(samples[0]);
  for (std::size_t i = 1; i < samples.size(); ++i) best = std::max(best, mean(samples[i]));
  return best;
}

double double_estimator(std::span<const std::vector<double>> select,
                        std::span<const std::vector<double>> evaluate) {
  if (select.empty() || select.size() != evaluate.size()) {
    throw ContractError("sample sets must cover the same arms");
  }
  std::size_t best = 0;
  double best_mean = mean(select[0]);
  for (std::size_t i = 1; i < select.size(); ++i) {
    const double m = mean(select[i]);
    if (m > best_mean) {
      best_mean = m;
      best = i;
    }
  }
  return mean(evaluate[best]);
}

EstimatorStudy estimator_study(int n_arms, int samples_per_arm, int runs, std::uint64_t seed) {
  if (n_arms < 1 || samples_per_arm < 2 || runs < 1) {
    throw ContractError("estimator study needs arms, >= 2 samples per arm and runs");
  }
  EstimatorStudy study;
  for (int run = 0; run < runs; ++run) {
    Rng rng = make_rng(seed, "bandit", static_cast<std::uint64_t>(run));
    std::vector<std::vector<double>> all(n_arms), half_a(n_arms), half_b(n_arms);
    for (int arm = 0; arm < n_arms; ++arm) {
      for (int i = 0; i < samples_per_arm; ++i) {
        const double x = coin_flip(rng) ? 1.0 : -1.0;
        all[arm].push_back(x);
        (i % 2 == 0 ? half_a : half_b)[arm].push_back(x);
      }
    }
    study.single_runs.push_back(single_estimator(all));
    study.double_runs.push_back(double_estimator(half_a, half_b));
  }
  study.single_mean = std::accumulate(study.single_runs.begin(), study.single_runs.end(), 0.0) / runs;
  study.double_mean = std::accumulate(study.double_runs.begin(), study.double_runs.end(), 0.0) / runs;
  return study;
}

}  // namespace codql::agents
