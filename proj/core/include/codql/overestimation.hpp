#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace codql::agents {

/// max_i mean(samples[i]): biased upward when arm means are equal.
double single_estimator(std::span<const std::vector<double>> samples);

/// Picks the arm maximizing the mean of `select`, returns that arm's mean
/// under the independent sample set `evaluate`.
double double_estimator(std::span<const std::vector<double>> select,
                        std::span<const std::vector<double>> evaluate);

struct EstimatorStudy {
  std::vector<double> single_runs;
  std::vector<double> double_runs;
  double single_mean = 0;
  double double_mean = 0;
};

/// Seeded runs on a bandit whose arms all have mean 0 and +-1 noise. Each
/// run draws `samples_per_arm` samples per arm; the single estimator uses
/// all of them, the double estimator splits them in half.
EstimatorStudy estimator_study(int n_arms, int samples_per_arm, int runs, std::uint64_t seed);

}  // namespace codql::agents
