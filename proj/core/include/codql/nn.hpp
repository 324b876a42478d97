#pragma once

// Dense feed-forward Q-network: ReLU hidden layers, linear (or optionally
// ReLU) output head, squared-error loss on the chosen action's output, Adam
// updates and soft target blending.
//
// Batches are column-major: an input batch is input_dim x batch_size.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "codql/rng.hpp"

namespace codql::nn {

struct NetSpec {
  int input_dim = 1;
  std::vector<int> hidden{128, 128};
  int output_dim = 2;
  bool relu_output = false;

  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct QNetParams {
  NetSpec spec;
  std::vector<DenseLayer> layers;
  std::vector<DenseLayer> adam_m;
  std::vector<DenseLayer> adam_v;
  std::int64_t step = 0;
};

/// Exact (bitwise) equality of weights, moments and step counter.
bool identical(const QNetParams& a, const QNetParams& b);

/// Weights uniform in +-1/sqrt(fan_in), zero biases, zero moments.
QNetParams init_params(const NetSpec& spec, Rng& rng);
QNetParams zero_params(const NetSpec& spec);

Eigen::VectorXd forward(const QNetParams& params, std::span<const double> input);
Eigen::MatrixXd forward_batch(const QNetParams& params, const Eigen::MatrixXd& inputs);

using Gradients = std::vector<DenseLayer>;

/// Mean over the batch of (Q(x_i)[a_i] - y_i)^2. Fills `grad` when non-null.
double loss_and_gradients(const QNetParams& params, const Eigen::MatrixXd& inputs,
                          std::span<const int> actions, std::span<const double> targets,
                          Gradients* grad);

/// One Adam step on the squared-error loss; returns the pre-update loss.
/// Throws NumericError on non-finite targets or loss.
double train_step(QNetParams& params, const Eigen::MatrixXd& inputs,
                  std::span<const int> actions, std::span<const double> targets, double lr,
                  const AdamConfig& adam = {});

/// target <- tau * online + (1 - tau) * target, weights and biases only.
void soft_update(QNetParams& target, const QNetParams& online, double tau);

/// Euclidean distance between the weight sets of two same-shaped nets.
double parameter_distance(const QNetParams& a, const QNetParams& b);

std::vector<double> flatten(const std::vector<DenseLayer>& layers);
void unflatten(std::span<const double> flat, std::vector<DenseLayer>& layers);

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t n_checked = 0;
  std::size_t n_skipped = 0;  // every probe step crossed a ReLU kink
};

/// Compares backprop gradients with central finite differences of the loss
/// on a random net and batch. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(const NetSpec& spec, std::uint64_t seed, int batch_size = 8,
                               double step = 1e-5);

/// Shapes covering no/one/two hidden layers, narrow and wide inputs, and
/// both output activations.
std::vector<NetSpec> grad_check_shapes();

/// Parameter blob (little-endian):
///   "CDQLQNET" u32 version
///   i32 input_dim, u32 n + i32[n] hidden, i32 output_dim, u8 relu_output
///   i64 adam step
///   per layer: f64 weight[out*in] (row-major), f64 bias[out]
///   then the same layout for the Adam first moments, then second moments
///   u64 FNV-1a checksum
std::vector<std::uint8_t> serialize(const QNetParams& params);
QNetParams deserialize(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kParamsVersion = 1;

}  // namespace codql::nn
