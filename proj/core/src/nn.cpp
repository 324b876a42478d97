#include "codql/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codql/binary_io.hpp"
#include "codql/errors.hpp"

namespace codql::nn {

namespace {

std::vector<DenseLayer> zero_like(const NetSpec& spec) {
  std::vector<DenseLayer> layers;
  int fan_in = spec.input_dim;
  auto add = [&](int width) {
    layers.push_back({Eigen::MatrixXd::Zero(width, fan_in), Eigen::VectorXd::Zero(width)});
    fan_in = width;
  };
  for (int h : spec.hidden) add(h);
  add(spec.output_dim);
  return layers;
}

bool relu_after(const NetSpec& spec, std::size_t layer) {
  return layer + 1 < spec.hidden.size() + 1 || spec.relu_output;
}

void check_shapes(const QNetParams& a, const QNetParams& b) {
  if (!(a.spec == b.spec)) throw ContractError("network shapes differ");
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same_layers(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same(a[i].weight, b[i].weight) || !same(a[i].bias, b[i].bias)) return false;
  }
  return true;
}

void write_layers(ByteWriter& w, const std::vector<DenseLayer>& layers) {
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
  }
}

void read_layers(ByteReader& r, std::vector<DenseLayer>& layers) {
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = r.f64();
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = r.f64();
  }
}

// Which ReLU units are active, over every hidden unit and batch column.
std::vector<bool> relu_pattern(const QNetParams& params, const Eigen::MatrixXd& inputs) {
  std::vector<bool> out;
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = l.weight * a;
    z.colwise() += l.bias;
    if (relu_after(params.spec, i)) {
      for (Eigen::Index j = 0; j < z.size(); ++j) out.push_back(z.data()[j] > 0.0);
      z = z.cwiseMax(0.0);
    }
    a = std::move(z);
  }
  return out;
}

}  // namespace

void NetSpec::validate() const {
  if (input_dim < 1) throw ConfigError("net.input_dim", "must be >= 1");
  if (output_dim < 1) throw ConfigError("net.output_dim", "must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("net.hidden", "layer widths must be >= 1");
  }
}

bool identical(const QNetParams& a, const QNetParams& b) {
  return a.spec == b.spec && a.step == b.step && same_layers(a.layers, b.layers) &&
         same_layers(a.adam_m, b.adam_m) && same_layers(a.adam_v, b.adam_v);
}

QNetParams zero_params(const NetSpec& spec) {
  spec.validate();
  QNetParams p;
  p.spec = spec;
  p.layers = zero_like(spec);
  p.adam_m = zero_like(spec);
  p.adam_v = zero_like(spec);
  return p;
}

QNetParams init_params(const NetSpec& spec, Rng& rng) {
  QNetParams p = zero_params(spec);
  for (auto& l : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = dist(rng);
    }
  }
  return p;
}

Eigen::MatrixXd forward_batch(const QNetParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != params.spec.input_dim) {
    throw ContractError("input has " + std::to_string(inputs.rows()) + " features, network expects " +
                        std::to_string(params.spec.input_dim));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = l.weight * a;
    z.colwise() += l.bias;
    if (relu_after(params.spec, i)) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const QNetParams& params, std::span<const double> input) {
  const Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  return forward_batch(params, x);
}

double loss_and_gradients(const QNetParams& params, const Eigen::MatrixXd& inputs,
                          std::span<const int> actions, std::span<const double> targets,
                          Gradients* grad) {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw ContractError("empty batch");
  if (static_cast<Eigen::Index>(actions.size()) != batch ||
      static_cast<Eigen::Index>(targets.size()) != batch) {
    throw ContractError("batch, action and target counts differ");
  }
  if (inputs.rows() != params.spec.input_dim) throw ContractError("input dimension mismatch");

  const std::size_t n_layers = params.layers.size();
  std::vector<Eigen::MatrixXd> acts;  // acts[i] is the input to layer i
  std::vector<Eigen::MatrixXd> pre;
  acts.reserve(n_layers + 1);
  pre.reserve(n_layers);
  acts.push_back(inputs);
  for (std::size_t i = 0; i < n_layers; ++i) {
    Eigen::MatrixXd z = params.layers[i].weight * acts.back();
    z.colwise() += params.layers[i].bias;
    pre.push_back(z);
    acts.push_back(relu_after(params.spec, i) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }
  const Eigen::MatrixXd& q = acts.back();

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= q.rows()) throw ContractError("action index out of range");
    const double err = q(a, i) - targets[i];
    loss += err * err;
    delta(a, i) = 2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!grad) return loss;

  grad->resize(n_layers);
  for (std::size_t i = n_layers; i-- > 0;) {
    if (relu_after(params.spec, i)) delta = delta.cwiseProduct((pre[i].array() > 0.0).cast<double>().matrix());
    (*grad)[i].weight = delta * acts[i].transpose();
    (*grad)[i].bias = delta.rowwise().sum();
    if (i > 0) delta = params.layers[i].weight.transpose() * delta;
  }
  return loss;
}

double train_step(QNetParams& params, const Eigen::MatrixXd& inputs, std::span<const int> actions,
                  std::span<const double> targets, double lr, const AdamConfig& adam) {
  for (double y : targets) {
    if (!std::isfinite(y)) throw NumericError("non-finite training target");
  }
  Gradients g;
  const double loss = loss_and_gradients(params, inputs, actions, targets, &g);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");

  ++params.step;
  const double t = static_cast<double>(params.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  auto update = [&](auto& theta, auto& m, auto& v, const auto& grad) {
    m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
    v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, params.adam_m[i].weight, params.adam_v[i].weight, g[i].weight);
    update(params.layers[i].bias, params.adam_m[i].bias, params.adam_v[i].bias, g[i].bias);
  }
  return loss;
}

void soft_update(QNetParams& target, const QNetParams& online, double tau) {
  check_shapes(target, online);
  if (!(tau > 0.0 && tau <= 1.0)) throw ContractError("tau must lie in (0, 1]");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    if (tau == 1.0) {
      target.layers[i] = online.layers[i];
      continue;
    }
    target.layers[i].weight = tau * online.layers[i].weight + (1.0 - tau) * target.layers[i].weight;
    target.layers[i].bias = tau * online.layers[i].bias + (1.0 - tau) * target.layers[i].bias;
  }
}

double parameter_distance(const QNetParams& a, const QNetParams& b) {
  check_shapes(a, b);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    sq += (a.layers[i].weight - b.layers[i].weight).squaredNorm();
    sq += (a.layers[i].bias - b.layers[i].bias).squaredNorm();
  }
  return std::sqrt(sq);
}

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void unflatten(std::span<const double> flat, std::vector<DenseLayer>& layers) {
  std::size_t pos = 0;
  for (auto& l : layers) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (pos + nw + nb > flat.size()) throw ContractError("flat parameter vector too short");
    std::copy_n(flat.data() + pos, nw, l.weight.data());
    pos += nw;
    std::copy_n(flat.data() + pos, nb, l.bias.data());
    pos += nb;
  }
  if (pos != flat.size()) throw ContractError("flat parameter vector too long");
}

GradCheckResult gradient_check(const NetSpec& spec, std::uint64_t seed, int batch_size,
                               double step) {
  Rng rng(seed);
  QNetParams params = init_params(spec, rng);
  // Non-zero biases keep pre-activations away from the ReLU kink.
  for (auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * (uniform01(rng) - 0.5);
  }
  Eigen::MatrixXd x(spec.input_dim, batch_size);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
  std::vector<int> actions(batch_size);
  std::vector<double> targets(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    actions[i] = uniform_int(rng, 0, spec.output_dim - 1);
    targets[i] = 2.0 * uniform01(rng) - 1.0;
  }

  Gradients g;
  loss_and_gradients(params, x, actions, targets, &g);
  const auto analytic = flatten(g);
  auto theta = flatten(params.layers);
  QNetParams probe = params;

  const auto base_pattern = relu_pattern(params, x);
  GradCheckResult result;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    // A probe that flips a ReLU measures a kink, not the derivative; retry
    // with smaller steps and skip the parameter if that never helps.
    bool clean = false;
    double numeric = 0.0;
    for (double h = step; h >= step * 1e-3 && !clean; h *= 0.1) {
      theta[i] = saved + h;
      unflatten(theta, probe.layers);
      const double up = loss_and_gradients(probe, x, actions, targets, nullptr);
      const bool up_clean = relu_pattern(probe, x) == base_pattern;
      theta[i] = saved - h;
      unflatten(theta, probe.layers);
      const double down = loss_and_gradients(probe, x, actions, targets, nullptr);
      clean = up_clean && relu_pattern(probe, x) == base_pattern;
      numeric = (up - down) / (2.0 * h);
    }
    theta[i] = saved;
    unflatten(theta, probe.layers);
    if (!clean) {
      ++result.n_skipped;
      continue;
    }
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - numeric) / scale);
    ++result.n_checked;
  }
  return result;
}

std::vector<std::uint8_t> serialize(const QNetParams& p) {
  ByteWriter w;
  w.tag("CDQLQNET");
  w.u32(kParamsVersion);
  w.i32(p.spec.input_dim);
  w.u32(static_cast<std::uint32_t>(p.spec.hidden.size()));
  for (int h : p.spec.hidden) w.i32(h);
  w.i32(p.spec.output_dim);
  w.u8(p.spec.relu_output ? 1 : 0);
  w.i64(p.step);
  write_layers(w, p.layers);
  write_layers(w, p.adam_m);
  write_layers(w, p.adam_v);
  seal_with_checksum(w);
  return w.take();
}

QNetParams deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(verify_checksum(bytes, "network parameters"));
  r.expect_tag("CDQLQNET", "network parameters");
  const std::uint32_t version = r.u32();
  if (version != kParamsVersion) {
    throw FormatError("network parameters: unsupported version " + std::to_string(version));
  }
  NetSpec spec;
  spec.input_dim = r.i32();
  spec.hidden.resize(r.count(4));
  for (int& h : spec.hidden) h = r.i32();
  spec.output_dim = r.i32();
  spec.relu_output = r.u8() != 0;
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("network parameters: ") + e.what());
  }
  QNetParams p = zero_params(spec);
  p.step = r.i64();
  read_layers(r, p.layers);
  read_layers(r, p.adam_m);
  read_layers(r, p.adam_v);
  if (!r.at_end()) throw FormatError("network parameters: trailing bytes");
  return p;
}

std::vector<NetSpec> grad_check_shapes() {
  std::vector<NetSpec> out;
  for (int input : {1, 8, 35}) {
    for (const std::vector<int>& hidden : {std::vector<int>{}, {6}, {16, 12}, {32, 32, 8}}) {
      for (bool relu : {false, true}) out.push_back(NetSpec{input, hidden, 2, relu});
    }
  }
  out.push_back(NetSpec{35, {128, 128}, 2, false});
  return out;
}

}  // namespace codql::nn
