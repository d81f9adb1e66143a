#include <algorithm>
#include <cmath>
#include <limits>

#include "ewer/error.hpp"
#include "ewer/nn.hpp"

namespace ewer::nn {

DenseParams DenseParams::zeros(Eigen::Index out, Eigen::Index in) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

namespace {

Eigen::VectorXd dropout_mask(Eigen::Index n, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Eigen::VectorXd mask(n);
  for (Eigen::Index k = 0; k < n; ++k) mask(k) = keep(rng) ? scale : 0.0;
  return mask;
}

void check_dense(const DenseParams& d, Eigen::Index in, const char* name) {
  if (d.weight.cols() != in || d.bias.size() != d.weight.rows())
    throw DataError(std::string(name) + ": expects input of " + std::to_string(d.weight.cols()) +
                    ", got " + std::to_string(in));
}

}  // namespace

double head_forward(const Eigen::VectorXd& a_fwd, const Eigen::VectorXd& a_bwd,
                    const Eigen::VectorXd& lexical, const HeadLayers& layers, double dropout_rate,
                    bool training, Rng& rng, HeadCache* cache) {
  HeadCache local;
  HeadCache& c = cache != nullptr ? *cache : local;
  const bool drop = training && dropout_rate > 0.0;

  c.fwd_size = a_fwd.size();
  c.bwd_size = a_bwd.size();
  c.z.resize(a_fwd.size() + a_bwd.size() + lexical.size());
  c.z << a_fwd, a_bwd, lexical;
  check_dense(layers.fc1, c.z.size(), "fc1");

  Eigen::VectorXd x = c.z;
  if (drop) {
    c.z_mask = dropout_mask(x.size(), dropout_rate, rng);
    x.array() *= c.z_mask.array();
  } else {
    c.z_mask.resize(0);
  }
  c.h1_pre = layers.fc1.weight * x + layers.fc1.bias;
  c.h1 = c.h1_pre.cwiseMax(0.0);

  x = c.h1;
  if (drop) {
    c.h1_mask = dropout_mask(x.size(), dropout_rate, rng);
    x.array() *= c.h1_mask.array();
  } else {
    c.h1_mask.resize(0);
  }
  check_dense(layers.fc2, x.size(), "fc2");
  c.h2_pre = layers.fc2.weight * x + layers.fc2.bias;
  c.h2 = c.h2_pre.cwiseMax(0.0);

  check_dense(layers.out, c.h2.size(), "out");
  if (layers.out.weight.rows() != 1) throw DataError("output layer must have one unit");
  const double logit = layers.out.weight.row(0).dot(c.h2) + layers.out.bias(0);
  // sigmoid rounds to exactly 0 or 1 for |logit| beyond ~37; keep the
  // output strictly inside the open interval.
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  c.prediction = std::clamp(sigmoid(logit), lo, hi);
  return c.prediction;
}

HeadInputGradients head_backward(const HeadCache& c, const HeadLayers& layers, double d_prediction,
                                 HeadGradients& grads) {
  const double d_logit = d_prediction * c.prediction * (1.0 - c.prediction);
  grads.out.weight.row(0) += d_logit * c.h2.transpose();
  grads.out.bias(0) += d_logit;

  Eigen::VectorXd d = layers.out.weight.row(0).transpose() * d_logit;
  d.array() *= (c.h2_pre.array() > 0.0).cast<double>();

  Eigen::VectorXd fc2_in = c.h1;
  if (c.h1_mask.size() > 0) fc2_in.array() *= c.h1_mask.array();
  grads.fc2.weight.noalias() += d * fc2_in.transpose();
  grads.fc2.bias += d;

  Eigen::VectorXd d_h1 = layers.fc2.weight.transpose() * d;
  if (c.h1_mask.size() > 0) d_h1.array() *= c.h1_mask.array();
  d_h1.array() *= (c.h1_pre.array() > 0.0).cast<double>();

  Eigen::VectorXd fc1_in = c.z;
  if (c.z_mask.size() > 0) fc1_in.array() *= c.z_mask.array();
  grads.fc1.weight.noalias() += d_h1 * fc1_in.transpose();
  grads.fc1.bias += d_h1;

  Eigen::VectorXd d_z = layers.fc1.weight.transpose() * d_h1;
  if (c.z_mask.size() > 0) d_z.array() *= c.z_mask.array();

  HeadInputGradients in;
  in.a_fwd = d_z.head(c.fwd_size);
  in.a_bwd = d_z.segment(c.fwd_size, c.bwd_size);
  in.lexical = d_z.tail(d_z.size() - c.fwd_size - c.bwd_size);
  return in;
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw DataError("mse_loss: empty batch");
  if (predictions.size() != targets.size()) throw DataError("mse_loss: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(predictions.size());
}

}  // namespace ewer::nn
