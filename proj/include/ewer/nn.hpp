#pragma once

// Small neural-network toolkit for the estimator: a one-layer LSTM run in
// either direction with backpropagation through time, dense layers with
// ReLU and inverted dropout, a sigmoid regression head, MSE and Adam.
// Everything is double precision.

#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ewer::nn {

using Rng = std::mt19937_64;

/// Gate blocks are stacked in the order input, forget, cell, output:
/// rows [0,H) input, [H,2H) forget, [2H,3H) cell candidate, [3H,4H) output.
struct LstmParams {
  Eigen::MatrixXd W;  // 4H x D
  Eigen::MatrixXd U;  // 4H x H
  Eigen::VectorXd b;  // 4H

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden);
  Eigen::Index hidden() const { return U.cols(); }
  Eigen::Index input_dim() const { return W.cols(); }
};

struct DenseParams {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  static DenseParams zeros(Eigen::Index out, Eigen::Index in);
};

double sigmoid(double x);

/// Cached activations of one LSTM pass, columns in processing order.
struct LstmTrace {
  bool reverse = false;
  Eigen::MatrixXd gates;   // 4H x T, post-activation
  Eigen::MatrixXd cells;   // H x T
  Eigen::MatrixXd tanh_c;  // H x T
  Eigen::MatrixXd hidden;  // H x (T+1), column 0 is the zero initial state

  Eigen::VectorXd last() const { return hidden.col(hidden.cols() - 1); }
};

/// Runs the recurrence over `frames` (T x D, one frame per row) starting from
/// zero hidden and cell state. With `reverse`, frames are consumed T..1.
LstmTrace lstm_forward(const LstmParams& p, const Eigen::MatrixXd& frames, bool reverse);

/// Accumulates into `grad` the gradient of a loss whose derivative with
/// respect to the final hidden state is `d_last`.
void lstm_backward(const LstmParams& p, const Eigen::MatrixXd& frames, const LstmTrace& trace,
                   const Eigen::VectorXd& d_last, LstmParams& grad);

struct BiLstmLast {
  Eigen::VectorXd forward;   // hidden state after frame T, forward pass
  Eigen::VectorXd backward;  // hidden state after frame 1, backward pass
};

/// Last-step states of a one-layer bidirectional LSTM. Throws DataError on
/// an empty input or a dimension mismatch.
BiLstmLast bilstm_last(const Eigen::MatrixXd& frames, const LstmParams& fwd, const LstmParams& bwd);

/// Activations kept by head_forward for head_backward.
struct HeadCache {
  Eigen::Index fwd_size = 0;
  Eigen::Index bwd_size = 0;
  Eigen::VectorXd z;        // concat(A_fwd, A_bwd, L)
  Eigen::VectorXd z_mask;   // inverted-dropout multipliers, empty when inactive
  Eigen::VectorXd h1_pre;
  Eigen::VectorXd h1;       // after ReLU, before dropout
  Eigen::VectorXd h1_mask;
  Eigen::VectorXd h2_pre;
  Eigen::VectorXd h2;
  double prediction = 0.0;
};

struct HeadLayers {
  const DenseParams& fc1;
  const DenseParams& fc2;
  const DenseParams& out;
};

/// concat -> dropout -> fc1 -> ReLU -> dropout -> fc2 -> ReLU -> out -> sigmoid.
/// Dropout is active only when `training` and `dropout_rate > 0`; masks are
/// drawn from `rng` (z first, then h1).
double head_forward(const Eigen::VectorXd& a_fwd, const Eigen::VectorXd& a_bwd,
                    const Eigen::VectorXd& lexical, const HeadLayers& layers,
                    double dropout_rate, bool training, Rng& rng, HeadCache* cache = nullptr);

struct HeadGradients {
  DenseParams fc1, fc2, out;
};

struct HeadInputGradients {
  Eigen::VectorXd a_fwd, a_bwd, lexical;
};

/// Backpropagates d loss / d prediction through the head, accumulating layer
/// gradients into `grads` and returning gradients for the three inputs.
HeadInputGradients head_backward(const HeadCache& cache, const HeadLayers& layers,
                                 double d_prediction, HeadGradients& grads);

/// Mean of squared differences. Throws DataError on empty or mismatched input.
double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// --- Adam --------------------------------------------------------------------

struct TensorView {
  std::string_view name;
  std::span<double> values;
};

struct ConstTensorView {
  std::string_view name;
  std::span<const double> values;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
};

/// One bias-corrected Adam update. Moments are created on the first call.
/// Throws NumericError naming the tensor if any gradient is non-finite; in
/// that case neither parameters nor state are modified.
void adam_step(std::span<const TensorView> params, std::span<const ConstTensorView> grads,
               AdamState& state, double learning_rate);

template <typename Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const double> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace ewer::nn
