#pragma once

#include <string_view>

#include "ewer/estimator.hpp"

namespace ewer::detail {

/// Calls f(name, tensor, fan_in) for every parameter tensor in serialization
/// order. Works for const and mutable EstimatorParams.
template <typename Params, typename F>
void visit_tensors(Params& p, F&& f) {
  const Eigen::Index hidden = p.fwd.hidden();
  const Eigen::Index input = p.fwd.input_dim();
  f(std::string_view("embedding"), p.embedding, p.embedding.cols());
  f(std::string_view("lstm_fwd.W"), p.fwd.W, input);
  f(std::string_view("lstm_fwd.U"), p.fwd.U, hidden);
  f(std::string_view("lstm_fwd.b"), p.fwd.b, hidden);
  f(std::string_view("lstm_bwd.W"), p.bwd.W, input);
  f(std::string_view("lstm_bwd.U"), p.bwd.U, hidden);
  f(std::string_view("lstm_bwd.b"), p.bwd.b, hidden);
  f(std::string_view("fc1.weight"), p.fc1.weight, p.fc1.weight.cols());
  f(std::string_view("fc1.bias"), p.fc1.bias, p.fc1.weight.cols());
  f(std::string_view("fc2.weight"), p.fc2.weight, p.fc2.weight.cols());
  f(std::string_view("fc2.bias"), p.fc2.bias, p.fc2.weight.cols());
  f(std::string_view("out.weight"), p.out.weight, p.out.weight.cols());
  f(std::string_view("out.bias"), p.out.bias, p.out.weight.cols());
}

}  // namespace ewer::detail
