#include <cmath>
#include <string>

#include "ewer/error.hpp"
#include "ewer/nn.hpp"

namespace ewer::nn {

void adam_step(std::span<const TensorView> params, std::span<const ConstTensorView> grads,
               AdamState& state, double learning_rate) {
  if (params.size() != grads.size()) throw DataError("adam_step: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].values.size() != grads[k].values.size())
      throw DataError("adam_step: shape mismatch for " + std::string(params[k].name));
    for (double g : grads[k].values) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + std::string(grads[k].name));
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.values.size())));
      state.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.values.size())));
    }
  } else if (state.m.size() != params.size()) {
    throw DataError("adam_step: optimizer state does not match parameter list");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto g = grads[k].values;
    const auto p = params[k].values;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      m(jj) = state.beta1 * m(jj) + (1.0 - state.beta1) * g[j];
      v(jj) = state.beta2 * v(jj) + (1.0 - state.beta2) * g[j] * g[j];
      p[j] -= learning_rate * (m(jj) / c1) / (std::sqrt(v(jj) / c2) + state.eps);
    }
  }
}

}  // namespace ewer::nn
