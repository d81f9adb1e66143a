#include <algorithm>
#include <cmath>

#include "ewer/estimator.hpp"

namespace ewer {

GradCheckResult gradient_check(std::uint64_t seed, double eps) {
  const ModelDims dims{3, 4, 6, 2, 5, 3};
  nn::Rng rng(seed);

  Model model;
  model.train.hidden = dims.hidden;
  model.train.fc1 = dims.fc1;
  model.train.fc2 = dims.fc2;
  model.train.dropout = 0.1;
  model.train.seed = seed;
  model.featurizer.vocab_size = dims.vocab_size;
  model.featurizer.embed_dim = dims.embed_dim;
  model.params = init_params(dims, rng);

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> frames(1, 5);
  std::uniform_int_distribution<std::uint32_t> token(0, dims.vocab_size - 1);
  Dataset data(3);
  for (auto& ex : data) {
    ex.features.frames = Eigen::MatrixXd::NullaryExpr(frames(rng), dims.input_dim, [&] { return unit(rng); });
    ex.tokens.resize(static_cast<std::size_t>(frames(rng)));
    for (auto& id : ex.tokens) id = token(rng);
    ex.target = 0.5 * (unit(rng) + 1.0);
  }
  std::vector<const Example*> batch;
  for (const auto& ex : data) batch.push_back(&ex);

  const std::uint64_t mask_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  nn::Rng mask_rng(mask_seed);
  const BatchGradient analytic = backward(model, batch, mask_rng);
  const auto grads = analytic.grads.tensors();

  GradCheckResult result;
  auto params = model.params.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t j = 0; j < params[k].values.size(); ++j) {
      double& w = params[k].values[j];
      const double saved = w;
      w = saved + eps;
      nn::Rng plus_rng(mask_seed);
      const double plus = batch_loss(model, batch, plus_rng);
      w = saved - eps;
      nn::Rng minus_rng(mask_seed);
      const double minus = batch_loss(model, batch, minus_rng);
      w = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = grads[k].values[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++result.checked;
      if (rel > result.max_rel_error || result.worst_tensor.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.worst_tensor = std::string(params[k].name);
      }
    }
  }
  return result;
}

}  // namespace ewer
