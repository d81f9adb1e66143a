#pragma once

// End-to-end WER estimator: acoustic frames -> BiLSTM last states, hypothesis
// -> mean-pooled embeddings, concatenation -> two ReLU layers -> sigmoid.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ewer/corpus.hpp"
#include "ewer/featurize.hpp"
#include "ewer/nn.hpp"

namespace ewer {

enum class LexicalSource {
  /// Hashed tokens averaged over a trainable embedding table.
  Hashed,
  /// Sentence vectors read from the ".ewl" companion of each feature file.
  Precomputed,
};

std::string_view to_string(LexicalSource s);
LexicalSource parse_lexical_source(std::string_view s);

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 1e-3;
  double dropout = 0.1;
  int batch_size = 16;
  int hidden = 64;
  int fc1 = 64;
  int fc2 = 32;
  std::optional<std::uint64_t> seed;
  bool freeze_lexical = false;
  /// false zeroes the acoustic branch (lexical-only ablation).
  bool use_acoustic = true;
  LexicalSource lexical_source = LexicalSource::Hashed;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct ModelDims {
  int input_dim = 0;   // D, acoustic feature width
  int hidden = 0;      // H per direction
  int vocab_size = 0;  // V, 0 with precomputed lexical vectors
  int embed_dim = 0;   // D_L
  int fc1 = 0;
  int fc2 = 0;

  bool operator==(const ModelDims&) const = default;
};

/// Throws DataError naming the first field where `actual` differs.
void check_dims(const ModelDims& expected, const ModelDims& actual);

struct EstimatorParams {
  Eigen::MatrixXd embedding;  // V x D_L
  nn::LstmParams fwd, bwd;
  nn::DenseParams fc1, fc2, out;

  static EstimatorParams zeros(const ModelDims& dims);
  ModelDims dims() const;

  /// Every tensor in serialization order: embedding; forward LSTM W, U, b;
  /// backward LSTM W, U, b; fc1 weight, bias; fc2 weight, bias; out weight, bias.
  std::vector<nn::TensorView> tensors();
  std::vector<nn::ConstTensorView> tensors() const;
};

/// Uniform(-k, k) initialization from `rng`, k = 1/sqrt(fan_in), visiting
/// tensors in serialization order and each tensor in column-major order.
/// fan_in: embedding D_L; LSTM W input dim; LSTM U and b hidden size;
/// dense weight and bias the layer's input width.
EstimatorParams init_params(const ModelDims& dims, nn::Rng& rng);

/// A trained or in-training estimator with the configuration it needs to
/// featurize and predict.
struct Model {
  EstimatorParams params;
  TrainConfig train;
  FeaturizerConfig featurizer;
};

/// One featurized utterance.
struct Example {
  std::string id;
  double duration = 0.0;
  FeatureMatrix features;
  TokenIds tokens;        // hashed lexical source
  LexicalVector lexical;  // precomputed lexical source
  double target = 0.0;    // wer label, 0 when unlabeled
};

using Dataset = std::vector<Example>;

/// Featurizes one utterance. WAV audio goes through log-mel; feature files
/// load as-is. Errors are rethrown as DataError prefixed with the id.
Example make_example(const Utterance& utt, const FeaturizerConfig& fcfg, LexicalSource source);

/// Featurizes a manifest. With `labeled`, every utterance needs a wer.
Dataset prepare_dataset(const Manifest& manifest, const FeaturizerConfig& fcfg,
                        LexicalSource source, bool labeled);

/// Lexical vector of an example under the model's lexical source.
LexicalVector lexical_vector(const Model& model, const Example& ex);

/// Inference-mode prediction in (0, 1).
double predict(const Model& model, const Example& ex);

/// Featurized input and raw hypothesis text (hashed lexical source only).
double predict_one(const Model& model, const FeatureMatrix& features, std::string_view hypothesis);

struct Prediction {
  std::string id;
  double wer = 0.0;
  double duration = 0.0;
};

std::vector<Prediction> predict_corpus(const Model& model, const Dataset& data);
std::vector<Prediction> predict_corpus(const Model& model, const Manifest& manifest);

struct BatchGradient {
  double loss = 0.0;
  EstimatorParams grads;
  std::vector<double> predictions;
};

/// Mean-squared-error loss of the batch in training mode and its analytic
/// gradient for every tensor. Dropout masks are drawn from `rng` in batch
/// order. Embedding rows receive gradient only for tokens in the batch.
BatchGradient backward(const Model& model, std::span<const Example* const> batch, nn::Rng& rng);

/// Same forward pass as `backward` (same rng consumption), loss only.
double batch_loss(const Model& model, std::span<const Example* const> batch, nn::Rng& rng);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;  // NaN without a dev set
  std::optional<double> dev_pcc;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainResult {
  Model model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Seeded initialization, then per epoch: seeded shuffle, minibatch
/// backward + Adam, dev evaluation. Returns the final-epoch model.
TrainResult train(const Dataset& train_set, const Dataset& dev_set, const TrainConfig& cfg,
                  const FeaturizerConfig& fcfg, const EpochCallback& on_epoch = {});

TrainResult train(const Manifest& train_manifest, const Manifest& dev_manifest,
                  const TrainConfig& cfg, const FeaturizerConfig& fcfg,
                  const EpochCallback& on_epoch = {});

// --- persistence ----------------------------------------------------------

/// EWM1 model file: "EWM1", u32 version (1), u32 header length, UTF-8 JSON
/// header (dims, training and featurizer configuration, tensor shapes), then
/// every tensor in serialization order as little-endian float64, each
/// tensor column-major.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path, const ModelDims& expected);

// --- verification ---------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Central finite differences against `backward` on a tiny random model
/// (D=3, H=4, D_L=2, fc 5->3) with dropout, for one seed. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(std::uint64_t seed, double eps = 1e-5);

}  // namespace ewer
