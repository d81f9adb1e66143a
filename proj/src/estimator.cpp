#include "ewer/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ewer/error.hpp"
#include "ewer/metrics.hpp"
#include "tensor_visit.hpp"

namespace ewer {

std::string_view to_string(LexicalSource s) {
  return s == LexicalSource::Hashed ? "hashed" : "precomputed";
}

LexicalSource parse_lexical_source(std::string_view s) {
  if (s == "hashed") return LexicalSource::Hashed;
  if (s == "precomputed") return LexicalSource::Precomputed;
  throw ConfigError("lexical_source", "expected 'hashed' or 'precomputed', got '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate", "must be a positive finite number");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout", "must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (hidden < 1) throw ConfigError("hidden", "must be at least 1");
  if (fc1 < 1) throw ConfigError("fc1", "must be at least 1");
  if (fc2 < 1) throw ConfigError("fc2", "must be at least 1");
  if (!seed) throw ConfigError("seed", "is required");
}

void check_dims(const ModelDims& expected, const ModelDims& actual) {
  const auto one = [](const char* name, int want, int got) {
    if (want != got)
      throw DataError(std::string("model dimension mismatch: ") + name + " is " + std::to_string(got) +
                      ", expected " + std::to_string(want));
  };
  one("input_dim", expected.input_dim, actual.input_dim);
  one("hidden", expected.hidden, actual.hidden);
  one("vocab_size", expected.vocab_size, actual.vocab_size);
  one("embed_dim", expected.embed_dim, actual.embed_dim);
  one("fc1", expected.fc1, actual.fc1);
  one("fc2", expected.fc2, actual.fc2);
}

EstimatorParams EstimatorParams::zeros(const ModelDims& d) {
  EstimatorParams p;
  p.embedding = Eigen::MatrixXd::Zero(d.vocab_size, d.embed_dim);
  p.fwd = nn::LstmParams::zeros(d.input_dim, d.hidden);
  p.bwd = nn::LstmParams::zeros(d.input_dim, d.hidden);
  p.fc1 = nn::DenseParams::zeros(d.fc1, 2 * d.hidden + d.embed_dim);
  p.fc2 = nn::DenseParams::zeros(d.fc2, d.fc1);
  p.out = nn::DenseParams::zeros(1, d.fc2);
  return p;
}

ModelDims EstimatorParams::dims() const {
  return {static_cast<int>(fwd.input_dim()), static_cast<int>(fwd.hidden()),
          static_cast<int>(embedding.rows()), static_cast<int>(embedding.cols()),
          static_cast<int>(fc1.weight.rows()), static_cast<int>(fc2.weight.rows())};
}

std::vector<nn::TensorView> EstimatorParams::tensors() {
  std::vector<nn::TensorView> out;
  detail::visit_tensors(*this, [&](std::string_view name, auto& t, Eigen::Index) {
    out.push_back({name, nn::as_span(t)});
  });
  return out;
}

std::vector<nn::ConstTensorView> EstimatorParams::tensors() const {
  std::vector<nn::ConstTensorView> out;
  detail::visit_tensors(*this, [&](std::string_view name, const auto& t, Eigen::Index) {
    out.push_back({name, nn::as_span(t)});
  });
  return out;
}

EstimatorParams init_params(const ModelDims& dims, nn::Rng& rng) {
  EstimatorParams p = EstimatorParams::zeros(dims);
  detail::visit_tensors(p, [&](std::string_view, auto& t, Eigen::Index fan_in) {
    const double k = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
    std::uniform_real_distribution<double> u(-k, k);
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = u(rng);
  });
  return p;
}

// --- featurization ---------------------------------------------------------

Example make_example(const Utterance& utt, const FeaturizerConfig& fcfg, LexicalSource source) {
  Example ex;
  ex.id = utt.id;
  ex.duration = utt.duration;
  ex.target = utt.wer.value_or(0.0);
  try {
    if (utt.audio_kind == AudioKind::Wav) {
      ex.features = logmel(read_wav(utt.audio), fcfg);
    } else {
      ex.features = load_features(utt.audio);
    }
    if (source == LexicalSource::Hashed) {
      ex.tokens = lexical_tokenize(utt.hypothesis, fcfg);
    } else {
      if (utt.audio_kind != AudioKind::Feat)
        throw DataError("precomputed lexical vectors need a 'feat' audio source");
      ex.lexical = load_lexical(lexical_companion(utt.audio));
    }
  } catch (const Error& e) {
    throw DataError(utt.id + ": " + e.what());
  }
  return ex;
}

Dataset prepare_dataset(const Manifest& manifest, const FeaturizerConfig& fcfg, LexicalSource source,
                        bool labeled) {
  fcfg.validate();
  if (labeled) require_labels(manifest);
  Dataset data;
  data.reserve(manifest.size());
  for (const auto& utt : manifest.utterances) data.push_back(make_example(utt, fcfg, source));
  return data;
}

// --- forward / backward ----------------------------------------------------

namespace {

nn::HeadLayers layers_of(const EstimatorParams& p) { return {p.fc1, p.fc2, p.out}; }

struct Forward {
  nn::LstmTrace fwd, bwd;
  Eigen::VectorXd a_fwd, a_bwd, lexical;
  nn::HeadCache head;
};

double run_forward(const Model& model, const Example& ex, bool training, nn::Rng& rng, Forward& f) {
  const auto& p = model.params;
  if (model.train.use_acoustic) {
    f.fwd = nn::lstm_forward(p.fwd, ex.features.frames, false);
    f.bwd = nn::lstm_forward(p.bwd, ex.features.frames, true);
    f.a_fwd = f.fwd.last();
    f.a_bwd = f.bwd.last();
  } else {
    if (ex.features.dim() != p.fwd.input_dim())
      throw DataError(ex.id + ": feature dim " + std::to_string(ex.features.dim()) +
                      " does not match model input dim " + std::to_string(p.fwd.input_dim()));
    f.a_fwd = Eigen::VectorXd::Zero(p.fwd.hidden());
    f.a_bwd = Eigen::VectorXd::Zero(p.bwd.hidden());
  }
  f.lexical = lexical_vector(model, ex);
  return nn::head_forward(f.a_fwd, f.a_bwd, f.lexical, layers_of(p), model.train.dropout, training, rng,
                          &f.head);
}

}  // namespace

LexicalVector lexical_vector(const Model& model, const Example& ex) {
  if (model.train.lexical_source == LexicalSource::Hashed) {
    return lexical_embed(ex.tokens, model.params.embedding);
  }
  if (ex.lexical.size() != model.params.embedding.cols())
    throw DataError(ex.id + ": lexical vector length " + std::to_string(ex.lexical.size()) +
                    " does not match model embed_dim " + std::to_string(model.params.embedding.cols()));
  return ex.lexical;
}

double predict(const Model& model, const Example& ex) {
  nn::Rng unused;
  Forward f;
  return run_forward(model, ex, false, unused, f);
}

double predict_one(const Model& model, const FeatureMatrix& features, std::string_view hypothesis) {
  Example ex;
  ex.features = features;
  ex.tokens = lexical_tokenize(hypothesis, model.featurizer);
  return predict(model, ex);
}

std::vector<Prediction> predict_corpus(const Model& model, const Dataset& data) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    try {
      out.push_back({ex.id, predict(model, ex), ex.duration});
    } catch (const Error& e) {
      throw DataError(ex.id + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> predict_corpus(const Model& model, const Manifest& manifest) {
  std::vector<Prediction> out;
  out.reserve(manifest.size());
  for (const auto& utt : manifest.utterances) {
    const Example ex = make_example(utt, model.featurizer, model.train.lexical_source);
    try {
      out.push_back({ex.id, predict(model, ex), ex.duration});
    } catch (const Error& e) {
      throw DataError(ex.id + ": " + e.what());
    }
  }
  return out;
}

BatchGradient backward(const Model& model, std::span<const Example* const> batch, nn::Rng& rng) {
  if (batch.empty()) throw DataError("backward: empty batch");
  const auto& p = model.params;
  BatchGradient out;
  out.grads = EstimatorParams::zeros(p.dims());
  nn::HeadGradients head{std::move(out.grads.fc1), std::move(out.grads.fc2), std::move(out.grads.out)};

  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> targets;
  Forward f;
  for (const Example* ex : batch) {
    const double pred = run_forward(model, *ex, true, rng, f);
    out.predictions.push_back(pred);
    targets.push_back(ex->target);

    const auto d = nn::head_backward(f.head, layers_of(p), scale * (pred - ex->target), head);
    if (model.train.use_acoustic) {
      nn::lstm_backward(p.fwd, ex->features.frames, f.fwd, d.a_fwd, out.grads.fwd);
      nn::lstm_backward(p.bwd, ex->features.frames, f.bwd, d.a_bwd, out.grads.bwd);
    }
    if (model.train.lexical_source == LexicalSource::Hashed && !ex->tokens.empty()) {
      const Eigen::RowVectorXd share = d.lexical.transpose() / static_cast<double>(ex->tokens.size());
      for (auto id : ex->tokens) out.grads.embedding.row(id) += share;
    }
  }
  out.grads.fc1 = std::move(head.fc1);
  out.grads.fc2 = std::move(head.fc2);
  out.grads.out = std::move(head.out);
  out.loss = nn::mse_loss(out.predictions, targets);
  return out;
}

double batch_loss(const Model& model, std::span<const Example* const> batch, nn::Rng& rng) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  std::vector<double> preds, targets;
  Forward f;
  for (const Example* ex : batch) {
    preds.push_back(run_forward(model, *ex, true, rng, f));
    targets.push_back(ex->target);
  }
  return nn::mse_loss(preds, targets);
}

// --- training --------------------------------------------------------------

namespace {

ModelDims infer_dims(const Dataset& train_set, const Dataset& dev_set, const TrainConfig& cfg,
                     const FeaturizerConfig& fcfg) {
  ModelDims d;
  d.input_dim = static_cast<int>(train_set.front().features.dim());
  d.hidden = cfg.hidden;
  d.fc1 = cfg.fc1;
  d.fc2 = cfg.fc2;
  if (cfg.lexical_source == LexicalSource::Hashed) {
    d.vocab_size = fcfg.vocab_size;
    d.embed_dim = fcfg.embed_dim;
  } else {
    d.vocab_size = 0;
    d.embed_dim = static_cast<int>(train_set.front().lexical.size());
    if (d.embed_dim == 0) throw DataError(train_set.front().id + ": empty precomputed lexical vector");
  }
  for (const auto* set : {&train_set, &dev_set}) {
    for (const auto& ex : *set) {
      if (ex.features.dim() != d.input_dim)
        throw DataError(ex.id + ": inconsistent feature dim " + std::to_string(ex.features.dim()) +
                        ", expected " + std::to_string(d.input_dim));
      if (ex.features.num_frames() < 1) throw DataError(ex.id + ": no feature frames");
      if (cfg.lexical_source == LexicalSource::Precomputed && ex.lexical.size() != d.embed_dim)
        throw DataError(ex.id + ": inconsistent lexical vector length");
    }
  }
  return d;
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& dev_set, const TrainConfig& cfg,
                  const FeaturizerConfig& fcfg, const EpochCallback& on_epoch) {
  cfg.validate();
  fcfg.validate();
  if (train_set.empty()) throw DataError("empty training set");
  const ModelDims dims = infer_dims(train_set, dev_set, cfg, fcfg);

  nn::Rng rng(*cfg.seed);
  TrainResult result;
  Model& model = result.model;
  model.train = cfg;
  model.featurizer = fcfg;
  model.params = init_params(dims, rng);

  // Frozen or unused tensors are left out of the optimizer entirely.
  const bool update_embedding = cfg.lexical_source == LexicalSource::Hashed && !cfg.freeze_lexical;
  const auto trainable = [&](std::string_view name) {
    if (name == "embedding") return update_embedding;
    if (name.starts_with("lstm_")) return cfg.use_acoustic;
    return true;
  };

  nn::AdamState adam;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Example*> batch;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&train_set[order[k]]);

      BatchGradient bg = backward(model, batch, rng);
      if (!std::isfinite(bg.loss))
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      loss_sum += bg.loss * static_cast<double>(batch.size());

      std::vector<nn::TensorView> params;
      std::vector<nn::ConstTensorView> grads;
      auto all_params = model.params.tensors();
      const auto& const_grads = bg.grads;
      auto all_grads = const_grads.tensors();
      for (std::size_t k = 0; k < all_params.size(); ++k) {
        if (!trainable(all_params[k].name)) continue;
        params.push_back(all_params[k]);
        grads.push_back(all_grads[k]);
      }
      nn::adam_step(params, grads, adam, cfg.learning_rate);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.dev_loss = std::numeric_limits<double>::quiet_NaN();
    if (!dev_set.empty()) {
      std::vector<double> preds, targets;
      for (const auto& ex : dev_set) {
        preds.push_back(predict(model, ex));
        targets.push_back(ex.target);
      }
      stats.dev_loss = nn::mse_loss(preds, targets);
      if (preds.size() >= 2) stats.dev_pcc = pcc(preds, targets);
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

TrainResult train(const Manifest& train_manifest, const Manifest& dev_manifest, const TrainConfig& cfg,
                  const FeaturizerConfig& fcfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_manifest.empty()) throw DataError("empty training set");
  const Dataset train_set = prepare_dataset(train_manifest, fcfg, cfg.lexical_source, true);
  const Dataset dev_set = prepare_dataset(dev_manifest, fcfg, cfg.lexical_source, true);
  return train(train_set, dev_set, cfg, fcfg, on_epoch);
}

}  // namespace ewer
