#include "ewer/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ewer/metrics.hpp"
#include "ewer/sampling.hpp"
#include "ewer/simgen.hpp"

namespace ewer::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSubcommands = {"gen",   "label",   "sample",   "split",
                                               "train", "predict", "evaluate", "gradcheck"};

std::string show(const std::string& s) { return s; }
std::string show(bool b) { return b ? "true" : "false"; }
std::string show(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
template <class T>
  requires std::is_integral_v<T>
std::string show(T v) {
  return std::to_string(v);
}

std::string quoted(const std::string& v) {
  const bool plain = !v.empty() && v.find_first_of(" \t\"=\\\n") == std::string::npos;
  if (plain) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

/// One log line, emitted when the object goes out of scope.
class Event {
 public:
  Event(std::ostream& os, std::string_view name) : os_(os) { line_ << "event=" << name; }
  Event(const Event&) = delete;
  Event& operator=(const Event&) = delete;
  ~Event() { os_ << line_.str() << std::endl; }

  template <class T>
  Event& operator()(std::string_view key, const T& value) {
    line_ << ' ' << key << '=' << quoted(show(value));
    return *this;
  }

 private:
  std::ostream& os_;
  std::ostringstream line_;
};

struct RunConfig {
  std::string manifest, out, model, dev, predictions, config;
  std::uint64_t seed = 0;
  FeaturizerConfig featurizer;
  TrainConfig train;
  std::string lexical_source = "hashed";
  SimConfig sim;
  double max_duration = 10.0;
  int bins = 10;
  double dev_frac = 0.1;
  int density_bins = 50;
  double eps = 1e-5;
  int seeds = 10;
  double tolerance = 1e-4;
};

/// A subcommand's parser plus a printer for every key it accepts.
class Options {
 public:
  Options(const std::string& sub, RunConfig& c) : app_("ewer3 " + sub) {
    app_.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app_.add_option("--config", c.config, "key = value configuration file");
    if (sub == "gen") {
      path("out", c.out, "output directory (manifest.jsonl and wav/)", true);
      seed(c, true);
      add_sim(c.sim);
    } else if (sub == "label") {
      path("manifest", c.manifest, "input manifest", true);
      path("out", c.out, "labeled manifest", true);
    } else if (sub == "sample") {
      path("manifest", c.manifest, "labeled manifest", true);
      path("out", c.out, "sampled manifest", true);
      seed(c, true);
      add("max_duration", c.max_duration, "keep utterances at most this many seconds");
    } else if (sub == "split") {
      path("manifest", c.manifest, "labeled manifest", true);
      path("out", c.out, "train manifest", true);
      path("dev", c.dev, "dev manifest", true);
      seed(c, true);
      add("bins", c.bins, "number of WER bins");
      add("dev_frac", c.dev_frac, "fraction of each bin sent to dev");
    } else if (sub == "train") {
      path("manifest", c.manifest, "labeled train manifest", true);
      path("dev", c.dev, "labeled dev manifest", false);
      path("out", c.out, "model file", true);
      seed(c, true);
      add_train(c);
    } else if (sub == "predict") {
      path("model", c.model, "model file", true);
      path("manifest", c.manifest, "manifest to score", true);
      path("out", c.out, "predictions JSONL", true);
    } else if (sub == "evaluate") {
      path("predictions", c.predictions, "predictions JSONL", true);
      path("manifest", c.manifest, "labeled manifest", true);
      path("out", c.out, "report directory", true);
      add("density_bins", c.density_bins, "prediction histogram bins");
    } else if (sub == "gradcheck") {
      seed(c, true);
      add("seeds", c.seeds, "number of consecutive seeds");
      add("eps", c.eps, "finite-difference step");
      add("tolerance", c.tolerance, "maximum relative error");
    }
  }

  CLI::App& app() { return app_; }
  bool has(const std::string& key) const { return keys_.count(key) > 0; }
  const std::set<std::string>& keys() const { return keys_; }
  const CLI::Option* seed_option() const { return seed_; }

  void log_config(std::ostream& os, const std::string& sub) const {
    Event ev(os, "config");
    ev("subcommand", sub);
    for (const auto& [key, print] : shown_) ev(key, print());
  }

 private:
  template <class T>
  CLI::Option* add(const std::string& key, T& target, const std::string& help) {
    keys_.insert(key);
    shown_.emplace_back(key, [&target] { return show(target); });
    return app_.add_option("--" + key, target, help);
  }

  void path(const std::string& key, std::string& target, const std::string& help, bool required) {
    auto* opt = add(key, target, help);
    if (required) opt->required();
  }

  void seed(RunConfig& c, bool required) {
    seed_ = add("seed", c.seed, "random seed");
    if (required) seed_->required();
  }

  void add_sim(SimConfig& s) {
    add("utterances", s.utterances, "number of utterances");
    add("sim_vocab", s.vocab_size, "synthetic vocabulary size");
    add("min_words", s.min_words, "shortest reference");
    add("max_words", s.max_words, "longest reference");
    add("p_clean", s.p_clean, "probability of an uncorrupted utterance");
    add("rate_min", s.rate_min, "lowest per-word corruption rate");
    add("rate_max", s.rate_max, "highest per-word corruption rate");
    add("p_substitution", s.splits.substitution, "share of substitution edits");
    add("p_deletion", s.splits.deletion, "share of deletion edits");
    add("p_insertion", s.splits.insertion, "share of insertion edits");
    add("word_seconds", s.word_seconds, "tone length per word");
    add("tone_amplitude", s.tone_amplitude, "tone peak amplitude");
    add("noise_floor", s.noise_floor, "noise amplitude of every utterance");
    add("noise_scale", s.noise_scale, "noise amplitude per unit corruption");
    add("lang", s.lang, "language tag");
    add("id_prefix", s.id_prefix, "utterance id prefix");
  }

  void add_train(RunConfig& c) {
    auto& f = c.featurizer;
    add("window_samples", f.window_samples, "analysis window");
    add("hop_samples", f.hop_samples, "frame hop");
    add("n_mels", f.n_mels, "mel filters");
    add("log_floor", f.log_floor, "log energy floor");
    add("vocab_size", f.vocab_size, "hashed token buckets");
    add("embed_dim", f.embed_dim, "token embedding width");
    auto& t = c.train;
    add("epochs", t.epochs, "training epochs");
    add("learning_rate", t.learning_rate, "Adam step size");
    add("dropout", t.dropout, "dropout rate");
    add("batch_size", t.batch_size, "minibatch size");
    add("hidden", t.hidden, "LSTM units per direction");
    add("fc1", t.fc1, "first dense layer width");
    add("fc2", t.fc2, "second dense layer width");
    add("freeze_lexical", t.freeze_lexical, "keep the embedding table fixed");
    add("use_acoustic", t.use_acoustic, "false zeroes the acoustic branch");
    add("lexical_source", c.lexical_source, "hashed or precomputed");
  }

  CLI::App app_;
  std::set<std::string> keys_;
  std::vector<std::pair<std::string, std::function<std::string()>>> shown_;
  CLI::Option* seed_ = nullptr;
};

std::set<std::string> all_keys() {
  std::set<std::string> keys;
  for (const auto& sub : kSubcommands) {
    RunConfig scratch;
    Options o(sub, scratch);
    keys.insert(o.keys().begin(), o.keys().end());
  }
  return keys;
}

std::string usage() {
  std::string s = "usage: ewer3 <subcommand> [--config FILE] [--key value ...]\nsubcommands:";
  for (const auto& sub : kSubcommands) s += " " + sub;
  return s + "\nrun 'ewer3 <subcommand> --help' for its keys";
}

/// Config file entries become leading `--key value` pairs so the command
/// line, parsed later, wins. Keys meant for other subcommands are skipped,
/// so one file can drive a whole recipe.
std::vector<std::string> expand_config(std::span<const std::string> args, const Options& opts, std::ostream& log) {
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  std::vector<std::string> out;
  if (!config.empty()) {
    const auto known = all_keys();
    for (const auto& e : read_config_file(config)) {
      if (opts.has(e.key)) {
        out.push_back("--" + e.key);
        out.push_back(e.value);
      } else if (known.count(e.key)) {
        Event(log, "config_skip")("key", e.key)("line", e.line);
      } else {
        throw UsageError(config + ":" + std::to_string(e.line) + ": unknown config key '" + e.key + "'");
      }
    }
  }
  out.insert(out.end(), args.begin(), args.end());
  return out;
}

void ensure_parent(const fs::path& file) {
  const auto parent = file.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void check_split_keys(const RunConfig& c) {
  if (c.bins < 1) throw ConfigError("bins", "must be at least 1");
  if (!(c.dev_frac >= 0.0 && c.dev_frac <= 1.0)) throw ConfigError("dev_frac", "must be in [0, 1]");
}

int cmd_gen(const RunConfig& c, std::ostream& log) {
  SimConfig sim = c.sim;
  sim.seed = c.seed;
  sim.validate();
  const Manifest m = gen_corpus(sim, c.out);
  const fs::path manifest = fs::path(c.out) / "manifest.jsonl";
  save_manifest(m, manifest);
  std::size_t zero = 0;
  for (const auto& u : m.utterances) zero += *u.wer == 0.0;
  Event(log, "gen")("utterances", m.size())("zero_wer", zero)("manifest", manifest.string());
  return kOk;
}

int cmd_label(const RunConfig& c, std::ostream& log) {
  const Manifest m = label_corpus(load_manifest(c.manifest));
  ensure_parent(c.out);
  save_manifest(m, c.out);
  Event(log, "label")("utterances", m.size())("out", c.out);
  return kOk;
}

int cmd_sample(const RunConfig& c, std::ostream& log) {
  if (!(c.max_duration > 0.0)) throw ConfigError("max_duration", "must be positive");
  const Manifest in = load_manifest(c.manifest);
  const Manifest short_enough = filter_duration(in, c.max_duration);
  Event(log, "filter_duration")("kept", short_enough.size())("dropped", in.size() - short_enough.size());
  const DownsampleResult r = downsample_zero(short_enough, c.seed);
  for (const auto& l : r.languages) {
    Event(log, "downsample")("lang", l.lang)("zero_count", l.zero_count)("target", l.target)(
        "kept_zero", l.kept_zero)("applied", l.applied);
    if (l.tie_broken) {
      Event(log, "downsample_tie")("lang", l.lang)(
          "note", std::string("equal score-group counts ranked toward the lower WER key"));
    }
  }
  ensure_parent(c.out);
  save_manifest(r.manifest, c.out);
  Event(log, "sample")("utterances", r.manifest.size())("out", c.out);
  return kOk;
}

int cmd_split(const RunConfig& c, std::ostream& log) {
  check_split_keys(c);
  const Split s = binned_dev_split(load_manifest(c.manifest), c.seed, c.bins, c.dev_frac);
  ensure_parent(c.out);
  ensure_parent(c.dev);
  save_manifest(s.train, c.out);
  save_manifest(s.dev, c.dev);
  Event(log, "split")("train", s.train.size())("dev", s.dev.size());
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& log) {
  const Manifest train_m = load_manifest(c.manifest);
  const Manifest dev_m = c.dev.empty() ? Manifest{} : load_manifest(c.dev);
  const auto start = std::chrono::steady_clock::now();
  const auto on_epoch = [&](const EpochStats& s) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Event ev(log, "epoch");
    ev("epoch", s.epoch)("train_loss", s.train_loss);
    if (!std::isnan(s.dev_loss)) ev("dev_loss", s.dev_loss);
    if (s.dev_pcc) ev("dev_pcc", *s.dev_pcc);
    ev("elapsed_s", secs);
  };
  const TrainResult r = train(train_m, dev_m, c.train, c.featurizer, on_epoch);
  ensure_parent(c.out);
  save_model(r.model, c.out);
  Event(log, "train")("train", train_m.size())("dev", dev_m.size())("model", c.out);
  return kOk;
}

int cmd_predict(const RunConfig& c, std::ostream& log) {
  const Model model = load_model(c.model);
  {
    Event ev(log, "model");
    const auto d = model.params.dims();
    ev("input_dim", d.input_dim)("hidden", d.hidden)("vocab_size", d.vocab_size)("embed_dim", d.embed_dim)(
        "fc1", d.fc1)("fc2", d.fc2)("lexical_source", std::string(to_string(model.train.lexical_source)));
  }
  const auto preds = predict_corpus(model, load_manifest(c.manifest));
  ensure_parent(c.out);
  save_predictions(preds, c.out);
  Event(log, "predict")("utterances", preds.size())("out", c.out);
  return kOk;
}

int cmd_evaluate(const RunConfig& c, std::ostream& log) {
  if (c.density_bins < 1) throw ConfigError("density_bins", "must be at least 1");
  const auto preds = load_predictions(c.predictions);
  const Manifest labeled = load_manifest(c.manifest);
  require_labels(labeled);
  const EvalReport report = evaluate(preds, labeled, c.density_bins);
  fs::create_directories(c.out);
  write_report(report, c.out);
  Event ev(log, "evaluate");
  ev("count", report.rows.size());
  if (report.pcc) ev("pcc", *report.pcc);
  else ev("pcc", std::string("undefined"));
  ev("rmse", report.rmse)("ewer3_percent", report.ewer3_percent)("oracle_wer_percent", report.oracle_wer_percent);
  return kOk;
}

int cmd_gradcheck(const RunConfig& c, std::ostream& log) {
  if (c.seeds < 1) throw ConfigError("seeds", "must be at least 1");
  if (!(c.eps > 0.0)) throw ConfigError("eps", "must be positive");
  if (!(c.tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
  double worst = 0.0;
  for (int i = 0; i < c.seeds; ++i) {
    const auto s = c.seed + static_cast<std::uint64_t>(i);
    const GradCheckResult r = gradient_check(s, c.eps);
    Event(log, "gradcheck")("seed", s)("checked", r.checked)("max_rel_error", r.max_rel_error)(
        "worst_tensor", r.worst_tensor);
    worst = std::max(worst, r.max_rel_error);
  }
  if (!(worst < c.tolerance)) {
    Event(log, "error")("kind", std::string("numeric"))("message", "gradient check failed: " + show(worst));
    return kNumeric;
  }
  return kOk;
}

int dispatch(const std::string& sub, const RunConfig& c, std::ostream& log) {
  if (sub == "gen") return cmd_gen(c, log);
  if (sub == "label") return cmd_label(c, log);
  if (sub == "sample") return cmd_sample(c, log);
  if (sub == "split") return cmd_split(c, log);
  if (sub == "train") return cmd_train(c, log);
  if (sub == "predict") return cmd_predict(c, log);
  if (sub == "evaluate") return cmd_evaluate(c, log);
  return cmd_gradcheck(c, log);
}

int fail(std::ostream& log, int code, std::string_view kind, const std::string& message,
         const std::string& key = {}) {
  Event ev(log, "error");
  ev("kind", std::string(kind));
  if (!key.empty()) ev("key", key);
  ev("message", message)("exit", code);
  return code;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& log) {
  if (args.empty()) {
    log << usage() << '\n';
    return kUsage;
  }
  const std::string& sub = args[0];
  if (sub == "--help" || sub == "-h" || sub == "help") {
    log << usage() << '\n';
    return kOk;
  }
  if (std::find(kSubcommands.begin(), kSubcommands.end(), sub) == kSubcommands.end())
    return fail(log, kUsage, "usage", "unknown subcommand '" + sub + "'\n" + usage());

  RunConfig cfg;
  Options opts(sub, cfg);
  try {
    auto argv = expand_config(args.subspan(1), opts, log);
    std::reverse(argv.begin(), argv.end());
    opts.app().parse(argv);

    cfg.train.seed = cfg.seed;
    cfg.train.lexical_source = parse_lexical_source(cfg.lexical_source);
    if (sub == "train") {
      cfg.featurizer.validate();
      cfg.train.validate();
    }
    opts.log_config(log, sub);
    return dispatch(sub, cfg, log);
  } catch (const CLI::CallForHelp&) {
    log << opts.app().help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(log, kUsage, "usage", e.what());
  } catch (const UsageError& e) {
    return fail(log, kUsage, "usage", e.what());
  } catch (const ConfigError& e) {
    return fail(log, kUsage, "config", e.what(), e.key());
  } catch (const NumericError& e) {
    return fail(log, kNumeric, "numeric", e.what());
  } catch (const DataError& e) {
    return fail(log, kData, "data", e.what());
  } catch (const std::exception& e) {
    return fail(log, kData, "data", e.what());
  }
}

}  // namespace ewer::cli
