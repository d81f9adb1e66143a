#include "ewer/simgen.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "ewer/error.hpp"

namespace ewer {

void SimConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size", "needs at least two words");
  if (utterances < 0) throw ConfigError("utterances", "must be non-negative");
  if (min_words < 1) throw ConfigError("min_words", "must be at least 1");
  if (max_words < min_words) throw ConfigError("max_words", "must be >= min_words");
  if (!(p_clean >= 0.0 && p_clean <= 1.0)) throw ConfigError("p_clean", "must be in [0, 1]");
  if (!(rate_min >= 0.0 && rate_min <= 1.0)) throw ConfigError("rate_min", "must be in [0, 1]");
  if (!(rate_max >= rate_min && rate_max <= 1.0)) throw ConfigError("rate_max", "must be in [rate_min, 1]");
  const auto& s = splits;
  if (s.substitution < 0.0 || s.deletion < 0.0 || s.insertion < 0.0)
    throw ConfigError("splits", "edit probabilities must be non-negative");
  if (std::abs(s.substitution + s.deletion + s.insertion - 1.0) > 1e-9)
    throw ConfigError("splits", "edit probabilities must sum to 1");
  if (!(word_seconds > 0.0)) throw ConfigError("word_seconds", "must be positive");
  if (!(tone_amplitude >= 0.0 && tone_amplitude <= 1.0))
    throw ConfigError("tone_amplitude", "must be in [0, 1]");
  if (!(noise_floor >= 0.0)) throw ConfigError("noise_floor", "must be non-negative");
  if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale", "must be non-negative");
  if (tone_amplitude + noise_floor + noise_scale > 1.0)
    throw ConfigError("noise_scale", "tone_amplitude + noise_floor + noise_scale must not exceed 1");
  if (lang.empty()) throw ConfigError("lang", "must not be empty");
  if (id_prefix.empty()) throw ConfigError("id_prefix", "must not be empty");
}

std::string sim_word(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%02d", k);
  return buf;
}

double sim_word_frequency(int k, int vocab_size) {
  constexpr double lo = 200.0, hi = 6000.0;
  return vocab_size <= 1 ? lo : lo + (hi - lo) * k / (vocab_size - 1);
}

Corruption corrupt(const std::vector<std::string>& reference, double rate, const EditSplits& splits,
                   int vocab_size, std::mt19937_64& rng) {
  std::bernoulli_distribution edit(rate);
  std::discrete_distribution<int> kind({splits.substitution, splits.deletion, splits.insertion});
  std::uniform_int_distribution<int> any_word(0, vocab_size - 1);

  Corruption out;
  for (const auto& word : reference) {
    if (!edit(rng)) {
      out.hypothesis.push_back(word);
      continue;
    }
    ++out.edits;
    switch (kind(rng)) {
      case 0: {
        std::string w;
        do {
          w = sim_word(any_word(rng));
        } while (w == word);
        out.hypothesis.push_back(std::move(w));
        break;
      }
      case 1:
        break;
      default:
        out.hypothesis.push_back(word);
        out.hypothesis.push_back(sim_word(any_word(rng)));
        break;
    }
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

SimUtterance simulate_utterance(const SimConfig& cfg, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);

  std::uniform_int_distribution<int> length(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<int> word(0, cfg.vocab_size - 1);
  const int n_words = length(rng);
  std::vector<int> ref_ids(static_cast<std::size_t>(n_words));
  std::vector<std::string> reference;
  for (auto& id : ref_ids) {
    id = word(rng);
    reference.push_back(sim_word(id));
  }

  double rate = 0.0;
  if (!std::bernoulli_distribution(cfg.p_clean)(rng)) {
    rate = std::uniform_real_distribution<double>(cfg.rate_min, cfg.rate_max)(rng);
  }
  const Corruption c = corrupt(reference, rate, cfg.splits, cfg.vocab_size, rng);

  SimUtterance out;
  out.realized_fraction = static_cast<double>(c.edits) / n_words;

  const auto per_word = static_cast<std::size_t>(std::llround(cfg.word_seconds * kTargetSampleRate));
  out.clip.sample_rate = kTargetSampleRate;
  out.clip.samples.resize(per_word * static_cast<std::size_t>(n_words));
  const double noise = cfg.noise_floor + cfg.noise_scale * out.realized_fraction;
  std::uniform_real_distribution<double> white(-1.0, 1.0);
  for (std::size_t w = 0; w < ref_ids.size(); ++w) {
    const double omega = 2.0 * std::numbers::pi * sim_word_frequency(ref_ids[w], cfg.vocab_size) / kTargetSampleRate;
    for (std::size_t k = 0; k < per_word; ++k) {
      out.clip.samples[w * per_word + k] =
          cfg.tone_amplitude * std::sin(omega * static_cast<double>(k)) + noise * white(rng);
    }
  }

  char id[64];
  std::snprintf(id, sizeof id, "%s-%06zu", cfg.id_prefix.c_str(), index);
  auto& u = out.utt;
  u.id = id;
  u.lang = cfg.lang;
  u.audio_kind = AudioKind::Wav;
  u.duration = out.clip.duration();
  u.reference = join(reference);
  u.hypothesis = join(c.hypothesis);
  u.wer = compute_wer(reference, c.hypothesis);
  return out;
}

Manifest gen_corpus(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto wav_dir = std::filesystem::absolute(out_dir) / "wav";
  std::error_code ec;
  std::filesystem::create_directories(wav_dir, ec);
  if (ec) throw DataError("cannot create " + wav_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.utterances.reserve(static_cast<std::size_t>(cfg.utterances));
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.utterances); ++i) {
    SimUtterance s = simulate_utterance(cfg, i);
    s.utt.audio = (wav_dir / (s.utt.id + ".wav")).lexically_normal();
    write_wav(s.utt.audio, s.clip);
    manifest.utterances.push_back(std::move(s.utt));
  }
  return manifest;
}

}  // namespace ewer
