#pragma once

// Synthetic (audio, reference, corrupted hypothesis) corpus with exact WER
// labels. Each reference word is a pure tone; additive white noise grows
// with the fraction of words the simulated recognizer corrupted.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ewer/corpus.hpp"
#include "ewer/featurize.hpp"

namespace ewer {

struct EditSplits {
  double substitution = 0.6;
  double deletion = 0.2;
  double insertion = 0.2;
};

struct SimConfig {
  int vocab_size = 64;
  int utterances = 1000;
  int min_words = 4;
  int max_words = 16;
  /// Probability of an utterance the recognizer leaves untouched.
  double p_clean = 0.6;
  /// Per-word corruption rate of the other utterances, uniform in [min, max].
  double rate_min = 0.05;
  double rate_max = 0.9;
  EditSplits splits;
  double word_seconds = 0.25;
  double tone_amplitude = 0.3;
  /// Peak amplitude of background noise present in every utterance.
  double noise_floor = 0.01;
  /// Extra noise amplitude per unit of realized corruption fraction.
  double noise_scale = 0.5;
  std::string lang = "sim";
  std::string id_prefix = "sim";
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Word string of vocabulary entry k ("w00", "w01", ...).
std::string sim_word(int k);

/// Tone frequency of vocabulary entry k; distinct per word, 200..6000 Hz.
double sim_word_frequency(int k, int vocab_size);

struct Corruption {
  std::vector<std::string> hypothesis;
  std::size_t edits = 0;  // edits applied, not the alignment cost
};

/// Applies at most one edit per reference word with probability `rate`.
/// Substitutions draw a different vocabulary word; insertions emit the word
/// followed by a random vocabulary word.
Corruption corrupt(const std::vector<std::string>& reference, double rate, const EditSplits& splits,
                   int vocab_size, std::mt19937_64& rng);

struct SimUtterance {
  Utterance utt;  // audio path left empty
  AudioClip clip;
  double realized_fraction = 0.0;
};

/// Generates utterance `index` from its own stream seeded by (seed, index).
SimUtterance simulate_utterance(const SimConfig& cfg, std::size_t index);

/// Writes `out_dir/wav/<id>.wav` for every utterance and returns the labeled
/// manifest (paths absolute). Deterministic in cfg.seed.
Manifest gen_corpus(const SimConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace ewer
