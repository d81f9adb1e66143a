#pragma once

// Corpus data model: utterance records, JSONL manifests, exact WER labels.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ewer {

enum class AudioKind { Wav, Feat };

struct Utterance {
  std::string id;
  std::string lang;
  AudioKind audio_kind = AudioKind::Wav;
  /// Absolute, lexically normalized once loaded from a manifest.
  std::filesystem::path audio;
  double duration = 0.0;
  std::string hypothesis;
  std::optional<std::string> reference;
  /// Fraction in [0, 1].
  std::optional<double> wer;
};

struct Manifest {
  std::vector<Utterance> utterances;

  std::size_t size() const noexcept { return utterances.size(); }
  bool empty() const noexcept { return utterances.empty(); }
};

/// Whitespace tokenization, no normalization.
std::vector<std::string> tokenize(std::string_view text);

/// Word error rate min(1, levenshtein(ref, hyp) / |ref|).
/// An empty reference gives 0 for an empty hypothesis and 1 otherwise.
double compute_wer(std::span<const std::string> reference,
                   std::span<const std::string> hypothesis);

double compute_wer(std::string_view reference, std::string_view hypothesis);

/// Checks every Utterance and Manifest invariant; throws DataError.
void validate(const Utterance& utt);
void validate(const Manifest& manifest);

/// Reads a JSONL manifest. Relative audio paths resolve against the
/// manifest's directory. Throws DataError naming the offending line.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes a JSONL manifest. Audio paths are written relative to the
/// manifest's directory so a corpus tree can be relocated as a whole.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Sets every utterance's wer from its reference and hypothesis.
Manifest label_corpus(const Manifest& manifest);

/// Keeps utterances with duration <= max_seconds, order preserved.
Manifest filter_duration(const Manifest& manifest, double max_seconds = 10.0);

/// Throws DataError naming the first utterance without a wer label.
void require_labels(const Manifest& manifest);

}  // namespace ewer
