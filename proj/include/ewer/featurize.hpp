#pragma once

// Acoustic frame features (log-mel), hashed lexical tokens with mean-pooled
// embeddings, WAV I/O and the EWF1/EWL1 binary feature files.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ewer {

inline constexpr int kTargetSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kTargetSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// T x D frame-level representation, one frame per row.
struct FeatureMatrix {
  Eigen::MatrixXd frames;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

using LexicalVector = Eigen::VectorXd;
using TokenIds = std::vector<std::uint32_t>;

struct FeaturizerConfig {
  int window_samples = 400;
  int hop_samples = 160;
  int n_mels = 40;
  double log_floor = 1e-10;
  int vocab_size = 4096;
  int embed_dim = 32;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

// --- audio ---------------------------------------------------------------

/// Reads 16-bit PCM WAV (mono or stereo), scales by 1/32768, downmixes,
/// and resamples to 16 kHz when needed.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono at clip.sample_rate. Samples are clamped to the
/// representable range after scaling by 32768.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Linear-interpolation resampler. Output length is round(N * target / src);
/// output k reads input position k * src / target, clamped to the last sample.
std::vector<double> resample_linear(std::span<const double> samples, int src_rate,
                                    int target_rate = kTargetSampleRate);

// --- acoustic features ----------------------------------------------------

/// Mel frequency (HTK formula).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x (window/2 + 1) triangular filter weights spanning 0..8000 Hz.
Eigen::MatrixXd mel_filterbank(int n_mels, int window_samples,
                               int sample_rate = kTargetSampleRate);

/// Number of frames for N samples: floor((N - window) / hop) + 1.
Eigen::Index frame_count(std::size_t num_samples, int window, int hop);

/// Hann window, power spectrum, mel filterbank, natural log with floor.
FeatureMatrix logmel(const AudioClip& clip, const FeaturizerConfig& cfg);

// --- lexical features -----------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes);

/// Whitespace-split words hashed with 64-bit FNV-1a, modulo vocab_size.
TokenIds lexical_tokenize(std::string_view text, const FeaturizerConfig& cfg);

/// Mean of the selected table rows; zero vector for an empty sequence.
LexicalVector lexical_embed(std::span<const std::uint32_t> ids, const Eigen::MatrixXd& table);

// --- bridged feature files ------------------------------------------------

FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const FeatureMatrix& features, const std::filesystem::path& path);

LexicalVector load_lexical(const std::filesystem::path& path);
void save_lexical(const LexicalVector& values, const std::filesystem::path& path);

/// Companion lexical file of a feature file: same stem, ".ewl" extension.
std::filesystem::path lexical_companion(const std::filesystem::path& feature_path);

}  // namespace ewer
