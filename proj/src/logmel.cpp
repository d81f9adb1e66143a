#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "ewer/error.hpp"
#include "ewer/featurize.hpp"

namespace ewer {

namespace {

constexpr double kMelUpperHz = 8000.0;

// FFTW's planner is not reentrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n_, in_.get(), out_.get(), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw DataError("FFT planning failed");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }

  /// Power spectrum |X_k|^2 for k = 0..n/2 into `power`.
  template <typename Row>
  void power(Row&& power) {
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) {
      const double re = out_.get()[k][0];
      const double im = out_.get()[k][1];
      power(k) = re * re + im * im;
    }
  }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

void FeaturizerConfig::validate() const {
  if (window_samples <= 0) throw ConfigError("window_samples", "must be positive");
  if (hop_samples <= 0) throw ConfigError("hop_samples", "must be positive");
  if (n_mels <= 0) throw ConfigError("n_mels", "must be positive");
  if (!(log_floor > 0.0) || !std::isfinite(log_floor))
    throw ConfigError("log_floor", "must be a positive finite number");
  if (vocab_size <= 0) throw ConfigError("vocab_size", "must be positive");
  if (embed_dim <= 0) throw ConfigError("embed_dim", "must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(int n_mels, int window_samples, int sample_rate) {
  const int bins = window_samples / 2 + 1;
  const double upper = std::min(kMelUpperHz, sample_rate / 2.0);
  const double mel_hi = hz_to_mel(upper);

  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_hi * i / (n_mels + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / window_samples;
      if (f > lo && f <= mid) {
        fb(m, k) = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        fb(m, k) = (hi - f) / (hi - mid);
      }
    }
  }
  return fb;
}

Eigen::Index frame_count(std::size_t num_samples, int window, int hop) {
  if (num_samples < static_cast<std::size_t>(window)) return 0;
  return static_cast<Eigen::Index>((num_samples - window) / hop + 1);
}

FeatureMatrix logmel(const AudioClip& clip, const FeaturizerConfig& cfg) {
  cfg.validate();
  const int n = cfg.window_samples;
  const Eigen::Index frames = frame_count(clip.samples.size(), n, cfg.hop_samples);
  if (frames == 0) throw DataError("clip shorter than one analysis window");

  std::vector<double> hann(n);
  for (int i = 0; i < n; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);

  RealFft fft(n);
  Eigen::MatrixXd power(frames, n / 2 + 1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double* src = clip.samples.data() + t * cfg.hop_samples;
    double* dst = fft.input();
    for (int i = 0; i < n; ++i) dst[i] = src[i] * hann[i];
    fft.power(power.row(t));
  }

  const Eigen::MatrixXd fb = mel_filterbank(cfg.n_mels, n, clip.sample_rate);
  FeatureMatrix out;
  out.frames = power * fb.transpose();
  const double floor = cfg.log_floor;
  out.frames = out.frames.unaryExpr([floor](double e) { return std::log(std::max(e, floor)); });
  return out;
}

}  // namespace ewer
