#pragma once

// Independent reference computations used only by tests. None of these call
// into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace ewer::oracle {

/// Full (|ref|+1) x (|hyp|+1) edit-distance table, clamped ratio.
inline double wer_full_dp(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  if (n == 0) return m == 0 ? 0.0 : 1.0;
  std::vector<std::vector<long>> d(n + 1, std::vector<long>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return std::min(1.0, static_cast<double>(d[n][m]) / static_cast<double>(n));
}

/// Minimum cost over every alignment, enumerated recursively (exponential).
inline long edit_cost_brute(const std::vector<std::string>& ref, std::size_t i,
                            const std::vector<std::string>& hyp, std::size_t j) {
  if (i == ref.size()) return static_cast<long>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<long>(ref.size() - i);
  const long match = (ref[i] == hyp[j] ? 0 : 1) + edit_cost_brute(ref, i + 1, hyp, j + 1);
  const long del = 1 + edit_cost_brute(ref, i + 1, hyp, j);
  const long ins = 1 + edit_cost_brute(ref, i, hyp, j + 1);
  return std::min({match, del, ins});
}

/// Power spectrum |X_k|^2, k = 0..n/2, by the direct DFT sum.
inline std::vector<double> dft_power(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * t % n) / n;
      re += x[t] * std::cos(ang);
      im += x[t] * std::sin(ang);
    }
    out[k] = static_cast<double>(re * re + im * im);
  }
  return out;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Scalar LSTM over `frames` (row-major T x D), gate order i, f, g, o with
/// W as 4H x D row-major, U as 4H x H row-major.
inline std::vector<double> lstm_scalar(const std::vector<std::vector<double>>& frames,
                                       const std::vector<std::vector<double>>& W,
                                       const std::vector<std::vector<double>>& U, const std::vector<double>& b,
                                       std::size_t H, bool reverse) {
  std::vector<double> h(H, 0.0), c(H, 0.0);
  const std::size_t T = frames.size();
  for (std::size_t s = 0; s < T; ++s) {
    const auto& x = frames[reverse ? T - 1 - s : s];
    std::vector<double> a(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double acc = b[r];
      for (std::size_t d = 0; d < x.size(); ++d) acc += W[r][d] * x[d];
      for (std::size_t k = 0; k < H; ++k) acc += U[r][k] * h[k];
      a[r] = acc;
    }
    for (std::size_t k = 0; k < H; ++k) {
      const double i = sigmoid(a[k]);
      const double f = sigmoid(a[H + k]);
      const double g = std::tanh(a[2 * H + k]);
      const double o = sigmoid(a[3 * H + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
  return h;
}

/// Two-pass Pearson correlation in extended precision.
inline long double pcc_reference(std::span<const double> x, std::span<const double> y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline long double rmse_reference(std::span<const double> x, std::span<const double> y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double e = static_cast<long double>(x[i]) - y[i];
    s += e * e;
  }
  return std::sqrt(s / x.size());
}

inline long double weighted_mean_reference(std::span<const double> values, std::span<const double> durations) {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += static_cast<long double>(values[i]) * durations[i];
    den += durations[i];
  }
  return num / den;
}

}  // namespace ewer::oracle
