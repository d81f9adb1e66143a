#include "ewer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "ewer/error.hpp"
#include "ewer/estimator.hpp"

namespace ewer {

std::optional<double> pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pcc: length mismatch");
  if (x.size() < 2) throw DataError("pcc: need at least two values");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double rmse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("rmse: length mismatch");
  if (x.empty()) throw DataError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - y[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(x.size()));
}

namespace {

void check_rows(std::span<const WeightedValue> rows) {
  if (rows.empty()) throw DataError("aggregate over empty input");
  for (const auto& r : rows) {
    if (!(r.duration > 0.0)) throw DataError("aggregate: duration must be positive");
  }
}

/// Running weighted mean. Rounding can push num/den a hair outside the
/// value range, so the result is clamped to the values seen.
class WeightedMean {
 public:
  void add(const WeightedValue& r) {
    num_ += r.value * r.duration;
    den_ += r.duration;
    lo_ = std::min(lo_, r.value);
    hi_ = std::max(hi_, r.value);
  }
  double value() const { return std::clamp(num_ / den_, lo_, hi_); }

 private:
  double num_ = 0.0, den_ = 0.0;
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

// Both of these accumulate identically so the curve's last point equals the
// aggregate bit for bit.
double ewer3_aggregate(std::span<const WeightedValue> rows) {
  check_rows(rows);
  WeightedMean acc;
  for (const auto& r : rows) acc.add(r);
  return acc.value();
}

std::vector<CurvePoint> cumulative_curve(std::span<const WeightedValue> rows) {
  check_rows(rows);
  std::vector<CurvePoint> out;
  out.reserve(rows.size());
  WeightedMean acc;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    acc.add(rows[k]);
    out.push_back({k + 1, acc.value()});
  }
  return out;
}

std::vector<DensityBin> density_histogram(std::span<const double> values, int n_bins) {
  if (values.empty()) throw DataError("density_histogram: empty input");
  if (n_bins < 1) throw DataError("density_histogram: need at least one bin");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("density_histogram: value outside [0,1]");
    const auto bin = std::min(static_cast<std::size_t>(v * n_bins), counts.size() - 1);
    ++counts[bin];
  }
  std::vector<DensityBin> out(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    out[b].low = static_cast<double>(b) / n_bins;
    out[b].high = static_cast<double>(b + 1) / n_bins;
    out[b].mass = static_cast<double>(counts[b]) / static_cast<double>(values.size());
  }
  return out;
}

std::size_t peak_bin(std::span<const DensityBin> bins) {
  if (bins.empty()) throw DataError("peak_bin: empty histogram");
  return static_cast<std::size_t>(
      std::max_element(bins.begin(), bins.end(), [](const auto& a, const auto& b) { return a.mass < b.mass; }) -
      bins.begin());
}

EvalReport evaluate(std::span<const Prediction> predictions, const Manifest& labeled, int density_bins) {
  if (predictions.size() != labeled.size())
    throw DataError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labeled.size()) + " utterances");
  if (labeled.empty()) throw DataError("evaluate: empty manifest");
  require_labels(labeled);

  EvalReport rep;
  std::vector<double> oracle, predicted;
  std::vector<WeightedValue> weighted_pred, weighted_oracle;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& utt = labeled.utterances[i];
    const auto& p = predictions[i];
    if (p.id != utt.id)
      throw DataError("evaluate: prediction " + std::to_string(i + 1) + " is for '" + p.id + "', manifest has '" +
                      utt.id + "'");
    if (!(p.wer >= 0.0 && p.wer <= 1.0)) throw DataError("evaluate: prediction for " + p.id + " outside [0,1]");
    rep.rows.push_back({utt.id, utt.duration, *utt.wer, p.wer});
    oracle.push_back(*utt.wer);
    predicted.push_back(p.wer);
    weighted_pred.push_back({p.wer, utt.duration});
    weighted_oracle.push_back({*utt.wer, utt.duration});
  }
  rep.pcc = oracle.size() >= 2 ? pcc(oracle, predicted) : std::nullopt;
  rep.rmse = rmse(oracle, predicted);
  rep.ewer3_percent = 100.0 * ewer3_aggregate(weighted_pred);
  rep.oracle_wer_percent = 100.0 * ewer3_aggregate(weighted_oracle);
  rep.cumulative = cumulative_curve(weighted_pred);
  rep.density = density_histogram(predicted, density_bins);
  return rep;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out.precision(17);
    return out;
  };

  nlohmann::ordered_json summary;
  summary["count"] = report.rows.size();
  summary["pcc"] = report.pcc ? nlohmann::ordered_json(*report.pcc) : nlohmann::ordered_json(nullptr);
  summary["pcc_defined"] = report.pcc.has_value();
  summary["rmse"] = report.rmse;
  summary["ewer3_percent"] = report.ewer3_percent;
  summary["oracle_wer_percent"] = report.oracle_wer_percent;
  {
    auto out = open("summary.json");
    out << summary.dump(2) << '\n';
  }
  {
    auto out = open("scatter.csv");
    out << "id,oracle,predicted\n";
    for (const auto& r : report.rows) out << r.id << ',' << r.oracle << ',' << r.predicted << '\n';
  }
  {
    auto out = open("cumulative.csv");
    out << "k,aggregate_percent\n";
    for (const auto& p : report.cumulative) out << p.k << ',' << 100.0 * p.aggregate << '\n';
  }
  {
    auto out = open("density.csv");
    out << "bin_low,bin_high,mass\n";
    for (const auto& b : report.density) out << b.low << ',' << b.high << ',' << b.mass << '\n';
  }
}

}  // namespace ewer
