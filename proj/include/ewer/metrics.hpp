#pragma once

// Evaluation measures and report series. Every reduction sums in input order.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ewer/corpus.hpp"

namespace ewer {

struct Prediction;

/// Sample Pearson correlation, two-pass. Returns std::nullopt when either
/// input has zero variance. Throws DataError on mismatched lengths or
/// fewer than two values.
std::optional<double> pcc(std::span<const double> x, std::span<const double> y);

/// Root mean squared difference. Throws DataError on empty or mismatched input.
double rmse(std::span<const double> x, std::span<const double> y);

struct WeightedValue {
  double value = 0.0;
  double duration = 0.0;
};

/// Duration-weighted mean: sum(value * duration) / sum(duration).
double ewer3_aggregate(std::span<const WeightedValue> rows);

struct CurvePoint {
  std::size_t k = 0;         // number of rows aggregated, 1-based
  double aggregate = 0.0;    // fraction
};

/// Point k is ewer3_aggregate over the first k rows.
std::vector<CurvePoint> cumulative_curve(std::span<const WeightedValue> rows);

struct DensityBin {
  double low = 0.0;
  double high = 0.0;
  double mass = 0.0;
};

/// Equal-width histogram over [0, 1] (last bin closed), masses summing to 1.
std::vector<DensityBin> density_histogram(std::span<const double> values, int n_bins = 50);

/// Index of the bin with the largest mass (lowest index on ties).
std::size_t peak_bin(std::span<const DensityBin> bins);

struct EvalRow {
  std::string id;
  double duration = 0.0;
  double oracle = 0.0;
  double predicted = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::optional<double> pcc;
  double rmse = 0.0;
  double ewer3_percent = 0.0;
  double oracle_wer_percent = 0.0;
  std::vector<CurvePoint> cumulative;  // over predictions
  std::vector<DensityBin> density;     // of predictions
};

/// Joins predictions with the labeled manifest (same ids, same order) and
/// computes every metric and series. Throws DataError on id mismatch.
EvalReport evaluate(std::span<const Prediction> predictions, const Manifest& labeled, int density_bins = 50);

/// Writes summary.json, scatter.csv, cumulative.csv and density.csv into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace ewer
