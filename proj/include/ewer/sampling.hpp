#pragma once

// Zero-WER downsampling and WER-binned train/dev splitting.

#include <cstdint>
#include <string>
#include <vector>

#include "ewer/corpus.hpp"

namespace ewer {

/// Integer WER percent, round(wer * 100).
int score_group(double wer);

struct ScoreGroup {
  int key = 0;
  std::size_t count = 0;
};

/// Groups sorted by descending count, ties broken toward the lower key.
std::vector<ScoreGroup> rank_score_groups(const std::vector<double>& wers);

struct LanguageSampling {
  std::string lang;
  std::size_t zero_count = 0;   // utterances with wer == 0
  std::size_t target = 0;       // n = count(2nd group) + count(3rd group)
  std::size_t kept_zero = 0;
  bool applied = false;         // false when group 0 is not dominant or already <= n
  bool tie_broken = false;      // a tie decided which groups ranked 2nd/3rd
};

struct DownsampleResult {
  Manifest manifest;
  std::vector<LanguageSampling> languages;  // in order of first appearance
};

/// Per language: when the 0% score group is the most frequent, keep a
/// seeded uniform sample of n zero-WER utterances, where n is the summed
/// size of the next two most frequent groups. Everything else is kept and
/// the original order is preserved.
DownsampleResult downsample_zero(const Manifest& manifest, std::uint64_t seed);

/// Bin index min(floor(wer * n_bins), n_bins - 1), left-closed intervals
/// with the last one closed. Labels within 1e-9 below a boundary count as
/// on it, so that decimal labels like 0.3 land in the bin they name.
int wer_bin(double wer, int n_bins = 10);

struct Split {
  Manifest train;
  Manifest dev;
};

/// Per bin, a seeded uniform sample of round-half-up(frac * bin size)
/// utterances goes to dev, the rest to train. Both keep manifest order.
Split binned_dev_split(const Manifest& manifest, std::uint64_t seed, int n_bins = 10, double frac = 0.1);

}  // namespace ewer
