#include "ewer/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <random>

#include "ewer/error.hpp"

namespace ewer {

int score_group(double wer) { return static_cast<int>(std::lround(wer * 100.0)); }

std::vector<ScoreGroup> rank_score_groups(const std::vector<double>& wers) {
  std::map<int, std::size_t> counts;
  for (double w : wers) ++counts[score_group(w)];
  std::vector<ScoreGroup> groups;
  for (const auto& [key, count] : counts) groups.push_back({key, count});
  // Stable on ascending keys, so equal counts keep the lower key first.
  std::stable_sort(groups.begin(), groups.end(),
                   [](const ScoreGroup& a, const ScoreGroup& b) { return a.count > b.count; });
  return groups;
}

DownsampleResult downsample_zero(const Manifest& manifest, std::uint64_t seed) {
  require_labels(manifest);

  std::vector<std::string> langs;
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& lang = manifest.utterances[i].lang;
    auto [it, inserted] = by_lang.try_emplace(lang);
    if (inserted) langs.push_back(lang);
    it->second.push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> keep(manifest.size(), true);
  DownsampleResult result;
  for (const auto& lang : langs) {
    const auto& idx = by_lang[lang];
    std::vector<double> wers;
    std::vector<std::size_t> zeros;
    for (auto i : idx) {
      const double w = *manifest.utterances[i].wer;
      wers.push_back(w);
      if (w == 0.0) zeros.push_back(i);
    }
    const auto groups = rank_score_groups(wers);

    LanguageSampling info;
    info.lang = lang;
    info.zero_count = zeros.size();
    info.kept_zero = zeros.size();
    if (!groups.empty() && groups.front().key == 0) {
      info.target = (groups.size() > 1 ? groups[1].count : 0) + (groups.size() > 2 ? groups[2].count : 0);
      info.tie_broken = (groups.size() > 1 && groups[0].count == groups[1].count) ||
                        (groups.size() > 3 && groups[2].count == groups[3].count);
      if (zeros.size() > info.target) {
        std::vector<std::size_t> chosen;
        std::sample(zeros.begin(), zeros.end(), std::back_inserter(chosen), info.target, rng);
        for (auto i : zeros) keep[i] = false;
        for (auto i : chosen) keep[i] = true;
        info.kept_zero = chosen.size();
        info.applied = true;
      }
    }
    result.languages.push_back(info);
  }

  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (keep[i]) result.manifest.utterances.push_back(manifest.utterances[i]);
  }
  return result;
}

int wer_bin(double wer, int n_bins) {
  const auto bin = static_cast<int>(std::floor(wer * n_bins + 1e-9));
  return std::clamp(bin, 0, n_bins - 1);
}

Split binned_dev_split(const Manifest& manifest, std::uint64_t seed, int n_bins, double frac) {
  if (n_bins < 1) throw ConfigError("bins", "must be at least 1");
  if (!(frac >= 0.0 && frac <= 1.0)) throw ConfigError("frac", "must be in [0, 1]");
  require_labels(manifest);

  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(n_bins));
  for (std::size_t i = 0; i < manifest.size(); ++i)
    bins[static_cast<std::size_t>(wer_bin(*manifest.utterances[i].wer, n_bins))].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<bool> to_dev(manifest.size(), false);
  for (const auto& members : bins) {
    const auto take = static_cast<std::size_t>(std::floor(frac * static_cast<double>(members.size()) + 0.5));
    std::vector<std::size_t> chosen;
    std::sample(members.begin(), members.end(), std::back_inserter(chosen), take, rng);
    for (auto i : chosen) to_dev[i] = true;
  }

  Split split;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    (to_dev[i] ? split.dev : split.train).utterances.push_back(manifest.utterances[i]);
  return split;
}

}  // namespace ewer
