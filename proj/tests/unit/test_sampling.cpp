#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "ewer/error.hpp"
#include "ewer/sampling.hpp"

using namespace ewer;

namespace {

/// `counts` maps an integer WER percent to how many utterances carry it.
/// Utterances are interleaved across groups so order preservation is visible.
Manifest histogram(const std::map<int, int>& counts, const std::string& lang = "xx", const std::string& prefix = "") {
  Manifest m;
  std::map<int, int> left = counts;
  bool any = true;
  int serial = 0;
  while (any) {
    any = false;
    for (auto& [key, n] : left) {
      if (n == 0) continue;
      --n;
      any = true;
      Utterance u;
      u.id = prefix + lang + "-" + std::to_string(serial++);
      u.lang = lang;
      u.audio = "/a.wav";
      u.duration = 1.0;
      u.wer = key / 100.0;
      m.utterances.push_back(u);
    }
  }
  return m;
}

std::map<int, int> group_counts(const Manifest& m) {
  std::map<int, int> out;
  for (const auto& u : m.utterances) ++out[score_group(*u.wer)];
  return out;
}

bool is_subsequence(const Manifest& sub, const Manifest& full) {
  std::size_t j = 0;
  for (const auto& u : full.utterances)
    if (j < sub.size() && sub.utterances[j].id == u.id) ++j;
  return j == sub.size();
}

Manifest with_wers(const std::vector<double>& wers) {
  Manifest m;
  for (std::size_t i = 0; i < wers.size(); ++i) {
    Utterance u;
    u.id = "u" + std::to_string(i);
    u.lang = "xx";
    u.audio = "/a.wav";
    u.duration = 1.0;
    u.wer = wers[i];
    m.utterances.push_back(u);
  }
  return m;
}

}  // namespace

TEST_CASE("score groups and their ranking") {
  CHECK(score_group(0.0) == 0);
  CHECK(score_group(0.125) == 13);
  CHECK(score_group(1.0) == 100);
  const auto ranked = rank_score_groups({0.0, 0.0, 0.5, 0.25, 0.25, 0.5, 1.0});
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].key == 0);
  CHECK(ranked[1].key == 25);  // ties with 50, lower key first
  CHECK(ranked[2].key == 50);
  CHECK(ranked[3].key == 100);
}

TEST_CASE("downsample keeps the summed size of the next two groups") {
  const Manifest m = histogram({{0, 500}, {5, 120}, {12, 80}, {20, 10}});
  const auto r = downsample_zero(m, 1);
  const auto counts = group_counts(r.manifest);
  CHECK(counts.at(0) == 200);
  CHECK(counts.at(5) == 120);
  CHECK(counts.at(12) == 80);
  CHECK(counts.at(20) == 10);
  CHECK(is_subsequence(r.manifest, m));
  REQUIRE(r.languages.size() == 1);
  CHECK(r.languages[0].target == 200);
  CHECK(r.languages[0].applied);
  CHECK_FALSE(r.languages[0].tie_broken);
}

TEST_CASE("downsample leaves a language alone when the rule does not apply") {
  const Manifest no_zero = histogram({{5, 12}, {40, 3}});
  CHECK(downsample_zero(no_zero, 1).manifest.size() == no_zero.size());
  const Manifest not_dominant = histogram({{0, 50}, {5, 120}, {12, 80}});
  const auto r = downsample_zero(not_dominant, 1);
  CHECK(r.manifest.size() == not_dominant.size());
  CHECK_FALSE(r.languages[0].applied);
  const Manifest small = histogram({{0, 150}, {5, 120}, {12, 80}});
  CHECK(downsample_zero(small, 1).manifest.size() == small.size());
  CHECK(downsample_zero(Manifest{}, 1).manifest.empty());
}

TEST_CASE("downsample applies per language") {
  Manifest m = histogram({{0, 300}, {10, 40}, {30, 20}}, "ar");
  const Manifest en = histogram({{0, 90}, {50, 30}, {25, 10}, {75, 10}}, "en");
  m.utterances.insert(m.utterances.end(), en.utterances.begin(), en.utterances.end());
  const auto r = downsample_zero(m, 3);
  REQUIRE(r.languages.size() == 2);
  CHECK(r.languages[0].lang == "ar");
  CHECK(r.languages[0].kept_zero == 60);
  CHECK(r.languages[1].lang == "en");
  CHECK(r.languages[1].kept_zero == 40);
  CHECK(r.languages[1].tie_broken);
  CHECK(r.manifest.size() == 60 + 60 + 40 + 50);
}

TEST_CASE("only exact-zero labels are sampled from the zero group") {
  // 0.004 rounds into group 0 but is not a zero-WER utterance.
  Manifest m = histogram({{0, 40}, {10, 5}, {20, 5}});
  Utterance near = m.utterances.front();
  near.id = "near";
  near.wer = 0.004;
  m.utterances.push_back(near);
  const auto r = downsample_zero(m, 1);
  CHECK(r.languages[0].kept_zero == 10);
  bool found = false;
  for (const auto& u : r.manifest.utterances) found |= u.id == "near";
  CHECK(found);
}

TEST_CASE("downsample determinism and seed sensitivity") {
  const Manifest m = histogram({{0, 500}, {5, 120}, {12, 80}});
  const auto a = downsample_zero(m, 7), b = downsample_zero(m, 7), c = downsample_zero(m, 8);
  std::vector<std::string> ia, ib, ic;
  for (const auto& u : a.manifest.utterances) ia.push_back(u.id);
  for (const auto& u : b.manifest.utterances) ib.push_back(u.id);
  for (const auto& u : c.manifest.utterances) ic.push_back(u.id);
  CHECK(ia == ib);
  CHECK(ia.size() == ic.size());
  CHECK(ia != ic);
}

TEST_CASE("downsample needs labels") {
  Manifest m = histogram({{0, 3}});
  m.utterances[1].wer.reset();
  CHECK_THROWS_WITH_AS(downsample_zero(m, 1), doctest::Contains(m.utterances[1].id.c_str()), DataError);
}

TEST_CASE("WER bins are left-closed with a closed last bin") {
  CHECK(wer_bin(0.0) == 0);
  CHECK(wer_bin(0.0999) == 0);
  CHECK(wer_bin(0.10) == 1);
  CHECK(wer_bin(0.3) == 3);
  CHECK(wer_bin(0.7) == 7);
  CHECK(wer_bin(0.95) == 9);
  CHECK(wer_bin(1.0) == 9);
  for (int k = 0; k <= 10; ++k) CHECK(wer_bin(k / 10.0) == std::min(k, 9));
}

TEST_CASE("binned split sends round-half-up of each bin to dev") {
  std::vector<double> wers;
  for (int i = 0; i < 100; ++i) wers.push_back(0.15);
  for (int i = 0; i < 5; ++i) wers.push_back(0.55);
  for (int i = 0; i < 4; ++i) wers.push_back(1.0);
  const Manifest m = with_wers(wers);
  const Split s = binned_dev_split(m, 3);
  std::map<int, int> dev_bins;
  for (const auto& u : s.dev.utterances) ++dev_bins[wer_bin(*u.wer)];
  CHECK(dev_bins[1] == 10);
  CHECK(dev_bins[5] == 1);
  CHECK(dev_bins[9] == 0);
  CHECK(s.train.size() + s.dev.size() == m.size());
}

TEST_CASE("binned split is a seeded partition that preserves order") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pct(0, 100);
  std::vector<double> wers;
  for (int i = 0; i < 997; ++i) wers.push_back(pct(rng) / 100.0);
  const Manifest m = with_wers(wers);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Split s = binned_dev_split(m, seed);
    std::set<std::string> ids;
    for (const auto* part : {&s.train, &s.dev})
      for (const auto& u : part->utterances) CHECK(ids.insert(u.id).second);
    CHECK(ids.size() == m.size());
    CHECK(is_subsequence(s.train, m));
    CHECK(is_subsequence(s.dev, m));

    std::map<int, int> bin_size, dev_size;
    for (const auto& u : m.utterances) ++bin_size[wer_bin(*u.wer)];
    for (const auto& u : s.dev.utterances) ++dev_size[wer_bin(*u.wer)];
    for (const auto& [b, n] : bin_size) CHECK(std::abs(dev_size[b] - 0.1 * n) <= 1.0);
  }
  const Split a = binned_dev_split(m, 5), b = binned_dev_split(m, 5), c = binned_dev_split(m, 6);
  CHECK(a.dev.utterances.front().id == b.dev.utterances.front().id);
  CHECK(a.dev.size() == c.dev.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.dev.size(); ++i) differs |= a.dev.utterances[i].id != c.dev.utterances[i].id;
  CHECK(differs);
}

TEST_CASE("binned split argument checks") {
  const Manifest m = with_wers({0.1, 0.2});
  CHECK_THROWS_AS(binned_dev_split(m, 1, 0), ConfigError);
  CHECK_THROWS_AS(binned_dev_split(m, 1, 10, 1.5), ConfigError);
  Manifest unlabeled = m;
  unlabeled.utterances[0].wer.reset();
  CHECK_THROWS_AS(binned_dev_split(unlabeled, 1), DataError);
}
