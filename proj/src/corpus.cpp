#include "ewer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "ewer/error.hpp"

namespace ewer {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

double compute_wer(std::span<const std::string> reference,
                   std::span<const std::string> hypothesis) {
  if (reference.empty()) return hypothesis.empty() ? 0.0 : 1.0;

  // Two-row Levenshtein over words, unit costs.
  std::vector<std::size_t> prev(hypothesis.size() + 1);
  std::vector<std::size_t> cur(hypothesis.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  const double raw = static_cast<double>(prev.back()) / static_cast<double>(reference.size());
  return std::min(1.0, raw);
}

double compute_wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = tokenize(reference);
  const auto hyp = tokenize(hypothesis);
  return compute_wer(ref, hyp);
}

void validate(const Utterance& utt) {
  if (utt.id.empty()) throw DataError("utterance with empty id");
  if (!(utt.duration > 0.0) || !std::isfinite(utt.duration))
    throw DataError(utt.id + ": duration must be positive");
  if (utt.wer && !(*utt.wer >= 0.0 && *utt.wer <= 1.0))
    throw DataError(utt.id + ": wer outside [0,1]");
  if (utt.audio.empty()) throw DataError(utt.id + ": no audio source");
}

void validate(const Manifest& manifest) {
  std::unordered_set<std::string_view> seen;
  for (const auto& utt : manifest.utterances) {
    validate(utt);
    if (!seen.insert(utt.id).second) throw DataError("duplicate id " + utt.id);
  }
}

namespace {

Utterance parse_record(const std::string& line, const fs::path& base) {
  const auto rec = ordered_json::parse(line);
  if (!rec.is_object()) throw DataError("record is not a JSON object");

  static const std::unordered_set<std::string> known = {"id",  "lang", "wav", "feat",
                                                        "dur", "hyp",  "ref", "wer"};
  for (const auto& [key, _] : rec.items()) {
    if (!known.contains(key)) throw DataError("unknown field '" + key + "'");
  }
  const auto need = [&](const char* key) -> const ordered_json& {
    if (!rec.contains(key)) throw DataError(std::string("missing field '") + key + "'");
    return rec.at(key);
  };
  const auto text = [&](const char* key) {
    const auto& v = need(key);
    if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be text");
    return v.get<std::string>();
  };

  Utterance utt;
  utt.id = text("id");
  utt.lang = text("lang");
  const bool has_wav = rec.contains("wav");
  const bool has_feat = rec.contains("feat");
  if (has_wav == has_feat) throw DataError("exactly one of 'wav' or 'feat' is required");
  utt.audio_kind = has_wav ? AudioKind::Wav : AudioKind::Feat;
  const fs::path audio = text(has_wav ? "wav" : "feat");
  utt.audio = (audio.is_absolute() ? audio : base / audio).lexically_normal();

  const auto& dur = need("dur");
  if (!dur.is_number()) throw DataError("field 'dur' must be a number");
  utt.duration = dur.get<double>();
  utt.hypothesis = text("hyp");
  if (rec.contains("ref")) utt.reference = text("ref");
  if (rec.contains("wer")) {
    if (!rec.at("wer").is_number()) throw DataError("field 'wer' must be a number");
    utt.wer = rec.at("wer").get<double>();
  }
  validate(utt);
  return utt;
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();

  Manifest manifest;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      auto utt = parse_record(line, base);
      if (!ids.insert(utt.id).second) throw DataError("duplicate id " + utt.id);
      manifest.utterances.push_back(std::move(utt));
    } catch (const ordered_json::exception& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  validate(manifest);
  const fs::path base = fs::absolute(path).parent_path();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& utt : manifest.utterances) {
    ordered_json rec;
    rec["id"] = utt.id;
    rec["lang"] = utt.lang;
    const fs::path audio = fs::absolute(utt.audio).lexically_normal();
    rec[utt.audio_kind == AudioKind::Wav ? "wav" : "feat"] =
        audio.lexically_relative(base).generic_string();
    rec["dur"] = utt.duration;
    rec["hyp"] = utt.hypothesis;
    if (utt.reference) rec["ref"] = *utt.reference;
    if (utt.wer) rec["wer"] = *utt.wer;
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Manifest label_corpus(const Manifest& manifest) {
  Manifest labeled = manifest;
  for (auto& utt : labeled.utterances) {
    if (!utt.reference) throw DataError(utt.id + ": no reference to label against");
    utt.wer = compute_wer(*utt.reference, utt.hypothesis);
  }
  return labeled;
}

Manifest filter_duration(const Manifest& manifest, double max_seconds) {
  Manifest kept;
  std::copy_if(manifest.utterances.begin(), manifest.utterances.end(),
               std::back_inserter(kept.utterances),
               [&](const Utterance& u) { return u.duration <= max_seconds; });
  return kept;
}

void require_labels(const Manifest& manifest) {
  for (const auto& utt : manifest.utterances) {
    if (!utt.wer) throw DataError(utt.id + ": utterance has no wer label");
  }
}

}  // namespace ewer
