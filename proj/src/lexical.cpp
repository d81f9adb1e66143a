#include "ewer/corpus.hpp"
#include "ewer/error.hpp"
#include "ewer/featurize.hpp"

namespace ewer {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TokenIds lexical_tokenize(std::string_view text, const FeaturizerConfig& cfg) {
  TokenIds ids;
  for (const auto& word : tokenize(text)) {
    ids.push_back(static_cast<std::uint32_t>(fnv1a64(word) % static_cast<std::uint64_t>(cfg.vocab_size)));
  }
  return ids;
}

LexicalVector lexical_embed(std::span<const std::uint32_t> ids, const Eigen::MatrixXd& table) {
  LexicalVector mean = LexicalVector::Zero(table.cols());
  if (ids.empty()) return mean;
  for (auto id : ids) {
    if (id >= table.rows())
      throw DataError("token id " + std::to_string(id) + " outside embedding table of " +
                      std::to_string(table.rows()) + " rows");
    mean += table.row(id).transpose();
  }
  return mean / static_cast<double>(ids.size());
}

}  // namespace ewer
