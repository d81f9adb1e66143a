// EWF1: "EWF1" | u32 rows | u32 cols | rows*cols f32, row-major, little-endian.
// EWL1: "EWL1" | u32 length | length f32.

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "ewer/error.hpp"
#include "ewer/featurize.hpp"

namespace ewer {

namespace {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");
static_assert(std::numeric_limits<float>::is_iec559);

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t u32_at(const std::vector<char>& bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

void write_floats(std::ostream& out, std::span<const float> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t checked_u32(Eigen::Index n, const char* what) {
  if (n < 0 || static_cast<std::uint64_t>(n) > std::numeric_limits<std::uint32_t>::max())
    throw DataError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(n);
}

float to_f32(double v) {
  if (!std::isfinite(v)) throw DataError("non-finite feature value");
  return static_cast<float>(v);
}

}  // namespace

FeatureMatrix load_features(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto fail = [&](const std::string& why) { return DataError(path.string() + ": " + why); };
  if (bytes.size() < 12) throw fail("truncated header");
  if (std::memcmp(bytes.data(), "EWF1", 4) != 0) throw fail("bad magic, expected EWF1");
  const std::uint64_t rows = u32_at(bytes, 4);
  const std::uint64_t cols = u32_at(bytes, 8);
  if (rows == 0 || cols == 0) throw fail("empty feature matrix");
  const std::uint64_t count = rows * cols;
  if (count > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()) / 4)
    throw fail("dimension overflow");
  if (bytes.size() - 12 < count * 4) throw fail("truncated payload");
  if (bytes.size() - 12 > count * 4) throw fail("trailing bytes after payload");

  FeatureMatrix out;
  out.frames.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const char* p = bytes.data() + 12;
  for (Eigen::Index r = 0; r < out.frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.frames.cols(); ++c, p += 4) {
      float v;
      std::memcpy(&v, p, 4);
      if (!std::isfinite(v)) throw fail("non-finite value");
      out.frames(r, c) = v;
    }
  }
  return out;
}

void save_features(const FeatureMatrix& features, const std::filesystem::path& path) {
  const auto rows = checked_u32(features.num_frames(), "row count");
  const auto cols = checked_u32(features.dim(), "column count");
  if (rows == 0 || cols == 0) throw DataError("refusing to write an empty feature matrix");
  std::vector<float> flat;
  flat.reserve(static_cast<std::size_t>(rows) * cols);
  for (Eigen::Index r = 0; r < features.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < features.frames.cols(); ++c) flat.push_back(to_f32(features.frames(r, c)));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("EWF1", 4);
  write_u32(out, rows);
  write_u32(out, cols);
  write_floats(out, flat);
  if (!out) throw DataError("write failed: " + path.string());
}

LexicalVector load_lexical(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto fail = [&](const std::string& why) { return DataError(path.string() + ": " + why); };
  if (bytes.size() < 8) throw fail("truncated header");
  if (std::memcmp(bytes.data(), "EWL1", 4) != 0) throw fail("bad magic, expected EWL1");
  const std::uint64_t n = u32_at(bytes, 4);
  if (bytes.size() - 8 != n * 4) throw fail("payload size does not match declared length");

  LexicalVector out(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    float v;
    std::memcpy(&v, bytes.data() + 8 + 4 * i, 4);
    if (!std::isfinite(v)) throw fail("non-finite value");
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

void save_lexical(const LexicalVector& values, const std::filesystem::path& path) {
  const auto n = checked_u32(values.size(), "length");
  std::vector<float> flat(n);
  for (std::uint32_t i = 0; i < n; ++i) flat[i] = to_f32(values(i));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("EWL1", 4);
  write_u32(out, n);
  write_floats(out, flat);
  if (!out) throw DataError("write failed: " + path.string());
}

std::filesystem::path lexical_companion(const std::filesystem::path& feature_path) {
  auto p = feature_path;
  p.replace_extension(".ewl");
  return p;
}

}  // namespace ewer
