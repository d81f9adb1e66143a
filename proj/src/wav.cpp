#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ewer/error.hpp"
#include "ewer/featurize.hpp"

namespace ewer {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

}  // namespace

std::vector<double> resample_linear(std::span<const double> samples, int src_rate,
                                    int target_rate) {
  if (src_rate <= 0 || target_rate <= 0) throw DataError("sample rates must be positive");
  if (samples.empty()) return {};
  if (src_rate == target_rate) return {samples.begin(), samples.end()};

  const auto n = samples.size();
  const auto m = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * target_rate / static_cast<double>(src_rate)));
  std::vector<double> out(m);
  const std::size_t last = n - 1;
  for (std::size_t k = 0; k < m; ++k) {
    // Exact rational position k * src / target.
    const std::uint64_t num = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(src_rate);
    const std::size_t left = num / static_cast<std::uint64_t>(target_rate);
    if (left >= last) {
      out[k] = samples[last];
      continue;
    }
    const double frac = static_cast<double>(num % static_cast<std::uint64_t>(target_rate)) /
                        static_cast<double>(target_rate);
    out[k] = samples[left] + frac * (samples[left + 1] - samples[left]);
  }
  return out;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) -> DataError {
    return DataError(path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw fail("truncated fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw fail("truncated extensible fmt chunk");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size()) throw fail("truncated data chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (format != kFormatPcm || bits != 16) throw fail("only 16-bit PCM is supported");
  if (channels != 1 && channels != 2) throw fail("only mono or stereo is supported");
  if (rate == 0) throw fail("zero sample rate");
  if (data == nullptr) throw fail("missing data chunk");

  const std::size_t frame_bytes = 2U * channels;
  const std::size_t n = data_size / frame_bytes;
  if (n == 0) throw fail("no samples");
  if (data_size % frame_bytes != 0) throw fail("truncated sample frame");

  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(read_u16(data + i * frame_bytes + 2 * c));
      acc += static_cast<double>(raw) / 32768.0;
    }
    samples[i] = acc / channels;
  }

  AudioClip clip;
  clip.samples = resample_linear(samples, static_cast<int>(rate), kTargetSampleRate);
  clip.sample_rate = kTargetSampleRate;
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : clip.samples) {
    const long q = std::lround(s * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ewer
