#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "ewer/error.hpp"
#include "ewer/featurize.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace ewer;

namespace {

void put_u16(std::string& s, std::uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }
void put_u32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }

/// Hand-assembled canonical 44-byte-header PCM file.
std::string pcm_wav(const std::vector<std::int16_t>& interleaved, int channels, int rate) {
  std::string data;
  for (auto v : interleaved) put_u16(data, static_cast<std::uint16_t>(v));
  std::string s = "RIFF";
  put_u32(s, static_cast<std::uint32_t>(36 + data.size()));
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, static_cast<std::uint16_t>(channels));
  put_u32(s, static_cast<std::uint32_t>(rate));
  put_u32(s, static_cast<std::uint32_t>(rate * channels * 2));
  put_u16(s, static_cast<std::uint16_t>(channels * 2));
  put_u16(s, 16);
  s += "data";
  put_u32(s, static_cast<std::uint32_t>(data.size()));
  return s + data;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

AudioClip sine(double hz, std::size_t n) {
  AudioClip c;
  c.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) c.samples[t] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * t / 16000.0);
  return c;
}

}  // namespace

TEST_CASE("read_wav scales, downmixes and measures duration") {
  testing::TempDir dir;
  std::vector<std::int16_t> mono(16000, 0);
  mono[0] = -32768;
  mono[1] = 16384;
  write_bytes(dir / "mono.wav", pcm_wav(mono, 1, 16000));
  const AudioClip clip = read_wav(dir / "mono.wav");
  CHECK(clip.samples.size() == 16000);
  CHECK(clip.duration() == 1.0);
  CHECK(clip.samples[0] == -1.0);
  CHECK(clip.samples[1] == 0.5);

  write_bytes(dir / "stereo.wav", pcm_wav({1000, 3000, -200, 200}, 2, 16000));
  const AudioClip st = read_wav(dir / "stereo.wav");
  REQUIRE(st.samples.size() == 2);
  CHECK(st.samples[0] == doctest::Approx(2000.0 / 32768.0).epsilon(1e-15));
  CHECK(st.samples[1] == 0.0);
}

TEST_CASE("read_wav rejects malformed files") {
  testing::TempDir dir;
  const std::string good = pcm_wav({1, 2, 3, 4}, 1, 16000);
  write_bytes(dir / "trunc.wav", good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_wav(dir / "trunc.wav"), DataError);
  write_bytes(dir / "empty.wav", pcm_wav({}, 1, 16000));
  CHECK_THROWS_WITH_AS(read_wav(dir / "empty.wav"), doctest::Contains("no samples"), DataError);
  std::string floaty = good;
  floaty[20] = 3;  // IEEE float format tag
  write_bytes(dir / "float.wav", floaty);
  CHECK_THROWS_WITH_AS(read_wav(dir / "float.wav"), doctest::Contains("PCM"), DataError);
  write_bytes(dir / "junk.wav", "hello world, definitely not audio data");
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), DataError);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), DataError);
}

TEST_CASE("8 kHz ramp resamples to 2N samples by linear interpolation") {
  for (std::size_t n : {1u, 2u, 7u, 100u}) {
    std::vector<double> ramp(n);
    for (std::size_t i = 0; i < n; ++i) ramp[i] = static_cast<double>(i) / 1000.0;
    const auto out = resample_linear(ramp, 8000);
    REQUIRE(out.size() == 2 * n);
    for (std::size_t k = 0; k < out.size(); ++k) {
      // Position k/2, clamped to the last input sample.
      const double expect = std::min(static_cast<double>(k) / 2.0, static_cast<double>(n - 1)) / 1000.0;
      REQUIRE(out[k] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  testing::TempDir dir;
  std::vector<std::int16_t> ramp(50);
  for (int i = 0; i < 50; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<std::int16_t>(100 * i);
  write_bytes(dir / "8k.wav", pcm_wav(ramp, 1, 8000));
  const AudioClip up = read_wav(dir / "8k.wav");
  CHECK(up.sample_rate == 16000);
  CHECK(up.samples.size() == 100);
  CHECK(up.samples[3] == doctest::Approx(150.0 / 32768.0).epsilon(1e-14));
}

TEST_CASE("write_wav then read_wav is exact on the 16-bit grid") {
  testing::TempDir dir;
  AudioClip c;
  for (int v = -32768; v < 32768; v += 257) c.samples.push_back(v / 32768.0);
  write_wav(dir / "grid.wav", c);
  const AudioClip back = read_wav(dir / "grid.wav");
  CHECK(back.samples == c.samples);
}

TEST_CASE("logmel frame count law") {
  FeaturizerConfig cfg;
  CHECK(frame_count(16000, 400, 160) == 98);
  CHECK(frame_count(400, 400, 160) == 1);
  CHECK(frame_count(399, 400, 160) == 0);
  for (std::size_t n = 400; n < 1400; n += 37) {
    AudioClip c;
    c.samples.assign(n, 0.0);
    const auto f = logmel(c, cfg);
    REQUIRE(f.num_frames() == static_cast<Eigen::Index>((n - 400) / 160 + 1));
    REQUIRE(f.dim() == 40);
  }
  AudioClip short_clip;
  short_clip.samples.assign(399, 0.0);
  CHECK_THROWS_AS(logmel(short_clip, cfg), DataError);
}

TEST_CASE("silence sits on the log floor") {
  FeaturizerConfig cfg;
  AudioClip c;
  c.samples.assign(16000, 0.0);
  const auto f = logmel(c, cfg);
  CHECK(f.num_frames() == 98);
  CHECK((f.frames.array() == std::log(cfg.log_floor)).all());
}

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(1000.0) == doctest::Approx(2595.0 * std::log10(1.0 + 1000.0 / 700.0)));
  for (double hz : {0.0, 125.0, 1000.0, 7999.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz));
  const auto fb = mel_filterbank(40, 400);
  CHECK(fb.rows() == 40);
  CHECK(fb.cols() == 201);
  CHECK((fb.array() >= 0.0).all());
  CHECK(fb.maxCoeff() <= 1.0);
}

TEST_CASE("a 1 kHz sine peaks in the filter covering 1 kHz and matches a direct DFT") {
  FeaturizerConfig cfg;
  const AudioClip clip = sine(1000.0, 4000);
  const auto f = logmel(clip, cfg);
  const auto fb = mel_filterbank(cfg.n_mels, cfg.window_samples);

  // Filter edges computed here, independently of the library's mel helpers.
  const auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double step = mel(8000.0) / (cfg.n_mels + 1);

  for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
    Eigen::Index peak = 0;
    f.frames.row(t).maxCoeff(&peak);
    const double lo = inv(step * static_cast<double>(peak));
    const double hi = inv(step * static_cast<double>(peak + 2));
    CHECK(lo < 1000.0);
    CHECK(hi > 1000.0);

    std::vector<double> frame(400);
    for (std::size_t k = 0; k < 400; ++k) {
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / 400.0);
      frame[k] = hann * clip.samples[static_cast<std::size_t>(t) * 160 + k];
    }
    const auto power = oracle::dft_power(frame);
    const Eigen::Map<const Eigen::VectorXd> p(power.data(), static_cast<Eigen::Index>(power.size()));
    const Eigen::VectorXd energies = fb * p;
    for (Eigen::Index m = 0; m < cfg.n_mels; ++m) {
      const double expect = std::log(std::max(energies(m), cfg.log_floor));
      REQUIRE(f.frames(t, m) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("logmel is deterministic") {
  FeaturizerConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AudioClip c;
  for (int i = 0; i < 5000; ++i) c.samples.push_back(u(rng));
  const auto a = logmel(c, cfg), b = logmel(c, cfg);
  CHECK(std::memcmp(a.frames.data(), b.frames.data(), sizeof(double) * static_cast<std::size_t>(a.frames.size())) == 0);
}

TEST_CASE("FNV-1a 64 published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("lexical_tokenize") {
  FeaturizerConfig cfg;
  CHECK(lexical_tokenize("", cfg).empty());
  const auto ids = lexical_tokenize("x x x", cfg);
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == ids[1]);
  CHECK(ids[1] == ids[2]);
  CHECK(ids[0] == fnv1a64("x") % 4096);
  FeaturizerConfig tiny = cfg;
  tiny.vocab_size = 1;
  const auto collided = lexical_tokenize("alpha beta", tiny);
  CHECK(collided == TokenIds{0, 0});
}

TEST_CASE("lexical_embed mean pooling") {
  Eigen::MatrixXd table(3, 2);
  table << 1, 3, 3, 5, 7, 11;
  const std::vector<std::uint32_t> pair = {0, 1};
  CHECK(lexical_embed(pair, table) == Eigen::Vector2d(2, 4));
  const std::vector<std::uint32_t> one = {2};
  CHECK(lexical_embed(one, table) == Eigen::Vector2d(7, 11));
  CHECK(lexical_embed({}, table) == Eigen::Vector2d::Zero());
  const std::vector<std::uint32_t> bad = {3};
  CHECK_THROWS_AS(lexical_embed(bad, table), DataError);
}

TEST_CASE("lexical_embed is invariant under permutation") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd table = Eigen::MatrixXd::Random(16, 5);
  std::uniform_int_distribution<std::uint32_t> id(0, 15);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint32_t> ids(1 + trial % 9);
    for (auto& i : ids) i = id(rng);
    const auto a = lexical_embed(ids, table);
    std::shuffle(ids.begin(), ids.end(), rng);
    REQUIRE((lexical_embed(ids, table) - a).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("EWF1 and EWL1 round-trip and byte layout") {
  testing::TempDir dir;
  std::mt19937_64 rng(2);
  std::normal_distribution<float> g;
  FeatureMatrix m;
  m.frames.resize(3, 5);
  for (Eigen::Index i = 0; i < m.frames.size(); ++i) m.frames.data()[i] = g(rng);
  save_features(m, dir / "a.ewf");
  CHECK(load_features(dir / "a.ewf").frames == m.frames);

  const std::string bytes = read_bytes(dir / "a.ewf");
  REQUIRE(bytes.size() == 12 + 15 * 4);
  CHECK(bytes.substr(0, 4) == "EWF1");
  std::uint32_t rows, cols;
  float second;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  std::memcpy(&second, bytes.data() + 16, 4);
  CHECK(rows == 3);
  CHECK(cols == 5);
  CHECK(second == static_cast<float>(m.frames(0, 1)));  // row-major

  LexicalVector v(4);
  v << 0.25, -1.5, 3.0, 0.0;
  save_lexical(v, dir / "a.ewl");
  CHECK(load_lexical(dir / "a.ewl") == v);
  CHECK(read_bytes(dir / "a.ewl").substr(0, 4) == "EWL1");
  CHECK(lexical_companion(dir / "x/u1.ewf") == dir / "x/u1.ewl");
}

TEST_CASE("EWF1 rejects malformed files") {
  testing::TempDir dir;
  std::string hdr = "EWF1";
  put_u32(hdr, 4);
  put_u32(hdr, 4);
  std::string payload(15 * 4, '\0');
  write_bytes(dir / "short.ewf", hdr + payload);
  CHECK_THROWS_WITH_AS(load_features(dir / "short.ewf"), doctest::Contains("truncated"), DataError);
  write_bytes(dir / "long.ewf", hdr + payload + std::string(8, '\0'));
  CHECK_THROWS_AS(load_features(dir / "long.ewf"), DataError);
  write_bytes(dir / "magic.ewf", "XXXX" + hdr.substr(4) + payload + std::string(4, '\0'));
  CHECK_THROWS_WITH_AS(load_features(dir / "magic.ewf"), doctest::Contains("magic"), DataError);
  std::string huge = "EWF1";
  put_u32(huge, 0xffffffffu);
  put_u32(huge, 0xffffffffu);
  write_bytes(dir / "huge.ewf", huge);
  CHECK_THROWS_AS(load_features(dir / "huge.ewf"), DataError);
  std::string nan_file = "EWF1";
  put_u32(nan_file, 1);
  put_u32(nan_file, 1);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  nan_file.append(reinterpret_cast<const char*>(&nan), 4);
  write_bytes(dir / "nan.ewf", nan_file);
  CHECK_THROWS_AS(load_features(dir / "nan.ewf"), DataError);
  write_bytes(dir / "bad.ewl", "EWF1");
  CHECK_THROWS_AS(load_lexical(dir / "bad.ewl"), DataError);
}
