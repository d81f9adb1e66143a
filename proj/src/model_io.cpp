#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "ewer/error.hpp"
#include "ewer/estimator.hpp"
#include "tensor_visit.hpp"

namespace ewer {

namespace {

using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

constexpr std::uint32_t kModelVersion = 1;

ordered_json dims_json(const ModelDims& d) {
  return {{"input_dim", d.input_dim}, {"hidden", d.hidden}, {"vocab_size", d.vocab_size},
          {"embed_dim", d.embed_dim}, {"fc1", d.fc1},       {"fc2", d.fc2}};
}

ordered_json train_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"dropout", c.dropout},
          {"batch_size", c.batch_size},
          {"hidden", c.hidden},
          {"fc1", c.fc1},
          {"fc2", c.fc2},
          {"seed", c.seed.value_or(0)},
          {"freeze_lexical", c.freeze_lexical},
          {"use_acoustic", c.use_acoustic},
          {"lexical_source", std::string(to_string(c.lexical_source))}};
}

ordered_json featurizer_json(const FeaturizerConfig& c) {
  return {{"window_samples", c.window_samples}, {"hop_samples", c.hop_samples},
          {"n_mels", c.n_mels},                 {"log_floor", c.log_floor},
          {"vocab_size", c.vocab_size},         {"embed_dim", c.embed_dim}};
}

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  ordered_json header;
  header["format"] = "EWM1";
  header["version"] = kModelVersion;
  header["dims"] = dims_json(model.params.dims());
  header["train"] = train_json(model.train);
  header["featurizer"] = featurizer_json(model.featurizer);
  ordered_json shapes = ordered_json::array();
  detail::visit_tensors(model.params, [&](std::string_view name, const auto& t, Eigen::Index) {
    shapes.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  header["tensors"] = shapes;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write("EWM1", 4);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::visit_tensors(model.params, [&](std::string_view, const auto& t, Eigen::Index) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  });
  if (!out) throw DataError("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) { return DataError(path.string() + ": " + why); };

  if (bytes.size() < 12) throw fail("truncated header");
  if (std::memcmp(bytes.data(), "EWM1", 4) != 0) throw fail("bad magic, expected EWM1");
  std::uint32_t version = 0, header_len = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 4);
  if (version != kModelVersion)
    throw fail("unsupported model version " + std::to_string(version));
  if (bytes.size() - 12 < header_len) throw fail("truncated header");

  Model model;
  ModelDims dims;
  try {
    const auto header = ordered_json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    const auto& d = header.at("dims");
    dims = {d.at("input_dim").get<int>(), d.at("hidden").get<int>(), d.at("vocab_size").get<int>(),
            d.at("embed_dim").get<int>(), d.at("fc1").get<int>(),    d.at("fc2").get<int>()};
    const auto& t = header.at("train");
    auto& c = model.train;
    c.epochs = t.at("epochs").get<int>();
    c.learning_rate = t.at("learning_rate").get<double>();
    c.dropout = t.at("dropout").get<double>();
    c.batch_size = t.at("batch_size").get<int>();
    c.hidden = t.at("hidden").get<int>();
    c.fc1 = t.at("fc1").get<int>();
    c.fc2 = t.at("fc2").get<int>();
    c.seed = t.at("seed").get<std::uint64_t>();
    c.freeze_lexical = t.at("freeze_lexical").get<bool>();
    c.use_acoustic = t.at("use_acoustic").get<bool>();
    c.lexical_source = parse_lexical_source(t.at("lexical_source").get<std::string>());
    const auto& f = header.at("featurizer");
    auto& fc = model.featurizer;
    fc.window_samples = f.at("window_samples").get<int>();
    fc.hop_samples = f.at("hop_samples").get<int>();
    fc.n_mels = f.at("n_mels").get<int>();
    fc.log_floor = f.at("log_floor").get<double>();
    fc.vocab_size = f.at("vocab_size").get<int>();
    fc.embed_dim = f.at("embed_dim").get<int>();
  } catch (const ordered_json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }

  if (dims.input_dim < 1 || dims.hidden < 1 || dims.vocab_size < 0 || dims.embed_dim < 1 || dims.fc1 < 1 ||
      dims.fc2 < 1)
    throw fail("invalid dimensions");
  if (dims.hidden != model.train.hidden || dims.fc1 != model.train.fc1 || dims.fc2 != model.train.fc2)
    throw fail("dimensions disagree with the recorded training configuration");

  model.params = EstimatorParams::zeros(dims);
  std::size_t expected = 0;
  detail::visit_tensors(model.params, [&](std::string_view, const auto& t, Eigen::Index) {
    expected += static_cast<std::size_t>(t.size()) * sizeof(double);
  });
  const std::size_t payload = bytes.size() - 12 - header_len;
  if (payload < expected) throw fail("truncated tensor payload");
  if (payload > expected) throw fail("trailing bytes after tensor payload");

  const char* p = bytes.data() + 12 + header_len;
  detail::visit_tensors(model.params, [&](std::string_view, auto& t, Eigen::Index) {
    const auto n = static_cast<std::size_t>(t.size()) * sizeof(double);
    std::memcpy(t.data(), p, n);
    p += n;
  });
  return model;
}

Model load_model(const std::filesystem::path& path, const ModelDims& expected) {
  Model model = load_model(path);
  check_dims(expected, model.params.dims());
  return model;
}

}  // namespace ewer
