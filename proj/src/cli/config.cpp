#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ewer/cli.hpp"

namespace ewer::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

}  // namespace

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::vector<ConfigEntry> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected 'key = value'");
    ConfigEntry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), line_no};
    if (!valid_key(e.key)) throw UsageError(where + "invalid key '" + e.key + "'");
    if (e.value.empty()) throw UsageError(where + "empty value for '" + e.key + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_predictions(std::span<const Prediction> predictions, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["pred"] = p.wer;
    j["dur"] = p.duration;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p{j.at("id").get<std::string>(), j.at("pred").get<double>(), j.at("dur").get<double>()};
      if (!std::isfinite(p.wer) || p.wer < 0.0 || p.wer > 1.0) throw DataError("pred outside [0, 1]");
      if (!(p.duration > 0.0)) throw DataError("dur must be positive");
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return out;
}

}  // namespace ewer::cli
