#include "causal_probe/dataset_io.hpp"

#include <fstream>

#include "causal_probe/error.hpp"
#include "json.hpp"

namespace causal_probe {

Dataset load_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open dataset " + path.string());
  Dataset ds;
  ds.name = path.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ParseError, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string() || !j.contains("label") || !j["label"].is_number_integer()) {
      fail(ErrorKind::ParseError, where + ": expected {\"id\": str, \"text\": str, \"label\": int}");
    }
    const auto label = j["label"].get<long long>();
    if (label < 1 || label > 5) {
      fail(ErrorKind::InvalidLabel, where + ": label " + std::to_string(label) + " outside 1-5");
    }
    ds.samples.push_back({j["id"].get<std::string>(), j["text"].get<std::string>(), RatingLabel(static_cast<int>(label))});
  }
  ds.validate();
  return ds;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset.samples) {
    out += nlohmann::json{{"id", s.id}, {"label", s.gold.value()}, {"text", s.text}}.dump();
    out.push_back('\n');
  }
  return out;
}

void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << dataset_to_jsonl(dataset);
}

}  // namespace causal_probe
