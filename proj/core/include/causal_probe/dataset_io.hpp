#pragma once

#include <filesystem>
#include <string>

#include "causal_probe/types.hpp"

namespace causal_probe {

/// Reads JSON-Lines with keys `id` (string), `text` (string), `label` (1-5).
/// Blank lines are skipped. Throws ParseError (with line number),
/// InvalidLabel, InvalidSample or DuplicateId.
Dataset load_dataset_jsonl(const std::filesystem::path& path);

/// One JSON-Lines record per sample, in dataset order.
std::string dataset_to_jsonl(const Dataset& dataset);

void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace causal_probe
