#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

struct PromptPack {
  std::string name;
  std::vector<PromptTemplate> prompts;

  /// Validates every template and rejects duplicate ids (InvalidTemplate).
  void validate() const;
  const PromptTemplate* find(std::string_view id) const;
};

inline constexpr std::string_view kBuiltinYelpPack = "yelp-causal-v1";

/// TOML layout:
///
///   name = "pack-name"
///   [[prompt]]
///   id = "c1-short"
///   causal_tag = "C1"
///   variant_tag = "short"      # optional
///   template = "... {review} ... a rating of"
PromptPack parse_prompt_pack(std::string_view toml_text);
PromptPack load_prompt_pack(const std::filesystem::path& path);

/// Built-in packs by name; throws ConfigError for unknown names.
PromptPack builtin_pack(std::string_view name);

/// Loads `ref` as a file when it exists, otherwise as a built-in pack name.
PromptPack resolve_prompt_pack(const std::string& ref);

std::string prompt_pack_to_toml(const PromptPack& pack);

/// SHA-256 over a canonical JSON rendering of the pack.
std::string prompt_pack_digest(const PromptPack& pack);

}  // namespace causal_probe
