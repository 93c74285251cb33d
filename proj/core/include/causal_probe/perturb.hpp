#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

enum class PerturbationOp { SynonymReplacement, RandomInsertion, RandomSwap, RandomDeletion };

/// Short code: "sr", "ri", "rs", "rd".
std::string_view to_code(PerturbationOp op) noexcept;
/// Accepts the short codes and the full names (case-insensitive). Throws InvalidArgument.
PerturbationOp parse_perturbation_op(std::string_view text);

struct PerturbationSpec {
  PerturbationOp op = PerturbationOp::SynonymReplacement;
  double strength = 0.1;  // alpha in (0, 1]
  std::uint64_t seed = 0;
  int count = 1;

  void validate() const;
};

/// Lowercase word -> ordered synonyms (never just the word itself).
class SynonymTable {
 public:
  SynonymTable() = default;

  /// Throws InvalidArgument if a list is empty or holds only the word itself.
  void add(std::string word, std::vector<std::string> synonyms);

  /// Parses lines of the form `word: syn1, syn2, ...`; '#' starts a comment.
  static SynonymTable load(const std::filesystem::path& path);
  static SynonymTable parse(std::string_view text);

  /// Synonyms other than `word` itself, or nullptr.
  const std::vector<std::string>* find(std::string_view word) const;
  std::size_t size() const noexcept { return table_.size(); }
  const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const noexcept { return table_; }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> table_;
};

/// Number of edits for strength alpha over `words` editable words: max(1, round(alpha * words)).
std::size_t perturbation_ops(double alpha, std::size_t words) noexcept;

/// EDA-style variants of `tmpl`, one independent RNG stream per variant
/// index. Words holding the review placeholder are never edited, moved,
/// removed or split. Variant ids are `<id>~<op>-<alpha>-s<seed>-v<i>`.
///
/// Throws MissingSynonymTable (synonym replacement and random insertion
/// without a table) or NoEligibleWords.
std::vector<PromptTemplate> perturb_prompt(const PromptTemplate& tmpl, const PerturbationSpec& spec,
                                           const SynonymTable* synonyms = nullptr);

/// Whitespace-separated words of a template.
std::vector<std::string> split_words(std::string_view text);

}  // namespace causal_probe
