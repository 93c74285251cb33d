#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

using WordSet = std::unordered_set<std::string>;

/// Positive and negative opinion word lists. The lists may overlap; a word
/// in both is counted in both.
struct OpinionLexicon {
  WordSet positive;
  WordSet negative;

  /// Throws InvalidArgument if either list is empty.
  void validate() const;
};

/// Reads a word list: one word per line, lowercased and trimmed. Blank lines
/// and lines starting with ';' are skipped.
WordSet load_word_list(const std::filesystem::path& path);

OpinionLexicon load_opinion_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative);

/// Lowercases, splits on whitespace, strips characters outside [a-z0-9'-]
/// from each piece and drops pieces left empty.
std::vector<std::string> tokenize(std::string_view text);

/// Number of whitespace-separated pieces, before any character filtering.
std::size_t whitespace_word_count(std::string_view text);

struct OpinionCounts {
  std::string sample_id;
  std::uint64_t w_pos = 0;
  std::uint64_t w_neg = 0;
  std::uint64_t n_tokens = 0;

  friend bool operator==(const OpinionCounts&, const OpinionCounts&) = default;
};

/// Occurrences of words from `words` among `tokens`, with multiplicity.
std::uint64_t count_matches(std::span<const std::string> tokens, const WordSet& words);

OpinionCounts count_opinion(const ReviewSample& sample, const OpinionLexicon& lex);

struct OpinionMeans {
  double mean_pos = 0.0;
  double mean_neg = 0.0;
};

OpinionMeans corpus_means(std::span<const OpinionCounts> counts);

/// Sum over samples of |w_pos/mean_pos - w_neg/mean_neg|.
double oep(std::span<const OpinionCounts> counts, double mean_pos, double mean_neg);

std::uint64_t polarity_difference(const OpinionCounts& count) noexcept;

}  // namespace causal_probe
