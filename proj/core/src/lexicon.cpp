#include "causal_probe/lexicon.hpp"

#include <cmath>
#include <fstream>

#include "causal_probe/error.hpp"

namespace causal_probe {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool keep_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' || c == '-'; }

char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

void OpinionLexicon::validate() const {
  if (positive.empty()) fail(ErrorKind::InvalidArgument, "positive opinion list is empty");
  if (negative.empty()) fail(ErrorKind::InvalidArgument, "negative opinion list is empty");
}

WordSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open word list " + path.string());
  WordSet words;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t b = 0, e = line.size();
    while (b < e && is_space(line[b])) ++b;
    while (e > b && is_space(line[e - 1])) --e;
    if (b == e || line[b] == ';') continue;
    std::string word = line.substr(b, e - b);
    for (char& c : word) c = ascii_lower(c);
    words.insert(std::move(word));
  }
  return words;
}

OpinionLexicon load_opinion_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative) {
  OpinionLexicon lex{load_word_list(positive), load_word_list(negative)};
  lex.validate();
  return lex;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    if (is_space(raw)) {
      flush();
      continue;
    }
    const char c = ascii_lower(raw);
    if (keep_char(c)) current.push_back(c);
  }
  flush();
  return tokens;
}

std::size_t whitespace_word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::uint64_t count_matches(std::span<const std::string> tokens, const WordSet& words) {
  std::uint64_t n = 0;
  for (const auto& t : tokens) n += words.contains(t) ? 1 : 0;
  return n;
}

OpinionCounts count_opinion(const ReviewSample& sample, const OpinionLexicon& lex) {
  const auto tokens = tokenize(sample.text);
  return {sample.id, count_matches(tokens, lex.positive), count_matches(tokens, lex.negative), tokens.size()};
}

OpinionMeans corpus_means(std::span<const OpinionCounts> counts) {
  if (counts.empty()) fail(ErrorKind::EmptyInput, "no opinion counts");
  double pos = 0.0, neg = 0.0;
  for (const auto& c : counts) {
    pos += static_cast<double>(c.w_pos);
    neg += static_cast<double>(c.w_neg);
  }
  const double n = static_cast<double>(counts.size());
  return {pos / n, neg / n};
}

double oep(std::span<const OpinionCounts> counts, double mean_pos, double mean_neg) {
  if (counts.empty()) fail(ErrorKind::EmptyInput, "no opinion counts");
  if (!(mean_pos > 0.0) || !(mean_neg > 0.0)) fail(ErrorKind::ZeroMean, "opinion means must be positive");
  double sum = 0.0;
  for (const auto& c : counts) {
    sum += std::fabs(static_cast<double>(c.w_pos) / mean_pos - static_cast<double>(c.w_neg) / mean_neg);
  }
  return sum;
}

std::uint64_t polarity_difference(const OpinionCounts& count) noexcept {
  return count.w_pos > count.w_neg ? count.w_pos - count.w_neg : count.w_neg - count.w_pos;
}

}  // namespace causal_probe
