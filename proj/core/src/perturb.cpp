#include "causal_probe/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "causal_probe/error.hpp"
#include "causal_probe/rng.hpp"

namespace causal_probe {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool is_protected(std::string_view word) { return word.find(kReviewPlaceholder) != std::string_view::npos; }

/// A word split into leading punctuation, alphanumeric core, trailing punctuation.
struct WordParts {
  std::string_view head, core, tail;
};

WordParts split_parts(std::string_view w) {
  std::size_t b = 0, e = w.size();
  while (b < e && !is_alnum(w[b])) ++b;
  while (e > b && !is_alnum(w[e - 1])) --e;
  return {w.substr(0, b), w.substr(b, e - b), w.substr(e)};
}

const std::vector<std::string>* synonyms_of(const SynonymTable& table, std::string_view word) {
  const auto parts = split_parts(word);
  if (parts.core.empty()) return nullptr;
  return table.find(lower(parts.core));
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string format_alpha(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", alpha);
  return buf;
}

std::vector<std::size_t> editable_positions(const std::vector<std::string>& words) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_protected(words[i])) pos.push_back(i);
  }
  return pos;
}

std::vector<std::size_t> synonym_positions(const std::vector<std::string>& words, const SynonymTable& table) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_protected(words[i]) && synonyms_of(table, words[i])) pos.push_back(i);
  }
  return pos;
}

std::vector<std::string> synonym_replacement(std::vector<std::string> words, std::size_t n_ops,
                                             const SynonymTable& table, Rng& rng) {
  auto eligible = synonym_positions(words, table);
  if (eligible.empty()) fail(ErrorKind::NoEligibleWords, "no template word has a synonym");
  rng.shuffle(std::span(eligible));
  const auto n = std::min(n_ops, eligible.size());
  for (std::size_t k = 0; k < n; ++k) {
    auto& word = words[eligible[k]];
    const auto& syns = *synonyms_of(table, word);
    const auto parts = split_parts(word);
    word = std::string(parts.head) + syns[rng.below(syns.size())] + std::string(parts.tail);
  }
  return words;
}

std::vector<std::string> random_insertion(std::vector<std::string> words, std::size_t n_ops,
                                          const SynonymTable& table, Rng& rng) {
  if (synonym_positions(words, table).empty()) fail(ErrorKind::NoEligibleWords, "no template word has a synonym");
  for (std::size_t k = 0; k < n_ops; ++k) {
    const auto eligible = synonym_positions(words, table);
    const auto& source = words[eligible[rng.below(eligible.size())]];
    const auto& syns = *synonyms_of(table, source);
    std::string inserted = syns[rng.below(syns.size())];
    const auto at = rng.below(words.size() + 1);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), std::move(inserted));
  }
  return words;
}

std::vector<std::string> random_swap(std::vector<std::string> words, std::size_t n_ops, Rng& rng) {
  const auto editable = editable_positions(words);
  if (editable.size() < 2) fail(ErrorKind::NoEligibleWords, "random swap needs two editable words");
  for (std::size_t k = 0; k < n_ops; ++k) {
    const auto a = rng.below(editable.size());
    auto b = rng.below(editable.size() - 1);
    if (b >= a) ++b;
    std::swap(words[editable[a]], words[editable[b]]);
  }
  return words;
}

std::vector<std::string> random_deletion(const std::vector<std::string>& words, double alpha, Rng& rng) {
  const auto editable = editable_positions(words);
  if (editable.empty()) fail(ErrorKind::NoEligibleWords, "template has no editable words");
  std::vector<bool> keep(words.size(), true);
  std::size_t survivors = 0;
  for (auto i : editable) {
    keep[i] = !(rng.unit() < alpha);
    survivors += keep[i] ? 1 : 0;
  }
  if (survivors == 0) keep[editable[rng.below(editable.size())]] = true;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (keep[i]) out.push_back(words[i]);
  }
  return out;
}

}  // namespace

std::string_view to_code(PerturbationOp op) noexcept {
  switch (op) {
    case PerturbationOp::SynonymReplacement: return "sr";
    case PerturbationOp::RandomInsertion: return "ri";
    case PerturbationOp::RandomSwap: return "rs";
    case PerturbationOp::RandomDeletion: return "rd";
  }
  return "sr";
}

PerturbationOp parse_perturbation_op(std::string_view text) {
  const auto t = lower(text);
  if (t == "sr" || t == "synonymreplacement" || t == "synonym_replacement") return PerturbationOp::SynonymReplacement;
  if (t == "ri" || t == "randominsertion" || t == "random_insertion") return PerturbationOp::RandomInsertion;
  if (t == "rs" || t == "randomswap" || t == "random_swap") return PerturbationOp::RandomSwap;
  if (t == "rd" || t == "randomdeletion" || t == "random_deletion") return PerturbationOp::RandomDeletion;
  fail(ErrorKind::InvalidArgument, "unknown perturbation op '" + std::string(text) + "'");
}

void PerturbationSpec::validate() const {
  if (!(strength > 0.0 && strength <= 1.0)) fail(ErrorKind::InvalidArgument, "strength must be in (0, 1]");
  if (count < 1) fail(ErrorKind::InvalidArgument, "count must be at least 1");
}

void SynonymTable::add(std::string word, std::vector<std::string> synonyms) {
  word = lower(trim(word));
  std::vector<std::string> kept;
  for (auto& s : synonyms) {
    auto t = trim(s);
    if (t.empty() || lower(t) == word) continue;
    if (std::find(kept.begin(), kept.end(), t) == kept.end()) kept.push_back(std::move(t));
  }
  if (word.empty()) fail(ErrorKind::InvalidArgument, "synonym entry without a head word");
  if (kept.empty()) fail(ErrorKind::InvalidArgument, "word '" + word + "' has no synonym other than itself");
  table_[word] = std::move(kept);
}

SynonymTable SynonymTable::parse(std::string_view text) {
  SynonymTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      fail(ErrorKind::ParseError, "synonym line " + std::to_string(lineno) + " lacks ':'");
    }
    std::vector<std::string> syns;
    std::istringstream list(line.substr(colon + 1));
    for (std::string item; std::getline(list, item, ',');) syns.push_back(item);
    table.add(line.substr(0, colon), std::move(syns));
  }
  return table;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open synonym table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::vector<std::string>* SynonymTable::find(std::string_view word) const {
  const auto it = table_.find(word);
  return it == table_.end() ? nullptr : &it->second;
}

std::size_t perturbation_ops(double alpha, std::size_t words) noexcept {
  const auto n = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(words)));
  return std::max<std::size_t>(1, n);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

std::vector<PromptTemplate> perturb_prompt(const PromptTemplate& tmpl, const PerturbationSpec& spec,
                                           const SynonymTable* synonyms) {
  spec.validate();
  tmpl.validate();
  const bool needs_table =
      spec.op == PerturbationOp::SynonymReplacement || spec.op == PerturbationOp::RandomInsertion;
  if (needs_table && synonyms == nullptr) {
    fail(ErrorKind::MissingSynonymTable, std::string(to_code(spec.op)) + " requires a synonym table");
  }

  const auto words = split_words(tmpl.template_text);
  const auto editable = editable_positions(words).size();
  if (editable == 0) fail(ErrorKind::NoEligibleWords, "template '" + tmpl.id + "' has no editable words");
  const auto n_ops = perturbation_ops(spec.strength, editable);

  const std::string tag = std::string(to_code(spec.op)) + "-" + format_alpha(spec.strength) + "-s" +
                          std::to_string(spec.seed);
  std::vector<PromptTemplate> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int v = 0; v < spec.count; ++v) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(v)));
    std::vector<std::string> edited;
    switch (spec.op) {
      case PerturbationOp::SynonymReplacement: edited = synonym_replacement(words, n_ops, *synonyms, rng); break;
      case PerturbationOp::RandomInsertion: edited = random_insertion(words, n_ops, *synonyms, rng); break;
      case PerturbationOp::RandomSwap: edited = random_swap(words, n_ops, rng); break;
      case PerturbationOp::RandomDeletion: edited = random_deletion(words, spec.strength, rng); break;
    }
    PromptTemplate variant;
    variant.id = tmpl.id + "~" + tag + "-v" + std::to_string(v);
    variant.causal_tag = tmpl.causal_tag;
    variant.template_text = join(edited);
    variant.variant_tag = "perturbed-" + tag + "-v" + std::to_string(v);
    variant.validate();
    out.push_back(std::move(variant));
  }
  return out;
}

}  // namespace causal_probe
