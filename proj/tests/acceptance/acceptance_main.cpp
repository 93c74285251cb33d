// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail N[,M...]]
//
// Exit status is 0 when the failing criteria are exactly the expected set.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/backend.hpp"
#include "causal_probe/error.hpp"
#include "causal_probe/lexicon.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/perturb.hpp"
#include "causal_probe/pipeline.hpp"
#include "causal_probe/prompt_pack.hpp"
#include "causal_probe/report.hpp"
#include "causal_probe/scoring.hpp"
#include "test_support.hpp"

using namespace causal_probe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Collects the first few failed expectations of one criterion.
class Checker {
 public:
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok_ = false;
    if (++failures_ <= 3) msgs_ << (msgs_.tellp() > 0 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  Outcome done() const {
    std::string d = notes_.str();
    if (!ok_) d += (d.empty() ? "" : " | ") + std::to_string(failures_) + " failed: " + msgs_.str();
    return {ok_, d};
  }

 private:
  bool ok_ = true;
  int failures_ = 0;
  std::ostringstream msgs_, notes_;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. metric laws

Outcome metric_laws() {
  Checker c;
  std::mt19937_64 gen(1001);
  constexpr int kCases = 10000;
  const double log2_5 = std::log2(5.0);

  for (int i = 0; i < kCases; ++i) {
    const auto p = test_support::random_distribution(gen);
    const auto q = test_support::random_distribution(gen);
    const auto r = test_support::random_distribution(gen);
    const double pq = total_variation(p, q), qp = total_variation(q, p);
    c.expect(pq == qp, "TV symmetry");
    c.expect(total_variation(p, p) == 0.0, "TV identity");
    c.expect(pq <= total_variation(p, r) + total_variation(r, q) + 1e-12, "TV triangle");
    c.expect(pq >= 0.0 && pq <= 1.0, "TV range");

    const double h = entropy(p);
    c.expect(h >= 0.0 && h <= log2_5 + 1e-12, "entropy range");
    c.expect(perplexity(p) == std::pow(2.0, h), "perplexity = 2^entropy");

    std::uniform_int_distribution<int> lab(1, 5), len(1, 50);
    std::vector<RatingLabel> golds;
    for (int k = len(gen); k > 0; --k) golds.emplace_back(lab(gen));
    c.expect(accuracy(golds, golds) == 1.0, "accuracy on perfect predictions");
    c.expect(weighted_f1(golds, golds) == 1.0, "weighted F1 on perfect predictions");
  }
  c.expect(std::abs(entropy(LabelDistribution::uniform()) - 2.321928) <= 1e-6 &&
               std::abs(entropy(LabelDistribution::uniform()) - log2_5) <= 1e-9,
           "uniform entropy");
  for (int l = 1; l <= 5; ++l) c.expect(entropy(LabelDistribution::one_hot(RatingLabel(l))) == 0.0, "one-hot entropy");
  c.note(std::to_string(kCases) + " cases per law");
  return c.done();
}

// ---------------------------------------------------------------------------
// 2. partition exhaustiveness

Outcome partition_laws() {
  Checker c;
  std::mt19937 gen(2002);
  std::uniform_int_distribution<int> lab(1, 5);
  constexpr int kSamples = 1000;

  std::vector<std::vector<PredictionRecord>> recs(3);
  GoldIndex golds;
  std::vector<std::string> ids;
  for (int i = 0; i < kSamples; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%04d", i);
    ids.push_back(id);
    golds.emplace(id, RatingLabel(lab(gen)));
    for (std::size_t p = 0; p < 3; ++p) {
      PredictionRecord r;
      r.sample_id = id;
      r.prompt_id = "p" + std::to_string(p);
      // Occasionally tie-heavy distributions, so argmax tie-breaking is exercised.
      std::array<double, 5> w{};
      const int a = lab(gen), b = lab(gen);
      w[a - 1] += 0.5;
      w[b - 1] += 0.5;
      r.raw = validate_distribution(w);
      r.calibrated = r.raw;
      recs[p].push_back(std::move(r));
    }
  }
  const auto aligned = align_predictions(recs, golds);
  const auto part = partition(aligned);

  std::map<std::string, int> seen;
  for (const auto* cell : {&part.same_correct, &part.same_incorrect, &part.diverse})
    for (const auto& id : *cell) ++seen[id];
  c.expect(seen.size() == ids.size(), "union covers all ids");
  for (const auto& [id, n] : seen) c.expect(n == 1, "cells are disjoint (" + id + ")");

  // Independent recomputation of each cell.
  for (std::size_t i = 0; i < aligned.ids.size(); ++i) {
    const auto& a = aligned.argmaxes;
    const bool agree = a[0][i] == a[1][i] && a[1][i] == a[2][i];
    const auto& cell = !agree ? part.diverse : (a[0][i] == aligned.golds[i] ? part.same_correct : part.same_incorrect);
    c.expect(std::binary_search(cell.begin(), cell.end(), aligned.ids[i]), "cell membership " + aligned.ids[i]);
  }

  std::array<std::vector<std::string>, 3> fails;
  for (std::size_t p = 0; p < 3; ++p) fails[p] = diverse_failures(part.diverse, aligned, p);
  for (const auto& id : part.diverse) {
    int n = 0;
    for (const auto& f : fails) n += std::binary_search(f.begin(), f.end(), id);
    c.expect(n >= 1 && n <= 3, "diverse sample in 1-3 failure sets");
  }
  c.note("SC " + std::to_string(part.same_correct.size()) + ", SI " + std::to_string(part.same_incorrect.size()) +
         ", D " + std::to_string(part.diverse.size()));
  return c.done();
}

// ---------------------------------------------------------------------------
// 3. calibration effectiveness

// Objective under lambda from first principles: argmax of lambda*raw,
// lowest label on ties, L1 to uniform.
int grid_objective_x100(const std::vector<std::array<double, 5>>& raws, const std::array<double, 5>& lam) {
  std::array<int, 5> hist{};
  for (const auto& r : raws) {
    std::size_t best = 0;
    double bv = lam[0] * r[0];
    for (std::size_t i = 1; i < 5; ++i) {
      const double v = lam[i] * r[i];
      if (v > bv) best = i, bv = v;
    }
    ++hist[best];
  }
  int l1 = 0;
  for (int h : hist) l1 += std::abs(h - static_cast<int>(raws.size()) / 5);
  return l1;
}

Outcome calibration_effect() {
  Checker c;
  const auto f = test_support::label3_bias_fixture();
  const auto uniform = LabelDistribution::uniform();
  const auto fit = learn_lambda(f.raws, f.golds, uniform);

  std::vector<std::array<double, 5>> raws;
  for (const auto& r : f.raws) raws.push_back(r.probs());

  // Exhaustive search over the positive 0.01 simplex; stops at a perfect score.
  int best = 1 << 30;
  std::size_t points = 0;
  for (int a = 1; a <= 96 && best > 0; ++a)
    for (int b = 1; a + b <= 97 && best > 0; ++b)
      for (int d = 1; a + b + d <= 98 && best > 0; ++d)
        for (int e = 1; a + b + d + e <= 99 && best > 0; ++e) {
          const int g = 100 - a - b - d - e;
          ++points;
          best = std::min(best, grid_objective_x100(raws, {a / 100.0, b / 100.0, d / 100.0, e / 100.0, g / 100.0}));
        }
  const double grid_best = best / 100.0;
  const double uncal = grid_objective_x100(raws, {1, 1, 1, 1, 1}) / 100.0;

  c.expect(uncal >= 0.4, "uncalibrated objective " + fmt(uncal) + " < 0.4");
  c.expect(std::abs(fit.uniform_objective - uncal) < 1e-12, "uniform objective disagrees with the oracle");
  c.expect(fit.objective <= 0.05, "learned objective " + fmt(fit.objective) + " > 0.05");
  c.expect(std::abs(fit.objective - grid_best) <= 0.02,
           "learned " + fmt(fit.objective) + " vs grid optimum " + fmt(grid_best) + " differ by > 0.02");
  c.note("uncalibrated " + fmt(uncal) + ", learned " + fmt(fit.objective) + " after " + std::to_string(fit.iterations) +
         " iterations, grid optimum " + fmt(grid_best) + " (" + std::to_string(points) + " points)");
  return c.done();
}

// ---------------------------------------------------------------------------
// 4. scoring correctness

std::string oracle_normalize(const std::string& tok) {
  std::size_t i = 0;
  while (i < tok.size() && std::isspace(static_cast<unsigned char>(tok[i]))) ++i;
  std::string out;
  for (; i < tok.size(); ++i) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(tok[i]))));
  return out;
}

Outcome scoring_correctness() {
  Checker c;
  const std::map<std::string, int> forms = {{"1", 0}, {"one", 0},   {"2", 1},    {"two", 1}, {"3", 2},
                                            {"three", 2}, {"4", 3}, {"four", 3}, {"5", 4},   {"five", 4}};
  const std::vector<std::string> pool = {"1",     " 1",    "one",   " one",  "One",   " One",  "2",     " 2",
                                         "two",   " Two",  "3",     " 3",    "three", " Three", "4",     " 4",
                                         "four",  " Four", "5",     " 5",    "five",  " Five", " stars", "\n",
                                         " the",  "!",     " 10",   "0",     " sixty", "ONE",  "\tTwo",  " fives"};
  const auto map = SurfaceFormMap::defaults();
  std::mt19937_64 gen(4004);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1), len(1, 20);
  std::uniform_real_distribution<double> lp(-25.0, 0.0);
  double worst = 0.0;
  constexpr int kLists = 500;
  for (int t = 0; t < kLists; ++t) {
    std::vector<TokenLogprob> topk;
    for (std::size_t k = len(gen); k > 0; --k) topk.push_back({pool[pick(gen)], lp(gen)});
    topk.push_back({pool[pick(gen) % 22], lp(gen)});  // at least one label token

    std::array<double, 5> mass{};
    for (const auto& tl : topk) {
      const auto it = forms.find(oracle_normalize(tl.token));
      if (it != forms.end()) mass[it->second] += std::exp(tl.logprob);
    }
    double total = 0.0;
    for (double m : mass) total += m;
    const auto got = score_labels(topk, map);
    for (std::size_t i = 0; i < 5; ++i) {
      const double diff = std::abs(got[i] - mass[i] / total);
      worst = std::max(worst, diff);
      c.expect(diff <= 1e-12, "label " + std::to_string(i + 1) + " off by " + std::to_string(diff));
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", worst);
  c.note(std::to_string(kLists) + " lists, max abs diff " + buf);
  return c.done();
}

// ---------------------------------------------------------------------------
// 5. opinion counting and OEP

std::vector<std::string> oracle_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string piece; in >> piece;) {
    std::string t;
    for (char ch : piece) {
      const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9') || l == '\'' || l == '-') t.push_back(l);
    }
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

Outcome opinion_counting() {
  Checker c;
  const std::vector<std::string> pos = {"good",  "great", "tasty",   "fresh",   "friendly", "lovely",   "amazing", "clean",
                                        "cozy",  "fun",   "perfect", "awesome", "nice",     "well-done"};
  const std::vector<std::string> neg = {"bad",  "awful", "bland", "cold",   "rude",     "slow",    "dirty", "stale",
                                        "soggy", "noisy", "worst", "greasy", "overpriced", "don't", "nice", "salty"};
  OpinionLexicon lex;
  for (const auto& w : pos) lex.positive.insert(w);
  for (const auto& w : neg) lex.negative.insert(w);
  c.expect(lex.positive.size() + lex.negative.size() == 30, "lexicon has 30 entries");

  const std::vector<std::string> texts = {
      "Good food, GREAT service!!",
      "The soup was cold and the bread was stale.",
      "Nice place -- nice people; nice prices.",
      "Rude waiter. Slow kitchen. Dirty tables. Worst night ever",
      "Well-done steak, tasty fries and fresh salad",
      "I don't know what to say",
      "",
      "awful awful awful",
      "clean, cozy and fun; lovely, lovely patio",
      "Greasy, salty, soggy: overpriced!",
      "The 5 star hype is real: amazing & awesome",
      "bland bland but friendly",
      "Perfect.",
      "noisy",
      "good-ish food, bad-ish mood",
      "  GOOD\tgood\ngood  ",
      "It was fine, I guess.",
      "Not bad, not great, not terrible",
      "COLD coffee; FRESH pastries; friendly staff",
      "The worst and the best: stale chips, perfect salsa",
  };
  c.expect(texts.size() == 20, "20 samples");

  std::vector<OpinionCounts> got;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> expect;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const ReviewSample s{"r" + std::to_string(i), texts[i].empty() ? " " : texts[i], RatingLabel(3)};
    got.push_back(count_opinion(s, lex));
    std::uint64_t p = 0, n = 0;
    for (const auto& t : oracle_tokens(s.text)) {
      for (const auto& w : pos) p += (t == w);
      for (const auto& w : neg) n += (t == w);
    }
    expect.emplace_back(p, n);
    c.expect(got.back().w_pos == p && got.back().w_neg == n, "counts for sample " + std::to_string(i));
    const std::uint64_t diff = p > n ? p - n : n - p;
    c.expect(polarity_difference(got.back()) == diff, "polarity difference " + std::to_string(i));
  }

  double sp = 0, sn = 0;
  for (const auto& [p, n] : expect) sp += static_cast<double>(p), sn += static_cast<double>(n);
  const double mp = sp / 20.0, mn = sn / 20.0;
  const auto means = corpus_means(got);
  c.expect(std::abs(means.mean_pos - mp) <= 1e-12 && std::abs(means.mean_neg - mn) <= 1e-12, "corpus means");

  double o = 0.0;
  for (const auto& [p, n] : expect) o += std::abs(static_cast<double>(p) / mp - static_cast<double>(n) / mn);
  const double got_oep = oep(got, means.mean_pos, means.mean_neg);
  c.expect(std::abs(got_oep - o) <= 1e-12, "oep " + fmt(got_oep, 12) + " vs " + fmt(o, 12));
  c.note("means " + fmt(mp) + "/" + fmt(mn) + ", oep " + fmt(o));
  return c.done();
}

// ---------------------------------------------------------------------------
// 6 and 7. golden run and cache contract

struct GoldenState {
  std::unique_ptr<test_support::TempDir> dir;
  RunConfig cfg;
};

GoldenState& golden_state() {
  static GoldenState s;
  return s;
}

void run_and_report(const RunConfig& cfg) {
  const auto store = run(cfg);
  write_report(build_report(store), cfg.output_dir, ReportFormat::Both);
}

Outcome golden_run() {
  Checker c;
  auto& st = golden_state();
  st.dir = std::make_unique<test_support::TempDir>("cp-accept");
  st.cfg = load_run_config(test_support::fixture_dir() / "config.toml");
  st.cfg.cache_dir = *st.dir / "cache";
  st.cfg.output_dir = *st.dir / "out";
  c.expect(st.cfg.backend.kind == "replay", "fixture uses the replay backend");

  const auto before = backend_call_count();
  run_and_report(st.cfg);
  const auto calls = backend_call_count() - before;
  const auto golden = test_support::source_dir() / "tests" / "golden" / "yelp-mini";
  for (const char* f : {"report.json", "metrics.csv", "subsets.csv"}) {
    const auto a = test_support::read_file(st.cfg.output_dir / f);
    const auto b = test_support::read_file(golden / f);
    c.expect(!b.empty() && a == b, std::string(f) + " differs from golden");
  }
  c.note(std::to_string(calls) + " replay calls");
  return c.done();
}

Outcome cache_contract() {
  Checker c;
  auto& st = golden_state();
  if (!st.dir) {
    c.expect(false, "criterion 6 did not run");
    return c.done();
  }
  const auto before = backend_call_count();
  const auto t0 = std::chrono::steady_clock::now();
  run_and_report(st.cfg);
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - t0;
  const auto calls = backend_call_count() - before;
  c.expect(calls == 0, std::to_string(calls) + " backend calls on re-run");
  c.expect(took.count() < 2.0, "re-run took " + fmt(took.count(), 2) + " s");
  const auto golden = test_support::source_dir() / "tests" / "golden" / "yelp-mini" / "report.json";
  c.expect(test_support::read_file(st.cfg.output_dir / "report.json") == test_support::read_file(golden),
           "cached re-run report differs");
  c.note("0 calls expected, " + std::to_string(calls) + " seen");
  st.dir.reset();
  return c.done();
}

// ---------------------------------------------------------------------------
// 8. perturbation determinism and guards

std::size_t oracle_placeholder_count(const std::string& s) {
  std::size_t n = 0;
  for (auto at = s.find("{review}"); at != std::string::npos; at = s.find("{review}", at + 8)) ++n;
  return n;
}

Outcome perturbation_laws() {
  Checker c;
  const auto table = SynonymTable::load(test_support::source_dir() / "fixtures" / "synonyms.txt");
  const std::vector<std::string> vocab = {"I",     "just",  "finished", "eating", "at",     "a",       "restaurant.",
                                          "Then",  "opened", "my",      "Yelp",   "app,",   "rating",  "of",
                                          "Review:", "the",  "user",    "gave",   "(out",   "stars)",  "think",
                                          "good",  "GREAT", "wrote",    "this",   "review", "\"quoted\"", "--"};
  const std::vector<std::string> holders = {"{review}", "{review}.", "({review})", "\"{review}\""};
  std::mt19937_64 gen(8008);
  std::uniform_int_distribution<std::size_t> vw(0, vocab.size() - 1), hw(0, holders.size() - 1), len(1, 25);
  std::uniform_int_distribution<int> opd(0, 3), cnt(1, 3);
  std::uniform_real_distribution<double> alpha(1e-3, 1.0);
  constexpr int kPairs = 1000;
  int checked_variants = 0;

  for (int t = 0; t < kPairs; ++t) {
    std::vector<std::string> words;
    for (std::size_t k = len(gen); k > 0; --k) words.push_back(vocab[vw(gen)]);
    words.push_back("rating");  // keeps synonym ops eligible
    const auto ph = holders[hw(gen)];
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(gen() % (words.size() + 1)), ph);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    const PromptTemplate tmpl{"t" + std::to_string(t), CausalTag::Custom, text, std::nullopt};
    const PerturbationSpec spec{static_cast<PerturbationOp>(opd(gen)), alpha(gen), gen(), cnt(gen)};

    const auto out = perturb_prompt(tmpl, spec, &table);
    const auto again = perturb_prompt(tmpl, spec, &table);
    c.expect(out.size() == static_cast<std::size_t>(spec.count), "variant count");
    const std::size_t editable = words.size() - 1;
    const std::size_t n_ops = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.strength * editable)));

    for (std::size_t v = 0; v < out.size(); ++v) {
      ++checked_variants;
      const auto& txt = out[v].template_text;
      c.expect(txt == again[v].template_text && out[v].id == again[v].id, "determinism");
      c.expect(oracle_placeholder_count(txt) == 1, "placeholder exactly once");
      const auto w = split_words(txt);
      c.expect(std::count(w.begin(), w.end(), ph) == 1, "placeholder word intact");
      switch (spec.op) {
        case PerturbationOp::SynonymReplacement: {
          c.expect(w.size() == words.size(), "SR keeps word count");
          std::size_t changed = 0;
          for (std::size_t i = 0; i < w.size() && w.size() == words.size(); ++i) changed += w[i] != words[i];
          c.expect(changed >= 1 && changed <= n_ops, "SR edits 1..n_ops words");
          break;
        }
        case PerturbationOp::RandomInsertion:
          c.expect(w.size() == words.size() + n_ops, "RI adds n_ops words");
          break;
        case PerturbationOp::RandomSwap: {
          auto x = w, y = words;
          std::sort(x.begin(), x.end());
          std::sort(y.begin(), y.end());
          c.expect(x == y, "RS keeps the word multiset");
          const auto at = std::find(words.begin(), words.end(), ph) - words.begin();
          c.expect(static_cast<std::size_t>(at) < w.size() && w[at] == ph, "RS leaves the placeholder in place");
          break;
        }
        case PerturbationOp::RandomDeletion: {
          c.expect(w.size() >= 2 && w.size() <= words.size(), "RD length bounds");
          std::size_t j = 0;  // result must be a subsequence of the input
          for (std::size_t i = 0; i < words.size() && j < w.size(); ++i) j += words[i] == w[j];
          c.expect(j == w.size(), "RD keeps order");
          break;
        }
      }
    }
  }
  c.note(std::to_string(kPairs) + " pairs, " + std::to_string(checked_variants) + " variants");
  return c.done();
}

// ---------------------------------------------------------------------------
// 9. ingest stratification

Outcome ingest_stratification() {
  Checker c;
  Dataset balanced{"balanced", {}};
  for (int i = 0; i < 100; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "b%03d", i);
    balanced.samples.push_back({id, "review " + std::to_string(i), RatingLabel(i % 5 + 1)});
  }
  int sizes = 0;
  for (std::size_t size = 5; size <= balanced.samples.size(); size += 5, ++sizes) {
    const auto d = ingest(balanced, 99, size);
    std::array<std::size_t, 5> counts{};
    std::set<std::string> ids;
    for (const auto& s : d.samples) ++counts[s.gold.index()], ids.insert(s.id);
    for (auto n : counts) c.expect(n == size / 5, "size " + std::to_string(size) + " per-label count");
    c.expect(ids.size() == size, "no duplicates at size " + std::to_string(size));
  }

  Dataset unbalanced = balanced;
  std::erase_if(unbalanced.samples, [](const ReviewSample& s) { return s.gold == RatingLabel(4) && s.id > "b050"; });
  try {
    ingest(unbalanced, 99, 100);
    c.expect(false, "unbalanced fixture accepted");
  } catch (const Error& e) {
    c.expect(e.kind() == ErrorKind::ShortStratum, "wrong error kind");
    c.expect(std::string(e.what()).find("label 4") != std::string::npos, "message does not name label 4");
  }
  c.note(std::to_string(sizes) + " sizes");
  return c.done();
}

// ---------------------------------------------------------------------------
// 10. reference metadata

Outcome reference_metadata() {
  Checker c;
  const std::map<std::string, std::string> expected = {
      {"c1-short",
       "I just finished eating at a restaurant. Then I opened my Yelp app. I first gave a rating, and then justified "
       "it by the following review: {review} The review explains why I gave it a rating of"},
      {"c1-long",
       "I just finished eating at a restaurant. Then I opened my Yelp app. I first gave a rating in terms of 1 to 5 "
       "stars, and then explained why I gave the rating by the following review: {review} The review is an "
       "explanation of why I rated it a"},
      {"c2-short",
       "I just finished eating at a restaurant. Then I opened my Yelp app. I first wrote the following review: "
       "{review} Then I read my review and finally gave a rating of"},
      {"c2-long",
       "I just finished eating at a restaurant. Then I opened my Yelp app. I first wrote the following review: "
       "{review} Then based on the review, I gave the rating in terms of 1 to 5 stars. I think this restaurant is "
       "worth a rating of"},
      {"c3-short",
       "I opened my Yelp app, and started reading reviews of a restaurant. I saw a user wrote this review: {review} "
       "I think this user gave a rating of"},
      {"c3-long",
       "I opened my Yelp app, and started to read some reviews of the restaurant that I wanted to try. I saw a user "
       "wrote this review: {review} I think this user gave a rating (out of 1 to 5 stars) of"},
  };
  const auto pack = builtin_pack(kBuiltinYelpPack);
  c.expect(pack.prompts.size() == 6, "pack has six prompts");
  for (const auto& [id, text] : expected) {
    const auto* p = pack.find(id);
    c.expect(p != nullptr && p->template_text == text, "prompt " + id + " text");
  }

  const auto readme = test_support::read_file(test_support::source_dir() / "README.md");
  for (const char* needle : {"6.33", "3.12", "0.3344", "0.6196", "0.73", "0.22", "0.03", "0.004", "0.01", "0.07",
                             "0.32", "0.44", "0.10", "0.13", "0.39", "0.09", "0.08", "0.31"}) {
    c.expect(readme.find(needle) != std::string::npos, std::string("README lacks ") + needle);
  }
  // Row-level check on the lambda table.
  for (const char* row : {"0.73 | 0.22 | 0.03 | 0.004 | 0.01", "0.07 | 0.32 | 0.44 | 0.07 | 0.10",
                          "0.13 | 0.39 | 0.09 | 0.08 | 0.31"}) {
    c.expect(readme.find(row) != std::string::npos, std::string("README lacks lambda row ") + row);
  }
  c.note("6 prompts, README reference table");
  return c.done();
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) expected_failures.insert(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N[,M...]]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "metric laws", 10.0, metric_laws},
      {2, "partition exhaustiveness", 1.0, partition_laws},
      {3, "calibration effectiveness", 5.0, calibration_effect},
      {4, "scoring correctness", 1.0, scoring_correctness},
      {5, "OEP and opinion counting", 1.0, opinion_counting},
      {6, "end-to-end golden run", 10.0, golden_run},
      {7, "cache contract", 2.0, cache_contract},
      {8, "perturbation determinism and guards", 2.0, perturbation_laws},
      {9, "ingest stratification", 1.0, ingest_stratification},
      {10, "reference metadata", 1.0, reference_metadata},
  };

  std::set<int> failed;
  for (const auto& cr : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = cr.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - t0;
    if (took.count() >= cr.budget_s) {
      out.ok = false;
      out.detail += " | over time budget of " + fmt(cr.budget_s, 0) + " s";
    }
    if (!out.ok) failed.insert(cr.id);
    std::printf("[%s] %2d %-36s %7.3f s  %s%s\n", out.ok ? "PASS" : "FAIL", cr.id, cr.name, took.count(),
                out.detail.c_str(), !out.ok && expected_failures.count(cr.id) ? " (expected failure)" : "");
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed.size(), criteria.size());
  if (failed != expected_failures) {
    for (int id : expected_failures)
      if (!failed.count(id)) std::printf("criterion %d was expected to fail but passed\n", id);
    return 1;
  }
  return 0;
}
