#include <cmath>
#include <vector>

#include "causal_probe/error.hpp"
#include "causal_probe/lexicon.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace causal_probe;

namespace {

OpinionCounts counts(std::uint64_t p, std::uint64_t n) { return {"x", p, n, 0}; }

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Terrible service!!") == std::vector<std::string>{"terrible", "service"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("well-done FOOD") == std::vector<std::string>{"well-done", "food"});
  CHECK(tokenize("don't ... stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(whitespace_word_count("don't ... stop") == 3);
  CHECK(whitespace_word_count("  ") == 0);
}

TEST_CASE("opinion counting") {
  OpinionLexicon lex{{"good", "great", "fine"}, {"terrible", "rude", "fine"}};
  const ReviewSample s{"s", "terrible rude terrible", RatingLabel(1)};
  const auto c = count_opinion(s, lex);
  CHECK(c.w_neg == 3);
  CHECK(c.w_pos == 0);
  CHECK(c.n_tokens == 3);

  CHECK(count_opinion({"t", "nothing here", RatingLabel(3)}, lex) == OpinionCounts{"t", 0, 0, 2});
  const auto both = count_opinion({"u", "Fine, fine.", RatingLabel(3)}, lex);
  CHECK(both.w_pos == 2);
  CHECK(both.w_neg == 2);
}

TEST_CASE("corpus means, OEP and polarity difference") {
  const std::vector<OpinionCounts> one = {counts(4, 2)};
  CHECK(corpus_means(one).mean_pos == 4.0);
  CHECK(corpus_means(one).mean_neg == 2.0);
  const std::vector<OpinionCounts> two = {counts(2, 0), counts(4, 2)};
  CHECK(corpus_means(two).mean_pos == 3.0);
  CHECK(corpus_means(two).mean_neg == 1.0);

  const std::vector<OpinionCounts> balanced = {counts(2, 1), counts(4, 2)};
  CHECK(oep(balanced, 3.0, 1.5) == 0.0);
  const std::vector<OpinionCounts> opposite = {counts(3, 0), counts(0, 3)};
  CHECK(oep(opposite, 3.0, 3.0) == 2.0);
  CHECK_THROWS_AS(oep(opposite, 0.0, 3.0), Error);

  CHECK(polarity_difference(counts(5, 2)) == 3);
  CHECK(polarity_difference(counts(0, 0)) == 0);
  CHECK(polarity_difference(counts(2, 7)) == 5);
}

TEST_CASE("OEP with non-integer means") {
  // A sample at twice the positive mean and no negatives contributes 2.
  const std::vector<OpinionCounts> one = {counts(2, 0)};
  CHECK(oep(one, 1.0, 3.12) == 2.0);
  const std::vector<OpinionCounts> v = {counts(7, 1), counts(1, 4)};
  const double expect = std::abs(7 / 6.33 - 1 / 3.12) + std::abs(1 / 6.33 - 4 / 3.12);
  CHECK(oep(v, 6.33, 3.12) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("word list files") {
  test_support::TempDir dir;
  test_support::write_file(dir / "pos.txt", "; comment\n;\nGood \n\n  great\n");
  const auto words = load_word_list(dir / "pos.txt");
  CHECK(words.size() == 2);
  CHECK(words.count("good") == 1);
  CHECK(words.count("great") == 1);

  test_support::write_file(dir / "empty.txt", "; nothing\n");
  CHECK_THROWS_AS(load_opinion_lexicon(dir / "pos.txt", dir / "empty.txt"), Error);
  CHECK_THROWS_AS(load_word_list(dir / "absent.txt"), Error);
}
