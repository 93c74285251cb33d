#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace causal_probe;

namespace {

/// Records for three prompts over ids s0..s{n-1}, one-hot at the given argmaxes.
struct Fixture {
  std::vector<std::vector<PredictionRecord>> records{3};
  GoldIndex golds;
};

Fixture make(const std::vector<std::array<int, 4>>& rows) {  // {p1, p2, p3, gold}
  Fixture f;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto id = "s" + std::to_string(i);
    for (std::size_t p = 0; p < 3; ++p) {
      PredictionRecord r;
      r.sample_id = id;
      r.prompt_id = "p" + std::to_string(p);
      r.raw = LabelDistribution::uniform();
      r.calibrated = LabelDistribution::one_hot(RatingLabel(rows[i][p]));
      f.records[p].push_back(r);
    }
    f.golds.emplace(id, RatingLabel(rows[i][3]));
  }
  return f;
}

}  // namespace

TEST_CASE("partition examples") {
  const auto f = make({{1, 1, 1, 1}, {1, 1, 5, 5}, {2, 2, 2, 4}});
  const auto part = partition(f.records, f.golds);
  CHECK(part.same_correct == std::vector<std::string>{"s0"});
  CHECK(part.diverse == std::vector<std::string>{"s1"});
  CHECK(part.same_incorrect == std::vector<std::string>{"s2"});

  const auto aligned = align_predictions(f.records, f.golds);
  CHECK(diverse_failures(part.diverse, aligned, 0) == std::vector<std::string>{"s1"});
  CHECK(diverse_failures(part.diverse, aligned, 1) == std::vector<std::string>{"s1"});
  CHECK(diverse_failures(part.diverse, aligned, 2).empty());
  CHECK(diverse_failures({}, aligned, 0).empty());
}

TEST_CASE("partition covers every id exactly once") {
  std::mt19937 gen(17);
  std::uniform_int_distribution<int> l(1, 5);
  std::vector<std::array<int, 4>> rows(400);
  for (auto& r : rows)
    for (auto& x : r) x = l(gen);
  const auto f = make(rows);
  const auto part = partition(f.records, f.golds);
  std::multiset<std::string> all;
  for (const auto* s : {&part.same_correct, &part.same_incorrect, &part.diverse}) all.insert(s->begin(), s->end());
  CHECK(all.size() == rows.size());
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == rows.size());

  const auto aligned = align_predictions(f.records, f.golds);
  for (const auto& id : part.diverse) {
    int hits = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const auto fails = diverse_failures(part.diverse, aligned, p);
      hits += std::binary_search(fails.begin(), fails.end(), id);
    }
    CHECK(hits >= 1);
    CHECK(hits <= 3);
  }
}

TEST_CASE("alignment errors") {
  auto f = make({{1, 1, 1, 1}, {2, 2, 2, 2}});
  f.records[1].pop_back();
  CHECK_THROWS_AS(align_predictions(f.records, f.golds), Error);

  auto g = make({{1, 1, 1, 1}});
  g.records[0][0].calibrated.reset();
  try {
    align_predictions(g.records, g.golds);
    FAIL("expected MissingCalibration");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingCalibration);
  }
  CHECK_NOTHROW(align_predictions(g.records, g.golds, DistributionSource::Raw));

  auto h = make({{1, 1, 1, 1}});
  h.golds.clear();
  CHECK_THROWS_AS(align_predictions(h.records, h.golds), Error);
}

TEST_CASE("decile slices") {
  std::vector<std::string> ids;
  std::map<std::string, double> div;
  for (int i = 0; i < 10; ++i) {
    ids.push_back("d" + std::to_string(i));
    div[ids.back()] = 0.1 * ((i * 7) % 10);
  }
  const auto s = decile_slices(ids, div, 0.10);
  CHECK(s.lowest == std::vector<std::string>{"d0"});
  CHECK(s.highest == std::vector<std::string>{"d7"});  // 7*7 % 10 = 9

  std::vector<std::string> many;
  std::map<std::string, double> flat;
  for (int i = 0; i < 5994; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "x%05d", i);
    many.push_back(buf);
    flat[buf] = 0.5;
  }
  const auto big = decile_slices(many, flat, 0.10);
  CHECK(big.lowest.size() == 599);
  CHECK(big.highest.size() == 599);
  CHECK(big.lowest.front() == "x00000");
  CHECK(big.highest.back() == "x05993");

  CHECK_THROWS_AS(decile_slices({}, flat, 0.1), Error);
  CHECK_THROWS_AS(decile_slices(many, flat, 0.6), Error);
}

TEST_CASE("subset statistics on two samples") {
  Dataset d{"d", {{"a", "good food here", RatingLabel(5)}, {"b", "bad bad place ok", RatingLabel(1)}}};
  const std::vector<OpinionCounts> counts = {{"a", 3, 1, 3}, {"b", 1, 4, 4}};
  auto ctx = make_subset_context(d, counts, {{"a", 0.2}, {"b", 0.6}});
  const std::vector<std::string> ids = {"b", "a"};
  const auto r = subset_stats(SubsetKind::Overall, "Overall", ids, ctx);
  CHECK(r.n_samples == 2);
  CHECK(*r.words_per_sample == 3.5);
  CHECK(*r.pos_mean == 2.0);
  CHECK(*r.pos_std == 1.0);
  CHECK(*r.neg_mean == 2.5);
  CHECK(*r.neg_std == 1.5);
  CHECK(*r.pos_plus_neg == 4.5);
  CHECK((*r.label_pct)[0] == 50.0);
  CHECK((*r.label_pct)[4] == 50.0);
  CHECK(*r.mean_diversity == doctest::Approx(0.4).epsilon(1e-15));
  const double expect_oep = std::abs(3 / 2.0 - 1 / 2.5) + std::abs(1 / 2.0 - 4 / 2.5);
  CHECK(*r.oep == doctest::Approx(expect_oep).epsilon(1e-15));
  CHECK(*r.oep_per_sample == doctest::Approx(expect_oep / 2).epsilon(1e-15));

  ctx.oep_means = OpinionMeans{1.0, 1.0};
  CHECK(*subset_stats(SubsetKind::Overall, "Overall", ids, ctx).oep == 2.0 + 3.0);

  const auto empty = subset_stats(SubsetKind::Random, "Random", {}, ctx);
  CHECK(empty.n_samples == 0);
  CHECK_FALSE(empty.pos_mean.has_value());
  CHECK_FALSE(empty.mean_diversity.has_value());

  const std::vector<std::string> stranger = {"zz"};
  CHECK_THROWS_AS(subset_stats(SubsetKind::Random, "Random", stranger, ctx), Error);
}

TEST_CASE("subset aggregation is consistent with its parts") {
  std::mt19937 gen(23);
  std::uniform_int_distribution<int> c(0, 9), l(1, 5);
  Dataset d{"d", {}};
  std::vector<OpinionCounts> counts;
  std::map<std::string, double> div;
  std::vector<std::string> ids;
  for (int i = 0; i < 60; ++i) {
    const auto id = "r" + std::to_string(i);
    d.samples.push_back({id, "w w w", RatingLabel(l(gen))});
    counts.push_back({id, static_cast<std::uint64_t>(c(gen)), static_cast<std::uint64_t>(c(gen)), 3});
    div[id] = c(gen) / 10.0;
    ids.push_back(id);
  }
  const auto ctx = make_subset_context(d, counts, div);
  const std::vector<std::string> left(ids.begin(), ids.begin() + 25), right(ids.begin() + 25, ids.end());
  const auto all = subset_stats(SubsetKind::Overall, "all", ids, ctx);
  const auto a = subset_stats(SubsetKind::Random, "a", left, ctx);
  const auto b = subset_stats(SubsetKind::Random, "b", right, ctx);
  CHECK(*all.pos_mean == doctest::Approx((25 * *a.pos_mean + 35 * *b.pos_mean) / 60).epsilon(1e-12));
  CHECK(*all.mean_diversity == doctest::Approx((25 * *a.mean_diversity + 35 * *b.mean_diversity) / 60).epsilon(1e-12));
  double pct = 0;
  for (double p : *all.label_pct) pct += p;
  CHECK(pct == doctest::Approx(100.0));
  int rounded = 0;
  for (int p : *all.label_pct_rounded) rounded += p;
  CHECK(rounded == 100);
}

TEST_CASE("largest-remainder percentage rounding") {
  CHECK(round_percentages({20, 20, 20, 20, 20}) == std::array<int, 5>{20, 20, 20, 20, 20});
  const double third = 100.0 / 3.0;
  CHECK(round_percentages({third, third, third, 0, 0}) == std::array<int, 5>{34, 33, 33, 0, 0});
  CHECK(round_percentages({12.5, 37.5, 12.5, 37.5, 0}) == std::array<int, 5>{13, 38, 12, 37, 0});
}
