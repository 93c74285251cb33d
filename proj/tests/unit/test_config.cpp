#include <string>

#include "causal_probe/config.hpp"
#include "causal_probe/error.hpp"
#include "causal_probe/prompt_pack.hpp"
#include "doctest.h"
#include "test_support.hpp"
#include "toml_lite.hpp"

using namespace causal_probe;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("toml subset") {
  const auto doc = toml::parse(R"(
# comment
title = "a \"b\" \u00e9"
literal = 'C:\path'
multi = """
line one
line two"""
n = 1_000
neg = -3
f = 2.5e-1
yes = true
list = [1, 2,
  3,]
inline = { x = 1, y = "z" }
a.b.c = "dotted"

[table]
k = "v"

[[item]]
id = 1
[[item]]
id = 2
)");
  CHECK(doc["title"] == "a \"b\" \xc3\xa9");
  CHECK(doc["literal"] == "C:\\path");
  CHECK(doc["multi"] == "line one\nline two");
  CHECK(doc["n"] == 1000);
  CHECK(doc["neg"] == -3);
  CHECK(doc["f"] == 0.25);
  CHECK(doc["yes"] == true);
  CHECK(doc["list"].size() == 3);
  CHECK(doc["inline"]["y"] == "z");
  CHECK(doc["a"]["b"]["c"] == "dotted");
  CHECK(doc["table"]["k"] == "v");
  CHECK(doc["item"][1]["id"] == 2);

  CHECK(kind_of([] { toml::parse("x = \n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { toml::parse("x = 1\nx = 2\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { toml::parse("x = \"open\n"); }) == ErrorKind::ParseError);
  CHECK(toml::parse("s = " + toml::quote("tab\there \"q\" \\"))["s"] == "tab\there \"q\" \\");
}

TEST_CASE("run config from the mini fixture") {
  const auto cfg = load_run_config(test_support::fixture_dir() / "config.toml");
  CHECK(cfg.dataset == test_support::fixture_dir() / "test.jsonl");
  CHECK(cfg.calib_dataset == test_support::fixture_dir() / "train.jsonl");
  CHECK(cfg.backend.kind == "replay");
  CHECK(cfg.backend.top_logprobs == 5);
  CHECK(cfg.calib_size == 25);
  CHECK(cfg.test_size == 30u);
  CHECK(cfg.seed == 42);
  CHECK(cfg.random_subset_size == 10);
  CHECK(cfg.pos_lexicon.has_value());
  CHECK(cfg.partition_on == DistributionSource::Calibrated);
}

TEST_CASE("run config validation") {
  const fs::path base = "/tmp";
  const std::string ok = "dataset = \"d.jsonl\"\n[backend]\nkind = \"replay\"\nfixture = \"r.jsonl\"\n";
  CHECK_NOTHROW(parse_run_config(ok, base));
  CHECK(parse_run_config(ok, base).dataset == fs::path("/tmp/d.jsonl"));
  CHECK(kind_of([&] { parse_run_config(ok + "\n[extra]\nx = 1\n", base); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { parse_run_config("bogus = 1\n" + ok, base); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { parse_run_config("calib_size = 7\n" + ok, base); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { parse_run_config("entropy_base = \"dits\"\n" + ok, base); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { parse_run_config("dataset = \"d.jsonl\"\n", base); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { parse_run_config("seed = \"x\"\n" + ok, base); }) == ErrorKind::ConfigError);

  const auto prior = parse_run_config(ok + "[calibration]\ntarget_prior = [0.1, 0.2, 0.3, 0.2, 0.2]\n", base);
  REQUIRE(prior.target_prior.has_value());
  CHECK((*prior.target_prior)[2] == 0.3);

  const auto forms = parse_run_config(
      ok + "[surface_forms]\n\"1\" = [\"1\", \"awful\"]\n\"2\" = [\"2\"]\n\"3\" = [\"3\"]\n\"4\" = [\"4\"]\n\"5\" = "
      "[\"5\", \"Superb\"]\n",
      base);
  REQUIRE(forms.surface_forms.has_value());
  CHECK(forms.surface_forms->label_for(" superb") == RatingLabel(5));
}

TEST_CASE("prompt packs") {
  const auto builtin = builtin_pack(kBuiltinYelpPack);
  CHECK(builtin.prompts.size() == 6);
  const auto file = load_prompt_pack(test_support::source_dir() / "packs" / "yelp-causal-v1.toml");
  CHECK(prompt_pack_digest(file) == prompt_pack_digest(builtin));
  REQUIRE(file.prompts.size() == builtin.prompts.size());
  for (std::size_t i = 0; i < file.prompts.size(); ++i) {
    CHECK(file.prompts[i].template_text == builtin.prompts[i].template_text);
  }

  const auto back = parse_prompt_pack(prompt_pack_to_toml(builtin));
  CHECK(prompt_pack_digest(back) == prompt_pack_digest(builtin));

  CHECK(kind_of([] { builtin_pack("nope"); }) == ErrorKind::ConfigError);
  CHECK(resolve_prompt_pack("yelp-causal-v1").name == "yelp-causal-v1");
  CHECK(kind_of([] {
          parse_prompt_pack("name = \"x\"\n[[prompt]]\nid = \"a\"\ntemplate = \"no slot\"\n");
        }) == ErrorKind::InvalidTemplate);
  CHECK(kind_of([] {
          parse_prompt_pack(
              "[[prompt]]\nid = \"a\"\ntemplate = \"{review}\"\n[[prompt]]\nid = \"a\"\ntemplate = \"x {review}\"\n");
        }) == ErrorKind::InvalidTemplate);
}
