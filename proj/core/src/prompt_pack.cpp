#include "causal_probe/prompt_pack.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "causal_probe/error.hpp"
#include "causal_probe/hash.hpp"
#include "json.hpp"
#include "toml_lite.hpp"

namespace causal_probe {
namespace {

PromptTemplate make_prompt(std::string id, CausalTag tag, std::string variant, std::string text) {
  return {std::move(id), tag, std::move(text), std::move(variant)};
}

// Short and long verbosity pairs for the three causal framings. Each
// template stops where the model is asked to produce the rating.
PromptPack yelp_causal_v1() {
  PromptPack pack;
  pack.name = std::string(kBuiltinYelpPack);
  pack.prompts = {
      make_prompt("c1-short", CausalTag::C1, "short",
                  "I just finished eating at a restaurant. Then I opened my Yelp app. I first gave a rating, and "
                  "then justified it by the following review: {review} The review explains why I gave it a rating of"),
      make_prompt("c1-long", CausalTag::C1, "long",
                  "I just finished eating at a restaurant. Then I opened my Yelp app. I first gave a rating in terms "
                  "of 1 to 5 stars, and then explained why I gave the rating by the following review: {review} The "
                  "review is an explanation of why I rated it a"),
      make_prompt("c2-short", CausalTag::C2, "short",
                  "I just finished eating at a restaurant. Then I opened my Yelp app. I first wrote the following "
                  "review: {review} Then I read my review and finally gave a rating of"),
      make_prompt("c2-long", CausalTag::C2, "long",
                  "I just finished eating at a restaurant. Then I opened my Yelp app. I first wrote the following "
                  "review: {review} Then based on the review, I gave the rating in terms of 1 to 5 stars. I think "
                  "this restaurant is worth a rating of"),
      make_prompt("c3-short", CausalTag::C3, "short",
                  "I opened my Yelp app, and started reading reviews of a restaurant. I saw a user wrote this review: "
                  "{review} I think this user gave a rating of"),
      make_prompt("c3-long", CausalTag::C3, "long",
                  "I opened my Yelp app, and started to read some reviews of the restaurant that I wanted to try. I "
                  "saw a user wrote this review: {review} I think this user gave a rating (out of 1 to 5 stars) of"),
  };
  return pack;
}

}  // namespace

void PromptPack::validate() const {
  if (prompts.empty()) fail(ErrorKind::InvalidTemplate, "prompt pack '" + name + "' is empty");
  std::set<std::string> ids;
  for (const auto& p : prompts) {
    p.validate();
    if (!ids.insert(p.id).second) fail(ErrorKind::InvalidTemplate, "duplicate prompt id '" + p.id + "'");
  }
}

const PromptTemplate* PromptPack::find(std::string_view id) const {
  for (const auto& p : prompts) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

PromptPack parse_prompt_pack(std::string_view toml_text) {
  const auto doc = toml::parse(toml_text);
  PromptPack pack;
  try {
    pack.name = doc.value("name", std::string("unnamed"));
    if (!doc.contains("prompt") || !doc["prompt"].is_array()) {
      fail(ErrorKind::ParseError, "prompt pack needs [[prompt]] tables");
    }
    for (const auto& p : doc["prompt"]) {
      PromptTemplate t;
      t.id = p.at("id").get<std::string>();
      t.causal_tag = parse_causal_tag(p.value("causal_tag", std::string("custom")));
      t.template_text = p.at("template").get<std::string>();
      if (p.contains("variant_tag")) t.variant_tag = p["variant_tag"].get<std::string>();
      pack.prompts.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("prompt pack: ") + e.what());
  }
  pack.validate();
  return pack;
}

PromptPack load_prompt_pack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open prompt pack " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_prompt_pack(buf.str());
}

PromptPack builtin_pack(std::string_view name) {
  if (name == kBuiltinYelpPack) return yelp_causal_v1();
  fail(ErrorKind::ConfigError, "unknown built-in prompt pack '" + std::string(name) + "'");
}

PromptPack resolve_prompt_pack(const std::string& ref) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(ref, ec)) return load_prompt_pack(ref);
  return builtin_pack(ref);
}

std::string prompt_pack_to_toml(const PromptPack& pack) {
  std::ostringstream out;
  out << "name = " << toml::quote(pack.name) << "\n";
  for (const auto& p : pack.prompts) {
    out << "\n[[prompt]]\n";
    out << "id = " << toml::quote(p.id) << "\n";
    out << "causal_tag = " << toml::quote(to_string(p.causal_tag)) << "\n";
    if (p.variant_tag) out << "variant_tag = " << toml::quote(*p.variant_tag) << "\n";
    out << "template = " << toml::quote(p.template_text) << "\n";
  }
  return out.str();
}

std::string prompt_pack_digest(const PromptPack& pack) {
  nlohmann::json prompts = nlohmann::json::array();
  for (const auto& p : pack.prompts) {
    prompts.push_back({{"id", p.id},
                       {"causal_tag", to_string(p.causal_tag)},
                       {"variant_tag", p.variant_tag ? nlohmann::json(*p.variant_tag) : nlohmann::json(nullptr)},
                       {"template", p.template_text}});
  }
  return sha256_hex(nlohmann::json{{"name", pack.name}, {"prompts", prompts}}.dump());
}

}  // namespace causal_probe
