#include "causal_probe/types.hpp"

#include <cmath>
#include <unordered_set>

#include "causal_probe/error.hpp"

namespace causal_probe {

RatingLabel::RatingLabel(int value) : value_(value) {
  if (value < 1 || value > static_cast<int>(kNumLabels)) {
    fail(ErrorKind::InvalidLabel, "rating label must be in [1,5], got " + std::to_string(value));
  }
}

LabelDistribution LabelDistribution::uniform() {
  Array p;
  p.fill(1.0 / static_cast<double>(kNumLabels));
  return LabelDistribution(p);
}

LabelDistribution LabelDistribution::one_hot(RatingLabel label) {
  Array p{};
  p[label.index()] = 1.0;
  return LabelDistribution(p);
}

RatingLabel LabelDistribution::argmax() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumLabels; ++i) {
    if (probs_[i] > probs_[best]) best = i;
  }
  return RatingLabel::from_index(best);
}

LabelDistribution validate_distribution(std::span<const double> probs) {
  if (probs.size() != kNumLabels) {
    fail(ErrorKind::WrongArity, "expected 5 probabilities, got " + std::to_string(probs.size()));
  }
  LabelDistribution::Array p;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const double v = probs[i];
    if (!std::isfinite(v)) fail(ErrorKind::NotNormalized, "non-finite probability");
    if (v < -kNegativeSlack) {
      fail(ErrorKind::NegativeMass, "entry " + std::to_string(i + 1) + " is " + std::to_string(v));
    }
    p[i] = v < 0.0 ? 0.0 : v;
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  const double dev = std::fabs(sum - 1.0);
  if (dev <= kNormTolerance) return LabelDistribution(p);
  if (dev > kRenormWindow) {
    fail(ErrorKind::NotNormalized, "probabilities sum to " + std::to_string(sum));
  }
  for (double& v : p) v /= sum;
  return LabelDistribution(p);
}

void Dataset::validate() const {
  std::unordered_set<std::string_view> seen;
  seen.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.id.empty()) fail(ErrorKind::InvalidSample, "sample with empty id");
    if (s.text.empty()) fail(ErrorKind::InvalidSample, "sample '" + s.id + "' has empty text");
    if (!seen.insert(s.id).second) fail(ErrorKind::DuplicateId, "duplicate sample id '" + s.id + "'");
  }
}

std::string_view to_string(CausalTag tag) noexcept {
  switch (tag) {
    case CausalTag::C1: return "C1";
    case CausalTag::C2: return "C2";
    case CausalTag::C3: return "C3";
    case CausalTag::Custom: return "custom";
  }
  return "custom";
}

CausalTag parse_causal_tag(std::string_view text) noexcept {
  if (text == "C1" || text == "c1") return CausalTag::C1;
  if (text == "C2" || text == "c2") return CausalTag::C2;
  if (text == "C3" || text == "c3") return CausalTag::C3;
  return CausalTag::Custom;
}

std::size_t count_placeholders(std::string_view text) noexcept {
  std::size_t n = 0;
  for (auto pos = text.find(kReviewPlaceholder); pos != std::string_view::npos;
       pos = text.find(kReviewPlaceholder, pos + kReviewPlaceholder.size())) {
    ++n;
  }
  return n;
}

void PromptTemplate::validate() const {
  if (id.empty()) fail(ErrorKind::InvalidTemplate, "prompt template without id");
  const auto n = count_placeholders(template_text);
  if (n != 1) {
    fail(ErrorKind::InvalidTemplate,
         "prompt '" + id + "' must contain {review} exactly once, found " + std::to_string(n));
  }
}

std::string PromptTemplate::render(std::string_view review_text) const {
  const auto pos = template_text.find(kReviewPlaceholder);
  if (pos == std::string::npos) fail(ErrorKind::InvalidTemplate, "prompt '" + id + "' has no placeholder");
  std::string out;
  out.reserve(template_text.size() + review_text.size());
  out.append(template_text, 0, pos);
  out.append(review_text);
  out.append(template_text, pos + kReviewPlaceholder.size());
  return out;
}

}  // namespace causal_probe
