#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace causal_probe {

inline constexpr std::size_t kNumLabels = 5;

/// A star rating in {1,...,5}.
class RatingLabel {
 public:
  /// Throws InvalidLabel outside [1,5].
  explicit RatingLabel(int value);

  static RatingLabel from_index(std::size_t index) { return RatingLabel(static_cast<int>(index) + 1); }

  int value() const noexcept { return value_; }
  std::size_t index() const noexcept { return static_cast<std::size_t>(value_ - 1); }

  friend bool operator==(RatingLabel, RatingLabel) = default;
  friend auto operator<=>(RatingLabel, RatingLabel) = default;

 private:
  int value_;
};

/// Probability vector over the five labels, ascending label order.
///
/// Only constructible through validate_distribution (or the unchecked
/// factories below, which are used after arithmetic that preserves the
/// invariants by construction).
class LabelDistribution {
 public:
  using Array = std::array<double, kNumLabels>;

  static LabelDistribution uniform();
  static LabelDistribution one_hot(RatingLabel label);

  const Array& probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  double at(RatingLabel label) const { return probs_[label.index()]; }

  /// Highest-probability label; ties go to the lowest label.
  RatingLabel argmax() const noexcept;

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  friend LabelDistribution validate_distribution(std::span<const double> probs);
  explicit LabelDistribution(const Array& probs) : probs_(probs) {}
  Array probs_;
};

inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kRenormWindow = 1e-6;
inline constexpr double kNegativeSlack = 1e-12;

/// Accepts five non-negative reals summing to one.
///
/// Sums within 1e-9 of one are kept unchanged; sums within 1e-6 are
/// renormalized; anything further off raises NotNormalized. Entries in
/// [-1e-12, 0) are clamped to zero, smaller ones raise NegativeMass.
LabelDistribution validate_distribution(std::span<const double> probs);

struct ReviewSample {
  std::string id;
  std::string text;
  RatingLabel gold{1};
};

struct Dataset {
  std::string name;
  std::vector<ReviewSample> samples;

  /// Checks id/text invariants; throws InvalidSample or DuplicateId.
  void validate() const;
};

enum class CausalTag { C1, C2, C3, Custom };

std::string_view to_string(CausalTag tag) noexcept;
/// Accepts "C1"/"c1" etc.; anything else maps to Custom.
CausalTag parse_causal_tag(std::string_view text) noexcept;

inline constexpr std::string_view kReviewPlaceholder = "{review}";

struct PromptTemplate {
  std::string id;
  CausalTag causal_tag = CausalTag::Custom;
  std::string template_text;
  std::optional<std::string> variant_tag;

  /// Throws InvalidTemplate unless the placeholder occurs exactly once.
  void validate() const;

  /// Substitutes the review text for the placeholder.
  std::string render(std::string_view review_text) const;
};

std::size_t count_placeholders(std::string_view text) noexcept;

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;  // natural log

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct PredictionRecord {
  std::string sample_id;
  std::string prompt_id;
  std::vector<TokenLogprob> topk;
  LabelDistribution raw = LabelDistribution::uniform();
  std::optional<LabelDistribution> calibrated;
};

}  // namespace causal_probe
