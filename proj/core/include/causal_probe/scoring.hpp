#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

/// Token spellings whose probability mass counts toward each label.
/// Forms are stored normalized (leading whitespace stripped, ASCII lowercase).
class SurfaceFormMap {
 public:
  using Forms = std::array<std::set<std::string>, kNumLabels>;

  /// Throws InvalidSurfaceForms if a label has no forms or a form is shared.
  explicit SurfaceFormMap(const Forms& forms);

  /// Digits and English number words: "1"/"one" ... "5"/"five".
  static SurfaceFormMap defaults();

  /// Label whose form set contains the normalized token, if any.
  std::optional<RatingLabel> label_for(std::string_view token) const;

  const Forms& forms() const noexcept { return forms_; }

 private:
  Forms forms_;
};

std::string normalize_token(std::string_view token);

/// Sums exp(logprob) per label over matching tokens and renormalizes.
/// Result does not depend on topk order. Throws NoLabelMass when no token matches.
LabelDistribution score_labels(std::span<const TokenLogprob> topk, const SurfaceFormMap& map);

/// Positive per-label scaling factors, stored normalized to sum 1.
class CalibrationVector {
 public:
  /// Normalizes positive finite weights; throws InvalidCalibration otherwise.
  static CalibrationVector from_weights(std::span<const double> weights);
  static CalibrationVector uniform();

  const std::array<double, kNumLabels>& lambda() const noexcept { return lambda_; }
  double operator[](std::size_t i) const { return lambda_[i]; }

  friend bool operator==(const CalibrationVector&, const CalibrationVector&) = default;

 private:
  std::array<double, kNumLabels> lambda_{};
};

/// Elementwise lambda * raw, renormalized. Throws ZeroMass if nothing survives.
LabelDistribution calibrate(const LabelDistribution& raw, const CalibrationVector& lam);

/// L1 distance between the histogram of calibrated argmax labels and the target prior.
double prior_matching_objective(std::span<const LabelDistribution> raws, const CalibrationVector& lam,
                                const LabelDistribution& target_prior);

struct LambdaFitOptions {
  double step_exponent = 0.5;
  double smoothing = 1e-6;
  double min_improvement = 1e-3;
  int max_iterations = 200;
};

struct LambdaFit {
  CalibrationVector lambda = CalibrationVector::uniform();
  double objective = 0.0;          // at the returned lambda
  double uniform_objective = 0.0;  // at uniform lambda
  int iterations = 0;              // updates performed
  int best_iteration = 0;
};

/// Multiplicative prior matching.
///
/// Starting from uniform lambda, each step scales lambda_y by
/// ((target_y + eps) / (hist_y + eps))^eta and renormalizes, where hist is
/// the calibrated-argmax histogram. Stops once the objective improves by
/// less than min_improvement or after max_iterations; returns the
/// best-objective iterate, earliest on ties.
///
/// `golds` is accepted for interface symmetry with supervised calibrators and
/// must match `raws` in length; the objective itself is label-free.
LambdaFit learn_lambda(std::span<const LabelDistribution> raws, std::span<const RatingLabel> golds,
                       const LabelDistribution& target_prior, const LambdaFitOptions& options = {});

}  // namespace causal_probe
