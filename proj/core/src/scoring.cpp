#include "causal_probe/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "causal_probe/error.hpp"

namespace causal_probe {

std::string normalize_token(std::string_view token) {
  std::size_t start = 0;
  while (start < token.size() && (token[start] == ' ' || token[start] == '\t' || token[start] == '\n' ||
                                  token[start] == '\r')) {
    ++start;
  }
  std::string out(token.substr(start));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

SurfaceFormMap::SurfaceFormMap(const Forms& forms) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    for (const auto& f : forms[i]) {
      auto norm = normalize_token(f);
      if (norm.empty()) fail(ErrorKind::InvalidSurfaceForms, "blank surface form for label " + std::to_string(i + 1));
      if (seen.contains(norm) && !forms_[i].contains(norm)) {
        fail(ErrorKind::InvalidSurfaceForms, "surface form '" + norm + "' assigned to more than one label");
      }
      seen.insert(norm);
      forms_[i].insert(std::move(norm));
    }
    if (forms_[i].empty()) fail(ErrorKind::InvalidSurfaceForms, "label " + std::to_string(i + 1) + " has no forms");
  }
}

SurfaceFormMap SurfaceFormMap::defaults() {
  static constexpr std::array<std::string_view, kNumLabels> kWords = {"one", "two", "three", "four", "five"};
  Forms forms;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const std::string digit(1, static_cast<char>('1' + i));
    std::string word(kWords[i]);
    std::string capital = word;
    capital[0] = static_cast<char>(capital[0] - 'a' + 'A');
    forms[i] = {digit, " " + digit, word, " " + word, capital, " " + capital};
  }
  return SurfaceFormMap(forms);
}

std::optional<RatingLabel> SurfaceFormMap::label_for(std::string_view token) const {
  const auto norm = normalize_token(token);
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (forms_[i].contains(norm)) return RatingLabel::from_index(i);
  }
  return std::nullopt;
}

LabelDistribution score_labels(std::span<const TokenLogprob> topk, const SurfaceFormMap& map) {
  if (topk.empty()) fail(ErrorKind::EmptyInput, "empty top-k list");
  std::array<std::vector<double>, kNumLabels> parts;
  bool any = false;
  for (const auto& t : topk) {
    if (const auto label = map.label_for(t.token)) {
      parts[label->index()].push_back(std::exp(t.logprob));
      any = true;
    }
  }
  if (!any) fail(ErrorKind::NoLabelMass, "no top-k token matches a label surface form");

  // Summing each label's contributions in sorted order makes the result
  // independent of the order the backend listed the tokens in.
  std::array<double, kNumLabels> mass{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    std::sort(parts[i].begin(), parts[i].end());
    for (double v : parts[i]) mass[i] += v;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) fail(ErrorKind::NoLabelMass, "label tokens carry zero probability");
  for (double& m : mass) m /= total;
  return validate_distribution(mass);
}

CalibrationVector CalibrationVector::from_weights(std::span<const double> weights) {
  if (weights.size() != kNumLabels) {
    fail(ErrorKind::InvalidCalibration, "lambda needs 5 entries, got " + std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidCalibration, "lambda entries must be positive");
    sum += w;
  }
  CalibrationVector out;
  for (std::size_t i = 0; i < kNumLabels; ++i) out.lambda_[i] = weights[i] / sum;
  return out;
}

CalibrationVector CalibrationVector::uniform() {
  static constexpr std::array<double, kNumLabels> kOnes = {1, 1, 1, 1, 1};
  return from_weights(kOnes);
}

LabelDistribution calibrate(const LabelDistribution& raw, const CalibrationVector& lam) {
  // Equal weights cancel in the renormalization; skip the arithmetic so the
  // identity case is exact.
  const auto& l = lam.lambda();
  if (std::all_of(l.begin(), l.end(), [&](double x) { return x == l[0]; })) return raw;
  std::array<double, kNumLabels> q{};
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    q[i] = lam[i] * raw[i];
    sum += q[i];
  }
  if (!(sum > 0.0)) fail(ErrorKind::ZeroMass, "calibrated mass is zero");
  for (double& v : q) v /= sum;
  return validate_distribution(q);
}

namespace {

std::array<double, kNumLabels> argmax_histogram(std::span<const LabelDistribution> raws, const CalibrationVector& lam) {
  std::array<double, kNumLabels> hist{};
  for (const auto& raw : raws) hist[calibrate(raw, lam).argmax().index()] += 1.0;
  const double n = static_cast<double>(raws.size());
  for (double& h : hist) h /= n;
  return hist;
}

double l1_to(const std::array<double, kNumLabels>& hist, const LabelDistribution& target) {
  double d = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) d += std::fabs(hist[i] - target[i]);
  return d;
}

}  // namespace

double prior_matching_objective(std::span<const LabelDistribution> raws, const CalibrationVector& lam,
                                const LabelDistribution& target_prior) {
  if (raws.empty()) fail(ErrorKind::EmptyInput, "no records to calibrate on");
  return l1_to(argmax_histogram(raws, lam), target_prior);
}

LambdaFit learn_lambda(std::span<const LabelDistribution> raws, std::span<const RatingLabel> golds,
                       const LabelDistribution& target_prior, const LambdaFitOptions& options) {
  if (raws.empty()) fail(ErrorKind::EmptyInput, "no records to calibrate on");
  if (!golds.empty() && golds.size() != raws.size()) {
    fail(ErrorKind::LengthMismatch, "golds and records differ in length");
  }

  auto lam = CalibrationVector::uniform();
  auto hist = argmax_histogram(raws, lam);
  double objective = l1_to(hist, target_prior);
  if (!std::isfinite(objective)) fail(ErrorKind::NonFiniteObjective, "objective is not finite");

  LambdaFit fit;
  fit.lambda = lam;
  fit.objective = objective;
  fit.uniform_objective = objective;

  for (int it = 1; it <= options.max_iterations && objective > 0.0; ++it) {
    std::array<double, kNumLabels> next{};
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      const double ratio = (target_prior[i] + options.smoothing) / (hist[i] + options.smoothing);
      next[i] = lam[i] * std::pow(ratio, options.step_exponent);
    }
    lam = CalibrationVector::from_weights(next);
    hist = argmax_histogram(raws, lam);
    const double updated = l1_to(hist, target_prior);
    if (!std::isfinite(updated)) fail(ErrorKind::NonFiniteObjective, "objective is not finite");
    fit.iterations = it;
    if (updated < fit.objective) {
      fit.objective = updated;
      fit.lambda = lam;
      fit.best_iteration = it;
    }
    const double improvement = objective - updated;
    objective = updated;
    if (improvement < options.min_improvement) break;
  }
  return fit;
}

}  // namespace causal_probe
