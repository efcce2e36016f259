#include "fixquant/sqnr_model.hpp"

#include <cmath>
#include <set>

namespace fixquant {

SqnrDb compose_sqnr(std::span<const SqnrDb> steps) {
  if (steps.empty()) raise(errc::input, "compose_sqnr: no steps");
  double inv_sum = 0.0;
  for (const SqnrDb& s : steps) {
    if (s.is_finite()) inv_sum += std::pow(10.0, -s.db / 10.0);
  }
  if (inv_sum == 0.0) return SqnrDb::infinite();
  return SqnrDb{-10.0 * std::log10(inv_sum)};
}

SqnrPrediction predict_network_sqnr(const std::optional<QuantStep>& input_step,
                                    std::span<const LayerSteps> layers) {
  if (layers.empty()) raise(errc::input, "predict_network_sqnr: no layers");
  double inv_sum = 0.0;
  if (input_step) {
    inv_sum += std::pow(10.0, -input_step->predicted_sqnr().db / 10.0);
  }
  SqnrPrediction prediction;
  for (const LayerSteps& group : layers) {
    for (const QuantStep& step : group.steps) {
      inv_sum += std::pow(10.0, -step.predicted_sqnr().db / 10.0);
    }
    const SqnrDb value = inv_sum == 0.0 ? SqnrDb::infinite()
                                        : SqnrDb{-10.0 * std::log10(inv_sum)};
    prediction.per_layer.emplace_back(group.layer, value);
  }
  prediction.output = prediction.per_layer.back().second;
  return prediction;
}

double estimate_kappa(std::span<const std::pair<int, SqnrDb>> measured) {
  std::set<int> widths;
  for (const auto& [b, s] : measured) widths.insert(b);
  if (widths.size() < 2) {
    raise(errc::input, "estimate_kappa: need at least two distinct bit-widths");
  }
  double mean_b = 0.0;
  double mean_y = 0.0;
  for (const auto& [b, s] : measured) {
    mean_b += b;
    mean_y += s.db;
  }
  const double n = static_cast<double>(measured.size());
  mean_b /= n;
  mean_y /= n;
  double num = 0.0;
  double den = 0.0;
  for (const auto& [b, s] : measured) {
    num += (b - mean_b) * (s.db - mean_y);
    den += (b - mean_b) * (b - mean_b);
  }
  return num / den;
}

}  // namespace fixquant
