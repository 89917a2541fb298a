#include "hierembed/optim.hpp"

#include <cmath>

namespace hierembed {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "rsgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "rsgd") return OptimizerKind::rsgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (expected adam or rsgd)");
}

void require_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericalError("non-finite " + std::string(what) + " at index " + std::to_string(i) + " (value " +
                           std::to_string(values[i]) + ")");
    }
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam: parameter/gradient shape mismatch");
  }
  require_finite(grads, "gradient");
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
  }
}

}  // namespace hierembed
