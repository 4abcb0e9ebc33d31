#pragma once

#include <string>

namespace rotpba {

enum class LossKind { kQuadratic, kHuber, kCauchy };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Per-residual loss rho(e) and its IRLS weight w(e) = rho'(e) / (2 e).
///   quadratic: e^2
///   Huber:     e^2 if |e| < delta, else (2|e| - delta) delta
///   Cauchy:    b^2 log(1 + e^2 / b^2)
struct RobustLoss {
  LossKind kind = LossKind::kQuadratic;
  double huber_delta = 0.05;
  double cauchy_b2 = 1.0 / 50.0;

  double rho(double e) const;
  double weight(double e) const;
  void validate() const;
};

}  // namespace rotpba
