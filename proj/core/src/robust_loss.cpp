#include "rotpba/robust_loss.hpp"

#include <cmath>

#include "rotpba/errors.hpp"

namespace rotpba {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "quadratic") return LossKind::kQuadratic;
  if (name == "huber") return LossKind::kHuber;
  if (name == "cauchy") return LossKind::kCauchy;
  throw Error(ErrorKind::kConfig, "unknown loss '" + name + "' (expected quadratic|huber|cauchy)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kQuadratic: return "quadratic";
    case LossKind::kHuber: return "huber";
    case LossKind::kCauchy: return "cauchy";
  }
  return "unknown";
}

double RobustLoss::rho(double e) const {
  const double a = std::abs(e);
  switch (kind) {
    case LossKind::kQuadratic: return e * e;
    case LossKind::kHuber: return a < huber_delta ? e * e : (2.0 * a - huber_delta) * huber_delta;
    case LossKind::kCauchy: return cauchy_b2 * std::log1p(e * e / cauchy_b2);
  }
  return e * e;
}

double RobustLoss::weight(double e) const {
  const double a = std::abs(e);
  switch (kind) {
    case LossKind::kQuadratic: return 1.0;
    case LossKind::kHuber: return a < huber_delta ? 1.0 : huber_delta / a;
    case LossKind::kCauchy: return 1.0 / (1.0 + e * e / cauchy_b2);
  }
  return 1.0;
}

void RobustLoss::validate() const {
  if (!(huber_delta > 0.0)) throw Error(ErrorKind::kConfig, "huber delta must be positive");
  if (!(cauchy_b2 > 0.0)) throw Error(ErrorKind::kConfig, "cauchy b^2 must be positive");
}

}  // namespace rotpba
