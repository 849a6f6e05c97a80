#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace svylasso {

enum class Family { logit };

// log(1 + e^t) without overflow for large |t|.
inline double log1p_exp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// The mean is clamped inside variance terms only; first derivatives stay raw
// so the score is never biased.
constexpr double kVarianceClamp = 1e-12;

inline double clamped_logistic(double t) {
  const double m = logistic(t);
  if (m < kVarianceClamp) return kVarianceClamp;
  if (m > 1.0 - kVarianceClamp) return 1.0 - kVarianceClamp;
  return m;
}

// Value and first two t-derivatives of the negative log-density g(y, t).
struct GlmDerivs {
  double g;
  double dg;
  double ddg;
};

// Per-family derivative callbacks. Only the logit family ships; the tag keeps
// room for other exponential families.
struct FamilyOps {
  const char* name;
  double (*g)(double y, double t);
  double (*dg)(double y, double t);
  double (*ddg)(double y, double t);
  void (*check_outcome_value)(double y);
};

namespace detail {

inline void logit_check_outcome(double y) {
  if (y != 0.0 && y != 1.0) {
    throw std::domain_error("logit family requires a binary outcome in {0, 1}");
  }
}

inline double logit_g(double y, double t) { return log1p_exp(t) - y * t; }
inline double logit_dg(double y, double t) { return logistic(t) - y; }
inline double logit_ddg(double /*y*/, double t) {
  const double m = clamped_logistic(t);
  return m * (1.0 - m);
}

}  // namespace detail

inline const FamilyOps& family_ops(Family f) {
  static const FamilyOps logit_ops{"logit", detail::logit_g, detail::logit_dg,
                                   detail::logit_ddg, detail::logit_check_outcome};
  switch (f) {
    case Family::logit:
      return logit_ops;
  }
  throw std::invalid_argument("unknown family");
}

inline GlmDerivs neg_log_density_derivs(Family f, double y, double t) {
  const FamilyOps& ops = family_ops(f);
  ops.check_outcome_value(y);
  if (!std::isfinite(t)) throw std::invalid_argument("linear predictor must be finite");
  return GlmDerivs{ops.g(y, t), ops.dg(y, t), ops.ddg(y, t)};
}

}  // namespace svylasso
