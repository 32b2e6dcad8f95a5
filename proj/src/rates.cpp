#include "bbmlab/rates.hpp"

#include <cmath>
#include <stdexcept>

#include "bbmlab/math_util.hpp"

namespace bbmlab::rates {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

void check_alpha_gamma(double alpha, double gamma) {
  require(alpha < 1.0, "alpha must be < 1");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0,1]");
}

}  // namespace

double psi(double alpha) {
  require(alpha < 1.0, "psi requires alpha < 1");
  if (alpha >= -kRho) return 2.0 * kRho * (1.0 - alpha);
  return 1.0 + alpha * alpha;
}

double typical_max(double t) {
  require(t > 1.0, "typical_max requires t > 1");
  return kSqrt2 * t - 1.5 / kSqrt2 * std::log(t);
}

double i11(double x, double slope, double alpha) {
  double q = alpha - slope * (1.0 - x);
  return x + q * q / x;
}

double i12(double x) { return x; }

double i21(double x, double slope, double alpha) {
  double q = alpha - slope;
  return -(4.0 * kRho * (1.0 - slope) - 1.0 - slope * slope) * x + q * q / x +
         4.0 * kRho * (1.0 - slope) + 2.0 * slope * q;
}

double i22(double x, double alpha) {
  return -(4.0 * kSqrt2 * kRho - 1.0) * x + 4.0 * kRho * (1.0 - alpha);
}

double i31(double x, double slope, double alpha) {
  double q = alpha - slope;
  return -(1.0 + slope * slope) * x + q * q / x + 2.0 * (alpha * slope + 1.0);
}

double i32(double x, double alpha) {
  return -x + 2.0 * alpha * alpha / (1.0 + x) + 2.0;
}

double exponent(const ExponentArgs& a) {
  require(a.x > 0.0, "exponent requires x > 0");
  switch (a.kind) {
    case ExponentKind::I11: return i11(a.x, a.slope, a.alpha);
    case ExponentKind::I12: return i12(a.x);
    case ExponentKind::I21: return i21(a.x, a.slope, a.alpha);
    case ExponentKind::I22: return i22(a.x, a.alpha);
    case ExponentKind::I31: return i31(a.x, a.slope, a.alpha);
    case ExponentKind::I32: return i32(a.x, a.alpha);
  }
  throw std::invalid_argument("bad exponent kind");
}

RegimeThresholds thresholds(double alpha, double gamma) {
  check_alpha_gamma(alpha, gamma);
  RegimeThresholds th{};
  th.t1 = -(alpha + kRho) / kRho;
  th.t2 = (1.0 - alpha) / (2.0 * kSqrt2 - 1.0);
  th.t3 = (1.0 - alpha) / kSqrt2;
  th.t4 = 1.0 - alpha;
  if (gamma < 1.0) {
    th.beta1 = alpha / (1.0 - gamma);
    th.beta2 = (alpha + 2.0 * kRho * gamma) / (1.0 - gamma);
  } else {
    th.beta1 = kInf;
    th.beta2 = (alpha >= -2.0 * kRho) ? kInf : -kInf;
  }
  th.child_switch = alpha / (1.0 + gamma);
  return th;
}

RateEvaluation psi1(double alpha, double gamma) {
  check_alpha_gamma(alpha, gamma);
  const auto th = thresholds(alpha, gamma);
  const double t1c = std::min(th.t1, 1.0), t2c = std::min(th.t2, 1.0), t3c = std::min(th.t3, 1.0);
  RateEvaluation ev;
  ev.regime.theorem = Theorem::Time;
  ev.opt_tau_fraction = std::min(gamma, th.t3);
  if (th.t1 > 0.0 && gamma <= t1c) {
    ev.regime.case_index = 1;
    ev.regime.region = Region::I3;
    ev.value = i32(gamma, alpha);
    ev.opt_loc_coeff = 2.0 * kSqrt2 * alpha * gamma / (1.0 + gamma);
  } else if (gamma <= t2c) {
    ev.regime.case_index = 2;
    ev.regime.region = Region::I2;
    ev.value = i22(gamma, alpha);
    ev.opt_loc_coeff = -2.0 * kSqrt2 * kRho * gamma;
  } else if (gamma <= t3c) {
    ev.regime.case_index = 3;
    ev.regime.region = Region::I1;
    ev.value = i11(gamma, 1.0, alpha);
    ev.opt_loc_coeff = kSqrt2 * alpha - kSqrt2 * (1.0 - gamma);
  } else {
    ev.regime.case_index = 4;
    ev.regime.region = Region::I1;
    ev.value = 2.0 * kRho * (1.0 - alpha);
    ev.opt_loc_coeff = -kRho * (1.0 - alpha);
  }
  return ev;
}

RateEvaluation psi2(double alpha, double gamma) {
  require(alpha > -kRho && alpha < 1.0, "psi2 requires alpha in (-rho, 1)");
  require(gamma <= 1.0 && gamma > (1.0 - alpha) / kSqrt2,
          "psi2 requires gamma > (1-alpha)/sqrt2");
  RateEvaluation ev;
  ev.regime.theorem = Theorem::TimeLate;
  ev.opt_tau_fraction = gamma;
  // the (1-alpha)^1 cap in the theorem only bites at gamma=1 with alpha<0,
  // where the Y1 lemma still gives the quadratic branch
  if (gamma < 1.0 - alpha) {
    ev.regime.case_index = 1;
    ev.regime.region = Region::I1;
    ev.value = i11(gamma, 1.0, alpha);
    ev.opt_loc_coeff = kSqrt2 * alpha - kSqrt2 * (1.0 - gamma);
  } else {
    ev.regime.case_index = 2;
    ev.regime.region = Region::I1;
    ev.value = gamma;
    ev.opt_loc_coeff = 0.0;
  }
  return ev;
}

RateEvaluation psi3(double alpha, double gamma, double beta) {
  check_alpha_gamma(alpha, gamma);
  require(beta >= 1.0, "psi3 requires beta >= 1");
  RateEvaluation ev;
  ev.regime.theorem = Theorem::LocBelow;
  ev.opt_tau_fraction = gamma;
  // flat case iff beta <= beta1(gamma); at gamma=1 the lemma limit gives the
  // flat case exactly when alpha >= 0
  bool flat;
  if (gamma < 1.0) {
    flat = beta <= alpha / (1.0 - gamma);
  } else {
    flat = alpha >= 0.0;
  }
  if (flat) {
    ev.regime.case_index = 1;
    ev.regime.region = Region::I1;
    ev.value = gamma;
    ev.opt_loc_coeff = 0.0;
  } else {
    ev.regime.case_index = 2;
    ev.regime.region = Region::I1;
    ev.value = i11(gamma, beta, alpha);
    ev.opt_loc_coeff = kSqrt2 * alpha - kSqrt2 * beta * (1.0 - gamma);
  }
  return ev;
}

RateEvaluation psi4(double alpha, double gamma, double beta) {
  check_alpha_gamma(alpha, gamma);
  require(beta <= 1.0, "psi4 requires beta <= 1");
  const auto th = thresholds(alpha, gamma);
  RateEvaluation ev;
  ev.regime.theorem = Theorem::LocAbove;
  ev.opt_tau_fraction = gamma;
  const double bound_loc = kSqrt2 * alpha - kSqrt2 * beta * (1.0 - gamma);
  if (th.t1 > 0.0 && gamma < std::min(th.t1, 1.0)) {
    if (beta < th.child_switch) {
      ev.regime.case_index = 1;
      ev.regime.region = Region::I3;
      ev.value = i31(gamma, beta, alpha);
      ev.opt_loc_coeff = bound_loc;
    } else {
      ev.regime.case_index = 2;
      ev.regime.region = Region::I3;
      ev.value = i32(gamma, alpha);
      ev.opt_loc_coeff = 2.0 * kSqrt2 * alpha * gamma / (1.0 + gamma);
    }
    return ev;
  }
  // gamma >= t1^1 grouping. At gamma=1 the Y2 lemma limit always selects the
  // interval-endpoint branch, matching beta2 -> +inf.
  const double beta2_eff = (gamma < 1.0) ? th.beta2 : kInf;
  if (beta <= -kRho) {
    ev.regime.case_index = 3;
    ev.regime.region = Region::I3;
    ev.value = i31(gamma, beta, alpha);
    ev.opt_loc_coeff = bound_loc;
  } else if (beta < beta2_eff) {
    ev.regime.case_index = 4;
    ev.regime.region = Region::I2;
    ev.value = i21(gamma, beta, alpha);
    ev.opt_loc_coeff = bound_loc;
  } else {
    ev.regime.case_index = 5;
    ev.regime.region = Region::I2;
    ev.value = i22(gamma, alpha);
    ev.opt_loc_coeff = -2.0 * kSqrt2 * kRho * gamma;
  }
  return ev;
}

std::pair<Region, double> child_tail_exponent(double alpha, double lambda_tau, double y_coeff) {
  require(lambda_tau >= 0.0 && lambda_tau < 1.0, "child_tail_exponent requires lambda_tau in [0,1)");
  const double rem = 1.0 - lambda_tau;
  const double b1 = kSqrt2 * alpha - kSqrt2 * rem;
  const double b2 = kSqrt2 * alpha + kSqrt2 * kRho * rem;
  if (y_coeff < b1) return {Region::I1, 0.0};
  if (y_coeff <= b2) {
    return {Region::I2, kSqrt2 * kRho * (kSqrt2 * (1.0 - alpha) - kSqrt2 * lambda_tau + y_coeff)};
  }
  double q = kSqrt2 * alpha - y_coeff;
  return {Region::I3, rem + q * q / (2.0 * rem)};
}

std::pair<Region, double> pointwise_cost(double alpha, double lambda_tau, double y_coeff) {
  require(lambda_tau > 0.0 && lambda_tau <= 1.0, "pointwise_cost requires lambda_tau in (0,1]");
  const double base = lambda_tau + y_coeff * y_coeff / (2.0 * lambda_tau);
  if (lambda_tau == 1.0) {
    // both region boundaries collapse to sqrt2*alpha; children get zero time
    const double b = kSqrt2 * alpha;
    if (y_coeff < b) return {Region::I1, base};
    if (y_coeff == b) return {Region::I2, base};
    return {Region::I3, kInf};
  }
  auto [region, child] = child_tail_exponent(alpha, lambda_tau, y_coeff);
  return {region, base + 2.0 * child};
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::Unconstrained: return "unconstrained";
    case Theorem::Time: return "time";
    case Theorem::TimeLate: return "time_late";
    case Theorem::LocBelow: return "location_below";
    case Theorem::LocAbove: return "location_above";
  }
  return "?";
}

std::string to_string(Region r) {
  switch (r) {
    case Region::I1: return "I1";
    case Region::I2: return "I2";
    case Region::I3: return "I3";
    case Region::None: return "none";
  }
  return "?";
}

}  // namespace bbmlab::rates
