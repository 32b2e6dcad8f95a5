#pragma once

#include <string>
#include <utility>

namespace bbmlab::rates {

enum class Theorem { Unconstrained, Time, TimeLate, LocBelow, LocAbove };
enum class Region { I1, I2, I3, None };

struct RegimeLabel {
  Theorem theorem = Theorem::Unconstrained;
  int case_index = 0;
  Region region = Region::None;
};

// Rate value plus the optimal first-branching strategy behind it.
// opt_tau_fraction = lim tau/t, opt_loc_coeff = lim y/t.
struct RateEvaluation {
  double value = 0.0;
  RegimeLabel regime;
  double opt_tau_fraction = 0.0;
  double opt_loc_coeff = 0.0;
};

// Boundary values of the piecewise theorems at fixed (alpha, gamma).
// t1 = -(alpha+rho)/rho, t2 = (1-alpha)/(2*sqrt2-1), t3 = (1-alpha)/sqrt2,
// t4 = 1-alpha; beta1/beta2 use the gamma=1 conventions as stated.
struct RegimeThresholds {
  double t1, t2, t3, t4;
  double beta1, beta2;
  double child_switch;  // alpha/(1+gamma)
};

enum class ExponentKind { I11, I12, I21, I22, I31, I32 };

struct ExponentArgs {
  ExponentKind kind;
  double x;      // time fraction lambda_tau
  double slope;  // lambda_u or lambda_v; ignored for I12/I22/I32
  double alpha;
};

// unconstrained rate (alpha < 1)
double psi(double alpha);

// sqrt2*t - 3/(2*sqrt2) * ln t, for t > 1
double typical_max(double t);

// closed-form exponents from the Y1/Y2/Y3 tail estimates
double i11(double x, double slope, double alpha);
double i12(double x);
double i21(double x, double slope, double alpha);
double i22(double x, double alpha);
double i31(double x, double slope, double alpha);
double i32(double x, double alpha);
double exponent(const ExponentArgs& args);

RegimeThresholds thresholds(double alpha, double gamma);

// first branching time constrained to [0, gamma*t]
RateEvaluation psi1(double alpha, double gamma);
// first branching time constrained to [gamma*t, t]; -rho < alpha < 1, gamma > (1-alpha)/sqrt2
RateEvaluation psi2(double alpha, double gamma);
// branch near gamma*t at location below sqrt2*alpha*t - sqrt2*beta*(t-tau), beta >= 1
RateEvaluation psi3(double alpha, double gamma, double beta);
// same window, location above; beta <= 1
RateEvaluation psi4(double alpha, double gamma, double beta);

// Per-t exponent of one child's probability P(X_max(t-tau) <= sqrt2*alpha*t - y)
// given the first branch at (lambda_tau*t, y_coeff*t). Zero in region I1.
std::pair<Region, double> child_tail_exponent(double alpha, double lambda_tau, double y_coeff);

// Full per-t cost of "first branch at (lambda_tau*t, y_coeff*t), both children
// end below sqrt2*alpha*t": lambda_tau + y^2/(2 lambda_tau) + 2*child_tail.
std::pair<Region, double> pointwise_cost(double alpha, double lambda_tau, double y_coeff);

std::string to_string(Theorem t);
std::string to_string(Region r);

}  // namespace bbmlab::rates
