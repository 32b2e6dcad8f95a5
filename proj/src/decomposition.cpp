#include "bbmlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbmlab/math_util.hpp"
#include "bbmlab/rates.hpp"

namespace bbmlab::decomposition {

using variational::ConstraintSpec;
using variational::LocationKind;

void DecompositionQuery::validate() const {
  if (!(t > 0.0)) throw std::domain_error("DecompositionQuery: t must be positive");
  if (!(alpha < 1.0)) throw std::domain_error("DecompositionQuery: alpha must be < 1");
  spec.validate();
}

namespace {

struct YBounds {
  double lo, hi;          // integration window in y (absolute units)
  std::vector<double> brk;
};

// absolute-unit region edges at first-branch time tau
struct Edges {
  double b1, b2;  // I1/I2 and I2/I3 boundaries
};

Edges edges(double alpha, double t, double tau) {
  const double rem = t - tau;
  return {kSqrt2 * alpha * t - kSqrt2 * rem, kSqrt2 * alpha * t + kSqrt2 * kRho * rem};
}

// B as an absolute interval at time tau (the location constraint is a
// half-line anchored at sqrt2*alpha*t - sqrt2*beta*(t-tau))
std::pair<double, double> location_interval(const ConstraintSpec& spec, double alpha, double t,
                                            double tau) {
  if (spec.location == LocationKind::Unconstrained) return {-kInf, kInf};
  double bound = kSqrt2 * alpha * t - kSqrt2 * spec.beta * (t - tau);
  if (spec.location == LocationKind::Below) return {-kInf, bound};
  return {bound, kInf};
}

double clampv(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

DecompositionEstimate constrained_prob_exact(const DecompositionQuery& q,
                                             const fkpp::FkppSolution& sol) {
  q.validate();
  if (q.mode != Mode::Exact) throw std::domain_error("constrained_prob_exact: mode mismatch");
  if (q.t > sol.cfg.t_end + 1e-12)
    throw std::domain_error("constrained_prob_exact: solution horizon too short");
  const double a = q.alpha, t = q.t;
  const double xline = kSqrt2 * a * t;
  // children arguments must stay on the stored grid
  const double w_lo = sol.cfg.x_min, w_hi = sol.cfg.x_max;

  double err_accum = 0.0;

  auto inner_log = [&](double tau) -> double {
    const double s = t - tau;
    if (s < sol.t_first) return -kInf;  // strip handled analytically below
    const double sd = std::sqrt(tau);
    auto [blo, bhi] = location_interval(q.spec, a, t, tau);
    auto eg = edges(a, t, tau);
    // front of F(s, .) mapped into y
    double front = xline - (s > 1.0 ? rates::typical_max(s) : kSqrt2 * s);
    double lo = std::min(-8.0 * sd, front - 8.0 * sd);
    double hi = std::max(8.0 * sd, front + 8.0 * sd);
    // grid coverage: w = xline - y in [w_lo, w_hi]
    lo = std::max(lo, xline - w_hi);
    hi = std::min(hi, xline - w_lo);
    lo = std::max(lo, blo);
    hi = std::min(hi, bhi);
    if (!(hi > lo)) return -kInf;
    std::vector<double> brk;
    for (double b : {eg.b1, eg.b2, front, 0.0}) {
      if (b > lo && b < hi) brk.push_back(b);
    }
    auto f = [&](double y) {
      double w = xline - y;
      return log_norm_pdf(y / sd) - std::log(sd) + 2.0 * sol.query(t - tau, clampv(w, w_lo, w_hi));
    };
    auto r = log_integrate(f, lo, hi, brk, 1e-8, 24);
    err_accum += r.abs_log_error;
    return r.log_value;
  };

  const double tau_lo = q.spec.tau_lo * t;
  double tau_hi = q.spec.tau_hi * t;
  const double strip = std::max(sol.t_first, 1e-6);
  double strip_log = -kInf;
  if (tau_hi > t - strip) {
    // tau in (t - strip, t]: children have almost no time; bound the slice by
    // e^-tau * strip and fold it into the error estimate
    strip_log = -(t - strip) + std::log(strip);
    tau_hi = t - strip;
  }
  if (!(tau_hi > tau_lo)) throw std::domain_error("constrained_prob_exact: empty window");

  std::vector<double> tbrk;
  auto th = rates::thresholds(a, std::min(1.0, std::max(1e-9, q.spec.tau_hi)));
  for (double fr : {th.t1, th.t2, th.t3}) {
    double tb = fr * t;
    if (tb > tau_lo && tb < tau_hi) tbrk.push_back(tb);
  }
  auto f_tau = [&](double tau) { return -tau + inner_log(tau); };
  auto r = log_integrate(f_tau, tau_lo, tau_hi, tbrk, 1e-8, 24);

  DecompositionEstimate est;
  est.log_prob = r.log_value;
  est.quadrature_error = r.abs_log_error + err_accum;
  if (strip_log > -kInf)
    est.quadrature_error += std::exp(strip_log - std::max(r.log_value, strip_log));
  est.minus_log_over_t = -est.log_prob / t;
  return est;
}

DecompositionEstimate constrained_prob_asymptotic(const DecompositionQuery& q) {
  q.validate();
  if (q.mode != Mode::Asymptotic)
    throw std::domain_error("constrained_prob_asymptotic: mode mismatch");
  const double a = q.alpha, t = q.t;
  const double xline = kSqrt2 * a * t;

  double err_accum = 0.0;
  double region_acc[3] = {-kInf, -kInf, -kInf};

  // log integrand of the region-k slice at (tau, y)
  auto f_region = [&](int k, double tau, double y) {
    const double sd = std::sqrt(tau);
    double base = log_norm_pdf(y / sd) - std::log(sd);
    if (k == 0) return base;
    if (k == 1) return base - 2.0 * kSqrt2 * kRho * (kSqrt2 * (1.0 - a) * t - kSqrt2 * tau + y);
    const double rem = t - tau;
    const double w = xline - y;
    return base - 2.0 * rem - w * w / rem;
  };

  auto inner_log = [&](double tau, int region) -> double {
    const double sd = std::sqrt(tau);
    auto eg = edges(a, t, tau);
    auto [blo, bhi] = location_interval(q.spec, a, t, tau);
    double lo, hi;
    const double rem = t - tau;
    switch (region) {
      case 0:
        lo = std::min(-8.0 * sd, eg.b1 - 8.0 * sd);
        hi = eg.b1;
        break;
      case 1:
        lo = eg.b1;
        hi = eg.b2;
        break;
      default: {
        // Gaussian factor of the Y3 slice is centered at 2*sqrt2*a*t*tau/(t+tau)
        double c3 = 2.0 * kSqrt2 * a * t * tau / (t + tau);
        lo = eg.b2;
        hi = std::max({8.0 * sd, c3 + 8.0 * sd, eg.b2 + 8.0 * sd});
        break;
      }
    }
    lo = std::max(lo, blo);
    hi = std::min(hi, bhi);
    if (!(hi > lo) || rem <= 0.0) return -kInf;
    std::vector<double> brk;
    double c2 = -2.0 * kSqrt2 * kRho * tau;
    double c3 = 2.0 * kSqrt2 * a * t * tau / (t + tau);
    for (double b : {0.0, c2, c3}) {
      if (b > lo && b < hi) brk.push_back(b);
    }
    auto f = [&](double y) { return f_region(region, tau, y); };
    auto r = log_integrate(f, lo, hi, brk, 1e-8, 24);
    err_accum += r.abs_log_error;
    return r.log_value;
  };

  const double tau_lo = q.spec.tau_lo * t;
  double tau_hi = q.spec.tau_hi * t;
  const double strip = 1e-6 * t;
  if (tau_hi >= t) tau_hi = t - strip;
  if (!(tau_hi > tau_lo)) throw std::domain_error("constrained_prob_asymptotic: empty window");

  std::vector<double> tbrk;
  auto th = rates::thresholds(a, std::min(1.0, std::max(1e-9, q.spec.tau_hi)));
  for (double fr : {th.t1, th.t2, th.t3}) {
    double tb = fr * t;
    if (tb > tau_lo && tb < tau_hi) tbrk.push_back(tb);
  }
  // resolve the tau -> t corner of the Y3 slice
  for (double d : {1e-5, 1e-4, 1e-3, 1e-2, 0.1}) {
    double tb = t * (1.0 - d);
    if (tb > tau_lo && tb < tau_hi) tbrk.push_back(tb);
  }

  DecompositionEstimate est;
  for (int k = 0; k < 3; ++k) {
    auto f_tau = [&](double tau) { return -tau + inner_log(tau, k); };
    auto r = log_integrate(f_tau, tau_lo, tau_hi, tbrk, 1e-8, 24);
    region_acc[k] = r.log_value;
    est.per_region_log[k] = r.log_value;
    est.quadrature_error += r.abs_log_error;
  }
  est.log_prob = log_sum_exp(log_sum_exp(region_acc[0], region_acc[1]), region_acc[2]);
  est.quadrature_error += err_accum;
  est.minus_log_over_t = -est.log_prob / t;
  return est;
}

FitResult slope_fit(const std::vector<double>& t_list, const std::vector<double>& ln_probs) {
  if (t_list.size() != ln_probs.size()) throw std::domain_error("slope_fit: size mismatch");
  if (t_list.size() < 4) throw std::domain_error("slope_fit: need >= 4 points");
  for (size_t i = 1; i < t_list.size(); ++i)
    if (!(t_list[i] > t_list[i - 1])) throw std::domain_error("slope_fit: t must be increasing");
  std::vector<double> y(ln_probs.size()), lnt(t_list.size()), ones(t_list.size(), 1.0);
  for (size_t i = 0; i < y.size(); ++i) {
    y[i] = -ln_probs[i];
    lnt[i] = std::log(t_list[i]);
  }
  auto c = lstsq({t_list, lnt, ones}, y);
  FitResult fr{c[0], c[1], c[2], 0.0};
  for (size_t i = 0; i < y.size(); ++i) {
    double pred = c[0] * t_list[i] + c[1] * lnt[i] + c[2];
    fr.max_residual = std::max(fr.max_residual, std::abs(pred - y[i]));
  }
  return fr;
}

}  // namespace bbmlab::decomposition
