#include "bbmlab/variational.hpp"

#include <cmath>
#include <stdexcept>

#include "bbmlab/math_util.hpp"

namespace bbmlab::variational {

using rates::Region;
using rates::Theorem;

void ConstraintSpec::validate() const {
  if (!(tau_lo >= 0.0 && tau_lo <= tau_hi && tau_hi <= 1.0 && tau_hi > 0.0))
    throw std::domain_error("ConstraintSpec: need 0 <= lo <= hi <= 1, hi > 0");
}

namespace {

struct Problem {
  double alpha;
  ConstraintSpec spec;
  mutable long evals = 0;

  double loc_bound(double lt) const {
    return kSqrt2 * alpha - kSqrt2 * spec.beta * (1.0 - lt);
  }

  bool feasible(double lt, double y) const {
    switch (spec.location) {
      case LocationKind::Unconstrained: return true;
      case LocationKind::Below: return y <= loc_bound(lt) + 1e-14;
      case LocationKind::Above: return y >= loc_bound(lt) - 1e-14;
    }
    return true;
  }

  double cost(double lt, double y) const {
    ++evals;
    if (!feasible(lt, y)) return kInf;
    return rates::pointwise_cost(alpha, lt, y).second;
  }

  // feasible lt-subinterval of [lo,hi] for fixed y (loc bound is affine in lt)
  std::pair<double, double> lt_range(double y, double lo, double hi) const {
    if (spec.location == LocationKind::Unconstrained) return {lo, hi};
    const double b = spec.beta;
    const double c0 = kSqrt2 * alpha - kSqrt2 * b;  // bound at lt=0
    const double slope = kSqrt2 * b;
    // Below: need c0 + slope*lt >= y ; Above: <= y
    bool ge = spec.location == LocationKind::Below;
    if (std::abs(slope) < 1e-300) {
      bool ok = ge ? (c0 >= y) : (c0 <= y);
      return ok ? std::make_pair(lo, hi) : std::make_pair(1.0, 0.0);
    }
    double cross = (y - c0) / slope;
    bool ok_right = ge == (slope > 0);  // feasible for lt >= cross?
    if (ok_right) return {std::max(lo, cross), hi};
    return {lo, std::min(hi, cross)};
  }
};

// clip the y search interval by the location constraint at this lt
std::pair<double, double> y_range(const Problem& pb, double lt, double ylo, double yhi) {
  if (pb.spec.location == LocationKind::Below) yhi = std::min(yhi, pb.loc_bound(lt));
  else if (pb.spec.location == LocationKind::Above) ylo = std::max(ylo, pb.loc_bound(lt));
  return {ylo, yhi};
}

}  // namespace

VariationalResult minimize_cost(double alpha, const ConstraintSpec& spec,
                                const MinimizeOptions& opts) {
  spec.validate();
  if (!(alpha < 1.0)) throw std::domain_error("minimize_cost requires alpha < 1");
  Problem pb{alpha, spec};

  const double lo = std::max(spec.tau_lo, opts.guard);
  const double hi = spec.tau_hi;
  if (!(lo <= hi)) throw std::domain_error("minimize_cost: empty window after guard band");

  // candidate y structure points: both region boundaries, all three Gaussian
  // centers, the origin, and the location bound
  auto base_y = [&](double lt) {
    double b1 = kSqrt2 * alpha - kSqrt2 * (1.0 - lt);
    double b2 = kSqrt2 * alpha + kSqrt2 * kRho * (1.0 - lt);
    double c2 = -2.0 * kSqrt2 * kRho * lt;
    double c3 = 2.0 * kSqrt2 * alpha * lt / (1.0 + lt);
    double ylo = std::min({kSqrt2 * alpha - 3.0 * kSqrt2, b1, c2, c3, 0.0}) - 0.5;
    double yhi = std::max({kSqrt2 * alpha + 3.0 * kSqrt2, b2, c2, c3, 0.0}) + 0.5;
    return std::make_pair(ylo, yhi);
  };

  struct Cand { double lt, y, v; };
  Cand best{lo, 0.0, kInf};
  Cand best_region[3] = {best, best, best};

  const int ntau = std::max(2, opts.grid_n_tau);
  const int ny = std::max(2, opts.grid_n_y);
  for (int i = 0; i < ntau; ++i) {
    double lt = lo + (hi - lo) * i / (ntau - 1.0);
    auto [ylo0, yhi0] = base_y(lt);
    auto [ylo, yhi] = y_range(pb, lt, ylo0, yhi0);
    if (ylo > yhi) {
      // only the constraint boundary (if inside the base box) is left
      ylo = yhi = pb.loc_bound(lt);
    }
    for (int j = 0; j < ny; ++j) {
      double y = ny == 1 ? ylo : ylo + (yhi - ylo) * j / (ny - 1.0);
      auto [region, v] = rates::pointwise_cost(alpha, lt, y);
      ++pb.evals;
      if (!pb.feasible(lt, y)) continue;
      if (v < best.v) best = {lt, y, v};
      int r = static_cast<int>(region);
      if (r >= 0 && r < 3 && v < best_region[r].v) best_region[r] = {lt, y, v};
    }
    // constraint boundary is often the minimizer; sample it explicitly
    if (spec.location != LocationKind::Unconstrained) {
      double yb = pb.loc_bound(lt);
      double v = pb.cost(lt, yb);
      if (v < best.v) best = {lt, yb, v};
    }
  }

  // coordinate-descent refinement from each region's best grid point
  const double htau = (hi - lo) / (ntau - 1.0);
  auto refine = [&](Cand c) {
    if (!std::isfinite(c.v)) return c;
    double span_y = 2.0 * std::max((base_y(c.lt).second - base_y(c.lt).first) / (ny - 1.0), 1e-6);
    double span_t = 2.0 * std::max(htau, 1e-9);
    for (int round = 0; round < opts.rounds; ++round) {
      double before = c.v;
      {  // y direction
        auto [ylo, yhi] = y_range(pb, c.lt, c.y - span_y, c.y + span_y);
        if (ylo < yhi) {
          double fv;
          double y = golden_min([&](double yy) { return pb.cost(c.lt, yy); }, ylo, yhi,
                                opts.golden_iters, &fv);
          if (fv < c.v) { c.y = y; c.v = fv; }
        }
      }
      {  // tau direction
        auto [l, h] = pb.lt_range(c.y, std::max(lo, c.lt - span_t), std::min(hi, c.lt + span_t));
        if (l < h) {
          double fv;
          double lt = golden_min([&](double tt) { return pb.cost(tt, c.y); }, l, h,
                                 opts.golden_iters, &fv);
          if (fv < c.v) { c.lt = lt; c.v = fv; }
        }
      }
      if (before - c.v < 1e-13 * (1.0 + std::abs(c.v)) && round >= 1) break;
    }
    return c;
  };

  Cand ref = refine(best);
  for (const auto& br : best_region) {
    if (std::isfinite(br.v)) {
      Cand r = refine(br);
      if (r.v < ref.v) ref = r;
    }
  }
  // extra polish rounds until the improvement stalls
  for (int k = 0; k < 4; ++k) {
    Cand again = refine(ref);
    if (ref.v - again.v < 1e-13 * (1.0 + std::abs(ref.v))) { ref = again; break; }
    ref = again;
  }

  VariationalResult res;
  res.value = ref.v;
  res.argmin_tau = ref.lt;
  res.argmin_y_coeff = ref.y;

  // lambda_tau -> 0 limit along y=0, when the window opens at 0 and y=0 stays feasible
  if (spec.tau_lo == 0.0) {
    bool y0_ok = true;
    if (spec.location == LocationKind::Below) y0_ok = kSqrt2 * (alpha - spec.beta) >= 0.0;
    if (spec.location == LocationKind::Above) y0_ok = kSqrt2 * (alpha - spec.beta) <= 0.0;
    if (y0_ok) {
      double limit = 2.0 * rates::child_tail_exponent(alpha, 0.0, 0.0).second;
      if (limit < res.value) {
        res.value = limit;
        res.argmin_tau = 0.0;
        res.argmin_y_coeff = 0.0;
      }
    }
  }

  // heuristic certificate: local Lipschitz estimate times a residual scale
  {
    const double h = 1e-7;
    double lt = std::clamp(res.argmin_tau, lo + h, hi - h);
    double v0 = std::isfinite(res.value) ? res.value : 0.0;
    double gy = 0.0, gt = 0.0;
    if (res.argmin_tau > 0.0) {
      auto [ylo, yhi] = y_range(pb, lt, res.argmin_y_coeff - h, res.argmin_y_coeff + h);
      double va = pb.cost(lt, std::min(yhi, res.argmin_y_coeff + h));
      double vb = pb.cost(lt, std::max(ylo, res.argmin_y_coeff - h));
      if (std::isfinite(va) && std::isfinite(vb)) gy = std::abs(va - vb) / (2.0 * h);
      double vc = pb.cost(std::min(hi, lt + h), res.argmin_y_coeff);
      double vd = pb.cost(std::max(lo, lt - h), res.argmin_y_coeff);
      if (std::isfinite(vc) && std::isfinite(vd)) gt = std::abs(vc - vd) / (2.0 * h);
    }
    res.certified_gap = (gy + gt) * h + 1e-10 * (1.0 + std::abs(v0));
  }
  res.iterations = pb.evals;
  return res;
}

VerifyReport verify_rate(Theorem theorem, double alpha, double gamma, double beta, double tol,
                         double eps) {
  VerifyReport rep;
  rep.theorem = theorem;
  rep.alpha = alpha;
  rep.gamma = gamma;
  rep.beta = beta;

  ConstraintSpec spec;
  switch (theorem) {
    case Theorem::Unconstrained:
      spec.tau_lo = 0.0;
      spec.tau_hi = 1.0;
      rep.closed = rates::psi(alpha);
      break;
    case Theorem::Time:
      spec.tau_lo = 0.0;
      spec.tau_hi = gamma;
      rep.closed = rates::psi1(alpha, gamma).value;
      break;
    case Theorem::TimeLate:
      spec.tau_lo = gamma;
      spec.tau_hi = 1.0;
      rep.closed = rates::psi2(alpha, gamma).value;
      break;
    case Theorem::LocBelow:
      spec.tau_lo = std::max(gamma - eps, 0.0);
      spec.tau_hi = gamma;
      spec.location = LocationKind::Below;
      spec.beta = beta;
      rep.closed = rates::psi3(alpha, gamma, beta).value;
      break;
    case Theorem::LocAbove:
      spec.tau_lo = std::max(gamma - eps, 0.0);
      spec.tau_hi = gamma;
      spec.location = LocationKind::Above;
      spec.beta = beta;
      rep.closed = rates::psi4(alpha, gamma, beta).value;
      break;
  }
  auto r = minimize_cost(alpha, spec);
  rep.oracle = r.value;
  rep.gap = r.certified_gap;
  rep.pass = std::abs(rep.closed - rep.oracle) <= tol + r.certified_gap;
  return rep;
}

LaplaceResult laplace_check(const std::function<double(double)>& g, double p, double q,
                            const std::vector<double>& t_list) {
  if (!(q > p)) throw std::domain_error("laplace_check: need p < q");
  LaplaceResult out;

  // locate max g by scan + golden refinement
  double gmax = -kInf, arg = p;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    double lam = p + (q - p) * i / (n - 1.0);
    double v = g(lam);
    if (!std::isfinite(v) && v > 0) throw std::runtime_error("laplace_check: non-finite g");
    if (v > gmax) { gmax = v; arg = lam; }
  }
  double a = std::max(p, arg - (q - p) / n * 2), b = std::min(q, arg + (q - p) / n * 2);
  double fm;
  double xm = golden_min([&](double x) { return -g(x); }, a, b, 80, &fm);
  if (-fm > gmax) { gmax = -fm; arg = xm; }
  out.g_max = gmax;

  for (double t : t_list) {
    if (!(t > 0)) throw std::domain_error("laplace_check: t must be positive");
    auto f = [&](double tau) { return t * g(tau / t); };
    auto r = log_integrate(f, p * t, q * t, {arg * t}, 1e-10);
    if (!std::isfinite(r.log_value))
      throw std::runtime_error("laplace_check: integral not finite");
    out.per_t.push_back(r.log_value / t);
    out.max_error = std::max(out.max_error, std::abs(r.log_value / t - gmax));
  }
  return out;
}

}  // namespace bbmlab::variational
