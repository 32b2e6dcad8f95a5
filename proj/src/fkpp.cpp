#include "bbmlab/fkpp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bbmlab/math_util.hpp"

namespace bbmlab::fkpp {

FkppConfig FkppConfig::defaults(double alpha, double t_end, double dx) {
  FkppConfig cfg;
  cfg.x_min = kSqrt2 * alpha * t_end - 12.0 * std::sqrt(t_end);
  cfg.x_max = kSqrt2 * t_end + 12.0 * std::sqrt(t_end);
  cfg.dx = dx;
  cfg.t_end = t_end;
  return cfg;
}

void FkppConfig::validate() const {
  if (!(x_min < 0.0 && x_max > 0.0)) throw std::domain_error("FkppConfig: need x_min < 0 < x_max");
  if (!(dx > 0.0)) throw std::domain_error("FkppConfig: dx must be positive");
  if (dt > dx * dx / 2.0 + 1e-15) throw std::domain_error("FkppConfig: dt exceeds dx^2/2 stability margin");
  if (!(t_end > 0.0)) throw std::domain_error("FkppConfig: t_end must be positive");
  if (max_snapshots < 2) throw std::domain_error("FkppConfig: need at least 2 snapshots");
}

namespace {

// log-gap reference: g = h + ref(t,x)
double no_branch_ref(double t, double x) { return log_norm_cdf(x / std::sqrt(t)) - t; }

struct Grid {
  double x0, dx;
  std::vector<double> g;
  double x_at(size_t i) const { return x0 + dx * static_cast<double>(i); }
};

void reaction_step(Grid& gr, double dt) {
  const double w = -std::expm1(-dt);  // 1 - e^-dt
  for (double& gi : gr.g) {
    if (gi > -45.0) {
      gi = gi - dt - std::log1p(-std::exp(gi) * w);
      if (gi > 0.0) gi = 0.0;
    } else {
      gi -= dt;  // e^g * w is below double noise here
    }
  }
}

void diffusion_step(const Grid& gr, Grid& out, double dt, double clamp) {
  const size_t n = gr.g.size();
  const double inv2dx = 0.5 / gr.dx;
  const double invdx2 = 1.0 / (gr.dx * gr.dx);
  out.x0 = gr.x0;
  out.dx = gr.dx;
  out.g.resize(n);
  for (size_t i = 1; i + 1 < n; ++i) {
    const double gl = gr.g[i - 1], gc = gr.g[i], grt = gr.g[i + 1];
    const double gx = (grt - gl) * inv2dx;
    const double gxx = (grt - 2.0 * gc + gl) * invdx2;
    double v = gc + dt * 0.5 * (gxx + gx * gx);
    out.g[i] = std::clamp(v, -clamp, 0.0);
  }
  out.g[n - 1] = 0.0;
  out.g[0] = std::clamp(2.0 * out.g[1] - out.g[2], -clamp, 0.0);
}

double max_abs_slope(const Grid& gr, double t, const char* phase) {
  double m = 0.0;
  for (size_t i = 0; i + 1 < gr.g.size(); ++i) {
    double d = std::abs(gr.g[i + 1] - gr.g[i]);
    if (std::isnan(d))
      throw std::runtime_error("fkpp: NaN in " + std::string(phase) + " at t=" + std::to_string(t));
    m = std::max(m, d);
  }
  return m / gr.dx;
}

void check_monotone(const Grid& gr, double t, const char* phase) {
  for (size_t i = 0; i + 1 < gr.g.size(); ++i) {
    if (gr.g[i] - gr.g[i + 1] > 1e-6)
      throw std::runtime_error("fkpp: g decreasing in x (instability) in " + std::string(phase) +
                               " at t=" + std::to_string(t) + ", x=" + std::to_string(gr.x_at(i)));
  }
}

// evolve to t1, invoking snap(t) whenever a requested snapshot time is hit
template <typename SnapFn>
void evolve(Grid& gr, Grid& buf, double& t, double t1, double cap, double clamp,
            const std::vector<double>& snap_times, size_t& snap_idx, const char* phase,
            SnapFn&& snap) {
  int steps = 0;
  while (t < t1 - 1e-13) {
    double slope = max_abs_slope(gr, t, phase);
    double dt = cap;
    if (slope > 0.0) dt = std::min(dt, 0.8 / (slope * slope));
    double target = t1;
    if (snap_idx < snap_times.size()) target = std::min(target, snap_times[snap_idx]);
    dt = std::min(dt, target - t);
    if (dt <= 0.0) dt = 1e-15;
    reaction_step(gr, dt);
    diffusion_step(gr, buf, dt, clamp);
    std::swap(gr.g, buf.g);
    t += dt;
    if (++steps % 256 == 0) check_monotone(gr, t, phase);
    while (snap_idx < snap_times.size() && t >= snap_times[snap_idx] - 1e-13) {
      snap(t);
      ++snap_idx;
    }
  }
}

Snapshot to_snapshot(const Grid& gr, double t, bool full) {
  Snapshot s;
  s.t = t;
  s.x0 = gr.x0;
  s.dx = gr.dx;
  s.full_grid = full;
  s.h.resize(gr.g.size());
  const double sq = std::sqrt(t);
  for (size_t i = 0; i < gr.g.size(); ++i)
    s.h[i] = gr.g[i] - (log_norm_cdf(gr.x_at(i) / sq) - t);
  return s;
}

// initialize a grid at time t from a finer source grid, with analytic tails
// outside the source window
Grid stitch(double x0, double dx, size_t n, double t, const Grid& src, double W, double clamp) {
  Grid gr{x0, dx, std::vector<double>(n)};
  const double sq = std::sqrt(t);
  const double src_lo = src.x0 + 1.5, src_hi = src.x_at(src.g.size() - 1) - 1.5;
  for (size_t i = 0; i < n; ++i) {
    double x = gr.x_at(i);
    double g;
    if (x >= src_lo && x <= src_hi) {
      double u = (x - src.x0) / src.dx;
      size_t k = std::min(static_cast<size_t>(u), src.g.size() - 2);
      double w = u - static_cast<double>(k);
      g = (1.0 - w) * src.g[k] + w * src.g[k + 1];
    } else if (x < 0.0) {
      g = no_branch_ref(t, x);  // deep left: no-branching dominates
    } else {
      g = -std::exp(t + log_norm_cdf(-x / sq));  // right: ln(1-u), u <= e^t Phibar
    }
    gr.g[i] = std::clamp(g, -clamp, 0.0);
  }
  (void)W;
  return gr;
}

std::vector<double> geometric_times(double a, double b, double ratio) {
  std::vector<double> ts;
  for (double t = a; t < b; t *= ratio) ts.push_back(t);
  ts.push_back(b);
  return ts;
}

}  // namespace

FkppSolution solve(const FkppConfig& cfg) {
  cfg.validate();
  FkppSolution sol;
  sol.cfg = cfg;

  const double W = cfg.warmup_window;
  const double tA_end = std::min(0.25, cfg.t_end);
  const double tB_end = std::min(1.0, cfg.t_end);

  // stage A: dx/4 on [-W, W]
  const double dA = cfg.dx / 4.0;
  const double t00 = 16.0 * dA * dA;
  if (cfg.t_end <= t00) throw std::domain_error("fkpp: t_end below initial resolvable time");
  size_t nA = static_cast<size_t>(std::ceil(2.0 * W / dA)) + 1;
  Grid gr{-W, dA, std::vector<double>(nA)};
  {
    const double sq = std::sqrt(t00);
    for (size_t i = 0; i < nA; ++i)
      gr.g[i] = std::clamp(log_norm_cdf(gr.x_at(i) / sq) - t00, -cfg.clamp, 0.0);
  }
  Grid buf = gr;

  auto warm_snaps_a = geometric_times(t00 * 1.3, tA_end, 1.06);
  double t = t00;
  size_t si = 0;
  sol.snaps.push_back(to_snapshot(gr, t, false));
  evolve(gr, buf, t, tA_end, dA * dA / 4.0, cfg.clamp, warm_snaps_a, si, "warmup-a",
         [&](double tt) { sol.snaps.push_back(to_snapshot(gr, tt, false)); });

  // stage B: dx/2, same window
  if (cfg.t_end > tA_end) {
    const double dB = cfg.dx / 2.0;
    size_t nB = static_cast<size_t>(std::ceil(2.0 * W / dB)) + 1;
    Grid grB = stitch(-W, dB, nB, t, gr, W, cfg.clamp);
    gr = std::move(grB);
    buf = gr;
    auto warm_snaps_b = geometric_times(t * 1.06, tB_end, 1.06);
    si = 0;
    evolve(gr, buf, t, tB_end, dB * dB / 4.0, cfg.clamp, warm_snaps_b, si, "warmup-b",
           [&](double tt) { sol.snaps.push_back(to_snapshot(gr, tt, false)); });
  }

  // main phase on the full grid
  size_t n = static_cast<size_t>(std::ceil((cfg.x_max - cfg.x_min) / cfg.dx)) + 1;
  Grid main_grid = stitch(cfg.x_min, cfg.dx, n, t, gr, W, cfg.clamp);
  gr = std::move(main_grid);
  buf = gr;
  sol.main_start = t;
  sol.snaps.push_back(to_snapshot(gr, t, true));
  if (cfg.t_end > t) {
    int remaining = std::max(2, cfg.max_snapshots - static_cast<int>(sol.snaps.size()));
    std::vector<double> snap_times(remaining);
    for (int k = 0; k < remaining; ++k)
      snap_times[k] = t + (cfg.t_end - t) * (k + 1.0) / remaining;
    si = 0;
    evolve(gr, buf, t, cfg.t_end, cfg.dt_cap(), cfg.clamp, snap_times, si, "main",
           [&](double tt) { sol.snaps.push_back(to_snapshot(gr, tt, true)); });
    check_monotone(gr, t, "main");
  }
  sol.t_first = sol.snaps.front().t;
  return sol;
}

double FkppSolution::query_snapshot(const Snapshot& s, double x) const {
  const double lo = s.x0, hi = s.x_at(s.h.size() - 1);
  double h;
  if (x < lo || x > hi) {
    if (s.full_grid) throw std::domain_error("fkpp::query: x outside grid");
    h = x < lo ? 0.0 : s.h.back();  // analytic tails beyond the warmup window
  } else {
    double u = (x - s.x0) / s.dx;
    size_t k = std::min(static_cast<size_t>(u), s.h.size() - 2);
    double w = u - static_cast<double>(k);
    h = (w == 0.0) ? s.h[k] : (1.0 - w) * s.h[k] + w * s.h[k + 1];
  }
  return std::min(0.0, h + no_branch_ref(s.t, x));
}

double FkppSolution::query(double t, double x) const {
  if (snaps.empty()) throw std::runtime_error("fkpp::query: empty solution");
  if (t > cfg.t_end + 1e-12 || t < t_first - 1e-12)
    throw std::domain_error("fkpp::query: t outside stored range");
  auto it = std::lower_bound(snaps.begin(), snaps.end(), t,
                             [](const Snapshot& s, double tt) { return s.t < tt; });
  if (it == snaps.end()) --it;
  if (it->t == t || it == snaps.begin()) return query_snapshot(*it, x);
  const Snapshot& hi = *it;
  const Snapshot& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  if (w >= 1.0) return query_snapshot(hi, x);
  // interpolate h linearly in t, then restore the analytic reference at (t,x)
  auto h_of = [&](const Snapshot& s) {
    return query_snapshot(s, x) - no_branch_ref(s.t, x);
  };
  double h = (1.0 - w) * h_of(lo) + w * h_of(hi);
  return std::min(0.0, h + no_branch_ref(t, x));
}

SlopeFit slope_estimate(double alpha, const std::vector<double>& t_list, const FkppSolution& sol) {
  if (t_list.size() < 4) throw std::domain_error("slope_estimate: need >= 4 times");
  SlopeFit fit;
  for (double t : t_list) {
    double x = kSqrt2 * alpha * t;
    fit.t.push_back(t);
    fit.minus_ln_f.push_back(-sol.query(t, x));
  }
  std::vector<double> lnt(fit.t.size()), ones(fit.t.size(), 1.0);
  for (size_t i = 0; i < fit.t.size(); ++i) lnt[i] = std::log(fit.t[i]);
  auto c = lstsq({fit.t, lnt, ones}, fit.minus_ln_f);
  fit.psi_hat = c[0];
  fit.c = c[1];
  fit.d = c[2];
  for (size_t i = 0; i < fit.t.size(); ++i) {
    double pred = c[0] * fit.t[i] + c[1] * lnt[i] + c[2];
    fit.max_residual = std::max(fit.max_residual, std::abs(pred - fit.minus_ln_f[i]));
  }
  return fit;
}

void export_csv(const FkppSolution& sol, const std::string& path, int x_stride, int t_stride) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  out << "t,x,ln_f\n";
  for (size_t k = 0; k < sol.snaps.size(); k += t_stride) {
    const auto& s = sol.snaps[k];
    for (size_t i = 0; i < s.h.size(); i += x_stride) {
      double x = s.x_at(i);
      out << s.t << "," << x << "," << sol.query_snapshot(s, x) << "\n";
    }
  }
}

}  // namespace bbmlab::fkpp
