// bbmlab: rate evaluation, figure-data sweeps, verification suites, and
// finite-t experiments for branching Brownian motion conditioned to have a
// low maximum.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bbmlab/decomposition.hpp"
#include "bbmlab/fkpp.hpp"
#include "bbmlab/math_util.hpp"
#include "bbmlab/mc.hpp"
#include "bbmlab/rates.hpp"
#include "bbmlab/variational.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace bbmlab;

namespace {

constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;

rates::Theorem parse_theorem(const std::string& s) {
  if (s == "unconstrained") return rates::Theorem::Unconstrained;
  if (s == "time") return rates::Theorem::Time;
  if (s == "time_late") return rates::Theorem::TimeLate;
  if (s == "location_below") return rates::Theorem::LocBelow;
  if (s == "location_above") return rates::Theorem::LocAbove;
  throw CLI::ValidationError("theorem must be one of unconstrained|time|time_late|location_below|location_above");
}

// lo:hi:step grid spec
std::vector<double> parse_grid(const std::string& s) {
  double lo, hi, step;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0)
    throw CLI::ValidationError("grid must be lo:hi:step with step > 0");
  std::vector<double> g;
  for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(v);
  return g;
}

std::vector<double> parse_list(const std::string& s) {
  if (s.find(':') != std::string::npos) return parse_grid(s);
  std::vector<double> v;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t c = s.find(',', pos);
    if (c == std::string::npos) c = s.size();
    v.push_back(std::stod(s.substr(pos, c - pos)));
    pos = c + 1;
  }
  return v;
}

fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("BBMLAB_OUT")) return fs::path(dir) / p;
  return p;
}

std::ofstream open_output(const std::string& path, bool force) {
  fs::path p = resolve_output(path);
  if (fs::exists(p) && !force)
    throw std::runtime_error("refusing to overwrite " + p.string() + " (use --force)");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string());
  return out;
}

json eval_to_json(const rates::RateEvaluation& ev) {
  return json{{"value", ev.value},
              {"theorem", rates::to_string(ev.regime.theorem)},
              {"case", ev.regime.case_index},
              {"region", rates::to_string(ev.regime.region)},
              {"opt_tau_fraction", ev.opt_tau_fraction},
              {"opt_loc_coeff", ev.opt_loc_coeff}};
}

rates::RateEvaluation evaluate(rates::Theorem th, double alpha, double gamma, double beta) {
  switch (th) {
    case rates::Theorem::Unconstrained: {
      rates::RateEvaluation ev;
      ev.value = rates::psi(alpha);
      ev.regime.theorem = th;
      ev.regime.case_index = alpha >= -kRho ? 1 : 2;
      auto t3 = (1.0 - alpha) / kSqrt2;
      ev.opt_tau_fraction = std::min(t3, 1.0);
      ev.opt_loc_coeff = alpha >= -kRho ? -kRho * (1.0 - alpha) : kSqrt2 * alpha;
      return ev;
    }
    case rates::Theorem::Time: return rates::psi1(alpha, gamma);
    case rates::Theorem::TimeLate: return rates::psi2(alpha, gamma);
    case rates::Theorem::LocBelow: return rates::psi3(alpha, gamma, beta);
    case rates::Theorem::LocAbove: return rates::psi4(alpha, gamma, beta);
  }
  throw std::logic_error("unreachable");
}

// ---- verify suites ----------------------------------------------------

struct SuiteResult {
  bool pass = true;
  double worst = 0.0;
  json detail;
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

SuiteResult run_identities(int draws, double tol, uint64_t seed) {
  SuiteResult res;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ua(-3.0, 0.999), ug(1e-3, 1.0), ub(-kRho + 1e-6, 1.0);
  using namespace rates;
  for (int i = 0; i < draws; ++i) {
    double a = ua(gen), g = ug(gen), b = ub(gen);
    const double t1 = -(a + kRho) / kRho, t2 = (1 - a) / (2 * kSqrt2 - 1), t3 = (1 - a) / kSqrt2;
    double d[12];
    d[0] = i21(g, 1.0, a) - i11(g, 1.0, a);
    d[1] = i21(g, -kRho, a) - i31(g, -kRho, a);
    d[2] = i11(g, 1.0, a) - i22(g, a) - (9 - 4 * kSqrt2) / g * (g - t2) * (g - t2);
    d[3] = i31(g, -kRho, a) - i22(g, a) - 1.0 / g * std::pow(kRho * g + a + kRho, 2);
    d[4] = i21(g, -kRho, a) - i32(g, a) -
           (1 - g) / (g * (1 + g)) * std::pow(kRho * g + a + kRho, 2);
    const double c6 = 6 - 2 * kSqrt2;
    d[5] = i11(g, 1.0, a) - i31(g, -kRho, a) -
           c6 / g * (std::pow(g - (2 - kSqrt2 * a) / c6, 2) - 2 * std::pow(a + 2 * kRho, 2) / (c6 * c6));
    const double cc = (11 - 4 * kSqrt2) / (4 * (2 * kSqrt2 - 1));
    d[6] = i21(g, 1.0, a) - i22(t2, a) -
           2.0 / g * (std::pow(g - cc * (1 - a), 2) - (cc * cc - 0.5) * std::pow(1 - a, 2));
    d[7] = (1 - a) - i11(g, 1.0, a) +
           2.0 / g * (std::pow(g - 0.75 * (1 - a), 2) - std::pow((1 - a) / 4, 2));
    const double qq = (a * a - 2 * a + 3) / 4;
    d[8] = i31(1.0, -kRho, a) - i21(g, 1.0, a) +
           2.0 / g * (std::pow(g - qq, 2) - qq * qq + std::pow(1 - a, 2) / 2);
    d[9] = std::abs(a + kRho) > 1e-4
               ? i22(g, a) - i21(t1, -kRho, a) -
                     (-(4 * kSqrt2 * kRho - 1) * g - 4 * kSqrt2 * (a + kRho) + (a + kRho) / kRho)
               : 0.0;
    d[10] = i22(t2, a) - i21(t3, 1.0, a) - kRho * kRho / (2 * kSqrt2 - 1) * (1 - a);
    // composition of the pointwise cost
    double lt = 1e-3 + 0.998 * ug(gen), y = -4 + 8 * ug(gen);
    auto [reg, cost] = pointwise_cost(a, lt, y);
    d[11] = cost - (lt + y * y / (2 * lt) + 2 * child_tail_exponent(a, lt, y).second);
    for (double di : d) {
      double scale = std::max(1.0, std::abs(i21(g, 1.0, a)));
      res.worst = std::max(res.worst, std::abs(di) / scale);
    }
    (void)reg;
  }
  res.pass = res.worst <= tol;
  res.detail = json{{"draws", draws}, {"worst_rel_err", res.worst}, {"tol", tol}};
  return res;
}

SuiteResult run_continuity(int draws, double tol, uint64_t seed) {
  SuiteResult res;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ua(-3.0, 0.999), u01(0.0, 1.0);
  using namespace rates;
  auto upd = [&](double diff) { res.worst = std::max(res.worst, std::abs(diff)); };
  for (int i = 0; i < draws; ++i) {
    double a = ua(gen);
    auto th = thresholds(a, 0.5);
    // psi branch agreement at alpha = -rho
    upd(psi(-kRho + 1e-300) - (1.0 + kRho * kRho));
    // psi1 case boundaries
    if (th.t1 > 0 && th.t1 < 1) upd(i32(th.t1, a) - i22(th.t1, a));
    if (th.t2 < 1) upd(i22(th.t2, a) - i11(th.t2, 1.0, a));
    if (th.t3 < 1) upd(i11(th.t3, 1.0, a) - 2 * kRho * (1 - a));
    // psi1(alpha, 1) = psi(alpha)
    upd(psi1(a, 1.0).value - psi(a));
    // psi2 boundary at gamma = 1-alpha and left limit
    if (a > -kRho) {
      if (1 - a < 1) upd(psi2(a, 1 - a).value - i11(1 - a, 1.0, a));
      double g0 = (1 - a) / kSqrt2;
      if (g0 < 1) upd(i11(g0 + 1e-9, 1.0, a) - 2 * kRho * (1 - a));
    }
    double g = 0.05 + 0.95 * u01(gen);
    // psi3 boundary at beta1 (when >= 1) and vacuous-constraint values at beta=1
    if (g < 1) {
      double b1 = a / (1 - g);
      if (b1 >= 1.0) upd(psi3(a, g, b1).value - g);
      double want = g < 1 - a ? g + std::pow(a - (1 - g), 2) / g : g;
      upd(psi3(a, g, 1.0).value - want);
    }
    // psi2 = psi3(.,.,1) on psi2's domain
    if (a > -kRho && g > (1 - a) / kSqrt2) upd(psi2(a, g).value - psi3(a, g, 1.0).value);
    // psi4 continuity at its case boundaries
    auto thg = thresholds(a, g);
    if (g < std::min(th.t1, 1.0)) {
      upd(i31(g, thg.child_switch, a) - i32(g, a));
    } else if (g < 1) {
      upd(i31(g, -kRho, a) - i21(g, -kRho, a));
      if (thg.beta2 <= 1.0) upd(i21(g, thg.beta2, a) - i22(g, a));
    }
    // psi4(.,.,1) = psi1 for gamma <= t3^1 (pinned-window and free-window
    // optima coincide exactly there)
    double gcap = std::min(th.t3, 1.0);
    double g2 = 0.02 + (gcap - 0.02) * u01(gen);
    if (g2 > 0 && g2 <= gcap) upd(psi4(a, g2, 1.0).value - psi1(a, g2).value);
    // optimizer feasibility: pointwise cost at the optimum equals the rate
    auto ev1 = psi1(a, g);
    upd(pointwise_cost(a, ev1.opt_tau_fraction, ev1.opt_loc_coeff).second - ev1.value);
  }
  res.pass = res.worst <= tol;
  res.detail = json{{"draws", draws}, {"worst_abs_err", res.worst}, {"tol", tol}};
  return res;
}

SuiteResult run_oracle(double tol) {
  SuiteResult res;
  using rates::Theorem;
  const std::vector<double> alphas = {-2.0, -1.0, -0.85, -0.7, -0.5, -kRho, 0.0, 0.5, 0.9};
  std::vector<double> gammas;
  for (int i = 1; i <= 20; ++i) gammas.push_back(0.05 * i);
  const std::vector<double> betas = {-2.0, -1.0, -kRho, 0.0, 0.5, 1.0, 1.5, 3.0};
  int checked = 0, failed = 0;
  double worst = 0.0;
  json failures = json::array();
  auto run = [&](Theorem th, double a, double g, double b) {
    auto rep = variational::verify_rate(th, a, g, b, tol);
    ++checked;
    worst = std::max(worst, std::abs(rep.closed - rep.oracle));
    if (!rep.pass) {
      ++failed;
      if (failures.size() < 20)
        failures.push_back({{"theorem", rates::to_string(th)},
                            {"alpha", a},
                            {"gamma", g},
                            {"beta", b},
                            {"closed", rep.closed},
                            {"oracle", rep.oracle}});
    }
  };
  for (double a : alphas) {
    for (double g : gammas) {
      run(Theorem::Time, a, g, 0.0);
      if (a > -kRho && a < 1 && g > (1 - a) / kSqrt2) run(Theorem::TimeLate, a, g, 0.0);
      for (double b : betas) {
        if (b >= 1.0) run(Theorem::LocBelow, a, g, b);
        if (b <= 1.0) run(Theorem::LocAbove, a, g, b);
      }
    }
  }
  res.pass = failed == 0;
  res.worst = worst;
  res.detail = json{{"points", checked}, {"failed", failed}, {"tol", tol},
                    {"worst_abs_diff", worst}, {"failures", failures}};
  return res;
}

SuiteResult run_laplace() {
  SuiteResult res;
  auto r1 = variational::laplace_check([](double l) { return -l; }, 0.2, 1.0, {50, 100, 200});
  auto r2 = variational::laplace_check([](double l) { return -(l - 0.5) * (l - 0.5); }, 0.0, 1.0,
                                       {100, 200, 400});
  // errors decay with t and match the stated bounds at the largest t
  bool decay1 = std::abs(r1.per_t.back() - r1.g_max) <= std::abs(r1.per_t.front() - r1.g_max);
  bool decay2 = std::abs(r2.per_t.back() - r2.g_max) <= std::abs(r2.per_t.front() - r2.g_max);
  double e1 = std::abs(r1.per_t.back() - (-0.2));
  double e2 = std::abs(r2.per_t.back() - 0.0);
  res.pass = decay1 && decay2 && e1 <= 0.03 && e2 <= 0.02;
  res.worst = std::max(e1, e2);
  res.detail = json{{"linear_err_at_t200", e1}, {"gauss_err_at_t400", e2},
                    {"decay", decay1 && decay2}};
  return res;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bbmlab: rate functions and finite-t experiments for BBM with a low maximum"};
  app.require_subcommand(1);

  std::string theorem_s = "time", output, grid_s, t_list_s = "10,15,20,25,30,35,40";
  std::string mode_s = "exact", suite_s, format = "csv";
  double alpha = 0.0, gamma = 1.0, beta = 1.0, t = 6.0, dx = 0.05, eps = 1e-3, tol = 1e-5;
  uint64_t replicas = 100000, seed = 1;
  bool force = false;
  int draws = 10000;

  auto* eval = app.add_subcommand("eval", "evaluate one rate function");
  eval->add_option("--theorem", theorem_s)->required();
  eval->add_option("--alpha", alpha)->required();
  eval->add_option("--gamma", gamma);
  eval->add_option("--beta", beta);

  auto* sweep = app.add_subcommand("sweep", "figure-data sweep over gamma or beta");
  sweep->add_option("--theorem", theorem_s)->required();
  sweep->add_option("--alpha", alpha)->required();
  sweep->add_option("--gamma", gamma, "fixed gamma for location sweeps");
  sweep->add_option("--grid", grid_s, "lo:hi:step over gamma (time) or beta (location)")->required();
  sweep->add_option("--output", output);
  sweep->add_flag("--force", force);

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite_s, "identities|continuity|oracle|laplace")->required();
  verify->add_option("--draws", draws);
  verify->add_option("--tol", tol);
  verify->add_option("--seed", seed);
  verify->add_option("--output", output);
  verify->add_flag("--force", force);

  auto* fk = app.add_subcommand("fkpp-slope", "FKPP decay-slope experiment");
  fk->add_option("--alpha", alpha)->required();
  fk->add_option("--t", t_list_s, "comma list or lo:hi:step");
  fk->add_option("--dx", dx);
  fk->add_option("--output", output, "optional CSV of (t,x,lnF) snapshots");
  fk->add_flag("--force", force);

  auto* dec = app.add_subcommand("decompose", "first-branch decomposition experiment");
  dec->add_option("--alpha", alpha)->required();
  dec->add_option("--gamma", gamma)->required();
  dec->add_option("--beta", beta, "location slope (with --loc)");
  std::string loc_s = "none";
  dec->add_option("--loc", loc_s, "none|below|above");
  dec->add_option("--mode", mode_s, "exact|asymptotic");
  dec->add_option("--t", t_list_s);
  dec->add_option("--eps", eps, "window half-width fraction for location runs");
  dec->add_option("--dx", dx);
  dec->add_option("--output", output);
  dec->add_flag("--force", force);

  auto* sim = app.add_subcommand("simulate", "direct Monte Carlo BBM");
  sim->add_option("--alpha", alpha)->required();
  sim->add_option("--t", t)->required();
  sim->add_option("--replicas", replicas);
  sim->add_option("--seed", seed);
  sim->add_option("--output", output, "optional CSV of per-replica hits");
  sim->add_flag("--force", force);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*eval) {
      auto th = parse_theorem(theorem_s);
      auto ev = evaluate(th, alpha, gamma, beta);
      std::cout << eval_to_json(ev).dump(2) << "\n";
      return 0;
    }

    if (*sweep) {
      auto th = parse_theorem(theorem_s);
      auto grid = parse_grid(grid_s);
      bool over_beta = th == rates::Theorem::LocBelow || th == rates::Theorem::LocAbove;
      // insert the exact breakpoints so regime switches land on grid rows
      auto ths = rates::thresholds(alpha, over_beta ? gamma : std::min(1.0, gamma));
      std::vector<double> pts = grid;
      auto add = [&](double v) {
        if (v > grid.front() && v < grid.back()) pts.push_back(v);
      };
      if (over_beta) {
        add(ths.beta1);
        add(ths.beta2);
        add(ths.child_switch);
        add(-kRho);
      } else {
        add(ths.t1);
        add(ths.t2);
        add(ths.t3);
        add(ths.t4);
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                pts.end());
      std::ostringstream csv;
      csv << (over_beta ? "beta" : "gamma") << ",value,case,region,opt_tau,opt_y,at_breakpoint\n";
      int prev_case = -1;
      for (double v : pts) {
        rates::RateEvaluation ev;
        try {
          ev = over_beta ? evaluate(th, alpha, gamma, v) : evaluate(th, alpha, v, beta);
        } catch (const std::domain_error&) {
          continue;  // out-of-domain grid point (e.g. psi2 below its window)
        }
        bool bp = prev_case != -1 && ev.regime.case_index != prev_case;
        prev_case = ev.regime.case_index;
        csv << v << "," << ev.value << "," << ev.regime.case_index << ","
            << rates::to_string(ev.regime.region) << "," << ev.opt_tau_fraction << ","
            << ev.opt_loc_coeff << "," << (bp ? 1 : 0) << "\n";
      }
      if (output.empty()) {
        std::cout << csv.str();
      } else {
        open_output(output, force) << csv.str();
      }
      return 0;
    }

    if (*verify) {
      SuiteResult r;
      if (suite_s == "identities") r = run_identities(draws, 1e-10, seed);
      else if (suite_s == "continuity") r = run_continuity(draws, 1e-10, seed);
      else if (suite_s == "oracle") r = run_oracle(tol);
      else if (suite_s == "laplace") r = run_laplace();
      else throw CLI::ValidationError("unknown suite");
      json rep{{"suite", suite_s}, {"pass", r.pass}, {"detail", r.detail}};
      if (output.empty()) std::cout << rep.dump(2) << "\n";
      else open_output(output, force) << rep.dump(2) << "\n";
      return r.pass ? 0 : kExitVerifyFail;
    }

    if (*fk) {
      auto ts = parse_list(t_list_s);
      double t_end = *std::max_element(ts.begin(), ts.end());
      auto cfg = fkpp::FkppConfig::defaults(alpha, t_end, dx);
      auto sol = fkpp::solve(cfg);
      auto fit = fkpp::slope_estimate(alpha, ts, sol);
      json rep{{"alpha", alpha},      {"psi_hat", fit.psi_hat},
               {"c", fit.c},          {"d", fit.d},
               {"max_residual", fit.max_residual},
               {"psi_closed_form", rates::psi(alpha)},
               {"t", fit.t},          {"minus_ln_f", fit.minus_ln_f}};
      std::cout << rep.dump(2) << "\n";
      if (!output.empty()) fkpp::export_csv(sol, resolve_output(output).string(), 8, 8);
      return 0;
    }

    if (*dec) {
      auto ts = parse_list(t_list_s);
      variational::ConstraintSpec spec;
      if (loc_s == "none") {
        spec.tau_lo = 0.0;
        spec.tau_hi = gamma;
      } else {
        spec.tau_lo = std::max(0.0, gamma - eps);
        spec.tau_hi = gamma;
        spec.location = loc_s == "below" ? variational::LocationKind::Below
                                         : variational::LocationKind::Above;
        spec.beta = beta;
      }
      bool exact = mode_s == "exact";
      std::optional<fkpp::FkppSolution> sol;
      if (exact) {
        double t_end = *std::max_element(ts.begin(), ts.end());
        sol = fkpp::solve(fkpp::FkppConfig::defaults(alpha, t_end, dx));
      }
      std::ostringstream csv;
      csv << "alpha,gamma,beta,t,mode,ln_prob,minus_log_over_t\n";
      std::vector<double> lnps;
      for (double tv : ts) {
        decomposition::DecompositionQuery q;
        q.alpha = alpha;
        q.t = tv;
        q.spec = spec;
        q.mode = exact ? decomposition::Mode::Exact : decomposition::Mode::Asymptotic;
        auto est = exact ? decomposition::constrained_prob_exact(q, *sol)
                         : decomposition::constrained_prob_asymptotic(q);
        lnps.push_back(est.log_prob);
        csv << alpha << "," << gamma << "," << (loc_s == "none" ? 0.0 : beta) << "," << tv << ","
            << mode_s << "," << est.log_prob << "," << est.minus_log_over_t << "\n";
      }
      json rep{{"mode", mode_s}, {"alpha", alpha}, {"gamma", gamma}};
      if (ts.size() >= 4) {
        auto fit = decomposition::slope_fit(ts, lnps);
        rep["psi_hat"] = fit.psi_hat;
        rep["c"] = fit.c;
        rep["d"] = fit.d;
      } else {
        rep["minus_log_over_t"] = -lnps.back() / ts.back();
      }
      std::cout << rep.dump(2) << "\n";
      if (!output.empty()) open_output(output, force) << csv.str();
      return 0;
    }

    if (*sim) {
      mc::McConfig cfg;
      cfg.alpha = alpha;
      cfg.t = t;
      cfg.replicas = replicas;
      cfg.seed = seed;
      auto est = mc::estimate_prob(cfg);
      json rep{{"alpha", alpha},   {"t", t},
               {"replicas", replicas}, {"seed", seed},
               {"p_hat", est.p_hat},   {"std_err", est.std_err},
               {"hits", est.hits}};
      if (est.cond_tau_samples.size() >= 100) {
        auto cs = mc::conditional_first_branch(est);
        rep["cond_mean_tau_frac"] = cs.mean_tau_frac;
        rep["cond_mean_y_frac"] = cs.mean_y_frac;
      }
      std::cout << rep.dump(2) << "\n";
      if (!output.empty()) {
        auto out = open_output(output, force);
        out << "sample,tau_over_t,y_over_t\n";
        for (size_t i = 0; i < est.cond_tau_samples.size(); ++i)
          out << i << "," << est.cond_tau_samples[i] << "," << est.cond_y_samples[i] << "\n";
      }
      return 0;
    }
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
