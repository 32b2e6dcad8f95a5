#include "bbmlab/mc.hpp"

#include <cmath>
#include <stdexcept>

#include "bbmlab/math_util.hpp"

namespace bbmlab::mc {

void McConfig::validate() const {
  if (!(t > 0.0)) throw std::domain_error("McConfig: t must be positive");
  if (replicas < 1) throw std::domain_error("McConfig: replicas must be >= 1");
  if (t > t_guard)
    throw std::domain_error("McConfig: t exceeds compute guard (mean tree size ~ 2e^t)");
}

Realization simulate(double t, Rng& rng, uint64_t population_cap) {
  Realization out;
  out.max_position = -kInf;
  out.final_population = 0;

  struct Particle { double birth_t, birth_x; };
  std::vector<Particle> stack;
  stack.push_back({0.0, 0.0});
  bool root = true;
  uint64_t alive = 1;
  while (!stack.empty()) {
    Particle p = stack.back();
    stack.pop_back();
    double life = rng.exponential();
    double death = p.birth_t + life;
    if (death < t) {
      double pos = p.birth_x + rng.normal() * std::sqrt(life);
      if (root) {
        out.first_branch_time = death;
        out.first_branch_location = pos;
      }
      alive += 1;  // binary split: one particle becomes two
      if (alive > population_cap)
        throw std::runtime_error("mc::simulate: population cap exceeded");
      stack.push_back({death, pos});
      stack.push_back({death, pos});
    } else {
      double pos = p.birth_x + rng.normal() * std::sqrt(t - p.birth_t);
      out.max_position = std::max(out.max_position, pos);
      out.final_population += 1;
    }
    root = false;
  }
  return out;
}

McEstimate estimate_prob(const McConfig& cfg) {
  cfg.validate();
  McEstimate est;
  est.replicas = cfg.replicas;
  const double threshold = std::isinf(cfg.alpha) ? kInf : kSqrt2 * cfg.alpha * cfg.t;
  for (uint64_t r = 0; r < cfg.replicas; ++r) {
    Rng rng(cfg.seed, r);
    Realization real = simulate(cfg.t, rng, cfg.population_cap);
    if (real.max_position <= threshold) {
      est.hits += 1;
      if (real.first_branch_time) {
        est.cond_tau_samples.push_back(*real.first_branch_time / cfg.t);
        est.cond_y_samples.push_back(*real.first_branch_location / cfg.t);
      }
    }
  }
  est.p_hat = static_cast<double>(est.hits) / static_cast<double>(cfg.replicas);
  est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(cfg.replicas));
  return est;
}

ConditionalSummary conditional_first_branch(const McEstimate& est) {
  if (est.cond_tau_samples.size() < 100)
    throw std::runtime_error(
        "conditional_first_branch: fewer than 100 branched hits; increase replicas or alpha");
  ConditionalSummary s;
  s.samples = est.cond_tau_samples.size();
  s.tau_hist.assign(20, 0);
  double st = 0.0, sy = 0.0;
  for (size_t i = 0; i < est.cond_tau_samples.size(); ++i) {
    st += est.cond_tau_samples[i];
    sy += est.cond_y_samples[i];
    int b = std::min(19, static_cast<int>(est.cond_tau_samples[i] * 20.0));
    s.tau_hist[static_cast<size_t>(std::max(0, b))] += 1;
  }
  s.mean_tau_frac = st / static_cast<double>(s.samples);
  s.mean_y_frac = sy / static_cast<double>(s.samples);
  return s;
}

PopulationReport sanity_population(double t, uint64_t replicas, uint64_t seed) {
  if (t > 10.0) throw std::domain_error("sanity_population: t must be <= 10");
  PopulationReport rep;
  double sum = 0.0, sum2 = 0.0;
  for (uint64_t r = 0; r < replicas; ++r) {
    Rng rng(seed, r);
    auto real = simulate(t, rng);
    double n = static_cast<double>(real.final_population);
    sum += n;
    sum2 += n * n;
  }
  const double R = static_cast<double>(replicas);
  rep.mean_emp = sum / R;
  rep.var_emp = sum2 / R - rep.mean_emp * rep.mean_emp;
  rep.mean_theory = std::exp(t);
  rep.var_theory = std::exp(t) * (std::exp(t) - 1.0);
  // n(t) is geometric with p = e^-t; use its exact moments for the z-scores
  const double p = std::exp(-t);
  const double m4 = (1.0 - p) * (p * p - 9.0 * p + 9.0) / (p * p * p * p);
  rep.z_mean = (rep.mean_emp - rep.mean_theory) / std::sqrt(rep.var_theory / R);
  const double var_of_var = (m4 - rep.var_theory * rep.var_theory) / R;
  rep.z_var = (rep.var_emp - rep.var_theory) / std::sqrt(std::max(var_of_var, 1e-300));
  rep.ok = std::abs(rep.z_mean) <= 4.0 && std::abs(rep.z_var) <= 4.0;
  return rep;
}

}  // namespace bbmlab::mc
