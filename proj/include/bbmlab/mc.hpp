#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bbmlab/rng.hpp"

namespace bbmlab::mc {

struct McConfig {
  double t = 0.0;
  double alpha = 0.0;  // +inf = unconditional (every replica counts as a hit)
  uint64_t replicas = 1;
  uint64_t seed = 0;
  uint64_t population_cap = 1'000'000;
  double t_guard = 12.0;  // refuse horizons with mean tree size past the budget

  void validate() const;
};

struct Realization {
  double max_position = 0.0;
  std::optional<double> first_branch_time;
  std::optional<double> first_branch_location;
  uint64_t final_population = 1;
};

struct McEstimate {
  double p_hat = 0.0;
  double std_err = 0.0;
  uint64_t hits = 0;
  uint64_t replicas = 0;
  std::vector<double> cond_tau_samples;  // tau/t over hits that branched
  std::vector<double> cond_y_samples;    // y/t over hits that branched
};

struct ConditionalSummary {
  double mean_tau_frac = 0.0;
  double mean_y_frac = 0.0;
  uint64_t samples = 0;
  std::vector<uint64_t> tau_hist;  // 20 bins over [0,1]
};

struct PopulationReport {
  double mean_emp = 0.0, mean_theory = 0.0, z_mean = 0.0;
  double var_emp = 0.0, var_theory = 0.0, z_var = 0.0;
  bool ok = true;
};

// Exact simulation of one BBM tree up to time t: rate-1 binary branching,
// Brownian increments over each lifetime.
Realization simulate(double t, Rng& rng, uint64_t population_cap = 1'000'000);

McEstimate estimate_prob(const McConfig& cfg);

// conditional first-branch statistics among hits; needs >= 100 branched hits
ConditionalSummary conditional_first_branch(const McEstimate& est);

PopulationReport sanity_population(double t, uint64_t replicas, uint64_t seed);

}  // namespace bbmlab::mc
