#pragma once

#include <vector>

#include "bbmlab/fkpp.hpp"
#include "bbmlab/variational.hpp"

namespace bbmlab::decomposition {

enum class Mode { Exact, Asymptotic };

// Finite-t constrained probability P(X_max(t) <= sqrt2*alpha*t, tau/t in window,
// y in the located half-line), via the first-branching disintegration
//   int_A e^-tau int_B phi_tau(y) K(t-tau, sqrt2*alpha*t - y) dy dtau
// with K = F^2 (EXACT) or the regionwise I1/I2/I3 tail forms (ASYMPTOTIC).
struct DecompositionQuery {
  double alpha = 0.0;
  double t = 0.0;
  variational::ConstraintSpec spec;
  Mode mode = Mode::Exact;

  void validate() const;
};

struct DecompositionEstimate {
  double log_prob = 0.0;
  double minus_log_over_t = 0.0;
  double quadrature_error = 0.0;       // aggregate log-domain panel disagreement
  double per_region_log[3] = {0, 0, 0};  // ASYMPTOTIC mode: Y1,Y2,Y3 contributions
};

DecompositionEstimate constrained_prob_exact(const DecompositionQuery& q,
                                             const fkpp::FkppSolution& sol);

DecompositionEstimate constrained_prob_asymptotic(const DecompositionQuery& q);

struct FitResult {
  double psi_hat = 0.0, c = 0.0, d = 0.0;
  double max_residual = 0.0;
};

// least squares -ln P = psi*t + c*ln t + d
FitResult slope_fit(const std::vector<double>& t_list, const std::vector<double>& ln_probs);

}  // namespace bbmlab::decomposition
