#pragma once

#include <functional>
#include <vector>

#include "bbmlab/rates.hpp"

namespace bbmlab::variational {

enum class LocationKind { Unconstrained, Below, Above };

// Feasible set for the first branch: tau/t in [lo,hi], and optionally
// y <=/>= sqrt2*alpha*t - sqrt2*beta*(t-tau).
struct ConstraintSpec {
  double tau_lo = 0.0;  // lo == 0 means the open-left window (0, hi]
  double tau_hi = 1.0;
  LocationKind location = LocationKind::Unconstrained;
  double beta = 0.0;

  void validate() const;
};

struct VariationalResult {
  double value = 0.0;
  double argmin_tau = 0.0;
  double argmin_y_coeff = 0.0;
  long iterations = 0;     // cost evaluations
  double certified_gap = 0.0;
};

struct MinimizeOptions {
  int grid_n_tau = 401;
  int grid_n_y = 401;
  double guard = 1e-4;      // excluded band (0,guard) where the cost diverges
  int golden_iters = 60;
  int rounds = 3;
};

// Numerical minimum of rates::pointwise_cost over the feasible set.
VariationalResult minimize_cost(double alpha, const ConstraintSpec& spec,
                                const MinimizeOptions& opts = {});

struct VerifyReport {
  rates::Theorem theorem;
  double alpha, gamma, beta;
  double closed = 0.0;
  double oracle = 0.0;
  double gap = 0.0;
  bool pass = false;
};

// Compare the closed-form rate against minimize_cost under the matching window.
// eps pins the [gamma-eps, gamma] window of the location theorems.
VerifyReport verify_rate(rates::Theorem theorem, double alpha, double gamma, double beta,
                         double tol, double eps = 1e-7);

struct LaplaceResult {
  std::vector<double> per_t;  // (1/t) ln of integral for each t
  double g_max = 0.0;
  double max_error = 0.0;
};

// Numerical check of the Laplace lemma: (1/t) ln int_{pt}^{qt} e^{t g(tau/t)} dtau
// against max g on [p,q], for each t in t_list.
LaplaceResult laplace_check(const std::function<double(double)>& g, double p, double q,
                            const std::vector<double>& t_list);

}  // namespace bbmlab::variational
