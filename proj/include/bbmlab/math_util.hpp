#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bbmlab {

inline const double kSqrt2 = std::sqrt(2.0);
inline const double kRho = kSqrt2 - 1.0;  // governs the lower tail of the BBM maximum
inline const double kInf = std::numeric_limits<double>::infinity();

// ln Phi(z), stable in the far left tail where erfc underflows (z < -37).
inline double log_norm_cdf(double z) {
  if (z > -37.0) {
    return std::log(0.5 * std::erfc(-z / kSqrt2));
  }
  // asymptotic: Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6)
  const double z2 = z * z;
  double corr = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - 0.5 * std::log(2.0 * M_PI) - std::log(-z) + std::log(corr);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

inline double log_norm_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * M_PI); }

// ln(e^a + e^b)
inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, cached per order.
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double p1 = 0, pp = 0;
      for (int it = 0; it < 100; ++it) {
        p1 = 1.0;
        double p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        double dz = p1 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }
  static const GaussLegendre& get(int n) {
    static const GaussLegendre g20(20), g40(40);
    if (n == 20) return g20;
    if (n == 40) return g40;
    throw std::invalid_argument("unsupported GL order");
  }
};

// ln of integral_a^b exp(f(x)) dx with one GL panel of given order.
inline double log_panel_gl(const std::function<double(double)>& f_log, double a, double b, int order) {
  const auto& gl = GaussLegendre::get(order);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double m = -kInf;
  std::vector<double> terms(gl.x.size());
  for (size_t i = 0; i < gl.x.size(); ++i) {
    terms[i] = f_log(c + h * gl.x[i]) + std::log(gl.w[i] * h);
    m = std::max(m, terms[i]);
  }
  if (m == -kInf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

struct LogQuadResult {
  double log_value = -kInf;
  double abs_log_error = 0.0;  // aggregate |GL20 - GL40| over accepted panels
  int panels = 0;
};

// Adaptive log-domain quadrature of exp(f_log) over [a,b]. Breakpoints seed the
// initial panel edges; panels whose coarse/fine estimates disagree get bisected.
// Panels more than `drop` below the running max are accepted without refinement.
inline LogQuadResult log_integrate(const std::function<double(double)>& f_log, double a, double b,
                                   std::vector<double> breakpoints, double tol_log = 1e-9,
                                   int max_depth = 30, double drop = 60.0) {
  LogQuadResult res;
  if (!(b > a)) return res;
  breakpoints.push_back(a);
  breakpoints.push_back(b);
  std::sort(breakpoints.begin(), breakpoints.end());
  struct Panel { double a, b; int depth; };
  std::vector<Panel> stack;
  for (size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    double lo = std::clamp(breakpoints[i], a, b), hi = std::clamp(breakpoints[i + 1], a, b);
    if (hi > lo) stack.push_back({lo, hi, 0});
  }
  std::vector<double> accepted;
  double running_max = -kInf;
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    double c20 = log_panel_gl(f_log, p.a, p.b, 20);
    double c40 = log_panel_gl(f_log, p.a, p.b, 40);
    if (std::isnan(c20) || std::isnan(c40))
      throw std::runtime_error("log_integrate: NaN integrand in panel");
    double diff = std::abs(c40 - c20);
    bool negligible = c40 < running_max - drop;
    if (diff <= tol_log || p.depth >= max_depth || negligible) {
      accepted.push_back(c40);
      running_max = std::max(running_max, c40);
      res.abs_log_error += negligible ? 0.0 : diff;
      res.panels++;
    } else {
      double mid = 0.5 * (p.a + p.b);
      stack.push_back({p.a, mid, p.depth + 1});
      stack.push_back({mid, p.b, p.depth + 1});
    }
  }
  res.log_value = log_sum_exp(accepted);
  return res;
}

// golden-section minimization on [a,b]
inline double golden_min(const std::function<double(double)>& f, double a, double b, int iters,
                         double* fmin = nullptr) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double xm = fc < fd ? c : d;
  if (fmin) *fmin = std::min(fc, fd);
  return xm;
}

// regularized upper incomplete gamma Q(a,x); series + Lentz continued fraction
inline double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) throw std::invalid_argument("gamma_q: bad args");
  if (x == 0) return 1.0;
  if (x < a + 1.0) {
    // P(a,x) by series, return 1-P
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Q(a,x) by continued fraction
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// chi-squared upper tail p-value
inline double chi2_pvalue(double stat, int dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

// least squares y ~ X c for small column counts, via normal equations
inline std::vector<double> lstsq(const std::vector<std::vector<double>>& cols,
                                 const std::vector<double>& y) {
  const size_t k = cols.size(), n = y.size();
  for (const auto& c : cols)
    if (c.size() != n) throw std::invalid_argument("lstsq: ragged design");
  std::vector<std::vector<double>> A(k, std::vector<double>(k + 1, 0.0));
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j)
      for (size_t r = 0; r < n; ++r) A[i][j] += cols[i][r] * cols[j][r];
    for (size_t r = 0; r < n; ++r) A[i][k] += cols[i][r] * y[r];
  }
  // gaussian elimination with partial pivoting
  for (size_t i = 0; i < k; ++i) {
    size_t piv = i;
    for (size_t r = i + 1; r < k; ++r)
      if (std::abs(A[r][i]) > std::abs(A[piv][i])) piv = r;
    std::swap(A[i], A[piv]);
    if (std::abs(A[i][i]) < 1e-12 * (1.0 + std::abs(A[0][0])))
      throw std::runtime_error("lstsq: singular design");
    for (size_t r = i + 1; r < k; ++r) {
      double f = A[r][i] / A[i][i];
      for (size_t cidx = i; cidx <= k; ++cidx) A[r][cidx] -= f * A[i][cidx];
    }
  }
  std::vector<double> c(k);
  for (size_t i = k; i-- > 0;) {
    double s = A[i][k];
    for (size_t j = i + 1; j < k; ++j) s -= A[i][j] * c[j];
    c[i] = s / A[i][i];
  }
  return c;
}

}  // namespace bbmlab
