#pragma once

#include <cstdint>
#include <vector>

namespace treenet {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t n = 0;
};

// Mean and standard error of a sample, in one fixed-order pass so results
// do not depend on scheduling.
MeanSe mean_se(const std::vector<double>& xs);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
  double point = 0.0;
};

// Wilson score interval for a binomial proportion (default 95%).
WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials,
                      double z = 1.959963984540054);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
  int n = 0;
};

// Ordinary least squares of y on x. Requires at least 3 points for a
// finite slope standard error.
OlsFit ols(const std::vector<double>& x, const std::vector<double>& y);

// Regularized upper incomplete gamma Q(a, x); series/continued-fraction
// evaluation good to ~1e-12 for the moderate arguments used here.
double gamma_q(double a, double x);

// Survival function of the chi-square distribution.
double chi_square_sf(double stat, int df);

// Standard normal survival function.
double normal_sf(double z);

// log of the Poisson pmf at k with the given mean.
double poisson_log_pmf(std::int64_t k, double lambda);

// One-sided two-sample proportion test; returns the p-value for the
// alternative p1 > p2.
double two_proportion_pvalue_greater(std::uint64_t x1, std::uint64_t n1,
                                     std::uint64_t x2, std::uint64_t n2);

// 97.5% quantile of Student's t for small degrees of freedom (falls back
// to the normal value above df 30).
double t_critical_975(int df);

// Survival function of Student's t; df may be fractional, as produced by
// the Welch-Satterthwaite approximation.
double student_t_sf(double t, double df);

}  // namespace treenet
