#include "treenet/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace treenet {

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / double(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - out.mean;
    ss += d * d;
  }
  const double var = ss / double(xs.size() - 1);
  out.se = std::sqrt(var / double(xs.size()));
  return out;
}

WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials, double z) {
  WilsonInterval w;
  if (trials == 0) return w;
  const double n = double(trials);
  const double p = double(successes) / n;
  w.point = p;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  w.lo = (centre - spread) / denom;
  w.hi = (centre + spread) / denom;
  if (w.lo < 0.0) w.lo = 0.0;
  if (w.hi > 1.0) w.hi = 1.0;
  return w;
}

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols: need two equally sized samples");
  OlsFit fit;
  fit.n = int(x.size());
  const double n = double(x.size());
  double sx = 0.0, sy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw std::invalid_argument("ols: degenerate x values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r2 = (syy > 0.0) ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    const double s2 = sse / (n - 2.0);
    fit.slope_se = std::sqrt(s2 / sxx);
  } else {
    fit.slope_se = std::numeric_limits<double>::infinity();
  }
  return fit;
}

namespace {

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad args");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double stat, int df) {
  if (df <= 0) throw std::invalid_argument("chi_square_sf: df must be > 0");
  if (stat <= 0.0) return 1.0;
  return gamma_q(double(df) / 2.0, stat / 2.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double poisson_log_pmf(std::int64_t k, double lambda) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (lambda <= 0.0)
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1.0);
}

double two_proportion_pvalue_greater(std::uint64_t x1, std::uint64_t n1,
                                     std::uint64_t x2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0)
    throw std::invalid_argument("two_proportion: empty sample");
  const double p1 = double(x1) / double(n1);
  const double p2 = double(x2) / double(n2);
  const double pooled = double(x1 + x2) / double(n1 + n2);
  const double var =
      pooled * (1.0 - pooled) * (1.0 / double(n1) + 1.0 / double(n2));
  if (var <= 0.0) return p1 > p2 ? 0.0 : 1.0;
  const double z = (p1 - p2) / std::sqrt(var);
  return normal_sf(z);
}

double t_critical_975(int df) {
  static const double table[] = {
      12.706, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060,
      2.2622, 2.2281, 2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199,
      2.1098, 2.1009, 2.0930, 2.0860, 2.0796, 2.0739, 2.0687, 2.0639,
      2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423};
  if (df < 1) throw std::invalid_argument("t_critical_975: df must be >= 1");
  if (df <= 30) return table[df - 1];
  return 1.959963984540054;
}

namespace {

// Continued fraction for the regularized incomplete beta, modified Lentz.
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * double(m);
    double aa = double(m) * (b - double(m)) * x /
                ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + double(m)) * (qab + double(m)) * x /
         ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_sf: df must be > 0");
  const double x = df / (df + t * t);
  const double upper = 0.5 * reg_inc_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? upper : 1.0 - upper;
}

}  // namespace treenet
