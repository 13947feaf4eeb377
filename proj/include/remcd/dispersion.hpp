#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "remcd/error.hpp"
#include "remcd/glmfit.hpp"

namespace remcd {

/// Pearson risk statistic for the degenerate logistic model. With y = 1 and
/// binomial variance, (1 - bdot)^2 / bddot reduces to (1 - p)/p = exp(-eta),
/// which is the numerically stable form used here.
inline double pearson_risk(const Eigen::VectorXd& beta, const Eigen::MatrixXd& delta_rows) {
  Eigen::VectorXd eta = delta_rows * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (eta[i] <= -700.0) {
      raise(ErrorCode::RiskOverflow, "pearson contribution exceeds float range at row " +
                                         std::to_string(i));
    }
    total += std::exp(-eta[i]);
  }
  return total;
}

namespace detail {

/// Regularized lower incomplete gamma P(a, x); series for x < a+1, Lentz
/// continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) raise(ErrorCode::InvalidConfig, "gamma_p domain");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

/// Standard normal quantile (Acklam's rational approximation); only used to
/// seed the chi-square Newton iteration.
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double chi2_log_pdf(double df, double x) {
  double a = df / 2.0;
  return (a - 1.0) * std::log(x) - x / 2.0 - std::lgamma(a) - a * std::log(2.0);
}

}  // namespace detail

inline double chi2_cdf(double df, double x) {
  if (!(df > 0.0)) raise(ErrorCode::InvalidConfig, "chi2_cdf requires df > 0");
  if (x <= 0.0) return 0.0;
  return detail::gamma_p(df / 2.0, x / 2.0);
}

/// Chi-square quantile via Newton on the CDF with a Wilson-Hilferty initial
/// guess; iterates until |CDF(result) - q| < 1e-10, falling back to bisection
/// when a Newton step leaves the current bracket.
inline double chi2_quantile(double df, double q) {
  if (!(df > 0.0)) raise(ErrorCode::InvalidConfig, "chi2_quantile requires df > 0");
  if (!(q > 0.0 && q < 1.0)) raise(ErrorCode::InvalidConfig, "chi2_quantile requires q in (0,1)");

  double z = detail::normal_quantile(q);
  double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  double x = df * t * t * t;
  if (!(x > 0.0) || !std::isfinite(x)) x = df;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double f = chi2_cdf(df, x) - q;
    if (std::fabs(f) < 1e-10) return x;
    if (f > 0.0) hi = std::min(hi, x);
    else lo = std::max(lo, x);

    double step = f / std::exp(detail::chi2_log_pdf(df, x));
    double next = x - step;
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : std::max(2.0 * x, x + df);
    }
    x = next;
  }
  return x;
}

/// Verdict of the two-sided chi-square dispersion test.
struct DispersionVerdict {
  enum class Reason { Tested, NotFitted };

  double risk = std::numeric_limits<double>::quiet_NaN();
  double df = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.05;
  bool accepted = false;
  Reason reason = Reason::Tested;
};

inline const char* to_string(DispersionVerdict::Reason r) {
  return r == DispersionVerdict::Reason::Tested ? "tested" : "not_fitted";
}

/// Two-sided test that the Pearson risk is perfectly dispersed. The paper's
/// degrees of freedom n - |S| become n - edf here so penalized smooth fits
/// are treated consistently; the two agree for unpenalized linear models.
inline DispersionVerdict dispersion_test(const FitResult& fit, std::size_t n,
                                         double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) raise(ErrorCode::InvalidConfig, "alpha must be in (0,1)");
  DispersionVerdict v;
  v.alpha = alpha;
  v.risk = fit.pearson_risk;
  if (!fit.converged || fit.status != FitStatus::Ok) {
    v.reason = DispersionVerdict::Reason::NotFitted;
    v.accepted = false;
    return v;
  }
  double df = static_cast<double>(n) - fit.edf;
  if (!(df > 0.0)) raise(ErrorCode::InvalidConfig, "dispersion test requires n > edf");
  v.df = df;
  v.lower = chi2_quantile(df, alpha / 2.0);
  v.upper = chi2_quantile(df, 1.0 - alpha / 2.0);
  v.accepted = (v.lower <= v.risk) && (v.risk <= v.upper);
  return v;
}

}  // namespace remcd
