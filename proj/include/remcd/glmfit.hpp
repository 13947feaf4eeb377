#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "remcd/error.hpp"

namespace remcd {

struct Cumulant {
  double b;      // log(1 + exp(theta))
  double bdot;   // sigmoid(theta)
  double bddot;  // sigmoid * (1 - sigmoid)
};

/// Binomial cumulant function and derivatives, overflow-safe at extreme theta.
inline Cumulant cumulant(double theta) {
  double b, s;
  if (theta > 0.0) {
    double e = std::exp(-theta);
    b = theta + std::log1p(e);
    s = 1.0 / (1.0 + e);
  } else {
    double e = std::exp(theta);
    b = std::log1p(e);
    s = e / (1.0 + e);
  }
  return {b, s, s * (1.0 - s)};
}

/// log sigmoid(eta), stable in both tails.
inline double log_sigmoid(double eta) {
  if (eta > 0.0) return -std::log1p(std::exp(-eta));
  return eta - std::log1p(std::exp(eta));
}

/// Degenerate-logistic log-likelihood: all responses are 1, so each pair
/// contributes log sigmoid(eta_i) with eta_i = beta . delta_i.
inline double loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& delta_rows) {
  Eigen::VectorXd eta = delta_rows * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += log_sigmoid(eta[i]);
  return total;
}

inline Eigen::VectorXd loglik_gradient(const Eigen::VectorXd& beta,
                                       const Eigen::MatrixXd& delta_rows) {
  Eigen::VectorXd eta = delta_rows * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = 1.0 - cumulant(eta[i]).bdot;
  return delta_rows.transpose() * resid;
}

inline Eigen::MatrixXd loglik_hessian(const Eigen::VectorXd& beta,
                                      const Eigen::MatrixXd& delta_rows) {
  Eigen::VectorXd eta = delta_rows * beta;
  Eigen::VectorXd w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) w[i] = cumulant(eta[i]).bddot;
  return -(delta_rows.transpose() * w.asDiagonal() * delta_rows);
}

enum class FitStatus { Ok, Separated, Singular };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Ok: return "ok";
    case FitStatus::Separated: return "separated";
    case FitStatus::Singular: return "singular";
  }
  return "unknown";
}

struct FitResult {
  Eigen::VectorXd beta;
  double loglik = 0.0;
  double edf = 0.0;
  double bic = 0.0;
  Eigen::VectorXd se;
  double pearson_risk = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  double lambda = 0.0;
  bool lambda_at_boundary = false;
  FitStatus status = FitStatus::Ok;
};

struct FitOptions {
  double gradient_tol = 1e-8;
  int max_iterations = 100;
  double separation_norm = 1e4;
  int max_halvings = 40;
};

/// Penalized maximum likelihood for the degenerate logistic model:
/// maximize loglik(beta) - lambda * beta' P beta by full Newton with
/// step-halving. Separation is flagged when ||beta|| escapes.
inline FitResult fit(const Eigen::MatrixXd& delta_rows, const Eigen::MatrixXd& penalty,
                     double lambda, const FitOptions& options = {}) {
  const Eigen::Index n = delta_rows.rows();
  const Eigen::Index d = delta_rows.cols();
  if (d == 0) raise(ErrorCode::InvalidConfig, "fit requires at least one column");
  if (n < d) raise(ErrorCode::InvalidConfig, "fit requires n >= d");
  const bool penalized = lambda != 0.0 && penalty.size() > 0;
  if (penalized && (penalty.rows() != d || penalty.cols() != d)) {
    raise(ErrorCode::InvalidConfig, "penalty dimensions do not match design");
  }

  FitResult res;
  res.lambda = lambda;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd pen = penalized ? penalty : Eigen::MatrixXd::Zero(d, d);

  auto objective = [&](const Eigen::VectorXd& b) {
    double q = loglik(b, delta_rows);
    if (penalized) q -= lambda * b.dot(pen * b);
    return q;
  };

  double obj = objective(beta);
  Eigen::VectorXd resid(n), w(n);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd eta = delta_rows * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      Cumulant c = cumulant(eta[i]);
      resid[i] = 1.0 - c.bdot;
      w[i] = c.bddot;
    }
    Eigen::VectorXd grad = delta_rows.transpose() * resid;
    if (penalized) grad -= 2.0 * lambda * (pen * beta);
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      res.converged = true;
      break;
    }

    Eigen::MatrixXd k = delta_rows.transpose() * w.asDiagonal() * delta_rows;
    if (penalized) k += 2.0 * lambda * pen;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    Eigen::VectorXd step;
    bool solvable = ldlt.info() == Eigen::Success;
    if (solvable) {
      step = ldlt.solve(grad);
      solvable = step.allFinite();
      if (solvable) {
        // Guard against a semidefinite factorization passing through junk.
        double rel = (k * step - grad).norm() / std::max(1.0, grad.norm());
        solvable = rel < 1e-6;
      }
    }
    if (!solvable) {
      res.status = FitStatus::Singular;
      break;
    }

    double scale = 1.0;
    bool ascended = false;
    for (int h = 0; h < options.max_halvings; ++h) {
      Eigen::VectorXd cand = beta + scale * step;
      double cand_obj = objective(cand);
      if (std::isfinite(cand_obj) && cand_obj > obj) {
        beta = std::move(cand);
        obj = cand_obj;
        ascended = true;
        break;
      }
      scale *= 0.5;
    }
    if (!ascended) break;  // numerical plateau; convergence decided by gradient test

    if (beta.norm() > options.separation_norm) {
      res.status = FitStatus::Separated;
      break;
    }
  }
  res.iterations = iter;
  res.beta = beta;
  res.loglik = loglik(beta, delta_rows);

  if (res.status != FitStatus::Ok) {
    res.converged = false;
    res.edf = std::numeric_limits<double>::quiet_NaN();
    res.bic = std::numeric_limits<double>::quiet_NaN();
    res.se = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
    return res;
  }

  Eigen::VectorXd eta_hat = delta_rows * beta;
  for (Eigen::Index i = 0; i < n; ++i) w[i] = cumulant(eta_hat[i]).bddot;
  Eigen::MatrixXd h_unpen = delta_rows.transpose() * w.asDiagonal() * delta_rows;
  Eigen::MatrixXd h_pen = h_unpen;
  if (penalized) h_pen += 2.0 * lambda * pen;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(h_pen);
  Eigen::MatrixXd h_inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
  if (ldlt.info() != Eigen::Success || !h_inv.allFinite()) {
    res.status = FitStatus::Singular;
    res.converged = false;
    res.edf = std::numeric_limits<double>::quiet_NaN();
    res.bic = std::numeric_limits<double>::quiet_NaN();
    res.se = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
    return res;
  }

  res.edf = penalized ? (h_inv * h_unpen).trace() : static_cast<double>(d);
  res.bic = -2.0 * res.loglik + res.edf * std::log(static_cast<double>(n));
  res.se = h_inv.diagonal().cwiseMax(0.0).cwiseSqrt();
  return res;
}

struct LambdaChoice {
  double lambda = 0.0;
  bool at_boundary = false;
};

/// Smoothing parameter by BIC over a fixed log grid {1e-4 .. 1e4, 17 points}.
/// Returns 0 when the penalty is identically zero (all-linear models).
inline LambdaChoice select_lambda(const Eigen::MatrixXd& delta_rows,
                                  const Eigen::MatrixXd& penalty,
                                  const FitOptions& options = {}) {
  if (penalty.size() == 0 || penalty.isZero(0.0)) return {0.0, false};

  LambdaChoice choice;
  double best_bic = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  for (int g = 0; g < 17; ++g) {
    double lambda = std::pow(10.0, -4.0 + 0.5 * g);
    FitResult r = fit(delta_rows, penalty, lambda, options);
    if (!r.converged || !std::isfinite(r.bic)) continue;
    if (r.bic < best_bic) {
      best_bic = r.bic;
      best_idx = g;
      choice.lambda = lambda;
    }
  }
  if (best_idx < 0) return {0.0, true};
  choice.at_boundary = (best_idx == 0 || best_idx == 16);
  return choice;
}

}  // namespace remcd
