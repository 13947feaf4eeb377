#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "remcd/core.hpp"
#include "remcd/error.hpp"

namespace remcd {

/// Per-covariate basis choice. Linear contributes one column; a cubic
/// B-spline with k interior knots contributes k + degree columns after the
/// sum-to-zero identifiability reduction (the likelihood only sees
/// differences, so the constant direction is removed).
struct BasisSpec {
  enum class Kind { Linear, BSpline };

  Kind kind = Kind::Linear;
  int interior_knots = 8;
  int degree = 3;
  int penalty_order = 2;
  std::string name;

  static BasisSpec linear(std::string name = "") {
    BasisSpec s;
    s.kind = Kind::Linear;
    s.name = std::move(name);
    return s;
  }

  static BasisSpec bspline(int interior_knots = 8, std::string name = "") {
    BasisSpec s;
    s.kind = Kind::BSpline;
    s.interior_knots = interior_knots;
    s.name = std::move(name);
    return s;
  }
};

/// One covariate's basis with knots frozen on training data.
class FittedBasis {
 public:
  /// Interior knots at equispaced quantiles of `values`; boundary knots at
  /// the data range. Duplicate quantiles are merged.
  static FittedBasis fit(const BasisSpec& spec, std::span<const double> values) {
    FittedBasis b;
    b.spec_ = spec;
    if (spec.kind == BasisSpec::Kind::Linear) return b;

    if (spec.degree < 1) raise(ErrorCode::InvalidConfig, "b-spline degree must be >= 1");
    if (spec.interior_knots < 1) raise(ErrorCode::InvalidConfig, "b-spline needs >= 1 interior knot");
    if (values.size() < 2) raise(ErrorCode::InvalidConfig, "not enough values to place knots");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (!(hi > lo)) raise(ErrorCode::InvalidConfig, "constant covariate cannot carry a spline");

    std::vector<double> interior;
    for (int j = 1; j <= spec.interior_knots; ++j) {
      double q = static_cast<double>(j) / (spec.interior_knots + 1);
      double h = q * static_cast<double>(sorted.size() - 1);
      std::size_t idx = static_cast<std::size_t>(h);
      double frac = h - static_cast<double>(idx);
      double v = sorted[idx];
      if (idx + 1 < sorted.size()) v += frac * (sorted[idx + 1] - sorted[idx]);
      if (v <= lo || v >= hi) continue;
      if (!interior.empty() && v <= interior.back()) continue;
      interior.push_back(v);
    }
    if (interior.empty()) raise(ErrorCode::InvalidConfig, "degenerate data: no usable interior knots");

    const int deg = spec.degree;
    const int m = static_cast<int>(interior.size()) + deg + 1;  // unreduced basis size
    b.knots_.resize(m + deg + 1);
    for (int i = 0; i <= deg; ++i) b.knots_[i] = lo;
    for (std::size_t i = 0; i < interior.size(); ++i) b.knots_[deg + 1 + static_cast<int>(i)] = interior[i];
    for (int i = 0; i <= deg; ++i) b.knots_[m + i] = hi;

    b.reducer_ = sum_to_zero_reducer(m);
    b.penalty_ = b.reducer_.transpose() * full_penalty(b.knots_, deg) * b.reducer_;
    // Clean tiny asymmetries from the projection.
    b.penalty_ = ((b.penalty_ + b.penalty_.transpose()) / 2.0).eval();
    return b;
  }

  const BasisSpec& spec() const { return spec_; }

  int columns() const {
    if (spec_.kind == BasisSpec::Kind::Linear) return 1;
    return unreduced_columns() - 1;
  }

  int unreduced_columns() const {
    if (spec_.kind == BasisSpec::Kind::Linear) return 1;
    return static_cast<int>(knots_.size()) - spec_.degree - 1;
  }

  /// Unreduced B-spline row (Cox-de Boor). Out-of-range x is clamped to the
  /// boundary knots.
  Eigen::VectorXd raw_basis(double x) const {
    const int deg = spec_.degree;
    const int m = unreduced_columns();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    if (spec_.kind == BasisSpec::Kind::Linear) {
      out[0] = x;
      return out;
    }
    const double lo = knots_[deg];
    const double hi = knots_[m];
    x = std::clamp(x, lo, hi);

    // Knot span index mu with knots[mu] <= x < knots[mu+1].
    int mu;
    if (x >= hi) {
      mu = m - 1;
    } else {
      mu = deg;
      while (mu + 1 < m && knots_[mu + 1] <= x) ++mu;
    }

    std::vector<double> n(deg + 1, 0.0), left(deg + 1, 0.0), right(deg + 1, 0.0);
    n[0] = 1.0;
    for (int j = 1; j <= deg; ++j) {
      left[j] = x - knots_[mu + 1 - j];
      right[j] = knots_[mu + j] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        double tmp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      n[j] = saved;
    }
    for (int r = 0; r <= deg; ++r) out[mu - deg + r] = n[r];
    return out;
  }

  /// Reduced basis row (identifiable under difference likelihoods).
  Eigen::VectorXd expand(double x) const {
    if (!std::isfinite(x)) raise(ErrorCode::MissingCovariate, "non-finite covariate value");
    if (spec_.kind == BasisSpec::Kind::Linear) {
      Eigen::VectorXd out(1);
      out[0] = x;
      return out;
    }
    return reducer_.transpose() * raw_basis(x);
  }

  /// PSD smoothness penalty on the reduced coefficients; zero for Linear.
  const Eigen::MatrixXd& penalty_matrix() const {
    if (spec_.kind == BasisSpec::Kind::Linear) {
      static const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
      return zero;
    }
    return penalty_;
  }

  const Eigen::VectorXd& knots() const { return knots_; }

  /// Knot averages; a function is linear in x iff its coefficients are
  /// linear in these sites (Marsden's identity), which the second divided
  /// difference penalty annihilates exactly.
  Eigen::VectorXd greville_sites() const {
    const int deg = spec_.degree;
    const int m = unreduced_columns();
    Eigen::VectorXd g(m);
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 1; l <= deg; ++l) s += knots_[j + l];
      g[j] = s / deg;
    }
    return g;
  }

  const Eigen::MatrixXd& reducer() const { return reducer_; }

 private:
  static Eigen::MatrixXd sum_to_zero_reducer(int m) {
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(m, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(m - 1);
  }

  static Eigen::MatrixXd full_penalty(const Eigen::VectorXd& knots, int deg) {
    const int m = static_cast<int>(knots.size()) - deg - 1;
    Eigen::VectorXd g(m);
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 1; l <= deg; ++l) s += knots[j + l];
      g[j] = s / deg;
    }
    // Second divided differences over the Greville sites.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m - 2, m);
    for (int j = 0; j + 2 < m; ++j) {
      double h0 = g[j + 1] - g[j];
      double h1 = g[j + 2] - g[j + 1];
      if (!(h0 > 0.0) || !(h1 > 0.0)) raise(ErrorCode::InvalidConfig, "non-increasing Greville sites");
      d(j, j) = 2.0 / (h0 * (h0 + h1));
      d(j, j + 1) = -2.0 / (h0 * h1);
      d(j, j + 2) = 2.0 / (h1 * (h0 + h1));
    }
    return d.transpose() * d;
  }

  BasisSpec spec_;
  Eigen::VectorXd knots_;
  Eigen::MatrixXd reducer_;
  Eigen::MatrixXd penalty_;
};

/// All covariates' fitted bases plus subset-restricted design helpers.
class BasisSet {
 public:
  static BasisSet fit(const std::vector<BasisSpec>& specs,
                      const std::vector<CaseControlPair>& pairs) {
    if (pairs.empty()) raise(ErrorCode::InvalidConfig, "no pairs to fit basis on");
    const int p = static_cast<int>(pairs.front().x_case.size());
    if (static_cast<int>(specs.size()) != p) {
      raise(ErrorCode::InvalidConfig, "basis spec count does not match covariate count");
    }
    BasisSet set;
    set.bases_.reserve(specs.size());
    std::vector<double> pooled(2 * pairs.size());
    for (int j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        pooled[2 * i] = pairs[i].x_case[j];
        pooled[2 * i + 1] = pairs[i].x_control[j];
      }
      set.bases_.push_back(FittedBasis::fit(specs[j], pooled));
    }
    return set;
  }

  static BasisSet all_linear(int p) {
    BasisSet set;
    for (int j = 0; j < p; ++j) set.bases_.push_back(FittedBasis::fit(BasisSpec::linear(), {}));
    return set;
  }

  int p() const { return static_cast<int>(bases_.size()); }

  const FittedBasis& basis(int covariate_1based) const {
    return bases_.at(static_cast<std::size_t>(covariate_1based - 1));
  }

  int width(const SubsetModel& model) const {
    int w = 0;
    for (int i : model.indices) w += basis(i).columns();
    return w;
  }

  bool any_smooth(const SubsetModel& model) const {
    for (int i : model.indices) {
      if (basis(i).spec().kind == BasisSpec::Kind::BSpline) return true;
    }
    return false;
  }

  /// psi_S(x): concatenated per-covariate expansions; x is the full p-vector.
  Eigen::VectorXd expand(const Eigen::VectorXd& x, const SubsetModel& model) const {
    Eigen::VectorXd out(width(model));
    int at = 0;
    for (int i : model.indices) {
      const FittedBasis& b = basis(i);
      out.segment(at, b.columns()) = b.expand(x[i - 1]);
      at += b.columns();
    }
    return out;
  }

  /// psi_S(x_case) - psi_S(x_control).
  Eigen::VectorXd delta_design(const CaseControlPair& pair, const SubsetModel& model) const {
    if (!pair.x_case.allFinite() || !pair.x_control.allFinite()) {
      raise(ErrorCode::MissingCovariate, "non-finite covariate in pair " +
                                             std::to_string(pair.event_index));
    }
    return expand(pair.x_case, model) - expand(pair.x_control, model);
  }

  /// Full delta design matrix for a subset, one row per pair.
  Eigen::MatrixXd delta_matrix(const std::vector<CaseControlPair>& pairs,
                               const SubsetModel& model) const {
    Eigen::MatrixXd out(pairs.size(), width(model));
    for (std::size_t i = 0; i < pairs.size(); ++i) out.row(i) = delta_design(pairs[i], model);
    return out;
  }

  /// Block-diagonal penalty matching the subset's expanded columns.
  Eigen::MatrixXd penalty(const SubsetModel& model) const {
    const int w = width(model);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(w, w);
    int at = 0;
    for (int i : model.indices) {
      const FittedBasis& b = basis(i);
      out.block(at, at, b.columns(), b.columns()) = b.penalty_matrix();
      at += b.columns();
    }
    return out;
  }

 private:
  std::vector<FittedBasis> bases_;
};

}  // namespace remcd
