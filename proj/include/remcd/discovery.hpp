#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "remcd/basis.hpp"
#include "remcd/core.hpp"
#include "remcd/dispersion.hpp"
#include "remcd/error.hpp"
#include "remcd/glmfit.hpp"
#include "remcd/parallel.hpp"
#include "remcd/rng.hpp"
#include "remcd/sampler.hpp"
#include "remcd/simulate.hpp"

namespace remcd {

struct SubsetResult {
  SubsetModel model;
  FitResult fit;
  DispersionVerdict verdict;
};

/// BIC order with parsimony and lexicographic tie-breaking, so reports are
/// reproducible even on exact ties.
inline bool subset_before(const SubsetResult& a, const SubsetResult& b) {
  if (a.fit.bic != b.fit.bic) return a.fit.bic < b.fit.bic;
  if (a.model.indices.size() != b.model.indices.size()) {
    return a.model.indices.size() < b.model.indices.size();
  }
  return a.model.indices < b.model.indices;
}

struct DiscoverOptions {
  double alpha = 0.05;
  int threads = 0;
  int max_p = 20;
  FitOptions fit_options;
};

struct DiscoveryReport {
  int p = 0;
  std::size_t n = 0;
  double alpha = 0.05;
  std::vector<SubsetResult> subsets;     // mask order: subsets[k] has mask k+1
  std::vector<std::size_t> accepted;     // indices into subsets
  std::optional<std::size_t> selected;   // min-BIC member of accepted
  std::optional<std::size_t> min_bic;    // min-BIC over all well-fitted subsets

  const SubsetResult& at_mask(std::uint32_t mask) const { return subsets.at(mask - 1); }
  bool empty_accepted_set() const { return accepted.empty(); }
};

/// Exhaustive three-step search: fit every non-empty covariate subset,
/// keep the perfectly dispersed ones, select the accepted subset with the
/// smallest BIC. Separated or singular fits are excluded from acceptance.
inline DiscoveryReport discover(const std::vector<CaseControlPair>& pairs,
                                const std::vector<BasisSpec>& specs,
                                const DiscoverOptions& options = {}) {
  if (pairs.empty()) raise(ErrorCode::InvalidConfig, "discover requires a non-empty pair list");
  const int p = static_cast<int>(pairs.front().x_case.size());
  if (p < 1) raise(ErrorCode::InvalidConfig, "pairs carry no covariates");
  if (p > options.max_p) {
    raise(ErrorCode::InvalidConfig, "exhaustive search limited to p <= " +
                                        std::to_string(options.max_p));
  }
  const BasisSet basis = specs.empty() ? BasisSet::all_linear(p) : BasisSet::fit(specs, pairs);

  // Expand each covariate once; subset designs are column blocks of these.
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(p));
  for (int j = 1; j <= p; ++j) {
    SubsetModel single;
    single.indices = {j};
    blocks[static_cast<std::size_t>(j - 1)] = basis.delta_matrix(pairs, single);
  }

  DiscoveryReport report;
  report.p = p;
  report.n = pairs.size();
  report.alpha = options.alpha;
  const std::size_t count = (std::size_t{1} << p) - 1;
  report.subsets.resize(count);

  parallel_for(count, options.threads, [&](std::size_t k) {
    SubsetResult& slot = report.subsets[k];
    slot.model = SubsetModel::from_mask(static_cast<std::uint32_t>(k + 1));

    int d = 0;
    for (int i : slot.model.indices) d += static_cast<int>(blocks[i - 1].cols());
    Eigen::MatrixXd design(static_cast<Eigen::Index>(pairs.size()), d);
    int at = 0;
    for (int i : slot.model.indices) {
      const Eigen::MatrixXd& b = blocks[i - 1];
      design.middleCols(at, b.cols()) = b;
      at += static_cast<int>(b.cols());
    }

    Eigen::MatrixXd penalty = basis.penalty(slot.model);
    double lambda = 0.0;
    bool at_boundary = false;
    if (basis.any_smooth(slot.model)) {
      LambdaChoice lc = select_lambda(design, penalty, options.fit_options);
      lambda = lc.lambda;
      at_boundary = lc.at_boundary;
    }
    slot.fit = fit(design, penalty, lambda, options.fit_options);
    slot.fit.lambda_at_boundary = at_boundary;
    if (slot.fit.status == FitStatus::Ok) {
      try {
        slot.fit.pearson_risk = pearson_risk(slot.fit.beta, design);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RiskOverflow) throw;
        slot.fit.pearson_risk = std::numeric_limits<double>::infinity();
      }
    }
    slot.verdict = dispersion_test(slot.fit, pairs.size(), options.alpha);
  });

  for (std::size_t k = 0; k < count; ++k) {
    const SubsetResult& r = report.subsets[k];
    const bool well_fitted = r.fit.converged && r.fit.status == FitStatus::Ok;
    if (well_fitted && std::isfinite(r.fit.bic)) {
      if (!report.min_bic || subset_before(r, report.subsets[*report.min_bic])) {
        report.min_bic = k;
      }
    }
    if (well_fitted && r.verdict.accepted) {
      report.accepted.push_back(k);
      if (!report.selected || subset_before(r, report.subsets[*report.selected])) {
        report.selected = k;
      }
    }
  }
  return report;
}

struct GridRange {
  double lo = -2.0;
  double hi = 2.0;
  double step = 0.05;

  std::vector<double> values() const {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      raise(ErrorCode::InvalidConfig, "invalid grid range");
    }
    std::vector<double> out;
    for (int k = 0;; ++k) {
      double v = lo + step * k;
      if (v > hi + step * 1e-9) break;
      out.push_back(v);
    }
    return out;
  }
};

struct RiskGridResult {
  int cov_i = 0;
  int cov_j = 0;
  std::vector<double> beta_i_values;
  std::vector<double> beta_j_values;
  Eigen::MatrixXd risk_ratio;  // rows follow beta_i, columns beta_j

  struct MlePoint {
    std::string label;
    double beta_i = 0.0;
    double beta_j = 0.0;
    double risk_ratio = 0.0;
  };
  std::vector<MlePoint> mle;  // full, {i}, {j}
};

/// Pearson-risk surface over a coefficient grid for two covariates with
/// linear effects, plus the three MLE overlay points.
inline RiskGridResult risk_grid(const std::vector<CaseControlPair>& pairs, int cov_i, int cov_j,
                                GridRange range) {
  if (pairs.empty()) raise(ErrorCode::InvalidConfig, "risk_grid requires pairs");
  const int p = static_cast<int>(pairs.front().x_case.size());
  if (cov_i < 1 || cov_i > p || cov_j < 1 || cov_j > p || cov_i == cov_j) {
    raise(ErrorCode::InvalidConfig, "risk_grid covariate indices out of range");
  }
  const std::size_t n = pairs.size();
  Eigen::VectorXd di(n), dj(n);
  for (std::size_t k = 0; k < n; ++k) {
    di[k] = pairs[k].x_case[cov_i - 1] - pairs[k].x_control[cov_i - 1];
    dj[k] = pairs[k].x_case[cov_j - 1] - pairs[k].x_control[cov_j - 1];
  }

  RiskGridResult out;
  out.cov_i = cov_i;
  out.cov_j = cov_j;
  out.beta_i_values = range.values();
  out.beta_j_values = range.values();

  auto ratio_at = [&](double bi, double bj) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double eta = bi * di[k] + bj * dj[k];
      total += std::exp(-eta);  // may overflow to inf; emitted as-is
    }
    return total / static_cast<double>(n);
  };

  out.risk_ratio.resize(static_cast<Eigen::Index>(out.beta_i_values.size()),
                        static_cast<Eigen::Index>(out.beta_j_values.size()));
  for (std::size_t a = 0; a < out.beta_i_values.size(); ++a) {
    for (std::size_t b = 0; b < out.beta_j_values.size(); ++b) {
      out.risk_ratio(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          ratio_at(out.beta_i_values[a], out.beta_j_values[b]);
    }
  }

  Eigen::MatrixXd both(n, 2);
  both.col(0) = di;
  both.col(1) = dj;
  const Eigen::MatrixXd none;
  FitResult full = fit(both, none, 0.0);
  FitResult only_i = fit(di, none, 0.0);
  FitResult only_j = fit(dj, none, 0.0);
  auto push = [&](const std::string& label, double bi, double bj) {
    out.mle.push_back({label, bi, bj, ratio_at(bi, bj)});
  };
  push("full", full.beta[0], full.beta[1]);
  push("{" + std::to_string(cov_i) + "}", only_i.beta[0], 0.0);
  push("{" + std::to_string(cov_j) + "}", 0.0, only_j.beta[0]);
  return out;
}

struct ReplicateOptions {
  std::vector<std::size_t> n_values;
  int reps = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct RepRecord {
  std::size_t n = 0;
  int rep = 0;
  std::uint32_t truth_mask = 0;
  std::uint32_t selected_mask = 0;  // 0 when nothing selected
  std::uint32_t minbic_mask = 0;    // 0 when no finite-BIC fit
  bool truth_accepted = false;
  bool selected_is_truth = false;
  Eigen::VectorXd truth_beta;
  double truth_risk_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct SubsetSummary {
  SubsetModel model;
  double bic_median = 0.0, bic_q1 = 0.0, bic_q3 = 0.0;
  double risk_median = 0.0, risk_q1 = 0.0, risk_q3 = 0.0;
  double accept_rate = 0.0;
  double selected_rate = 0.0;
};

struct RecoveryRow {
  std::size_t n = 0;
  int reps = 0;
  double recovery = 0.0;
  double truth_accept_rate = 0.0;
};

struct ReplicateResult {
  std::vector<RecoveryRow> recovery;                  // one per n
  std::vector<std::vector<SubsetSummary>> summaries;  // [n][mask-1]
  std::vector<std::vector<RepRecord>> records;        // [n][rep]
};

namespace detail {

inline double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  double h = q * static_cast<double>(v.size() - 1);
  std::size_t idx = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(idx);
  double out = v[idx];
  if (idx + 1 < v.size()) out += frac * (v[idx + 1] - v[idx]);
  return out;
}

}  // namespace detail

/// Repeated simulate -> sample -> discover over sample sizes; reports the
/// truth-recovery fraction per n and per-subset BIC / risk summaries across
/// replications. Each replication runs on its own derived RNG streams, so
/// results do not depend on the thread count.
inline ReplicateResult replicate_study(
    const std::function<SemConfig(std::uint64_t seed, std::size_t n)>& make_config,
    const ReplicateOptions& options) {
  if (options.n_values.empty()) raise(ErrorCode::InvalidConfig, "replicate needs n values");
  if (options.reps < 1) raise(ErrorCode::InvalidConfig, "replicate needs reps >= 1");

  ReplicateResult result;
  result.records.resize(options.n_values.size());
  result.summaries.resize(options.n_values.size());
  const std::size_t reps = static_cast<std::size_t>(options.reps);

  for (std::size_t ni = 0; ni < options.n_values.size(); ++ni) {
    const std::size_t n = options.n_values[ni];
    const int p = make_config(options.seed, n).p();
    const std::size_t count = (std::size_t{1} << p) - 1;

    auto& records = result.records[ni];
    records.resize(reps);
    std::vector<double> bic_store(reps * count);
    std::vector<double> risk_store(reps * count);
    std::vector<unsigned char> accept_store(reps * count, 0);
    std::vector<unsigned char> selected_store(reps * count, 0);

    parallel_for(reps, options.threads, [&](std::size_t rep) {
      SemConfig config = make_config(Rng::derive_seed(options.seed, n, 2 * rep), n);
      SimOutput sim = simulate(config);
      std::vector<CaseControlPair> pairs =
          sample_pairs(sim.stream, panel_accessor(sim.panel), RiskSetPolicy::all_dyads(),
                       Rng::derive_seed(options.seed, n, 2 * rep + 1));

      DiscoverOptions dopt;
      dopt.alpha = options.alpha;
      dopt.threads = 1;  // parallelism lives at the replication level here
      DiscoveryReport report = discover(pairs, {}, dopt);

      SubsetModel truth;
      truth.indices = sim.truth;
      const std::uint32_t truth_mask = truth.mask();
      const SubsetResult& truth_result = report.at_mask(truth_mask);

      RepRecord rec;
      rec.n = n;
      rec.rep = static_cast<int>(rep);
      rec.truth_mask = truth_mask;
      rec.selected_mask = report.selected ? report.subsets[*report.selected].model.mask() : 0u;
      rec.minbic_mask = report.min_bic ? report.subsets[*report.min_bic].model.mask() : 0u;
      rec.truth_accepted = truth_result.verdict.accepted;
      rec.selected_is_truth = rec.selected_mask == truth_mask;
      rec.truth_beta = truth_result.fit.beta;
      rec.truth_risk_ratio = truth_result.fit.pearson_risk / static_cast<double>(n);
      records[rep] = std::move(rec);

      for (std::size_t k = 0; k < count; ++k) {
        bic_store[rep * count + k] = report.subsets[k].fit.bic;
        risk_store[rep * count + k] = report.subsets[k].fit.pearson_risk;
        accept_store[rep * count + k] = report.subsets[k].verdict.accepted ? 1 : 0;
      }
      if (report.selected) selected_store[rep * count + *report.selected] = 1;
    });

    auto& summaries = result.summaries[ni];
    summaries.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      SubsetSummary& s = summaries[k];
      s.model = SubsetModel::from_mask(static_cast<std::uint32_t>(k + 1));
      std::vector<double> bics, risks;
      bics.reserve(reps);
      risks.reserve(reps);
      double accepted = 0.0, selected = 0.0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        double b = bic_store[rep * count + k];
        double r = risk_store[rep * count + k];
        if (std::isfinite(b)) bics.push_back(b);
        if (std::isfinite(r)) risks.push_back(r);
        accepted += accept_store[rep * count + k];
        selected += selected_store[rep * count + k];
      }
      s.bic_median = detail::quantile_type7(bics, 0.5);
      s.bic_q1 = detail::quantile_type7(bics, 0.25);
      s.bic_q3 = detail::quantile_type7(bics, 0.75);
      s.risk_median = detail::quantile_type7(risks, 0.5);
      s.risk_q1 = detail::quantile_type7(risks, 0.25);
      s.risk_q3 = detail::quantile_type7(risks, 0.75);
      s.accept_rate = accepted / static_cast<double>(reps);
      s.selected_rate = selected / static_cast<double>(reps);
    }

    RecoveryRow row;
    row.n = n;
    row.reps = options.reps;
    double hits = 0.0, truth_accepts = 0.0;
    for (const RepRecord& rec : records) {
      if (rec.selected_is_truth) hits += 1.0;
      if (rec.truth_accepted) truth_accepts += 1.0;
    }
    row.recovery = hits / static_cast<double>(reps);
    row.truth_accept_rate = truth_accepts / static_cast<double>(reps);
    result.recovery.push_back(row);
  }
  return result;
}

}  // namespace remcd
