#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "remcd/core.hpp"
#include "remcd/error.hpp"
#include "remcd/rng.hpp"

namespace remcd {

struct NoiseSpec {
  enum class Kind { None, Uniform, Gaussian };

  Kind kind = Kind::None;
  double lo = 0.0;   // Uniform
  double hi = 0.0;
  double sd = 0.0;   // Gaussian, mean 0

  static NoiseSpec none() { return {}; }
  static NoiseSpec uniform(double lo, double hi) {
    NoiseSpec n;
    n.kind = Kind::Uniform;
    n.lo = lo;
    n.hi = hi;
    return n;
  }
  static NoiseSpec gaussian(double sd) {
    NoiseSpec n;
    n.kind = Kind::Gaussian;
    n.sd = sd;
    return n;
  }

  double draw(Rng& rng) const {
    switch (kind) {
      case Kind::None: return 0.0;
      case Kind::Uniform: return rng.uniform(lo, hi);
      case Kind::Gaussian: return rng.normal(0.0, sd);
    }
    return 0.0;
  }
};

/// One structural equation. Either a linear combination of earlier
/// covariates plus noise, or a child of the event process: the dyad's event
/// indicator with entries flipped at rate flip_prob, plus noise.
struct CovariateEquation {
  std::vector<std::pair<int, double>> terms;  // (1-based earlier covariate, weight)
  bool child_of_event = false;
  double flip_prob = 0.0;
  NoiseSpec noise;

  static CovariateEquation exogenous(NoiseSpec noise) {
    CovariateEquation e;
    e.noise = noise;
    return e;
  }
  static CovariateEquation linear(std::vector<std::pair<int, double>> terms, NoiseSpec noise) {
    CovariateEquation e;
    e.terms = std::move(terms);
    e.noise = noise;
    return e;
  }
  static CovariateEquation child(double flip_prob, NoiseSpec noise) {
    CovariateEquation e;
    e.child_of_event = true;
    e.flip_prob = flip_prob;
    e.noise = noise;
    return e;
  }
};

/// Configuration of the structural hazard simulator.
struct SemConfig {
  int v = 5;
  std::size_t n_events = 0;
  double baseline = 1.0;
  std::vector<CovariateEquation> equations;
  Eigen::VectorXd f_pa;     // hazard coefficients, one per covariate
  std::uint64_t seed = 0;
  std::vector<int> truth;   // 1-based parent indices
  std::string preset_name = "custom";

  int p() const { return static_cast<int>(equations.size()); }

  /// Covariates downstream of the event process must be computed after the
  /// mark is drawn; anything they feed is downstream too.
  std::vector<bool> post_event_stage() const {
    std::vector<bool> post(equations.size(), false);
    for (std::size_t j = 0; j < equations.size(); ++j) {
      if (equations[j].child_of_event) post[j] = true;
      for (const auto& [idx, w] : equations[j].terms) {
        if (w != 0.0 && post[static_cast<std::size_t>(idx - 1)]) post[j] = true;
      }
    }
    return post;
  }

  void validate() const {
    if (v < 1) raise(ErrorCode::InvalidConfig, "v must be >= 1");
    if (n_events < 1) raise(ErrorCode::InvalidConfig, "n_events must be >= 1");
    if (!(baseline > 0.0)) raise(ErrorCode::InvalidConfig, "baseline must be > 0");
    if (equations.empty()) raise(ErrorCode::InvalidConfig, "no covariate equations");
    if (f_pa.size() != p()) raise(ErrorCode::InvalidConfig, "f_pa length must equal p");
    for (std::size_t j = 0; j < equations.size(); ++j) {
      const CovariateEquation& e = equations[j];
      if (e.child_of_event && !(e.flip_prob >= 0.0 && e.flip_prob < 0.5)) {
        raise(ErrorCode::InvalidConfig, "flip probability must be in [0, 0.5)");
      }
      for (const auto& [idx, w] : e.terms) {
        (void)w;
        if (idx < 1 || static_cast<std::size_t>(idx) > j) {
          raise(ErrorCode::InvalidConfig, "equation " + std::to_string(j + 1) +
                                              " may only reference earlier covariates");
        }
      }
    }
    std::vector<bool> post = post_event_stage();
    for (int j = 0; j < p(); ++j) {
      if (f_pa[j] != 0.0 && post[static_cast<std::size_t>(j)]) {
        raise(ErrorCode::InvalidConfig, "hazard coefficient on post-event covariate X" +
                                            std::to_string(j + 1));
      }
    }
  }
};

struct SimOutput {
  EventStream stream;
  CovariatePanel panel;
  std::vector<int> truth;
  SemConfig config;
};

/// Gillespie-type generation of n relational events. Per step: draw the
/// pre-event covariates for every dyad, form hazards
/// lambda_sr = baseline * exp(f_pa . x_sr), draw an exponential waiting time
/// at the total rate, draw the mark from lambda / sum(lambda), then fill the
/// post-event covariates from the realized event indicator. All v^2 dyads
/// are always at risk.
inline SimOutput simulate(const SemConfig& config) {
  config.validate();
  const int v = config.v;
  const int p = config.p();
  const std::size_t n_dyads = static_cast<std::size_t>(v) * static_cast<std::size_t>(v);
  const std::vector<bool> post = config.post_event_stage();

  std::vector<Dyad> dyads;
  dyads.reserve(n_dyads);
  for (VertexId s = 0; s < v; ++s) {
    for (VertexId r = 0; r < v; ++r) dyads.push_back({s, r});
  }

  SimOutput out;
  out.config = config;
  out.truth = config.truth;
  out.panel = CovariatePanel(config.n_events, dyads, p);
  out.stream.v1 = VertexSet::integers(v);
  out.stream.v2 = VertexSet::integers(v);
  out.stream.events.reserve(config.n_events);

  Rng rng(config.seed);
  std::vector<double> x(n_dyads * static_cast<std::size_t>(p), 0.0);
  std::vector<double> hazard(n_dyads, 0.0);
  const double log_baseline = std::log(config.baseline);

  auto value = [&](std::size_t d, int j) -> double& {
    return x[d * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)];
  };

  double t = 0.0;
  for (std::size_t i = 0; i < config.n_events; ++i) {
    for (int j = 0; j < p; ++j) {
      if (post[static_cast<std::size_t>(j)]) continue;
      const CovariateEquation& eq = config.equations[static_cast<std::size_t>(j)];
      for (std::size_t d = 0; d < n_dyads; ++d) {
        double val = eq.noise.draw(rng);
        for (const auto& [idx, w] : eq.terms) val += w * value(d, idx - 1);
        value(d, j) = val;
      }
    }

    double total = 0.0;
    for (std::size_t d = 0; d < n_dyads; ++d) {
      double exponent = log_baseline;
      for (int j = 0; j < p; ++j) {
        if (config.f_pa[j] != 0.0) exponent += config.f_pa[j] * value(d, j);
      }
      double lam = std::exp(exponent);
      if (!std::isfinite(lam)) {
        raise(ErrorCode::HazardOverflow, "non-finite hazard at event " + std::to_string(i));
      }
      hazard[d] = lam;
      total += lam;
    }
    if (!std::isfinite(total)) {
      raise(ErrorCode::HazardOverflow, "non-finite total rate at event " + std::to_string(i));
    }
    assert(total > 0.0);

    t += rng.exponential(total);

    double u = rng.u01() * total;
    std::size_t mark = n_dyads - 1;
    double acc = 0.0;
    for (std::size_t d = 0; d < n_dyads; ++d) {
      acc += hazard[d];
      if (u < acc) {
        mark = d;
        break;
      }
    }
    out.stream.events.push_back({t, dyads[mark].sender, dyads[mark].receiver});

    for (int j = 0; j < p; ++j) {
      if (!post[static_cast<std::size_t>(j)]) continue;
      const CovariateEquation& eq = config.equations[static_cast<std::size_t>(j)];
      for (std::size_t d = 0; d < n_dyads; ++d) {
        double val = eq.noise.draw(rng);
        if (eq.child_of_event) {
          double indicator = (d == mark) ? 1.0 : 0.0;
          bool flip = rng.bernoulli(eq.flip_prob);
          val += flip ? (1.0 - indicator) : indicator;
        }
        for (const auto& [idx, w] : eq.terms) val += w * value(d, idx - 1);
        value(d, j) = val;
      }
    }

    for (std::size_t d = 0; d < n_dyads; ++d) {
      for (int j = 0; j < p; ++j) out.panel.at(i, d, j) = value(d, j);
    }
  }
  out.stream.horizon = t;
  return out;
}

/// Two-covariate preset: X1 exogenous parent with unit coefficient, X2 a
/// flip-mask child of the event process; constant baseline 1.
inline SemConfig preset_two_cov(std::uint64_t seed, std::size_t n_events, int v = 5) {
  if (n_events < 1) raise(ErrorCode::InvalidConfig, "n_events must be >= 1");
  SemConfig c;
  c.preset_name = "two-cov";
  c.v = v;
  c.n_events = n_events;
  c.baseline = 1.0;
  c.seed = seed;
  c.equations = {
      CovariateEquation::exogenous(NoiseSpec::uniform(-1.0, 1.0)),
      CovariateEquation::child(0.1, NoiseSpec::gaussian(0.1)),
  };
  c.f_pa = Eigen::VectorXd::Zero(2);
  c.f_pa[0] = 1.0;
  c.truth = {1};
  c.validate();
  return c;
}

/// Seven-covariate preset mirroring the simulation-study SEM: X2 and X3 are
/// the causal parents with hazard exponent 0.8 x2 - 0.9 x3; X5 and X6 are
/// flip-mask children of the event process and X7 = X6 + noise.
inline SemConfig preset_seven_cov(std::uint64_t seed, std::size_t n_events, int v = 5) {
  if (n_events < 1) raise(ErrorCode::InvalidConfig, "n_events must be >= 1");
  SemConfig c;
  c.preset_name = "seven-cov";
  c.v = v;
  c.n_events = n_events;
  c.baseline = 1.0;
  c.seed = seed;
  c.equations = {
      CovariateEquation::exogenous(NoiseSpec::uniform(-1.0, 1.0)),
      CovariateEquation::linear({{1, 1.0}}, NoiseSpec::uniform(-0.5, 0.5)),
      CovariateEquation::linear({{1, 1.0}, {2, -0.5}}, NoiseSpec::uniform(-0.5, 0.5)),
      CovariateEquation::linear({{2, 1.0}}, NoiseSpec::uniform(-1.0, 1.0)),
      CovariateEquation::child(0.1, NoiseSpec::gaussian(0.1)),
      CovariateEquation::child(0.1, NoiseSpec::gaussian(0.1)),
      CovariateEquation::linear({{6, 1.0}}, NoiseSpec::gaussian(0.1)),
  };
  c.f_pa = Eigen::VectorXd::Zero(7);
  c.f_pa[1] = 0.8;
  c.f_pa[2] = -0.9;
  c.truth = {2, 3};
  c.validate();
  return c;
}

}  // namespace remcd
