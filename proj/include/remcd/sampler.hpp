#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "remcd/core.hpp"
#include "remcd/error.hpp"
#include "remcd/rng.hpp"

namespace remcd {

/// Covariate lookup at a given event time. Returns nullopt when the value is
/// unavailable. sample_pairs invokes it in event order (case first, then
/// control), so stateful streaming accessors are fine.
using CovariateAccessor =
    std::function<std::optional<Eigen::VectorXd>(std::size_t event_index, Dyad dyad)>;

inline CovariateAccessor panel_accessor(const CovariatePanel& panel) {
  return [&panel](std::size_t event_index, Dyad dyad) -> std::optional<Eigen::VectorXd> {
    if (event_index >= panel.n_events()) return std::nullopt;
    auto idx = panel.dyad_index(dyad);
    if (!idx) return std::nullopt;
    return panel.row(event_index, *idx);
  };
}

/// Nested case-control sampling: for each event, one control dyad drawn
/// uniformly from the risk set minus the realized dyad, with covariates for
/// both evaluated at the event time. Control draws use a per-event RNG
/// substream, so the output is deterministic in (inputs, seed).
inline std::vector<CaseControlPair> sample_pairs(const EventStream& stream,
                                                 const CovariateAccessor& covariates,
                                                 const RiskSetPolicy& policy,
                                                 std::uint64_t seed) {
  std::vector<CaseControlPair> pairs;
  pairs.reserve(stream.events.size());
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    const Dyad realized = e.dyad();
    if (!policy.contains(stream.v1, stream.v2, e.time, realized)) {
      raise(ErrorCode::InvalidConfig, "event " + std::to_string(i) + " is not in its risk set");
    }
    const std::size_t m = policy.size(stream.v1, stream.v2, e.time);
    if (m < 2) {
      raise(ErrorCode::NoControlAvailable,
            "risk set at event " + std::to_string(i) + " has no non-event dyad");
    }

    Rng rng = Rng::for_stream(seed, i);
    const std::size_t u = rng.uniform_index(m - 1);
    const Dyad control = policy.control_at(stream.v1, stream.v2, e.time, realized, u);

    auto x_case = covariates(i, realized);
    if (!x_case || !x_case->allFinite()) {
      raise(ErrorCode::MissingCovariate, "missing case covariates at event " + std::to_string(i));
    }
    auto x_control = covariates(i, control);
    if (!x_control || !x_control->allFinite()) {
      raise(ErrorCode::MissingCovariate,
            "missing control covariates at event " + std::to_string(i));
    }
    if (x_case->size() != x_control->size()) {
      raise(ErrorCode::MissingCovariate, "covariate length mismatch at event " + std::to_string(i));
    }

    CaseControlPair pair;
    pair.event_index = i;
    pair.time = e.time;
    pair.case_dyad = realized;
    pair.control_dyad = control;
    pair.x_case = std::move(*x_case);
    pair.x_control = std::move(*x_control);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace remcd
