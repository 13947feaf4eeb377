#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "remcd/error.hpp"

namespace remcd {

using VertexId = int;

struct Dyad {
  VertexId sender = 0;
  VertexId receiver = 0;

  friend bool operator==(const Dyad&, const Dyad&) = default;
  friend auto operator<=>(const Dyad&, const Dyad&) = default;
};

struct DyadHash {
  std::size_t operator()(const Dyad& d) const noexcept {
    return std::hash<std::uint64_t>{}(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(d.sender)) << 32) |
        static_cast<std::uint32_t>(d.receiver));
  }
};

/// A relational event: directed interaction (time, sender, receiver).
struct Event {
  double time = 0.0;
  VertexId sender = 0;
  VertexId receiver = 0;

  Dyad dyad() const { return {sender, receiver}; }
};

/// Opaque string vertex names mapped to dense integer indices at load time.
class VertexSet {
 public:
  VertexId add(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    VertexId id = static_cast<VertexId>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }

  std::optional<VertexId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(VertexId id) const { return names_.at(static_cast<std::size_t>(id)); }

  int size() const { return static_cast<int>(names_.size()); }

  /// Vertex set named "1".."v"; used by the simulator presets.
  static VertexSet integers(int v) {
    VertexSet s;
    for (int i = 1; i <= v; ++i) s.add(std::to_string(i));
    return s;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> index_;
};

/// Marked point process: strictly increasing event times with dyadic marks.
struct EventStream {
  std::vector<Event> events;
  VertexSet v1;
  VertexSet v2;
  double horizon = 0.0;

  std::size_t size() const { return events.size(); }
};

struct ValidationIssue {
  ErrorCode code;
  std::size_t event_index;
  std::string message;
};

/// Checks the EventStream invariants; returns the first violation, if any.
inline std::optional<ValidationIssue> validate_stream(const EventStream& stream) {
  double prev = -1.0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (!std::isfinite(e.time) || e.time < 0.0) {
      return ValidationIssue{ErrorCode::InvalidStream, i, "event time must be finite and non-negative"};
    }
    if (e.sender < 0 || e.sender >= stream.v1.size()) {
      return ValidationIssue{ErrorCode::UnknownVertex, i, "sender outside V1"};
    }
    if (e.receiver < 0 || e.receiver >= stream.v2.size()) {
      return ValidationIssue{ErrorCode::UnknownVertex, i, "receiver outside V2"};
    }
    if (i > 0 && e.time == prev) {
      return ValidationIssue{ErrorCode::DuplicateTime, i, "duplicate event time"};
    }
    if (i > 0 && e.time < prev) {
      return ValidationIssue{ErrorCode::OutOfOrder, i, "event times not sorted"};
    }
    if (e.time > stream.horizon) {
      return ValidationIssue{ErrorCode::InvalidStream, i, "event time beyond horizon"};
    }
    prev = e.time;
  }
  return std::nullopt;
}

/// Counting-process view N_sr(t): number of (s,r) events with time <= t.
inline std::size_t dyad_count(const EventStream& stream, Dyad dyad, double t) {
  std::size_t count = 0;
  for (const Event& e : stream.events) {
    if (e.time > t) break;
    if (e.dyad() == dyad) ++count;
  }
  return count;
}

struct RiskWindow {
  double t_begin = 0.0;   // inclusive
  double t_end = 0.0;     // exclusive
  std::vector<Dyad> dyads;
};

/// Which dyads are eligible to produce an event at a given time.
class RiskSetPolicy {
 public:
  enum class Mode { AllDyads, AllDyadsNoSelf, Explicit };

  static RiskSetPolicy all_dyads() { return RiskSetPolicy(Mode::AllDyads); }
  static RiskSetPolicy all_dyads_no_self() { return RiskSetPolicy(Mode::AllDyadsNoSelf); }
  static RiskSetPolicy explicit_windows(std::vector<RiskWindow> windows) {
    RiskSetPolicy p(Mode::Explicit);
    p.windows_ = std::move(windows);
    return p;
  }

  Mode mode() const { return mode_; }

  std::size_t size(const VertexSet& v1, const VertexSet& v2, double t) const {
    switch (mode_) {
      case Mode::AllDyads:
        return static_cast<std::size_t>(v1.size()) * static_cast<std::size_t>(v2.size());
      case Mode::AllDyadsNoSelf: {
        // Self-loops only exist where the vertex indices coincide.
        std::size_t all = static_cast<std::size_t>(v1.size()) * static_cast<std::size_t>(v2.size());
        return all - static_cast<std::size_t>(std::min(v1.size(), v2.size()));
      }
      case Mode::Explicit:
        return window_at(t).dyads.size();
    }
    return 0;
  }

  bool contains(const VertexSet& v1, const VertexSet& v2, double t, Dyad d) const {
    if (d.sender < 0 || d.sender >= v1.size() || d.receiver < 0 || d.receiver >= v2.size()) return false;
    switch (mode_) {
      case Mode::AllDyads:
        return true;
      case Mode::AllDyadsNoSelf:
        return d.sender != d.receiver;
      case Mode::Explicit: {
        const RiskWindow& w = window_at(t);
        return std::find(w.dyads.begin(), w.dyads.end(), d) != w.dyads.end();
      }
    }
    return false;
  }

  std::vector<Dyad> enumerate(const VertexSet& v1, const VertexSet& v2, double t) const {
    std::vector<Dyad> out;
    switch (mode_) {
      case Mode::AllDyads:
      case Mode::AllDyadsNoSelf:
        out.reserve(size(v1, v2, t));
        for (VertexId s = 0; s < v1.size(); ++s) {
          for (VertexId r = 0; r < v2.size(); ++r) {
            if (mode_ == Mode::AllDyadsNoSelf && s == r) continue;
            out.push_back({s, r});
          }
        }
        break;
      case Mode::Explicit:
        out = window_at(t).dyads;
        break;
    }
    return out;
  }

  /// Uniform draw from the risk set minus the realized dyad, without
  /// enumerating the set. `u` is a uniform index on [0, size-1).
  Dyad control_at(const VertexSet& v1, const VertexSet& v2, double t, Dyad realized,
                  std::size_t u) const {
    switch (mode_) {
      case Mode::AllDyads: {
        std::size_t realized_idx =
            static_cast<std::size_t>(realized.sender) * static_cast<std::size_t>(v2.size()) +
            static_cast<std::size_t>(realized.receiver);
        if (u >= realized_idx) ++u;
        return {static_cast<VertexId>(u / static_cast<std::size_t>(v2.size())),
                static_cast<VertexId>(u % static_cast<std::size_t>(v2.size()))};
      }
      case Mode::AllDyadsNoSelf: {
        if (v1.size() == v2.size()) {
          // One-mode fast path: rows of width v-1 in sender-major order.
          std::size_t width = static_cast<std::size_t>(v2.size() - 1);
          auto to_index = [&](Dyad d) {
            std::size_t col = static_cast<std::size_t>(d.receiver);
            if (d.receiver > d.sender) --col;
            return static_cast<std::size_t>(d.sender) * width + col;
          };
          std::size_t realized_idx = to_index(realized);
          if (u >= realized_idx) ++u;
          VertexId s = static_cast<VertexId>(u / width);
          VertexId r = static_cast<VertexId>(u % width);
          if (r >= s) ++r;
          return {s, r};
        }
        std::vector<Dyad> all = enumerate(v1, v2, t);
        for (std::size_t k = 0, seen = 0; k < all.size(); ++k) {
          if (all[k] == realized) continue;
          if (seen == u) return all[k];
          ++seen;
        }
        raise(ErrorCode::InvalidConfig, "control index out of range");
      }
      case Mode::Explicit: {
        const RiskWindow& w = window_at(t);
        for (std::size_t k = 0, seen = 0; k < w.dyads.size(); ++k) {
          if (w.dyads[k] == realized) continue;
          if (seen == u) return w.dyads[k];
          ++seen;
        }
        raise(ErrorCode::InvalidConfig, "control index out of range for explicit risk set");
      }
    }
    raise(ErrorCode::InvalidConfig, "unreachable risk set mode");
  }

 private:
  explicit RiskSetPolicy(Mode mode) : mode_(mode) {}

  const RiskWindow& window_at(double t) const {
    for (const RiskWindow& w : windows_) {
      if (t >= w.t_begin && t < w.t_end) return w;
    }
    raise(ErrorCode::InvalidConfig, "no explicit risk window covers t=" + std::to_string(t));
  }

  Mode mode_;
  std::vector<RiskWindow> windows_;
};

/// Dense per-event covariate values for every dyad in the risk set:
/// dimensions (n_events x n_dyads x p).
class CovariatePanel {
 public:
  CovariatePanel() = default;

  CovariatePanel(std::size_t n_events, std::vector<Dyad> dyads, int p)
      : n_events_(n_events), p_(p), dyads_(std::move(dyads)) {
    for (std::size_t k = 0; k < dyads_.size(); ++k) dyad_index_.emplace(dyads_[k], k);
    values_.assign(n_events_ * dyads_.size() * static_cast<std::size_t>(p_), 0.0);
  }

  std::size_t n_events() const { return n_events_; }
  std::size_t n_dyads() const { return dyads_.size(); }
  int p() const { return p_; }
  const std::vector<Dyad>& dyads() const { return dyads_; }

  std::optional<std::size_t> dyad_index(Dyad d) const {
    auto it = dyad_index_.find(d);
    if (it == dyad_index_.end()) return std::nullopt;
    return it->second;
  }

  double& at(std::size_t event, std::size_t dyad_idx, int cov) {
    return values_[offset(event, dyad_idx, cov)];
  }
  double at(std::size_t event, std::size_t dyad_idx, int cov) const {
    return values_[offset(event, dyad_idx, cov)];
  }

  Eigen::VectorXd row(std::size_t event, std::size_t dyad_idx) const {
    Eigen::VectorXd out(p_);
    const double* base = values_.data() + offset(event, dyad_idx, 0);
    for (int j = 0; j < p_; ++j) out[j] = base[j];
    return out;
  }

  const std::vector<double>& raw() const { return values_; }

 private:
  std::size_t offset(std::size_t event, std::size_t dyad_idx, int cov) const {
    return (event * dyads_.size() + dyad_idx) * static_cast<std::size_t>(p_) +
           static_cast<std::size_t>(cov);
  }

  std::size_t n_events_ = 0;
  int p_ = 0;
  std::vector<Dyad> dyads_;
  std::unordered_map<Dyad, std::size_t, DyadHash> dyad_index_;
  std::vector<double> values_;
};

/// One event paired with its sampled non-event; the atomic inference record.
struct CaseControlPair {
  std::size_t event_index = 0;
  double time = 0.0;
  Dyad case_dyad;
  Dyad control_dyad;
  Eigen::VectorXd x_case;
  Eigen::VectorXd x_control;
};

/// Candidate causal parent set; covariate indices are 1-based (X1..Xp).
struct SubsetModel {
  std::vector<int> indices;

  std::uint32_t mask() const {
    std::uint32_t m = 0;
    for (int i : indices) m |= (1u << (i - 1));
    return m;
  }

  static SubsetModel from_mask(std::uint32_t mask) {
    SubsetModel s;
    for (int i = 0; mask != 0; ++i, mask >>= 1) {
      if (mask & 1u) s.indices.push_back(i + 1);
    }
    return s;
  }

  std::string label() const {
    std::string out = "{";
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (k > 0) out += ",";
      out += std::to_string(indices[k]);
    }
    return out + "}";
  }
};

}  // namespace remcd
