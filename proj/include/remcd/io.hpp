#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "remcd/basis.hpp"
#include "remcd/core.hpp"
#include "remcd/csv.hpp"
#include "remcd/discovery.hpp"
#include "remcd/error.hpp"
#include "remcd/glmfit.hpp"
#include "remcd/netstats.hpp"
#include "remcd/simulate.hpp"

namespace remcd::io {

using nlohmann::json;

inline void write_comment(std::ostream& os, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
}

// ---- events CSV: time,sender,receiver -------------------------------------

inline void write_events_csv(std::ostream& os, const EventStream& stream,
                             const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"time", "sender", "receiver"});
  for (const Event& e : stream.events) {
    csv::write_row(os, {csv::format_double(e.time), stream.v1.name(e.sender),
                        stream.v2.name(e.receiver)});
  }
}

/// Reads a one-mode stream; V1 = V2 = all vertex names seen, horizon = last
/// event time. Stream invariants are checked and violations raised.
inline EventStream read_events_csv(std::istream& is) {
  csv::Table t = csv::read(is);
  if (t.header != std::vector<std::string>{"time", "sender", "receiver"}) {
    raise(ErrorCode::ParseError, "events CSV must have header time,sender,receiver");
  }
  EventStream stream;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double time = csv::parse_double(t.rows[r][0], t.line_numbers[r]);
    VertexId s = stream.v1.add(t.rows[r][1]);
    VertexId rr = stream.v1.add(t.rows[r][2]);
    stream.events.push_back({time, s, rr});
  }
  // One-mode ingestion: the two vertex sets are identical.
  stream.v2 = stream.v1;
  stream.horizon = stream.events.empty() ? 0.0 : stream.events.back().time;
  if (auto issue = validate_stream(stream)) {
    raise(issue->code, issue->message + " (event " + std::to_string(issue->event_index) + ")");
  }
  return stream;
}

// ---- covariate panel CSV: event_index,sender,receiver,x1..xp ---------------

inline void write_panel_csv(std::ostream& os, const CovariatePanel& panel,
                            const VertexSet& v1, const VertexSet& v2,
                            const std::string& comment = "") {
  write_comment(os, comment);
  std::vector<std::string> header = {"event_index", "sender", "receiver"};
  for (int j = 1; j <= panel.p(); ++j) header.push_back("x" + std::to_string(j));
  csv::write_row(os, header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < panel.n_events(); ++i) {
    for (std::size_t d = 0; d < panel.n_dyads(); ++d) {
      row.clear();
      row.push_back(std::to_string(i));
      row.push_back(v1.name(panel.dyads()[d].sender));
      row.push_back(v2.name(panel.dyads()[d].receiver));
      for (int j = 0; j < panel.p(); ++j) row.push_back(csv::format_double(panel.at(i, d, j)));
      csv::write_row(os, row);
    }
  }
}

/// Reads a panel against an already-loaded stream (vertex names must match).
/// Missing (event, dyad) cells stay NaN and surface as MissingCovariate when
/// sampled.
inline CovariatePanel read_panel_csv(std::istream& is, const EventStream& stream) {
  csv::Table t = csv::read(is);
  if (t.header.size() < 4 || t.header[0] != "event_index" || t.header[1] != "sender" ||
      t.header[2] != "receiver") {
    raise(ErrorCode::ParseError, "panel CSV must start with event_index,sender,receiver,x1..");
  }
  const int p = static_cast<int>(t.header.size()) - 3;
  for (int j = 0; j < p; ++j) {
    if (t.header[3 + j] != "x" + std::to_string(j + 1)) {
      raise(ErrorCode::ParseError, "panel covariate columns must be named x1..xp");
    }
  }

  struct RawRow {
    std::size_t event;
    Dyad dyad;
    std::size_t table_row;
  };
  std::vector<RawRow> raw;
  raw.reserve(t.rows.size());
  std::vector<Dyad> dyads;
  std::unordered_map<Dyad, std::size_t, DyadHash> dyad_seen;
  std::size_t n_events = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t line = t.line_numbers[r];
    long long ev = csv::parse_int(t.rows[r][0], line);
    if (ev < 0) raise(ErrorCode::ParseError, "line " + std::to_string(line) + ": negative event index");
    auto s = stream.v1.find(t.rows[r][1]);
    auto rr = stream.v2.find(t.rows[r][2]);
    if (!s || !rr) {
      raise(ErrorCode::UnknownVertex, "line " + std::to_string(line) + ": vertex not in stream");
    }
    Dyad d{*s, *rr};
    if (dyad_seen.emplace(d, dyads.size()).second) dyads.push_back(d);
    n_events = std::max(n_events, static_cast<std::size_t>(ev) + 1);
    raw.push_back({static_cast<std::size_t>(ev), d, r});
  }
  n_events = std::max(n_events, stream.events.size());

  CovariatePanel panel(n_events, dyads, p);
  for (std::size_t i = 0; i < n_events; ++i) {
    for (std::size_t d = 0; d < dyads.size(); ++d) {
      for (int j = 0; j < p; ++j) {
        panel.at(i, d, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  for (const RawRow& rr : raw) {
    std::size_t d = *panel.dyad_index(rr.dyad);
    for (int j = 0; j < p; ++j) {
      panel.at(rr.event, d, j) =
          csv::parse_double(t.rows[rr.table_row][3 + j], t.line_numbers[rr.table_row]);
    }
  }
  return panel;
}

// ---- pairs CSV --------------------------------------------------------------
// event_index,time,case_sender,case_receiver,ctrl_sender,ctrl_receiver,xc1..xcp,xs1..xsp

inline void write_pairs_csv(std::ostream& os, const std::vector<CaseControlPair>& pairs,
                            const VertexSet& v1, const VertexSet& v2,
                            const std::string& comment = "") {
  write_comment(os, comment);
  const int p = pairs.empty() ? 0 : static_cast<int>(pairs.front().x_case.size());
  std::vector<std::string> header = {"event_index", "time",        "case_sender",
                                     "case_receiver", "ctrl_sender", "ctrl_receiver"};
  for (int j = 1; j <= p; ++j) header.push_back("xc" + std::to_string(j));
  for (int j = 1; j <= p; ++j) header.push_back("xs" + std::to_string(j));
  csv::write_row(os, header);
  std::vector<std::string> row;
  for (const CaseControlPair& pair : pairs) {
    row.clear();
    row.push_back(std::to_string(pair.event_index));
    row.push_back(csv::format_double(pair.time));
    row.push_back(v1.name(pair.case_dyad.sender));
    row.push_back(v2.name(pair.case_dyad.receiver));
    row.push_back(v1.name(pair.control_dyad.sender));
    row.push_back(v2.name(pair.control_dyad.receiver));
    for (int j = 0; j < p; ++j) row.push_back(csv::format_double(pair.x_case[j]));
    for (int j = 0; j < p; ++j) row.push_back(csv::format_double(pair.x_control[j]));
    csv::write_row(os, row);
  }
}

struct PairsFile {
  std::vector<CaseControlPair> pairs;
  VertexSet v1;
  VertexSet v2;
  int p = 0;
};

inline PairsFile read_pairs_csv(std::istream& is) {
  csv::Table t = csv::read(is);
  if (t.header.size() < 6 || t.header[0] != "event_index" || t.header[1] != "time") {
    raise(ErrorCode::ParseError, "pairs CSV header mismatch");
  }
  if ((t.header.size() - 6) % 2 != 0) {
    raise(ErrorCode::ParseError, "pairs CSV needs matching xc/xs column counts");
  }
  const int p = static_cast<int>((t.header.size() - 6) / 2);
  for (int j = 0; j < p; ++j) {
    if (t.header[6 + j] != "xc" + std::to_string(j + 1) ||
        t.header[6 + p + j] != "xs" + std::to_string(j + 1)) {
      raise(ErrorCode::ParseError, "pairs covariate columns must be xc1..xcp,xs1..xsp");
    }
  }

  PairsFile out;
  out.p = p;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t line = t.line_numbers[r];
    CaseControlPair pair;
    long long ev = csv::parse_int(t.rows[r][0], line);
    if (ev < 0) raise(ErrorCode::ParseError, "line " + std::to_string(line) + ": negative event index");
    pair.event_index = static_cast<std::size_t>(ev);
    pair.time = csv::parse_double(t.rows[r][1], line);
    pair.case_dyad = {out.v1.add(t.rows[r][2]), out.v2.add(t.rows[r][3])};
    pair.control_dyad = {out.v1.add(t.rows[r][4]), out.v2.add(t.rows[r][5])};
    if (pair.control_dyad == pair.case_dyad) {
      raise(ErrorCode::ParseError, "line " + std::to_string(line) + ": control equals case dyad");
    }
    pair.x_case.resize(p);
    pair.x_control.resize(p);
    for (int j = 0; j < p; ++j) {
      pair.x_case[j] = csv::parse_double(t.rows[r][6 + j], line);
      pair.x_control[j] = csv::parse_double(t.rows[r][6 + p + j], line);
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

// ---- stations CSV: station_id,lat,lon --------------------------------------

inline void write_stations_csv(std::ostream& os, const std::vector<Station>& stations,
                               const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"station_id", "lat", "lon"});
  for (const Station& s : stations) {
    csv::write_row(os, {s.id, csv::format_double(s.lat), csv::format_double(s.lon)});
  }
}

inline std::vector<Station> read_stations_csv(std::istream& is) {
  csv::Table t = csv::read(is);
  if (t.header != std::vector<std::string>{"station_id", "lat", "lon"}) {
    raise(ErrorCode::ParseError, "stations CSV must have header station_id,lat,lon");
  }
  std::vector<Station> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({t.rows[r][0], csv::parse_double(t.rows[r][1], t.line_numbers[r]),
                   csv::parse_double(t.rows[r][2], t.line_numbers[r])});
  }
  return out;
}

// ---- JSON: basis specs, configs, fits, reports ------------------------------

inline json to_json(const BasisSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["kind"] = spec.kind == BasisSpec::Kind::Linear ? "linear" : "bspline";
  if (spec.kind == BasisSpec::Kind::BSpline) j["knots"] = spec.interior_knots;
  return j;
}

inline BasisSpec basis_spec_from_json(const json& j) {
  BasisSpec spec;
  spec.name = j.value("name", "");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    spec.kind = BasisSpec::Kind::Linear;
  } else if (kind == "bspline") {
    spec.kind = BasisSpec::Kind::BSpline;
    spec.interior_knots = j.value("knots", 8);
  } else {
    raise(ErrorCode::ParseError, "unknown basis kind '" + kind + "'");
  }
  return spec;
}

inline std::vector<BasisSpec> read_basis_specs(std::istream& is) {
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    raise(ErrorCode::ParseError, std::string("basis spec JSON: ") + e.what());
  }
  if (!j.is_array()) raise(ErrorCode::ParseError, "basis spec JSON must be an array");
  std::vector<BasisSpec> out;
  for (const json& item : j) out.push_back(basis_spec_from_json(item));
  return out;
}

inline json to_json(const NoiseSpec& n) {
  switch (n.kind) {
    case NoiseSpec::Kind::None: return json{{"kind", "none"}};
    case NoiseSpec::Kind::Uniform: return json{{"kind", "uniform"}, {"lo", n.lo}, {"hi", n.hi}};
    case NoiseSpec::Kind::Gaussian: return json{{"kind", "gaussian"}, {"sd", n.sd}};
  }
  return json{};
}

inline json to_json(const SemConfig& c) {
  json j;
  j["preset"] = c.preset_name;
  j["v"] = c.v;
  j["n_events"] = c.n_events;
  j["baseline"] = c.baseline;
  j["seed"] = c.seed;
  j["truth"] = c.truth;
  j["f_pa"] = std::vector<double>(c.f_pa.data(), c.f_pa.data() + c.f_pa.size());
  json eqs = json::array();
  for (const CovariateEquation& e : c.equations) {
    json je;
    je["noise"] = to_json(e.noise);
    if (e.child_of_event) {
      je["child_of_event"] = true;
      je["flip_prob"] = e.flip_prob;
    }
    if (!e.terms.empty()) {
      json terms = json::array();
      for (const auto& [idx, w] : e.terms) terms.push_back({{"x", idx}, {"weight", w}});
      je["terms"] = terms;
    }
    eqs.push_back(je);
  }
  j["equations"] = eqs;
  return j;
}

inline json to_json(const FitResult& fit) {
  json j;
  j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  j["loglik"] = fit.loglik;
  j["edf"] = fit.edf;
  j["bic"] = fit.bic;
  j["se"] = std::vector<double>(fit.se.data(), fit.se.data() + fit.se.size());
  j["pearson_risk"] = fit.pearson_risk;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["lambda"] = fit.lambda;
  j["lambda_at_boundary"] = fit.lambda_at_boundary;
  j["status"] = to_string(fit.status);
  return j;
}

inline json to_json(const DispersionVerdict& v) {
  json j;
  j["risk"] = v.risk;
  j["df"] = v.df;
  j["lower"] = v.lower;
  j["upper"] = v.upper;
  j["alpha"] = v.alpha;
  j["accepted"] = v.accepted;
  j["reason"] = to_string(v.reason);
  return j;
}

inline json to_json(const DiscoveryReport& report) {
  json j;
  j["n"] = report.n;
  j["p"] = report.p;
  j["alpha"] = report.alpha;
  j["df_convention"] = "n - edf";
  json subsets = json::array();
  for (const SubsetResult& r : report.subsets) {
    json js;
    js["indices"] = r.model.indices;
    js["fit"] = to_json(r.fit);
    js["dispersion"] = to_json(r.verdict);
    subsets.push_back(js);
  }
  j["subsets"] = subsets;
  json accepted = json::array();
  for (std::size_t k : report.accepted) accepted.push_back(report.subsets[k].model.indices);
  j["accepted"] = accepted;
  if (report.selected) {
    j["selected"] = report.subsets[*report.selected].model.indices;
  } else {
    j["selected"] = nullptr;
  }
  if (report.min_bic) {
    j["min_bic_subset"] = report.subsets[*report.min_bic].model.indices;
  } else {
    j["min_bic_subset"] = nullptr;
  }
  j["empty_accepted_set"] = report.empty_accepted_set();
  return j;
}

/// Rankings CSV sorted by BIC ascending (non-finite BICs last).
inline void write_rankings_csv(std::ostream& os, const DiscoveryReport& report,
                               const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"subset", "bic", "risk", "df", "accepted"});
  std::vector<std::size_t> order(report.subsets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool fa = std::isfinite(report.subsets[a].fit.bic);
    const bool fb = std::isfinite(report.subsets[b].fit.bic);
    if (fa != fb) return fa;
    return subset_before(report.subsets[a], report.subsets[b]);
  });
  for (std::size_t k : order) {
    const SubsetResult& r = report.subsets[k];
    csv::write_row(os, {r.model.label(), csv::format_double(r.fit.bic),
                        csv::format_double(r.fit.pearson_risk), csv::format_double(r.verdict.df),
                        r.verdict.accepted ? "1" : "0"});
  }
}

inline void write_risk_grid_csv(std::ostream& os, const RiskGridResult& grid,
                                const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"beta_i", "beta_j", "risk_ratio"});
  for (std::size_t a = 0; a < grid.beta_i_values.size(); ++a) {
    for (std::size_t b = 0; b < grid.beta_j_values.size(); ++b) {
      csv::write_row(os, {csv::format_double(grid.beta_i_values[a]),
                          csv::format_double(grid.beta_j_values[b]),
                          csv::format_double(grid.risk_ratio(static_cast<Eigen::Index>(a),
                                                             static_cast<Eigen::Index>(b)))});
    }
  }
}

inline void write_risk_grid_mle_csv(std::ostream& os, const RiskGridResult& grid,
                                    const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"label", "beta_i", "beta_j", "risk_ratio"});
  for (const RiskGridResult::MlePoint& m : grid.mle) {
    csv::write_row(os, {m.label, csv::format_double(m.beta_i), csv::format_double(m.beta_j),
                        csv::format_double(m.risk_ratio)});
  }
}

inline void write_recovery_csv(std::ostream& os, const ReplicateResult& result,
                               const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"n", "reps", "recovery", "truth_accept_rate"});
  for (const RecoveryRow& row : result.recovery) {
    csv::write_row(os, {std::to_string(row.n), std::to_string(row.reps),
                        csv::format_double(row.recovery),
                        csv::format_double(row.truth_accept_rate)});
  }
}

inline void write_model_summaries_csv(std::ostream& os, const ReplicateResult& result,
                                      const std::vector<std::size_t>& n_values,
                                      const std::string& comment = "") {
  write_comment(os, comment);
  csv::write_row(os, {"n", "subset", "bic_median", "bic_q1", "bic_q3", "risk_median", "risk_q1",
                      "risk_q3", "accept_rate", "selected_rate"});
  for (std::size_t ni = 0; ni < result.summaries.size(); ++ni) {
    for (const SubsetSummary& s : result.summaries[ni]) {
      csv::write_row(os, {std::to_string(n_values[ni]), s.model.label(),
                          csv::format_double(s.bic_median), csv::format_double(s.bic_q1),
                          csv::format_double(s.bic_q3), csv::format_double(s.risk_median),
                          csv::format_double(s.risk_q1), csv::format_double(s.risk_q3),
                          csv::format_double(s.accept_rate), csv::format_double(s.selected_rate)});
    }
  }
}

inline void write_truth_json(std::ostream& os, const std::vector<int>& parents,
                             const json& config = {}) {
  json j;
  j["parents"] = parents;
  if (!config.is_null() && !config.empty()) j["config"] = config;
  os << j.dump(2) << '\n';
}

inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream f(path);
  if (!f) raise(ErrorCode::InvalidConfig, "cannot write " + path);
  fn(f);
  if (!f.good()) raise(ErrorCode::InvalidConfig, "failed writing " + path);
}

}  // namespace remcd::io
