#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hybridpf/feeder.hpp"
#include "hybridpf/fme.hpp"
#include "hybridpf/linear_model.hpp"
#include "hybridpf/oracle.hpp"
#include "hybridpf/simplex.hpp"

namespace hybridpf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeLimits {
  double v_min = 0.0;
  double v_max = kInf;
  double p_min = -kInf;
  double p_max = kInf;
  double q_min = -kInf;
  double q_max = kInf;

  bool has_injection_limits() const {
    return std::isfinite(p_min) || std::isfinite(p_max) || std::isfinite(q_min) ||
           std::isfinite(q_max);
  }
};

/// Per-node and per-branch limits in p.u.; anything not listed is unbounded.
struct OperationalLimits {
  std::map<std::string, NodeLimits> nodes;
  std::map<std::string, double> i_max;  // keyed "from-to"

  const NodeLimits& node(const std::string& id) const {
    static const NodeLimits none{};
    const auto it = nodes.find(id);
    return it == nodes.end() ? none : it->second;
  }

  double branch_limit(const std::string& from, const std::string& to) const {
    if (auto it = i_max.find(from + "-" + to); it != i_max.end()) return it->second;
    if (auto it = i_max.find(to + "-" + from); it != i_max.end()) return it->second;
    return kInf;
  }
};

/// Limits document: {"nodes": {id: {v_min, v_max, p_min, p_max, q_min, q_max}},
/// "branches": {"from-to": {"i_max": x}}}. Node and branch ids must exist in `f`.
inline OperationalLimits parse_limits(const Json& doc, const Feeder& f) {
  using namespace detail;
  reject_unknown_keys(doc, {"nodes", "branches"}, "limits");
  OperationalLimits out;
  if (doc.contains("nodes")) {
    for (const auto& [id, jn] : doc.at("nodes").items()) {
      const auto node = f.sys.node_index(id);
      if (!node) throw InvalidInput("limits name unknown node '" + id + "'");
      if (*node == f.sys.slack_node()) throw InvalidInput("limits cannot constrain the slack node");
      reject_unknown_keys(jn, {"v_min", "v_max", "p_min", "p_max", "q_min", "q_max"},
                          "limits of node '" + id + "'");
      NodeLimits l;
      l.v_min = jn.value("v_min", l.v_min);
      l.v_max = jn.value("v_max", l.v_max);
      l.p_min = jn.value("p_min", l.p_min);
      l.p_max = jn.value("p_max", l.p_max);
      l.q_min = jn.value("q_min", l.q_min);
      l.q_max = jn.value("q_max", l.q_max);
      if (l.v_min < 0.0 || l.v_min > l.v_max || l.p_min > l.p_max || l.q_min > l.q_max)
        throw InvalidInput("limits of node '" + id + "' are inconsistent");
      out.nodes[id] = l;
    }
  }
  if (doc.contains("branches")) {
    for (const auto& [key, jb] : doc.at("branches").items()) {
      reject_unknown_keys(jb, {"i_max"}, "limits of branch '" + key + "'");
      bool found = false;
      for (const BranchSpec& br : f.branches)
        found = found || key == br.from + "-" + br.to || key == br.to + "-" + br.from;
      if (!found) throw InvalidInput("limits name unknown branch '" + key + "'");
      const double imax = require_key(jb, "i_max", key).get<double>();
      if (!(imax > 0.0)) throw InvalidInput("i_max of branch '" + key + "' must be positive");
      out.i_max[key] = imax;
    }
  }
  return out;
}

inline OperationalLimits load_limits(const std::filesystem::path& path, const Feeder& f) {
  try {
    return parse_limits(read_json_file(path), f);
  } catch (const Json::exception& e) {
    throw InvalidInput("limits '" + path.string() + "': " + e.what());
  }
}

/// How |v|² and |i|² are linearized around the expansion point v̂:
/// printed: Re(conj(v̂)·v); tangent: 2·Re(conj(v̂)·v) − |v̂|².
enum class VoltageLinearization { printed, tangent };

/// How injections are expressed in the voltage variables.
/// model_inverse: s = v̂_eff ⊙ conj(yl0·v0 + yll·v), the inverse of the trained model.
/// fixed_current: s = v ⊙ conj(ĩ) with ĩ frozen at v̂_eff.
enum class InjectionForm { model_inverse, fixed_current };

struct ConstraintOptions {
  VoltageLinearization voltage = VoltageLinearization::printed;
  InjectionForm injection = InjectionForm::model_inverse;
  bool current_floor = false;  // add the linearized 0 ≤ |i|² rows
};

/// A·x ≤ b over x = [v_re; v_im] of the non-slack nodes, with the PCC reactive
/// power q₁ = objective·x + offset.
struct Polyhedron {
  RMatrix a_sys;
  RVector b_sys;
  std::vector<std::string> row_labels;
  std::vector<std::pair<std::string, std::pair<Index, Index>>> var_index;
  RVector objective;
  double offset = 0.0;
  // injections implied by x: p = p_map·x + p0, q = q_map·x + q0
  RMatrix p_map, q_map;
  RVector p0, q0;

  Index vars() const { return a_sys.cols(); }
  double evaluate(const RVector& x) const { return objective.dot(x) + offset; }
  CVector implied_injections(const RVector& x) const {
    const RVector p = p_map * x + p0;
    const RVector q = q_map * x + q0;
    CVector s(p.size());
    for (Index m = 0; m < p.size(); ++m) s(m) = {p(m), q(m)};
    return s;
  }
  double max_violation(const RVector& x) const {
    return a_sys.rows() ? (a_sys * x - b_sys).maxCoeff() : -kInf;
  }
};

enum class RangeStatus { bounded, infeasible, unbounded };

inline const char* status_name(RangeStatus s) {
  switch (s) {
    case RangeStatus::bounded: return "bounded";
    case RangeStatus::infeasible: return "infeasible";
    case RangeStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct RangeResult {
  RangeStatus status = RangeStatus::infeasible;
  double q_lo = kInf;
  double q_hi = -kInf;
  RVector x_lo, x_hi;  // optimizers (LP only)
  RVector ray;         // improving direction when unbounded (LP only)
};

namespace detail {

inline void require_single_phase(const Feeder& f) {
  for (const PhaseMask& m : f.sys.node_phases())
    if (m.count() != 1)
      throw InvalidInput("reactive range evaluation needs a single-phase (balanced) feeder model");
}

/// Builder for rows  lo ≤ g·x + g0 ≤ hi.
struct RowSink {
  std::vector<RVector> rows;
  std::vector<double> rhs;
  std::vector<std::string> labels;

  void add(const RVector& g, double g0, double lo, double hi, const std::string& label) {
    if (std::isfinite(hi)) {
      rows.push_back(g);
      rhs.push_back(hi - g0);
      labels.push_back(label + " <= max");
    }
    if (std::isfinite(lo)) {
      rows.push_back(-g);
      rhs.push_back(g0 - lo);
      labels.push_back(label + " >= min");
    }
  }
};

}  // namespace detail

inline Polyhedron build_constraints(const Feeder& f, const ComplexLinearModel& model,
                                    const OperationalLimits& limits,
                                    const ConstraintOptions& opts = {}) {
  detail::require_single_phase(f);
  const AdmittanceSystem& sys = f.sys;
  const Index n = sys.load_dim();
  require_size(model.size(), n, "model");
  const CVector v_hat = effective_anchor_voltage(model.mu, model.anchors);
  const Complex v1 = f.v0(0);
  const double tangent = opts.voltage == VoltageLinearization::tangent ? 2.0 : 1.0;

  Polyhedron poly;
  const Index nx = 2 * n;
  for (Index m = 0; m < n; ++m)
    poly.var_index.push_back({sys.node_ids()[static_cast<std::size_t>(sys.load_index()[static_cast<std::size_t>(m)].node)],
                              {m, n + m}});

  // Linear form of Re(conj(α)·v) for node `node`; constant for the slack.
  auto re_form = [&](Index node, Complex alpha, RVector& g, double& g0) {
    if (node == sys.slack_node()) {
      g0 += (std::conj(alpha) * v1).real();
      return;
    }
    const Index m = *sys.load_position(node, sys.node_phases()[static_cast<std::size_t>(node)].phases()[0]);
    g(m) += alpha.real();
    g(n + m) += alpha.imag();
  };
  auto expansion = [&](Index node) {
    if (node == sys.slack_node()) return v1;
    const Index m = *sys.load_position(node, sys.node_phases()[static_cast<std::size_t>(node)].phases()[0]);
    return v_hat(m);
  };

  // injection maps
  poly.p_map = RMatrix::Zero(n, nx);
  poly.q_map = RMatrix::Zero(n, nx);
  poly.p0 = RVector::Zero(n);
  poly.q0 = RVector::Zero(n);
  if (opts.injection == InjectionForm::model_inverse) {
    const CVector k = sys.yl0() * f.v0;
    for (Index j = 0; j < n; ++j) {
      const Complex s0 = v_hat(j) * std::conj(k(j));
      poly.p0(j) = s0.real();
      poly.q0(j) = s0.imag();
      for (Index l = 0; l < n; ++l) {
        const Complex g = v_hat(j) * std::conj(sys.yll()(j, l));
        poly.p_map(j, l) = g.real();
        poly.p_map(j, n + l) = g.imag();
        poly.q_map(j, l) = g.imag();
        poly.q_map(j, n + l) = -g.real();
      }
    }
  } else {
    const RealCoefficients c = real_coefficients(sys, f.v0, v_hat);
    for (Index j = 0; j < n; ++j) {
      poly.p_map(j, j) = c.i_re(j);
      poly.p_map(j, n + j) = c.i_im(j);
      poly.q_map(j, j) = -c.i_im(j);
      poly.q_map(j, n + j) = c.i_re(j);
    }
  }

  detail::RowSink sink;
  for (Index m = 0; m < n; ++m) {
    const std::string& id = poly.var_index[static_cast<std::size_t>(m)].first;
    const NodeLimits& l = limits.node(id);
    RVector g = RVector::Zero(nx);
    g(m) = tangent * v_hat(m).real();
    g(n + m) = tangent * v_hat(m).imag();
    const double g0 = opts.voltage == VoltageLinearization::tangent ? -std::norm(v_hat(m)) : 0.0;
    sink.add(g, g0, l.v_min > 0.0 ? l.v_min * l.v_min : -kInf, l.v_max * l.v_max, "|v|^2 " + id);
    sink.add(poly.p_map.row(m).transpose(), poly.p0(m), l.p_min, l.p_max, "p " + id);
    sink.add(poly.q_map.row(m).transpose(), poly.q0(m), l.q_min, l.q_max, "q " + id);
  }
  for (const AssembledBranch& br : sys.branches()) {
    const std::string& from = sys.node_ids()[static_cast<std::size_t>(br.from)];
    const std::string& to = sys.node_ids()[static_cast<std::size_t>(br.to)];
    const double imax = limits.branch_limit(from, to);
    if (!std::isfinite(imax) && !opts.current_floor) continue;
    const Complex dv_hat = expansion(br.from) - expansion(br.to);
    const double y2 = std::norm(br.y_series(0, 0));
    RVector g = RVector::Zero(nx);
    double g0 = 0.0;
    re_form(br.from, tangent * y2 * dv_hat, g, g0);
    re_form(br.to, -tangent * y2 * dv_hat, g, g0);
    if (opts.voltage == VoltageLinearization::tangent) g0 -= y2 * std::norm(dv_hat);
    sink.add(g, g0, opts.current_floor ? 0.0 : -kInf, imax * imax, "|i|^2 " + from + "-" + to);
  }

  const auto rows = static_cast<Index>(sink.rows.size());
  poly.a_sys.resize(rows, nx);
  poly.b_sys.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    poly.a_sys.row(r) = sink.rows[static_cast<std::size_t>(r)].transpose();
    poly.b_sys(r) = sink.rhs[static_cast<std::size_t>(r)];
  }
  poly.row_labels = std::move(sink.labels);

  // q₁ = Im(v1·conj(y00·v1 + y0l·v_L)), exact since v1 is fixed
  poly.objective = RVector::Zero(nx);
  poly.offset = (v1 * std::conj(sys.y00()(0, 0) * v1)).imag();
  for (Index j = 0; j < n; ++j) {
    const Complex c = v1 * std::conj(sys.y0l()(0, j));
    poly.objective(j) = c.imag();
    poly.objective(n + j) = -c.real();
  }
  return poly;
}

inline RangeResult project_interval_lp(const Polyhedron& poly, const LpOptions& o = {}) {
  RangeResult out;
  const LpResult lo = solve_lp(poly.a_sys, poly.b_sys, poly.objective, o);
  if (lo.status == LpStatus::infeasible) return out;
  const LpResult hi = solve_lp(poly.a_sys, poly.b_sys, -poly.objective, o);
  out.status = RangeStatus::bounded;
  out.x_lo = lo.x;
  out.x_hi = hi.x;
  if (lo.status == LpStatus::unbounded) {
    out.status = RangeStatus::unbounded;
    out.q_lo = -kInf;
    out.ray = lo.ray;
  } else {
    out.q_lo = poly.evaluate(lo.x);
  }
  if (hi.status == LpStatus::unbounded) {
    out.status = RangeStatus::unbounded;
    out.q_hi = kInf;
    out.ray = hi.ray;
  } else {
    out.q_hi = poly.evaluate(hi.x);
  }
  return out;
}

inline RangeResult project_interval_fme(const Polyhedron& poly) {
  const FmeBounds b = fourier_motzkin_bounds(poly.a_sys, poly.b_sys, poly.objective, poly.offset);
  RangeResult out;
  if (!b.feasible) return out;
  out.q_lo = b.lo;
  out.q_hi = b.hi;
  out.status = std::isfinite(b.lo) && std::isfinite(b.hi) ? RangeStatus::bounded : RangeStatus::unbounded;
  return out;
}

/// Nonlinear check of an injection profile against the node and branch limits.
struct LimitCheck {
  bool solved = false;
  double worst = kInf;  // largest relative violation (≤ 0 when all limits hold)
  std::string worst_label;
  CVector v_l;
  double q_pcc = 0.0;
};

inline LimitCheck check_limits(const Feeder& f, const OperationalLimits& limits, const CVector& s_l,
                               const SolveOptions& opts = {}) {
  LimitCheck out;
  PfSolution sol;
  try {
    sol = solve_fixed_point(f.sys, f.v0, f.w, s_l, opts);
  } catch (const NonConvergence&) {
    return out;
  }
  out.solved = true;
  out.v_l = sol.v_l;
  out.worst = -kInf;
  const AdmittanceSystem& sys = f.sys;
  auto note = [&](double rel, const std::string& label) {
    if (rel > out.worst) {
      out.worst = rel;
      out.worst_label = label;
    }
  };
  for (Index m = 0; m < sys.load_dim(); ++m) {
    const std::string& id = sys.node_ids()[static_cast<std::size_t>(sys.load_index()[static_cast<std::size_t>(m)].node)];
    const NodeLimits& l = limits.node(id);
    const double vm = std::abs(sol.v_l(m));
    if (std::isfinite(l.v_max)) note((vm - l.v_max) / l.v_max, "v_max " + id);
    if (l.v_min > 0.0) note((l.v_min - vm) / l.v_min, "v_min " + id);
  }
  auto voltage = [&](Index node) -> Complex {
    if (node == sys.slack_node()) return f.v0(0);
    return sol.v_l(*sys.load_position(node, sys.node_phases()[static_cast<std::size_t>(node)].phases()[0]));
  };
  for (const AssembledBranch& br : sys.branches()) {
    const std::string& from = sys.node_ids()[static_cast<std::size_t>(br.from)];
    const std::string& to = sys.node_ids()[static_cast<std::size_t>(br.to)];
    const double imax = limits.branch_limit(from, to);
    if (!std::isfinite(imax)) continue;
    const double im = std::abs(br.y_series(0, 0) * (voltage(br.from) - voltage(br.to)));
    note((im - imax) / imax, "i_max " + from + "-" + to);
  }
  const Complex v1 = f.v0(0);
  out.q_pcc = (v1 * std::conj(sys.y00()(0, 0) * v1 + (sys.y0l() * sol.v_l)(0))).imag();
  return out;
}

struct AccurateRange {
  RangeStatus status = RangeStatus::infeasible;
  double q_lo = kInf;
  double q_hi = -kInf;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  int evaluations = 0;
};

/// Reference interval from the nonlinear oracle. Every non-slack node needs
/// finite p and q limits; the controllable ones (min < max) move together
/// along the segment from their all-min to their all-max corner, and the
/// feasible part of that segment (assumed an interval) is located by a grid
/// scan followed by bisection on each end.
inline AccurateRange accurate_interval_bisection(const Feeder& f, const OperationalLimits& limits,
                                                 double theta_tol = 1e-10, int grid = 100,
                                                 const SolveOptions& opts = {}) {
  detail::require_single_phase(f);
  const AdmittanceSystem& sys = f.sys;
  const Index n = sys.load_dim();
  CVector s_min(n), s_max(n);
  for (Index m = 0; m < n; ++m) {
    const std::string& id = sys.node_ids()[static_cast<std::size_t>(sys.load_index()[static_cast<std::size_t>(m)].node)];
    const NodeLimits& l = limits.node(id);
    if (!std::isfinite(l.p_min) || !std::isfinite(l.p_max) || !std::isfinite(l.q_min) ||
        !std::isfinite(l.q_max))
      throw InvalidInput("accurate range evaluation needs finite p and q limits at node '" + id + "'");
    s_min(m) = {l.p_min, l.q_min};
    s_max(m) = {l.p_max, l.q_max};
  }
  AccurateRange out;
  auto eval = [&](double theta, double& q) {
    ++out.evaluations;
    const LimitCheck c = check_limits(f, limits, s_min + theta * (s_max - s_min), opts);
    q = c.q_pcc;
    return c.solved && c.worst <= 0.0;
  };

  std::vector<double> q_grid(static_cast<std::size_t>(grid) + 1);
  std::vector<bool> ok(static_cast<std::size_t>(grid) + 1);
  for (int g = 0; g <= grid; ++g)
    ok[static_cast<std::size_t>(g)] = eval(static_cast<double>(g) / grid, q_grid[static_cast<std::size_t>(g)]);
  const auto first = std::find(ok.begin(), ok.end(), true);
  if (first == ok.end()) return out;
  const auto g_lo = static_cast<int>(first - ok.begin());
  const auto g_hi = static_cast<int>(ok.rend() - std::find(ok.rbegin(), ok.rend(), true)) - 1;

  auto refine = [&](double good, double bad) {
    double q = 0.0;
    while (std::abs(good - bad) > theta_tol) {
      const double mid = 0.5 * (good + bad);
      if (eval(mid, q)) good = mid;
      else bad = mid;
    }
    return good;
  };
  out.theta_lo = g_lo == 0 ? 0.0 : refine(static_cast<double>(g_lo) / grid, static_cast<double>(g_lo - 1) / grid);
  out.theta_hi = g_hi == grid ? 1.0 : refine(static_cast<double>(g_hi) / grid, static_cast<double>(g_hi + 1) / grid);
  double q_a = 0.0, q_b = 0.0;
  eval(out.theta_lo, q_a);
  eval(out.theta_hi, q_b);
  out.q_lo = std::min(q_a, q_b);
  out.q_hi = std::max(q_a, q_b);
  for (int g = g_lo; g <= g_hi; ++g) {
    if (!ok[static_cast<std::size_t>(g)]) continue;
    out.q_lo = std::min(out.q_lo, q_grid[static_cast<std::size_t>(g)]);
    out.q_hi = std::max(out.q_hi, q_grid[static_cast<std::size_t>(g)]);
  }
  out.status = RangeStatus::bounded;
  return out;
}

}  // namespace hybridpf
