#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hybridpf/types.hpp"

namespace hybridpf {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  RVector x;       // optimizer (optimal) or last vertex (unbounded)
  double value = 0.0;
  RVector ray;     // improving direction when unbounded
  int pivots = 0;
};

struct LpOptions {
  double pivot_tol = 1e-10;
  double cost_tol = 1e-10;
  double feas_tol = 1e-9;
  int max_pivots = 100000;
};

namespace detail {

/// Dense tableau over nonnegative columns: rows 0..m−1 constraints
/// (last column = rhs), row m the objective reduced costs.
class Tableau {
public:
  Tableau(Index m, Index cols) : t_(RMatrix::Zero(m + 1, cols + 1)), basis_(static_cast<std::size_t>(m)) {}

  RMatrix& t() { return t_; }
  std::vector<Index>& basis() { return basis_; }
  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// Loads the objective row for costs `c` (length cols) given the basis.
  void set_objective(const RVector& c) {
    const Index m = rows();
    t_.row(m).setZero();
    t_.row(m).head(cols()) = c.transpose();
    for (Index i = 0; i < m; ++i) {
      const double cb = c(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  enum class Step { optimal, unbounded, moved };

  /// One Bland's-rule pivot over columns [0, allowed).
  Step step(Index allowed, const LpOptions& o, Index& entering) {
    const Index m = rows();
    entering = -1;
    for (Index j = 0; j < allowed; ++j) {
      if (t_(m, j) < -o.cost_tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return Step::optimal;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (t_(i, entering) > o.pivot_tol) best = std::min(best, t_(i, cols()) / t_(i, entering));
    }
    if (best == std::numeric_limits<double>::infinity()) return Step::unbounded;
    // ties broken by the smallest basic column
    Index leave = -1;
    for (Index i = 0; i < m; ++i) {
      if (t_(i, entering) <= o.pivot_tol) continue;
      if (t_(i, cols()) / t_(i, entering) > best + 1e-12 * (1.0 + std::abs(best))) continue;
      if (leave < 0 || basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])
        leave = i;
    }
    pivot(leave, entering);
    return Step::moved;
  }

private:
  RMatrix t_;
  std::vector<Index> basis_;
};

}  // namespace detail

/// Minimizes c·x subject to A·x ≤ b with x free, by the two-phase simplex
/// method on x = x⁺ − x⁻ with Bland's anti-cycling rule.
inline LpResult solve_lp(const RMatrix& a, const RVector& b, const RVector& c,
                         const LpOptions& o = {}) {
  const Index m = a.rows();
  const Index n = a.cols();
  require_size(b.size(), m, "lp rhs");
  require_size(c.size(), n, "lp objective");
  if (!a.allFinite() || !b.allFinite() || !c.allFinite())
    throw InvalidInput("linear program has non-finite data");

  // columns: x⁺ (n), x⁻ (n), slack (m), artificial (one per negative-rhs row)
  std::vector<Index> art_rows;
  for (Index i = 0; i < m; ++i)
    if (b(i) < 0.0) art_rows.push_back(i);
  const Index n_art = static_cast<Index>(art_rows.size());
  const Index structural = 2 * n + m;
  detail::Tableau tab(m, structural + n_art);
  RMatrix& t = tab.t();
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    t.row(i).segment(0, n) = sign * a.row(i);
    t.row(i).segment(n, n) = -sign * a.row(i);
    t(i, 2 * n + i) = sign;
    t(i, structural + n_art) = sign * b(i);
    tab.basis()[static_cast<std::size_t>(i)] = 2 * n + i;
  }
  for (Index k = 0; k < n_art; ++k) {
    const Index i = art_rows[static_cast<std::size_t>(k)];
    t(i, structural + k) = 1.0;
    tab.basis()[static_cast<std::size_t>(i)] = structural + k;
  }

  LpResult out;
  Index entering = -1;
  if (n_art > 0) {
    RVector phase1 = RVector::Zero(structural + n_art);
    phase1.tail(n_art).setOnes();
    tab.set_objective(phase1);
    for (;;) {
      if (++out.pivots > o.max_pivots) throw NonConvergence("simplex pivot limit reached");
      const auto s = tab.step(structural + n_art, o, entering);
      if (s == detail::Tableau::Step::optimal) break;
      if (s == detail::Tableau::Step::unbounded) throw Error("phase-one problem unbounded");
    }
    if (-t(m, structural + n_art) > o.feas_tol) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // drive remaining artificials out of the basis
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < structural) continue;
      for (Index j = 0; j < structural; ++j) {
        if (std::abs(t(i, j)) > o.pivot_tol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  RVector cost = RVector::Zero(structural + n_art);
  cost.head(n) = c;
  cost.segment(n, n) = -c;
  tab.set_objective(cost);
  for (;;) {
    if (++out.pivots > o.max_pivots) throw NonConvergence("simplex pivot limit reached");
    const auto s = tab.step(structural, o, entering);
    if (s == detail::Tableau::Step::optimal) break;
    if (s == detail::Tableau::Step::unbounded) {
      out.status = LpStatus::unbounded;
      RVector dir = RVector::Zero(structural + n_art);
      dir(entering) = 1.0;
      for (Index i = 0; i < m; ++i) dir(tab.basis()[static_cast<std::size_t>(i)]) = -t(i, entering);
      out.ray = dir.head(n) - dir.segment(n, n);
      break;
    }
  }
  RVector z = RVector::Zero(structural + n_art);
  for (Index i = 0; i < m; ++i) z(tab.basis()[static_cast<std::size_t>(i)]) = t(i, structural + n_art);
  out.x = z.head(n) - z.segment(n, n);
  if (out.status != LpStatus::unbounded) {
    out.status = LpStatus::optimal;
    out.value = c.dot(out.x);
  } else {
    out.value = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace hybridpf
