#pragma once

#include <algorithm>
#include <bitset>
#include <cmath>
#include <limits>
#include <vector>

#include "hybridpf/types.hpp"

namespace hybridpf {

/// Largest variable count accepted by fourier_motzkin_bounds.
inline constexpr Index kFmeMaxVariables = 12;

struct FmeBounds {
  bool feasible = true;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::size_t peak_rows = 0;
};

namespace detail {

struct FmeRow {
  RVector a;  // coefficients over the remaining variables
  double b;
  std::bitset<256> history;  // original rows combined into this one
};

/// Scales a row so its largest |coefficient| is 1; false for an all-zero row.
inline bool normalize(FmeRow& r) {
  const double s = r.a.size() ? r.a.cwiseAbs().maxCoeff() : 0.0;
  if (s == 0.0) return false;
  r.a /= s;
  r.b /= s;
  return true;
}

/// Removes duplicate rows, keeping the tightest right-hand side.
inline void prune(std::vector<FmeRow>& rows, double tol) {
  std::sort(rows.begin(), rows.end(), [](const FmeRow& x, const FmeRow& y) {
    for (Index i = 0; i < x.a.size(); ++i)
      if (x.a(i) != y.a(i)) return x.a(i) < y.a(i);
    return x.b < y.b;
  });
  std::vector<FmeRow> kept;
  for (FmeRow& r : rows) {
    if (!kept.empty() && (kept.back().a - r.a).cwiseAbs().maxCoeff() <= tol) {
      if (r.b < kept.back().b) {
        kept.back().b = r.b;
        kept.back().history = r.history;
      }
      continue;
    }
    kept.push_back(std::move(r));
  }
  rows = std::move(kept);
}

}  // namespace detail

/// Bounds of t = c·x + offset over {A·x ≤ b} by Fourier–Motzkin elimination of
/// every x variable, with Chernikov's rule and duplicate pruning each round.
inline FmeBounds fourier_motzkin_bounds(const RMatrix& a, const RVector& b, const RVector& c,
                                        double offset = 0.0, double tol = 1e-12) {
  const Index n = a.cols();
  require_size(b.size(), a.rows(), "fme rhs");
  require_size(c.size(), n, "fme objective");
  if (n > kFmeMaxVariables)
    throw InvalidInput("Fourier–Motzkin elimination is limited to " +
                       std::to_string(kFmeMaxVariables) + " variables");
  if (a.rows() + 2 > 256) throw InvalidInput("Fourier–Motzkin elimination is limited to 254 rows");

  FmeBounds out;
  // variables: x_0..x_{n−1}, t (last)
  std::vector<detail::FmeRow> rows;
  auto add = [&](RVector coeffs, double rhs, std::size_t origin) {
    detail::FmeRow r{std::move(coeffs), rhs, {}};
    r.history.set(origin);
    if (detail::normalize(r)) rows.push_back(std::move(r));
    else if (rhs < -1e-9) out.feasible = false;
  };
  for (Index i = 0; i < a.rows(); ++i) {
    RVector r(n + 1);
    r << a.row(i).transpose(), 0.0;
    add(std::move(r), b(i), static_cast<std::size_t>(i));
  }
  RVector up(n + 1), down(n + 1);
  up << -c, 1.0;    //  t − c·x ≤ offset
  down << c, -1.0;  // −t + c·x ≤ −offset
  add(std::move(up), offset, static_cast<std::size_t>(a.rows()));
  add(std::move(down), -offset, static_cast<std::size_t>(a.rows() + 1));
  if (!out.feasible) return out;

  for (Index eliminated = 0; eliminated < n; ++eliminated) {
    detail::prune(rows, tol);
    out.peak_rows = std::max(out.peak_rows, rows.size());
    std::vector<detail::FmeRow> pos, neg, next;
    for (detail::FmeRow& r : rows) {
      const double lead = r.a(0);
      if (lead > tol) pos.push_back(std::move(r));
      else if (lead < -tol) neg.push_back(std::move(r));
      else {
        r.a = r.a.tail(r.a.size() - 1).eval();
        next.push_back(std::move(r));
      }
    }
    const std::size_t limit = static_cast<std::size_t>(eliminated) + 2;
    for (const detail::FmeRow& p : pos) {
      for (const detail::FmeRow& q : neg) {
        const std::bitset<256> h = p.history | q.history;
        if (h.count() > limit) continue;  // Chernikov: implied by other combinations
        const double lp = p.a(0), lq = -q.a(0);
        detail::FmeRow r{(lq * p.a + lp * q.a).tail(p.a.size() - 1).eval(), lq * p.b + lp * q.b, h};
        for (Index i = 0; i < r.a.size(); ++i)
          if (std::abs(r.a(i)) <= tol) r.a(i) = 0.0;
        if (detail::normalize(r)) {
          next.push_back(std::move(r));
        } else if (r.b < -1e-9) {
          out.feasible = false;
          return out;
        }
      }
    }
    rows = std::move(next);
  }

  for (const detail::FmeRow& r : rows) {
    const double coef = r.a(0);
    if (coef > 0.0) out.hi = std::min(out.hi, r.b / coef);
    else if (coef < 0.0) out.lo = std::max(out.lo, r.b / coef);
  }
  if (out.lo > out.hi + 1e-9) out.feasible = false;
  return out;
}

}  // namespace hybridpf
