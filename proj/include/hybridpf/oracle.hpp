#pragma once

#include <cmath>
#include <string>

#include "hybridpf/network.hpp"
#include "hybridpf/zip_load.hpp"

namespace hybridpf {

struct SolveOptions {
  double tol = 1e-10;  // max |Δv| between sweeps, p.u.
  int max_iter = 200;

  void validate() const {
    if (!(tol > 0.0)) throw InvalidInput("solver tol must be positive");
    if (max_iter < 1) throw InvalidInput("solver max_iter must be at least 1");
  }
};

struct PfSolution {
  CVector v_l;
  int iterations = 0;
  double residual = 0.0;  // ‖s − diag(v)·conj(yl0·v0 + yll·v)‖∞
};

/// Residual below which a converged iterate is accepted.
inline constexpr double kMismatchLimit = 1e-8;
/// Any |v| below this during iteration is reported as voltage collapse.
inline constexpr double kCollapseGuard = 1e-6;

/// Nodal power mismatch ‖s − diag(v)·conj(yl0·v0 + yll·v)‖∞, computed from the
/// full admittance blocks.
inline double power_mismatch(const AdmittanceSystem& sys, const CVector& v0, const CVector& v,
                             const CVector& s) {
  require_size(v.size(), sys.load_dim(), "mismatch voltage");
  require_size(s.size(), sys.load_dim(), "mismatch injection");
  const CVector i = sys.yl0() * v0 + sys.yll() * v;
  double worst = 0.0;
  for (Index m = 0; m < v.size(); ++m) worst = std::max(worst, std::abs(s(m) - v(m) * std::conj(i(m))));
  return worst;
}

namespace detail {

/// Picard sweeps v ← w + yll⁻¹(conj(s(v)) ./ conj(v)) from v = w. `inject`
/// maps the current iterate to the nodal injections.
template <class Inject>
PfSolution picard(const AdmittanceSystem& sys, const CVector& v0, const CVector& w,
                  Inject&& inject, const SolveOptions& opts) {
  opts.validate();
  require_size(w.size(), sys.load_dim(), "w");
  require_size(v0.size(), sys.slack_dim(), "v0");
  PfSolution out;
  CVector v = w;
  CVector rhs(v.size());
  for (int k = 1; k <= opts.max_iter; ++k) {
    const CVector s = inject(v);
    for (Index m = 0; m < v.size(); ++m) rhs(m) = std::conj(s(m)) / std::conj(v(m));
    CVector next = w + sys.solve_ll(rhs);
    if (!next.allFinite())
      throw NonConvergence("fixed-point iteration produced non-finite voltages at sweep " +
                           std::to_string(k));
    if (next.cwiseAbs().minCoeff() < kCollapseGuard)
      throw NonConvergence("voltage collapse at sweep " + std::to_string(k));
    const double step = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (step < opts.tol) {
      const double residual = power_mismatch(sys, v0, v, inject(v));
      if (residual <= kMismatchLimit) {
        out.v_l = std::move(v);
        out.iterations = k;
        out.residual = residual;
        return out;
      }
    }
  }
  throw NonConvergence("fixed-point iteration did not converge in " +
                       std::to_string(opts.max_iter) + " sweeps");
}

}  // namespace detail

/// Constant-power solve. s_l are injections (loads negative).
inline PfSolution solve_fixed_point(const AdmittanceSystem& sys, const CVector& v0,
                                    const CVector& w, const CVector& s_l,
                                    const SolveOptions& opts = {}) {
  require_size(s_l.size(), sys.load_dim(), "s_l");
  return detail::picard(sys, v0, w, [&](const CVector&) -> const CVector& { return s_l; }, opts);
}

/// ZIP solve: injections recomputed from |v| each sweep.
inline PfSolution solve_zip_fixed_point(const AdmittanceSystem& sys, const CVector& v0,
                                        const CVector& w, const ZipLoadSpec& zip,
                                        const RVector& lambda, const SolveOptions& opts = {}) {
  zip.validate();
  require_size(zip.size(), sys.load_dim(), "zip loads");
  require_size(lambda.size(), sys.load_dim(), "lambda");
  if (zip.is_constant_power()) {
    const CVector s = zip.nominal_injections(lambda);
    return solve_fixed_point(sys, v0, w, s, opts);
  }
  return detail::picard(sys, v0, w, [&](const CVector& v) { return zip.injections(lambda, v); },
                        opts);
}

}  // namespace hybridpf
