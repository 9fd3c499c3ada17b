#pragma once

#include <cmath>
#include <string>

#include "hybridpf/types.hpp"

namespace hybridpf {

/// Voltage-dependent (ZIP) load description, one entry per non-slack
/// node-phase. Active and reactive parts share the coefficients and the
/// change rate (fixed power factor), so a load is
///
///     s_m = lambda_m * s_nom_m * A_m(|v_m|),
///     A_m(x) = a_m (x / v_nom_m)^2 + b_m (x / v_nom_m) + c_m.
///
/// s_nom is an injection: negative real part for a consuming load.
struct ZipLoadSpec {
  RVector a;
  RVector b;
  RVector c;
  CVector s_nom;
  RVector v_nom_mag;

  Index size() const { return s_nom.size(); }

  static ZipLoadSpec constant_power(const CVector& s_nom) {
    const Index n = s_nom.size();
    return ZipLoadSpec{RVector::Zero(n), RVector::Zero(n), RVector::Ones(n), s_nom,
                       RVector::Ones(n)};
  }

  void validate() const {
    const Index n = size();
    require_size(a.size(), n, "zip a");
    require_size(b.size(), n, "zip b");
    require_size(c.size(), n, "zip c");
    require_size(v_nom_mag.size(), n, "zip v_nom");
    for (Index m = 0; m < n; ++m) {
      if (std::abs(a(m) + b(m) + c(m) - 1.0) > 1e-9) {
        throw InvalidInput("zip coefficients at node-phase " + std::to_string(m) +
                           " do not sum to 1");
      }
      if (!(v_nom_mag(m) > 0.0)) {
        throw InvalidInput("zip nominal voltage at node-phase " + std::to_string(m) +
                           " must be positive");
      }
    }
  }

  /// True when every node-phase is a pure constant-power load.
  bool is_constant_power() const {
    return (a.array() == 0.0).all() && (b.array() == 0.0).all();
  }

  double factor(Index m, double v_mag) const {
    const double x = v_mag / v_nom_mag(m);
    return (a(m) * x + b(m)) * x + c(m);
  }

  RVector factors(const CVector& v) const {
    RVector out(size());
    for (Index m = 0; m < size(); ++m) out(m) = factor(m, std::abs(v(m)));
    return out;
  }

  /// Complex injections at voltage v for change rates lambda.
  CVector injections(const RVector& lambda, const CVector& v) const {
    require_size(lambda.size(), size(), "zip lambda");
    require_size(v.size(), size(), "zip voltage");
    CVector s(size());
    for (Index m = 0; m < size(); ++m) s(m) = lambda(m) * s_nom(m) * factor(m, std::abs(v(m)));
    return s;
  }

  /// Injections with the voltage dependence dropped (A = 1).
  CVector nominal_injections(const RVector& lambda) const {
    require_size(lambda.size(), size(), "zip lambda");
    CVector s(size());
    for (Index m = 0; m < size(); ++m) s(m) = lambda(m) * s_nom(m);
    return s;
  }
};

}  // namespace hybridpf
