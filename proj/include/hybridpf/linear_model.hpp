#pragma once

#include <string>
#include <utility>

#include "hybridpf/anchors.hpp"
#include "hybridpf/network.hpp"
#include "hybridpf/zip_load.hpp"

namespace hybridpf {

/// ṽ_L = w + sens·conj(s_L).
struct ComplexLinearModel {
  CVector w;
  CMatrix sens;
  AnchorPair anchors;
  RVector mu;

  Index size() const { return w.size(); }
};

/// ṽ_L = w + sens_lambda·λ.
struct ZipLinearModel {
  CVector w;
  CMatrix sens_lambda;
  AnchorPair anchors;
  RVector mu;
  ZipLoadSpec loads;

  Index size() const { return w.size(); }
};

/// Approximate current ĩ_L = yl0·v0 + yll·v̂_eff split into real and imaginary parts.
struct RealCoefficients {
  RVector i_re;
  RVector i_im;
};

/// 1 / (μ/v̂_u + (1−μ)/v̂_l), element-wise.
inline CVector effective_anchor_voltage(const RVector& mu, const AnchorPair& anchors) {
  anchors.validate();
  require_size(mu.size(), anchors.size(), "mu");
  CVector out(mu.size());
  for (Index m = 0; m < mu.size(); ++m) {
    const Complex recip = mu(m) / anchors.v_hat_u(m) + (1.0 - mu(m)) / anchors.v_hat_l(m);
    if (recip == Complex{})
      throw UnidentifiableElement("effective anchor voltage is unbounded at node-phase " +
                                      std::to_string(m),
                                  m);
    out(m) = 1.0 / recip;
  }
  return out;
}

/// Row scaling μ/conj(v̂_u) + (1−μ)/conj(v̂_l) applied before yll⁻¹.
inline CVector anchor_weights(const RVector& mu, const AnchorPair& anchors) {
  anchors.validate();
  require_size(mu.size(), anchors.size(), "mu");
  CVector h(mu.size());
  for (Index m = 0; m < mu.size(); ++m)
    h(m) = mu(m) / std::conj(anchors.v_hat_u(m)) + (1.0 - mu(m)) / std::conj(anchors.v_hat_l(m));
  return h;
}

inline ComplexLinearModel build_trained_model(const AdmittanceSystem& sys, const CVector& w,
                                              const AnchorPair& anchors, const RVector& mu) {
  require_size(w.size(), sys.load_dim(), "w");
  require_size(anchors.size(), sys.load_dim(), "anchors");
  const CVector h = anchor_weights(mu, anchors);
  CMatrix diag_h = h.asDiagonal();
  return {w, sys.solve_ll(diag_h), anchors, mu};
}

/// Single-guess model: sens = yll⁻¹·diag(conj(v̂))⁻¹, μ ≡ 1.
inline ComplexLinearModel build_flat_model(const AdmittanceSystem& sys, const CVector& w,
                                           const CVector& v_hat) {
  const Index n = sys.load_dim();
  return build_trained_model(sys, w, AnchorPair{v_hat, v_hat}, RVector::Ones(n));
}

inline CVector predict_voltages(const ComplexLinearModel& model, const CVector& s_l) {
  require_size(s_l.size(), model.size(), "injection");
  return model.w + model.sens * s_l.conjugate();
}

/// B(v̂)_m = A(|v̂_m|)/conj(v̂_m).
inline CVector zip_b_terms(const ZipLoadSpec& zip, const CVector& v_hat) {
  CVector out(v_hat.size());
  for (Index m = 0; m < v_hat.size(); ++m)
    out(m) = zip.factor(m, std::abs(v_hat(m))) / std::conj(v_hat(m));
  return out;
}

inline ZipLinearModel build_zip_model(const AdmittanceSystem& sys, const CVector& w,
                                      const AnchorPair& anchors, const RVector& mu,
                                      const ZipLoadSpec& zip) {
  zip.validate();
  anchors.validate();
  require_size(zip.size(), sys.load_dim(), "zip loads");
  require_size(mu.size(), sys.load_dim(), "mu");
  require_size(w.size(), sys.load_dim(), "w");
  const CVector bu = zip_b_terms(zip, anchors.v_hat_u);
  const CVector bl = zip_b_terms(zip, anchors.v_hat_l);
  CVector h(mu.size());
  for (Index m = 0; m < mu.size(); ++m)
    h(m) = (mu(m) * bu(m) + (1.0 - mu(m)) * bl(m)) * std::conj(zip.s_nom(m));
  CMatrix diag_h = h.asDiagonal();
  return {w, sys.solve_ll(diag_h), anchors, mu, zip};
}

inline CVector predict_zip(const ZipLinearModel& model, const RVector& lambda) {
  require_size(lambda.size(), model.size(), "lambda");
  return model.w + model.sens_lambda * lambda.cast<Complex>();
}

inline RealCoefficients real_coefficients(const AdmittanceSystem& sys, const CVector& v0,
                                          const CVector& v_hat_eff) {
  require_size(v0.size(), sys.slack_dim(), "v0");
  require_size(v_hat_eff.size(), sys.load_dim(), "effective anchor");
  const CVector i = sys.yl0() * v0 + sys.yll() * v_hat_eff;
  return {i.real(), i.imag()};
}

/// p = i_re·v_re + i_im·v_im, q = i_re·v_im − i_im·v_re (element-wise).
inline std::pair<RVector, RVector> nodal_power_real(const RealCoefficients& k, const RVector& v_re,
                                                    const RVector& v_im) {
  require_size(v_re.size(), k.i_re.size(), "v_re");
  require_size(v_im.size(), k.i_re.size(), "v_im");
  RVector p = k.i_re.cwiseProduct(v_re) + k.i_im.cwiseProduct(v_im);
  RVector q = k.i_re.cwiseProduct(v_im) - k.i_im.cwiseProduct(v_re);
  return {std::move(p), std::move(q)};
}

/// Load-independent blend μ·v̂_u + (1−μ)·v̂_l.
inline CVector pure_dd_predict(const RVector& mu, const AnchorPair& anchors) {
  require_size(mu.size(), anchors.size(), "mu");
  require_size(anchors.v_hat_l.size(), anchors.size(), "anchor v_hat_l");
  CVector out(mu.size());
  for (Index m = 0; m < mu.size(); ++m)
    out(m) = mu(m) * anchors.v_hat_u(m) + (1.0 - mu(m)) * anchors.v_hat_l(m);
  return out;
}

}  // namespace hybridpf
