#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hybridpf/anchors.hpp"
#include "hybridpf/data.hpp"
#include "hybridpf/zip_load.hpp"

namespace hybridpf {

enum class Penalty { squared, huber };

inline Penalty parse_penalty(const std::string& s) {
  if (s == "squared") return Penalty::squared;
  if (s == "huber") return Penalty::huber;
  throw InvalidInput("penalty must be 'squared' or 'huber'");
}

inline const char* penalty_name(Penalty p) { return p == Penalty::squared ? "squared" : "huber"; }

struct TrainerOptions {
  Penalty penalty = Penalty::squared;
  /// Huber threshold. Empty means auto: the 90th percentile of the current
  /// per-sample residual sums, re-estimated every IRLS iteration.
  std::optional<double> delta;
  int max_irls_iter = 50;
  double irls_tol = 1e-10;
  bool use_weights = true;

  void validate() const {
    if (delta && !(*delta > 0.0)) throw InvalidInput("huber delta must be positive");
    if (max_irls_iter < 1) throw InvalidInput("max_irls_iter must be at least 1");
    if (!(irls_tol > 0.0)) throw InvalidInput("irls_tol must be positive");
  }
};

struct FitReport {
  RVector residual_norms;  // r_k = Σ_m |eps_km| at the fitted μ
  double objective = 0.0;  // Σ_k w_k Σ_m |eps_km|²
  int irls_iterations = 0;
  double delta = 0.0;      // last Huber threshold used (0 for squared)
  std::vector<long> flagged;  // sample ids down-weighted by the Huber step
  std::vector<Index> large_mu;  // elements with |μ| > 10
};

struct FitResult {
  RVector mu;
  FitReport report;
};

/// Column-wise split eps = c − μ·d of the residual matrix.
struct ResidualTerms {
  CMatrix c;
  CMatrix d;
};

inline ResidualTerms residual_terms(const SampleSet& samples, const AnchorPair& anchors,
                                    const ZipLoadSpec* zip = nullptr) {
  anchors.validate();
  const Index n = anchors.size();
  const auto rows = static_cast<Index>(samples.size());
  if (zip) require_size(zip->size(), n, "zip loads");
  ResidualTerms t{CMatrix(rows, n), CMatrix(rows, n)};
  for (Index k = 0; k < rows; ++k) {
    const OperatingSample& s = samples[static_cast<std::size_t>(k)];
    require_size(s.v_l.size(), n, "sample voltage");
    for (Index m = 0; m < n; ++m) {
      const Complex v = s.v_l(m);
      if (v == Complex{})
        throw InvalidInput("sample " + std::to_string(s.id) + " has a zero voltage at node-phase " +
                           std::to_string(m));
      Complex ru = v / anchors.v_hat_u(m);
      Complex rl = v / anchors.v_hat_l(m);
      if (zip) {
        const double av = zip->factor(m, std::abs(v));
        if (av == 0.0)
          throw InvalidInput("sample " + std::to_string(s.id) +
                             " has a vanishing load factor at node-phase " + std::to_string(m));
        ru *= zip->factor(m, std::abs(anchors.v_hat_u(m))) / av;
        rl *= zip->factor(m, std::abs(anchors.v_hat_l(m))) / av;
      }
      t.c(k, m) = 1.0 - rl;
      t.d(k, m) = ru - rl;
    }
  }
  return t;
}

/// eps[k,m] = 1 − μ_m·(v_km/v̂_u,m)·ρ_u − (1−μ_m)·(v_km/v̂_l,m)·ρ_l, with the
/// load-factor ratios ρ = A(|v̂|)/A(|v_km|) for ZIP loads and 1 otherwise.
inline CMatrix residuals(const SampleSet& samples, const AnchorPair& anchors, const RVector& mu,
                         const ZipLoadSpec* zip = nullptr) {
  require_size(mu.size(), anchors.size(), "mu");
  const ResidualTerms t = residual_terms(samples, anchors, zip);
  CMatrix eps = t.c;
  for (Index m = 0; m < mu.size(); ++m) eps.col(m) -= mu(m) * t.d.col(m);
  return eps;
}

namespace detail {

inline RVector weighted_closed_form(const ResidualTerms& t, const RVector& wk) {
  const Index n = t.c.cols();
  RVector mu(n);
  long bad = -1;
#pragma omp parallel for
  for (Index m = 0; m < n; ++m) {
    double num = 0.0, den = 0.0;
    for (Index k = 0; k < t.c.rows(); ++k) {
      num += wk(k) * (std::conj(t.d(k, m)) * t.c(k, m)).real();
      den += wk(k) * std::norm(t.d(k, m));
    }
    if (den > 0.0) {
      mu(m) = num / den;
    } else {
#pragma omp critical(hybridpf_unidentifiable)
      if (bad < 0 || m < bad) bad = m;
    }
  }
  if (bad >= 0)
    throw UnidentifiableElement("blend coefficient of node-phase " + std::to_string(bad) +
                                    " is unidentifiable (anchors coincide there)",
                                bad);
  return mu;
}

inline RVector residual_sums(const ResidualTerms& t, const RVector& mu) {
  RVector r = RVector::Zero(t.c.rows());
  for (Index k = 0; k < t.c.rows(); ++k)
    for (Index m = 0; m < t.c.cols(); ++m) r(k) += std::abs(t.c(k, m) - mu(m) * t.d(k, m));
  return r;
}

/// Nearest-rank percentile (q in (0, 1]).
inline double percentile(RVector x, double q) {
  std::sort(x.data(), x.data() + x.size());
  const auto rank = static_cast<Index>(std::ceil(q * static_cast<double>(x.size()))) - 1;
  return x(std::clamp<Index>(rank, 0, x.size() - 1));
}

}  // namespace detail

inline FitResult fit_mu(const SampleSet& samples, const AnchorPair& anchors,
                        const TrainerOptions& opts = {}, const ZipLoadSpec* zip = nullptr) {
  opts.validate();
  if (samples.size() < 2) throw InvalidInput("fitting needs at least 2 samples");
  const ResidualTerms t = residual_terms(samples, anchors, zip);
  const Index rows = t.c.rows();
  RVector wk(rows);
  for (Index k = 0; k < rows; ++k) {
    const double w = opts.use_weights ? samples[static_cast<std::size_t>(k)].weight : 1.0;
    if (!(w >= 0.0)) throw InvalidInput("sample weights must be non-negative");
    wk(k) = w;
  }

  FitResult out;
  out.mu = detail::weighted_closed_form(t, wk);
  RVector omega = RVector::Ones(rows);
  if (opts.penalty == Penalty::huber) {
    bool converged = false;
    for (int it = 1; it <= opts.max_irls_iter; ++it) {
      const RVector r = detail::residual_sums(t, out.mu);
      const double delta = opts.delta ? *opts.delta : detail::percentile(r, 0.9);
      out.report.delta = delta;
      for (Index k = 0; k < rows; ++k) omega(k) = r(k) <= delta ? 1.0 : delta / r(k);
      const RVector next = detail::weighted_closed_form(t, wk.cwiseProduct(omega));
      const double change = (next - out.mu).cwiseAbs().maxCoeff();
      out.mu = next;
      out.report.irls_iterations = it;
      if (change < opts.irls_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NonConvergence("Huber IRLS did not converge in " + std::to_string(opts.max_irls_iter) +
                           " iterations");
    for (Index k = 0; k < rows; ++k)
      if (omega(k) < 1.0) out.report.flagged.push_back(samples[static_cast<std::size_t>(k)].id);
  }

  out.report.residual_norms = detail::residual_sums(t, out.mu);
  double obj = 0.0;
  for (Index k = 0; k < rows; ++k)
    for (Index m = 0; m < t.c.cols(); ++m) obj += wk(k) * std::norm(t.c(k, m) - out.mu(m) * t.d(k, m));
  out.report.objective = obj;
  for (Index m = 0; m < out.mu.size(); ++m)
    if (std::abs(out.mu(m)) > 10.0) out.report.large_mu.push_back(m);
  return out;
}

/// Least-squares μ for the load-independent blend μ·v̂_u + (1−μ)·v̂_l.
inline RVector fit_pure_dd_mu(const SampleSet& samples, const AnchorPair& anchors,
                              bool use_weights = true) {
  anchors.validate();
  if (samples.empty()) throw InvalidInput("fitting needs at least 1 sample");
  const Index n = anchors.size();
  CVector acc = CVector::Zero(n);
  double wsum = 0.0;
  for (const OperatingSample& s : samples) {
    require_size(s.v_l.size(), n, "sample voltage");
    const double w = use_weights ? s.weight : 1.0;
    acc += w * (s.v_l - anchors.v_hat_l);
    wsum += w;
  }
  RVector mu(n);
  for (Index m = 0; m < n; ++m) {
    const Complex d = anchors.v_hat_u(m) - anchors.v_hat_l(m);
    if (d == Complex{} || wsum <= 0.0)
      throw UnidentifiableElement("blend coefficient of node-phase " + std::to_string(m) +
                                      " is unidentifiable",
                                  m);
    mu(m) = (std::conj(d) * acc(m)).real() / (std::norm(d) * wsum);
  }
  return mu;
}

}  // namespace hybridpf
