#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "hybridpf/feeder.hpp"
#include "hybridpf/linear_model.hpp"
#include "hybridpf/trainer.hpp"

namespace hybridpf {

struct Provenance {
  std::string feeder_hash;
  std::uint64_t seed = 0;
  Json trainer = Json::object();
};

/// A stored model: either form plus where it came from.
struct ModelFile {
  std::variant<ComplexLinearModel, ZipLinearModel> model;
  Provenance provenance;
  Json fit_report = Json::object();

  bool is_zip() const { return std::holds_alternative<ZipLinearModel>(model); }
  const RVector& mu() const {
    return is_zip() ? std::get<ZipLinearModel>(model).mu : std::get<ComplexLinearModel>(model).mu;
  }
  const AnchorPair& anchors() const {
    return is_zip() ? std::get<ZipLinearModel>(model).anchors
                    : std::get<ComplexLinearModel>(model).anchors;
  }
};

inline Json trainer_options_json(const TrainerOptions& o, double rho) {
  Json j = {{"penalty", penalty_name(o.penalty)},
            {"max_irls_iter", o.max_irls_iter},
            {"irls_tol", o.irls_tol},
            {"use_weights", o.use_weights},
            {"rho", rho}};
  j["delta"] = o.delta ? Json(*o.delta) : Json("auto");
  return j;
}

inline Json fit_report_json(const FitReport& r) {
  return {{"objective", r.objective},
          {"irls_iterations", r.irls_iterations},
          {"delta", r.delta},
          {"flagged_samples", r.flagged},
          {"large_mu_elements", r.large_mu},
          {"max_residual_norm", r.residual_norms.size() ? r.residual_norms.maxCoeff() : 0.0}};
}

namespace detail {

inline Json cvector_json(const CVector& v) {
  Json a = Json::array();
  for (Index m = 0; m < v.size(); ++m) a.push_back(complex_json(v(m)));
  return a;
}

inline CVector parse_cvector(const Json& j, const std::string& where) {
  const auto v = parse_complexes(j, where);
  CVector out(static_cast<Index>(v.size()));
  for (std::size_t m = 0; m < v.size(); ++m) out(static_cast<Index>(m)) = v[m];
  return out;
}

inline RVector parse_rvector(const Json& j, const std::string& where) {
  const auto v = parse_reals(j, where);
  RVector out(static_cast<Index>(v.size()));
  for (std::size_t m = 0; m < v.size(); ++m) out(static_cast<Index>(m)) = v[m];
  return out;
}

inline Json rvector_json(const RVector& v) {
  Json a = Json::array();
  for (Index m = 0; m < v.size(); ++m) a.push_back(v(m));
  return a;
}

}  // namespace detail

inline Json model_to_json(const ModelFile& f) {
  using namespace detail;
  Json j;
  const AnchorPair& a = f.anchors();
  j["anchors"] = {{"v_hat_u", cvector_json(a.v_hat_u)}, {"v_hat_l", cvector_json(a.v_hat_l)}};
  j["mu"] = rvector_json(f.mu());
  if (const auto* m = std::get_if<ComplexLinearModel>(&f.model)) {
    j["kind"] = "complex";
    j["w"] = cvector_json(m->w);
    j["sens"] = cmatrix_json(m->sens);
  } else {
    const auto& z = std::get<ZipLinearModel>(f.model);
    j["kind"] = "zip";
    j["w"] = cvector_json(z.w);
    j["sens_lambda"] = cmatrix_json(z.sens_lambda);
  }
  j["provenance"] = {{"feeder_hash", f.provenance.feeder_hash},
                     {"seed", f.provenance.seed},
                     {"trainer", f.provenance.trainer}};
  j["fit_report"] = f.fit_report;
  return j;
}

/// Reads a model document. A zip model takes its load table from `feeder`,
/// whose hash must match the stored one.
inline ModelFile model_from_json(const Json& j, const Feeder& feeder) {
  using namespace detail;
  reject_unknown_keys(j, {"kind", "w", "sens", "sens_lambda", "anchors", "mu", "provenance", "fit_report"},
                      "model");
  ModelFile out;
  const Json& prov = require_key(j, "provenance", "model");
  out.provenance.feeder_hash = prov.value("feeder_hash", std::string());
  out.provenance.seed = prov.value("seed", std::uint64_t{0});
  out.provenance.trainer = prov.value("trainer", Json::object());
  out.fit_report = j.value("fit_report", Json::object());
  if (!out.provenance.feeder_hash.empty() && out.provenance.feeder_hash != feeder.content_hash)
    throw InvalidInput("model was trained on a different feeder (hash mismatch)");

  const Json& ja = require_key(j, "anchors", "model");
  AnchorPair anchors{parse_cvector(require_key(ja, "v_hat_u", "anchors"), "v_hat_u"),
                     parse_cvector(require_key(ja, "v_hat_l", "anchors"), "v_hat_l")};
  const RVector mu = parse_rvector(require_key(j, "mu", "model"), "mu");
  const CVector w = parse_cvector(require_key(j, "w", "model"), "w");
  const Index n = feeder.dim();
  require_size(w.size(), n, "model w");
  require_size(mu.size(), n, "model mu");
  require_size(anchors.size(), n, "model anchors");
  anchors.validate();

  const std::string kind = require_key(j, "kind", "model").get<std::string>();
  if (kind == "complex") {
    CMatrix sens = parse_cmatrix(require_key(j, "sens", "model"), "sens");
    if (sens.rows() != n || sens.cols() != n) throw DimensionMismatch("model sens must be n×n");
    out.model = ComplexLinearModel{w, std::move(sens), anchors, mu};
  } else if (kind == "zip") {
    CMatrix sens = parse_cmatrix(require_key(j, "sens_lambda", "model"), "sens_lambda");
    if (sens.rows() != n || sens.cols() != n) throw DimensionMismatch("model sens_lambda must be n×n");
    out.model = ZipLinearModel{w, std::move(sens), anchors, mu, feeder.loads};
  } else {
    throw InvalidInput("model kind must be 'complex' or 'zip'");
  }
  return out;
}

inline void save_model(const std::filesystem::path& path, const ModelFile& f) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << model_to_json(f).dump(1) << '\n';
}

inline ModelFile load_model(const std::filesystem::path& path, const Feeder& feeder) {
  try {
    return model_from_json(read_json_file(path), feeder);
  } catch (const Json::exception& e) {
    throw InvalidInput("model '" + path.string() + "': " + e.what());
  }
}

}  // namespace hybridpf
