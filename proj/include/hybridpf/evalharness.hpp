#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hybridpf/data.hpp"
#include "hybridpf/feeder.hpp"
#include "hybridpf/linear_model.hpp"
#include "hybridpf/model_io.hpp"
#include "hybridpf/sample_io.hpp"
#include "hybridpf/trainer.hpp"

namespace hybridpf {

struct Quantiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct ErrorReport {
  std::vector<long> sample_ids;
  RVector per_sample;      // Σ_m |ṽ_m − v_m| / Σ_m |v_m|
  RVector per_node_phase;  // mean over samples of |ṽ_m − v_m| / |v_m|
  double mean = 0.0;
  Quantiles quantiles;
};

/// Linear-interpolation quantiles (min, Q1, median, Q3, max).
inline Quantiles quantiles(RVector x) {
  if (x.size() == 0) throw InvalidInput("quantiles of an empty series");
  std::sort(x.data(), x.data() + x.size());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<Index>(std::floor(pos));
    const Index hi = std::min<Index>(lo + 1, x.size() - 1);
    return x(lo) + (pos - static_cast<double>(lo)) * (x(hi) - x(lo));
  };
  return {x(0), at(0.25), at(0.5), at(0.75), x(x.size() - 1)};
}

inline ErrorReport relative_errors(const std::vector<CVector>& predictions,
                                   const std::vector<CVector>& truths,
                                   std::vector<long> ids = {}) {
  if (predictions.size() != truths.size())
    throw DimensionMismatch("prediction and truth sample counts differ");
  if (truths.empty()) throw InvalidInput("no samples to evaluate");
  if (ids.empty())
    for (std::size_t k = 0; k < truths.size(); ++k) ids.push_back(static_cast<long>(k) + 1);
  require_size(static_cast<Index>(ids.size()), static_cast<Index>(truths.size()), "sample ids");
  const Index n = truths.front().size();
  ErrorReport r;
  r.sample_ids = std::move(ids);
  r.per_sample.resize(static_cast<Index>(truths.size()));
  r.per_node_phase = RVector::Zero(n);
  for (std::size_t k = 0; k < truths.size(); ++k) {
    require_size(truths[k].size(), n, "truth");
    require_size(predictions[k].size(), n, "prediction");
    const RVector diff = (predictions[k] - truths[k]).cwiseAbs();
    const RVector mag = truths[k].cwiseAbs();
    if (mag.sum() == 0.0) throw InvalidInput("truth sample has zero norm");
    r.per_sample(static_cast<Index>(k)) = diff.sum() / mag.sum();
    for (Index m = 0; m < n; ++m)
      if (mag(m) > 0.0) r.per_node_phase(m) += diff(m) / mag(m);
  }
  r.per_node_phase /= static_cast<double>(truths.size());
  r.mean = r.per_sample.mean();
  r.quantiles = quantiles(r.per_sample);
  return r;
}

/// (e_k − min)/(max − min).
inline RVector normalized_errors(const RVector& e) {
  if (e.size() < 2) throw InvalidInput("normalization needs at least 2 values");
  const double lo = e.minCoeff(), hi = e.maxCoeff();
  if (!(hi > lo)) throw InvalidInput("normalization of a constant series");
  return (e.array() - lo) / (hi - lo);
}

/// Either model form as read from a model file, ready to predict samples.
inline std::vector<CVector> predict_samples(const ModelFile& model, const SampleSet& samples) {
  std::vector<CVector> out;
  out.reserve(samples.size());
  for (const OperatingSample& s : samples) {
    if (const auto* z = std::get_if<ZipLinearModel>(&model.model)) {
      if (!s.lambda) throw InvalidInput("sample " + std::to_string(s.id) + " has no lambda for the ZIP model");
      out.push_back(predict_zip(*z, *s.lambda));
    } else {
      out.push_back(predict_voltages(std::get<ComplexLinearModel>(model.model), s.s_l));
    }
  }
  return out;
}

inline ErrorReport evaluate(const ModelFile& model, const SampleSet& samples) {
  std::vector<CVector> truths;
  std::vector<long> ids;
  for (const OperatingSample& s : samples) {
    truths.push_back(s.v_l);
    ids.push_back(s.id);
  }
  return relative_errors(predict_samples(model, samples), truths, std::move(ids));
}

/// Builds the model matching the feeder's loads (ZIP form unless every load is
/// constant power) from fitted μ.
inline ModelFile make_model(const Feeder& f, const AnchorPair& anchors, const RVector& mu) {
  ModelFile out;
  if (f.loads.is_constant_power()) out.model = build_trained_model(f.sys, f.w, anchors, mu);
  else out.model = build_zip_model(f.sys, f.w, anchors, mu, f.loads);
  out.provenance.feeder_hash = f.content_hash;
  return out;
}

inline FitResult fit_for_feeder(const Feeder& f, const SampleSet& train, const AnchorPair& anchors,
                                const TrainerOptions& opts) {
  return fit_mu(train, anchors, opts, f.loads.is_constant_power() ? nullptr : &f.loads);
}

inline ModelFile train_model(const Feeder& f, const SampleSet& train, const AnchorPair& anchors,
                             const TrainerOptions& opts, std::uint64_t seed = 0, double rho = 1.0) {
  const FitResult fit = fit_for_feeder(f, train, anchors, opts);
  ModelFile out = make_model(f, anchors, fit.mu);
  out.provenance.seed = seed;
  out.provenance.trainer = trainer_options_json(opts, rho);
  out.fit_report = fit_report_json(fit.report);
  return out;
}

/// Balanced 1∠(phase angle) at every non-slack node-phase.
inline CVector nominal_flat_voltage(const AdmittanceSystem& sys) {
  CVector v(sys.load_dim());
  for (Index m = 0; m < v.size(); ++m) v(m) = balanced_phasor(sys.load_index()[static_cast<std::size_t>(m)].phase);
  return v;
}

/// Single-guess baseline at the nominal flat voltage (μ ≡ 1).
inline ModelFile flat_model(const Feeder& f) {
  const CVector flat = nominal_flat_voltage(f.sys);
  return make_model(f, AnchorPair{flat, flat}, RVector::Ones(f.dim()));
}

struct HybridVsPure {
  long sample_id = 0;
  double hybrid_error = 0.0;  // ‖ṽ_h − v*‖∞
  double pure_error = 0.0;    // ‖ṽ_d − v*‖∞
  double ratio = 0.0;         // hybrid_error / pure_error
  double bound = std::numeric_limits<double>::quiet_NaN();  // |s/y| / |ṽ_d·v*| (single node-phase only)
};

/// Pure data-driven blend ṽ_d = μ·v̂_u + (1−μ)·v̂_l against the physics model
/// linearized at ṽ_d, per test sample.
inline std::vector<HybridVsPure> compare_hybrid_vs_pure(const AdmittanceSystem& sys, const CVector& w,
                                                        const AnchorPair& anchors, const RVector& mu,
                                                        const SampleSet& tests) {
  const CVector v_d = pure_dd_predict(mu, anchors);
  const ComplexLinearModel hybrid = build_flat_model(sys, w, v_d);
  std::vector<HybridVsPure> out;
  for (const OperatingSample& s : tests) {
    HybridVsPure row;
    row.sample_id = s.id;
    row.hybrid_error = (predict_voltages(hybrid, s.s_l) - s.v_l).cwiseAbs().maxCoeff();
    row.pure_error = (v_d - s.v_l).cwiseAbs().maxCoeff();
    row.ratio = row.hybrid_error / row.pure_error;
    if (sys.load_dim() == 1)
      row.bound = std::abs(s.s_l(0) / sys.yll()(0, 0)) / std::abs(v_d(0) * s.v_l(0));
    out.push_back(row);
  }
  return out;
}

inline void write_error_table(const std::filesystem::path& path, const ErrorReport& r) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << "sample_id,rel_err\n";
  for (std::size_t k = 0; k < r.sample_ids.size(); ++k)
    out << r.sample_ids[k] << ',' << format_real(r.per_sample(static_cast<Index>(k))) << '\n';
}

inline void write_stat_table(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, double>>& stats) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << "stat,value\n";
  for (const auto& [name, value] : stats) out << name << ',' << format_real(value) << '\n';
}

inline std::vector<std::pair<std::string, double>> report_stats(const ErrorReport& r) {
  return {{"mean", r.mean},
          {"min", r.quantiles.min},
          {"q1", r.quantiles.q1},
          {"median", r.quantiles.median},
          {"q3", r.quantiles.q3},
          {"max", r.quantiles.max},
          {"samples", static_cast<double>(r.per_sample.size())}};
}

/// Experiment configuration document:
///   name, feeder (path, relative to the config file), seed, test_count,
///   train_counts [..], scale_range [lo, hi], anchors {u_light, u_heavy},
///   trainer {penalty | penalties [..], delta ("auto" | number), rho},
///   bad_data {count, mode | modes [..]} (optional)
struct ExperimentConfig {
  std::string name;
  std::filesystem::path feeder;
  std::uint64_t seed = 1;
  long test_count = 900;
  std::vector<long> train_counts{100};
  ScaleRange scale{0.5, 1.5};
  double u_light = 0.1;
  double u_heavy = 1.5;
  std::vector<Penalty> penalties{Penalty::squared};
  std::optional<double> delta;
  double rho = 1.0;
  long bad_count = 0;
  std::vector<BadDataMode> bad_modes;
};

inline ExperimentConfig parse_experiment(const Json& j, const std::filesystem::path& base_dir) {
  using namespace detail;
  reject_unknown_keys(j, {"name", "feeder", "seed", "test_count", "train_counts", "scale_range",
                          "anchors", "trainer", "bad_data"},
                      "experiment");
  ExperimentConfig c;
  c.name = require_key(j, "name", "experiment").get<std::string>();
  c.feeder = base_dir / require_key(j, "feeder", "experiment").get<std::string>();
  c.seed = j.value("seed", c.seed);
  c.test_count = j.value("test_count", c.test_count);
  if (j.contains("train_counts")) c.train_counts = j.at("train_counts").get<std::vector<long>>();
  if (j.contains("scale_range")) {
    const auto r = parse_reals(j.at("scale_range"), "scale_range");
    if (r.size() != 2) throw InvalidInput("scale_range must be [lo, hi]");
    c.scale = {r[0], r[1]};
  }
  if (j.contains("anchors")) {
    const Json& a = j.at("anchors");
    reject_unknown_keys(a, {"u_light", "u_heavy"}, "anchors");
    c.u_light = a.value("u_light", c.u_light);
    c.u_heavy = a.value("u_heavy", c.u_heavy);
  }
  if (j.contains("trainer")) {
    const Json& t = j.at("trainer");
    reject_unknown_keys(t, {"penalty", "penalties", "delta", "rho"}, "trainer");
    if (t.contains("penalty")) c.penalties = {parse_penalty(t.at("penalty").get<std::string>())};
    if (t.contains("penalties")) {
      c.penalties.clear();
      for (const Json& p : t.at("penalties")) c.penalties.push_back(parse_penalty(p.get<std::string>()));
    }
    if (t.contains("delta") && !(t.at("delta").is_string() && t.at("delta") == "auto"))
      c.delta = t.at("delta").get<double>();
    c.rho = t.value("rho", c.rho);
  }
  if (j.contains("bad_data")) {
    const Json& b = j.at("bad_data");
    reject_unknown_keys(b, {"count", "mode", "modes"}, "bad_data");
    c.bad_count = require_key(b, "count", "bad_data").get<long>();
    if (b.contains("mode")) c.bad_modes = {parse_bad_data_mode(b.at("mode").get<std::string>())};
    if (b.contains("modes"))
      for (const Json& m : b.at("modes")) c.bad_modes.push_back(parse_bad_data_mode(m.get<std::string>()));
    if (c.bad_count > 0 && c.bad_modes.empty()) throw InvalidInput("bad_data needs a mode");
  }
  if (c.train_counts.empty() || c.penalties.empty())
    throw InvalidInput("experiment needs at least one train count and one penalty");
  return c;
}

/// Generate → anchors → train → evaluate, one report pair per
/// (train count, penalty), plus a summary table. Returns the written paths.
inline std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c,
                                                         const std::filesystem::path& out_dir) {
  const Feeder f = load_feeder(c.feeder);
  std::filesystem::create_directories(out_dir);
  const AnchorPair anchors = pick_anchor_states(f, c.u_light, c.u_heavy);
  const long max_train = *std::max_element(c.train_counts.begin(), c.train_counts.end());

  SampleOptions train_opts;
  train_opts.seed = c.seed;
  SampleSet pool = generate_samples(f, max_train, c.scale, train_opts);
  SampleOptions test_opts;
  test_opts.seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  test_opts.first_id = max_train + 1;
  const SampleSet tests = generate_samples(f, c.test_count, c.scale, test_opts);
  const ErrorReport flat = evaluate(flat_model(f), tests);

  std::vector<std::filesystem::path> written;
  std::vector<std::pair<std::string, double>> summary;
  for (long count : c.train_counts) {
    SampleSet train(pool.begin(), pool.begin() + count);
    for (std::size_t b = 0; b < c.bad_modes.size(); ++b) {
      const long share = c.bad_count / static_cast<long>(c.bad_modes.size()) +
                         (static_cast<long>(b) < c.bad_count % static_cast<long>(c.bad_modes.size()) ? 1 : 0);
      train = inject_bad_data(std::move(train), share, c.bad_modes[b], c.seed + 17 * (b + 1));
    }
    if (c.rho < 1.0) train = forgetting_weights(std::move(train), c.rho);
    for (Penalty p : c.penalties) {
      TrainerOptions opts;
      opts.penalty = p;
      opts.delta = c.delta;
      const ModelFile model = train_model(f, train, anchors, opts, c.seed, c.rho);
      const ErrorReport rep = evaluate(model, tests);
      const std::string tag = c.name + "_n" + std::to_string(count) + "_" + penalty_name(p);
      const auto errors = out_dir / (tag + "_errors.csv");
      const auto stats = out_dir / (tag + "_stats.csv");
      write_error_table(errors, rep);
      auto st = report_stats(rep);
      st.emplace_back("flat_mean", flat.mean);
      st.emplace_back("train_count", static_cast<double>(count));
      st.emplace_back("corrupted", static_cast<double>(std::count_if(
                                       train.begin(), train.end(), [](const auto& s) { return s.corrupted; })));
      write_stat_table(stats, st);
      written.push_back(errors);
      written.push_back(stats);
      summary.emplace_back(tag + "_mean", rep.mean);
    }
  }
  summary.emplace_back(c.name + "_flat_mean", flat.mean);
  const auto summary_path = out_dir / (c.name + "_summary.csv");
  write_stat_table(summary_path, summary);
  written.push_back(summary_path);
  return written;
}

inline std::vector<std::filesystem::path> run_experiment(const std::filesystem::path& config,
                                                         const std::filesystem::path& out_dir) {
  return run_experiment(parse_experiment(read_json_file(config), config.parent_path()), out_dir);
}

}  // namespace hybridpf
