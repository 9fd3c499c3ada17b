#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hybridpf/hybridpf.hpp"

namespace fs = std::filesystem;
namespace hp = hybridpf;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2 };

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << hp::Json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

/// Writes to `path` or to stdout when empty.
class Output {
public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw hp::InvalidInput("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw CLI::RequiredError(flag);
  if (!fs::is_regular_file(path)) throw hp::InvalidInput(std::string(flag) + ": no such file '" + path + "'");
}

hp::SolveOptions solver_options(double tol, int max_iter) {
  hp::SolveOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.validate();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blended physics/data linear power-flow toolkit"};
  app.require_subcommand(1);

  std::string feeder, samples, model, limits, out, config;
  std::uint64_t seed = 1;
  long count = 100;
  double scale_min = 0.5, scale_max = 1.5;
  std::string penalty = "squared", delta = "auto";
  double rho = 1.0, tol = 1e-10, lambda = 1.0;
  double u_light = 0.1, u_heavy = 1.5;
  int max_iter = 200;
  bool fme = false, tangent = false;

  auto* solve = app.add_subcommand("solve-pf", "Solve the nonlinear power flow at a uniform load scale");
  solve->add_option("--feeder", feeder, "Feeder file")->required();
  solve->add_option("--lambda", lambda, "Uniform load scale")->capture_default_str();
  solve->add_option("--tol", tol, "Fixed-point tolerance")->capture_default_str();
  solve->add_option("--max-iter", max_iter, "Maximum sweeps")->capture_default_str();
  solve->add_option("--out", out, "Voltage table (default stdout)");

  auto* gen = app.add_subcommand("gen-data", "Generate historical operating samples");
  gen->add_option("--feeder", feeder, "Feeder file")->required();
  gen->add_option("--count", count, "Number of samples")->capture_default_str();
  gen->add_option("--scale-min", scale_min, "Lowest load scale")->capture_default_str();
  gen->add_option("--scale-max", scale_max, "Highest load scale")->capture_default_str();
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen->add_option("--rho", rho, "Forgetting factor for the stored weights")->capture_default_str();
  gen->add_option("--tol", tol, "Fixed-point tolerance")->capture_default_str();
  gen->add_option("--max-iter", max_iter, "Maximum sweeps")->capture_default_str();
  gen->add_option("--out", out, "Sample file")->required();

  auto* train = app.add_subcommand("train", "Fit the blend coefficients and write a model");
  train->add_option("--feeder", feeder, "Feeder file")->required();
  train->add_option("--samples", samples, "Training samples")->required();
  train->add_option("--penalty", penalty, "squared or huber")
      ->check(CLI::IsMember({"squared", "huber"}))
      ->capture_default_str();
  train->add_option("--delta", delta, "Huber threshold or 'auto'")->capture_default_str();
  train->add_option("--rho", rho, "Forgetting factor (1 keeps stored weights)")->capture_default_str();
  train->add_option("--u-light", u_light, "Light anchor load scale")->capture_default_str();
  train->add_option("--u-heavy", u_heavy, "Heavy anchor load scale")->capture_default_str();
  train->add_option("--seed", seed, "Seed recorded in the model provenance")->capture_default_str();
  train->add_option("--out", out, "Model file")->required();

  auto* eval = app.add_subcommand("eval", "Relative voltage errors of a model on samples");
  eval->add_option("--feeder", feeder, "Feeder file")->required();
  eval->add_option("--model", model, "Model file")->required();
  eval->add_option("--samples", samples, "Test samples")->required();
  eval->add_option("--out", out, "Per-sample error table (sample_id,rel_err)");

  auto* range = app.add_subcommand("range", "Reactive power support range at the PCC");
  range->add_option("--feeder", feeder, "Feeder file")->required();
  range->add_option("--model", model, "Model file")->required();
  range->add_option("--limits", limits, "Limits file")->required();
  range->add_flag("--fme", fme, "Cross-check the interval by Fourier-Motzkin elimination");
  range->add_flag("--tangent", tangent, "Tangent linearization of the quadratic limits");
  range->add_option("--out", out, "Certificate table");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment configuration");
  experiment->add_option("--config", config, "Experiment file")->required();
  experiment->add_option("--out", out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (solve->parsed()) {
      require_file(feeder, "--feeder");
      const hp::Feeder f = hp::load_feeder(feeder);
      const hp::PfSolution sol = hp::solve_zip_fixed_point(
          f.sys, f.v0, f.w, f.loads, hp::RVector::Constant(f.dim(), lambda), solver_options(tol, max_iter));
      Output o(out);
      o.stream() << "node,phase,v_re,v_im,v_mag\n";
      for (hp::Index m = 0; m < f.dim(); ++m) {
        const auto np = f.sys.load_index()[static_cast<std::size_t>(m)];
        o.stream() << f.sys.node_ids()[static_cast<std::size_t>(np.node)] << ',' << hp::phase_letter(np.phase)
                   << ',' << hp::format_real(sol.v_l(m).real()) << ',' << hp::format_real(sol.v_l(m).imag())
                   << ',' << hp::format_real(std::abs(sol.v_l(m))) << '\n';
      }
      std::cerr << hp::Json{{"iterations", sol.iterations}, {"residual", sol.residual}}.dump() << '\n';
    } else if (gen->parsed()) {
      require_file(feeder, "--feeder");
      const hp::Feeder f = hp::load_feeder(feeder);
      hp::SampleOptions opts;
      opts.seed = seed;
      opts.solver = solver_options(tol, max_iter);
      hp::SampleSet set = hp::generate_samples(f, count, {scale_min, scale_max}, opts);
      if (rho != 1.0) set = hp::forgetting_weights(std::move(set), rho);
      hp::save_samples(out, f.sys, set);
    } else if (train->parsed()) {
      require_file(feeder, "--feeder");
      require_file(samples, "--samples");
      const hp::Feeder f = hp::load_feeder(feeder);
      hp::SampleSet set = hp::load_samples(samples, f.sys);
      if (rho != 1.0) set = hp::forgetting_weights(std::move(set), rho);
      hp::TrainerOptions opts;
      opts.penalty = hp::parse_penalty(penalty);
      if (delta != "auto") {
        try {
          opts.delta = std::stod(delta);
        } catch (const std::exception&) {
          throw hp::InvalidInput("--delta must be a number or 'auto'");
        }
      }
      const hp::AnchorPair anchors = hp::pick_anchor_states(f, u_light, u_heavy);
      const hp::ModelFile m = hp::train_model(f, set, anchors, opts, seed, rho);
      hp::save_model(out, m);
      std::cout << m.fit_report.dump(1) << '\n';
    } else if (eval->parsed()) {
      require_file(feeder, "--feeder");
      require_file(model, "--model");
      require_file(samples, "--samples");
      const hp::Feeder f = hp::load_feeder(feeder);
      const hp::ModelFile m = hp::load_model(model, f);
      const hp::ErrorReport rep = hp::evaluate(m, hp::load_samples(samples, f.sys));
      if (!out.empty()) hp::write_error_table(out, rep);
      std::cout << "stat,value\n";
      for (const auto& [name, value] : hp::report_stats(rep)) std::cout << name << ',' << hp::format_real(value) << '\n';
    } else if (range->parsed()) {
      require_file(feeder, "--feeder");
      require_file(model, "--model");
      require_file(limits, "--limits");
      const hp::Feeder f = hp::load_feeder(feeder);
      const hp::ModelFile m = hp::load_model(model, f);
      if (m.is_zip()) throw hp::InvalidInput("range evaluation needs a constant-power model");
      const hp::OperationalLimits lim = hp::load_limits(limits, f);
      hp::ConstraintOptions co;
      if (tangent) co.voltage = hp::VoltageLinearization::tangent;
      const hp::Polyhedron poly =
          hp::build_constraints(f, std::get<hp::ComplexLinearModel>(m.model), lim, co);
      const hp::RangeResult r = hp::project_interval_lp(poly);
      if (r.status == hp::RangeStatus::infeasible)
        return fail(kNumerical, "infeasible", "the linearized operating region is empty");
      std::cout << "q_lo,q_hi\n" << hp::format_real(r.q_lo) << ',' << hp::format_real(r.q_hi) << '\n';
      if (r.status == hp::RangeStatus::unbounded) std::cerr << hp::Json{{"warning", "unbounded"}}.dump() << '\n';
      if (fme) {
        const hp::RangeResult x = hp::project_interval_fme(poly);
        std::cout << "fme_q_lo,fme_q_hi\n" << hp::format_real(x.q_lo) << ',' << hp::format_real(x.q_hi) << '\n';
      }
      if (!out.empty()) {
        Output o(out);
        o.stream() << "node,v_re_lo,v_im_lo,v_re_hi,v_im_hi\n";
        for (const auto& [id, cols] : poly.var_index) {
          o.stream() << id << ',' << hp::format_real(r.x_lo(cols.first)) << ','
                     << hp::format_real(r.x_lo(cols.second)) << ',' << hp::format_real(r.x_hi(cols.first))
                     << ',' << hp::format_real(r.x_hi(cols.second)) << '\n';
        }
      }
    } else if (experiment->parsed()) {
      require_file(config, "--config");
      for (const fs::path& p : hp::run_experiment(fs::path(config), fs::path(out))) std::cout << p.string() << '\n';
    }
  } catch (const CLI::Error& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const hp::InvalidInput& e) {
    return fail(kUsage, "invalid_input", e.what());
  } catch (const hp::NonConvergence& e) {
    return fail(kNumerical, "non_convergence", e.what());
  } catch (const hp::Error& e) {
    return fail(kNumerical, "numerical", e.what());
  }
  return kOk;
}
