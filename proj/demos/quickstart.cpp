// Solve a feeder, train a blended linear model on synthetic data and compare
// it with the single-guess baseline on held-out operating points.
#include <cstdio>
#include <filesystem>

#include "hybridpf/hybridpf.hpp"

namespace hp = hybridpf;

int main(int argc, char** argv) {
  const std::filesystem::path feeder_path =
      argc > 1 ? argv[1] : std::filesystem::path(HYBRIDPF_DATA_DIR) / "feeders" / "feeder22.json";
  const hp::Feeder f = hp::load_feeder(feeder_path);
  std::printf("feeder %s: %ld non-slack node-phases\n", feeder_path.filename().c_str(),
              static_cast<long>(f.dim()));

  const hp::PfSolution nominal =
      hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, hp::RVector::Ones(f.dim()));
  std::printf("nominal load: min |v| = %.4f p.u. after %d sweeps\n",
              nominal.v_l.cwiseAbs().minCoeff(), nominal.iterations);

  const hp::AnchorPair anchors = hp::pick_anchor_states(f);
  const hp::SampleSet train = hp::generate_samples(f, 100, {0.5, 1.5}, 1);
  hp::SampleOptions test_opts;
  test_opts.seed = 2;
  test_opts.first_id = 101;
  const hp::SampleSet test = hp::generate_samples(f, 300, {0.5, 1.5}, test_opts);

  const hp::ModelFile trained = hp::train_model(f, train, anchors, {});
  const hp::ErrorReport ours = hp::evaluate(trained, test);
  const hp::ErrorReport flat = hp::evaluate(hp::flat_model(f), test);
  std::printf("mean relative error: trained %.3e, flat %.3e\n", ours.mean, flat.mean);
  std::printf("mu range: [%.3f, %.3f]\n", trained.mu().minCoeff(), trained.mu().maxCoeff());
  return 0;
}
