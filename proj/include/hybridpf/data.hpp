#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hybridpf/anchors.hpp"
#include "hybridpf/feeder.hpp"
#include "hybridpf/oracle.hpp"

namespace hybridpf {

struct OperatingSample {
  long id = 0;
  long timestamp = 0;
  CVector v_l;
  CVector s_l;
  std::optional<RVector> lambda;
  double weight = 1.0;
  bool corrupted = false;
};

using SampleSet = std::vector<OperatingSample>;

struct ScaleRange {
  double lo = 0.5;
  double hi = 1.5;
};

/// Extra knobs for generate_samples. `ramp_to` != `ramp_from` multiplies the
/// draws of sample k by a factor moving linearly from ramp_from (first sample)
/// to ramp_to (last sample), which models slow load drift.
struct SampleOptions {
  std::uint64_t seed = 1;
  double ramp_from = 1.0;
  double ramp_to = 1.0;
  long first_id = 1;
  SolveOptions solver{};
};

namespace detail {

/// Independent stream per (seed, index), so results do not depend on the
/// thread schedule.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % n;
}

}  // namespace detail

inline OperatingSample solve_sample(const Feeder& f, const RVector& lambda,
                                    const SolveOptions& opts = {}) {
  const PfSolution sol = solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, lambda, opts);
  OperatingSample s;
  s.v_l = sol.v_l;
  s.s_l = f.loads.is_constant_power() ? f.loads.nominal_injections(lambda)
                                      : f.loads.injections(lambda, sol.v_l);
  s.lambda = lambda;
  return s;
}

inline SampleSet generate_samples(const Feeder& f, long count, ScaleRange range,
                                  const SampleOptions& opts) {
  if (count < 1) throw InvalidInput("sample count must be at least 1");
  if (!(range.lo > 0.0) || !(range.hi >= range.lo))
    throw InvalidInput("scale range must satisfy 0 < lo <= hi");
  const Index n = f.dim();
  SampleSet out(static_cast<std::size_t>(count));
  long failed = -1;
  std::string failure;

#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < count; ++k) {
    auto rng = detail::stream(opts.seed, static_cast<std::uint64_t>(k));
    const double ramp =
        count == 1 ? opts.ramp_from
                   : opts.ramp_from + (opts.ramp_to - opts.ramp_from) * static_cast<double>(k) /
                                          static_cast<double>(count - 1);
    RVector lambda(n);
    for (Index m = 0; m < n; ++m) lambda(m) = ramp * detail::uniform(rng, range.lo, range.hi);
    try {
      OperatingSample s = solve_sample(f, lambda, opts.solver);
      s.id = opts.first_id + k;
      s.timestamp = opts.first_id + k;
      out[static_cast<std::size_t>(k)] = std::move(s);
    } catch (const NonConvergence& e) {
#pragma omp critical(hybridpf_sample_failure)
      if (failed < 0 || k < failed) {
        failed = k;
        failure = e.what();
      }
    }
  }
  if (failed >= 0)
    throw NonConvergence("sample " + std::to_string(opts.first_id + failed) + ": " + failure,
                         opts.first_id + failed);
  return out;
}

inline SampleSet generate_samples(const Feeder& f, long count, ScaleRange range,
                                  std::uint64_t seed) {
  SampleOptions opts;
  opts.seed = seed;
  return generate_samples(f, count, range, opts);
}

/// Anchors from re-solving with every load scaled by u_light and u_heavy.
inline AnchorPair pick_anchor_states(const Feeder& f, double u_light = 0.1,
                                     double u_heavy = 1.5, const SolveOptions& opts = {}) {
  const Index n = f.dim();
  AnchorPair a;
  a.v_hat_u = solve_sample(f, RVector::Constant(n, u_light), opts).v_l;
  try {
    a.v_hat_l = solve_sample(f, RVector::Constant(n, u_heavy), opts).v_l;
  } catch (const NonConvergence& e) {
    throw NonConvergence(std::string("heavy anchor did not solve, reduce u_heavy: ") + e.what());
  }
  if (!a.identifiable())
    throw UnidentifiableAnchors("light and heavy anchor states coincide (no load on the feeder?)");
  return a;
}

enum class BadDataMode { near_zero, over_three, over_1p5, under_0p5 };

inline ScaleRange bad_data_range(BadDataMode mode) {
  switch (mode) {
    case BadDataMode::near_zero: return {1e-3, 1e-2};
    case BadDataMode::over_three: return {3.0, 3.5};
    case BadDataMode::over_1p5: return {1.5, 1.8};
    case BadDataMode::under_0p5: return {0.2, 0.5};
  }
  throw InvalidInput("unknown bad-data mode");
}

inline BadDataMode parse_bad_data_mode(const std::string& s) {
  if (s == "near_zero") return BadDataMode::near_zero;
  if (s == "over_three") return BadDataMode::over_three;
  if (s == "over_1p5") return BadDataMode::over_1p5;
  if (s == "under_0p5") return BadDataMode::under_0p5;
  throw InvalidInput("unknown bad-data mode '" + s + "'");
}

/// Replaces every voltage magnitude of `count` randomly chosen clean samples
/// with draws from the mode's range, keeping angles. Injections are untouched.
inline SampleSet inject_bad_data(SampleSet samples, long count, BadDataMode mode,
                                 std::uint64_t seed) {
  std::vector<std::size_t> clean;
  for (std::size_t k = 0; k < samples.size(); ++k)
    if (!samples[k].corrupted) clean.push_back(k);
  if (count < 0 || static_cast<std::size_t>(count) > clean.size())
    throw InvalidInput("cannot corrupt " + std::to_string(count) + " of " +
                       std::to_string(clean.size()) + " clean samples");
  const ScaleRange r = bad_data_range(mode);
  auto rng = detail::stream(seed, 0x6261640aULL);
  for (long j = 0; j < count; ++j) {
    // partial Fisher-Yates over the clean indices
    const auto pick = static_cast<std::size_t>(j) +
                      detail::uniform_index(rng, clean.size() - static_cast<std::size_t>(j));
    std::swap(clean[static_cast<std::size_t>(j)], clean[pick]);
    OperatingSample& s = samples[clean[static_cast<std::size_t>(j)]];
    for (Index m = 0; m < s.v_l.size(); ++m)
      s.v_l(m) = std::polar(detail::uniform(rng, r.lo, r.hi), std::arg(s.v_l(m)));
    s.corrupted = true;
  }
  return samples;
}

/// weight_k = rho^(t_max − t_k).
inline SampleSet forgetting_weights(SampleSet samples, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in (0, 1]");
  if (samples.empty()) return samples;
  long t_max = samples.front().timestamp;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (samples[k].timestamp < samples[k - 1].timestamp)
      throw InvalidInput("sample timestamps must be non-decreasing");
    t_max = std::max(t_max, samples[k].timestamp);
  }
  for (OperatingSample& s : samples)
    s.weight = std::pow(rho, static_cast<double>(t_max - s.timestamp));
  return samples;
}

}  // namespace hybridpf
