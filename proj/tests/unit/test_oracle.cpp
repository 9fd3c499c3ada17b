#include <gtest/gtest.h>

#include "../oracles/two_bus.hpp"
#include "common.hpp"

using namespace testing_support;
using hp::Complex;

namespace {

/// Independent mismatch: builds the full Y and evaluates s − v ⊙ conj(Y v) on
/// the non-slack rows.
double full_mismatch(const hp::Feeder& f, const hp::CVector& v, const hp::CVector& s) {
  const hp::Index ns = f.sys.slack_dim(), n = f.sys.load_dim();
  hp::CMatrix y(ns + n, ns + n);
  y << f.sys.y00(), f.sys.y0l(), f.sys.yl0(), f.sys.yll();
  hp::CVector all(ns + n);
  all << f.v0, v;
  const hp::CVector i = (y * all).tail(n);
  return (s - v.cwiseProduct(i.conjugate())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Oracle, ZeroInjectionReturnsW) {
  const hp::Feeder f = feeder("ieee13_zip");
  const auto sol = hp::solve_fixed_point(f.sys, f.v0, f.w, hp::CVector::Zero(f.dim()));
  EXPECT_EQ(sol.iterations, 1);
  EXPECT_EQ((sol.v_l - f.w).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Oracle, TwoBusMatchesClosedForm) {
  const Complex y{5.0, -15.0};
  for (Complex s : {Complex(-0.8, -0.3), Complex(-1.5, -0.2), Complex(0.6, 0.1), Complex(-2.0, 0.5)}) {
    const hp::Feeder f = two_bus(y, s);
    const auto sol = hp::solve_fixed_point(f.sys, f.v0, f.w, f.loads.s_nom);
    const auto ref = oracle::two_bus_voltage(y, s);
    ASSERT_TRUE(ref.has_value());
    EXPECT_LT(std::abs(sol.v_l(0) - *ref), 1e-10) << s;
    EXPECT_LE(sol.residual, 1e-8);
  }
}

TEST(Oracle, BeyondNosePointFails) {
  const Complex y{5.0, -15.0}, dir{-0.8, -0.3};
  const double nose = oracle::two_bus_nose_scale(y, dir);
  EXPECT_TRUE(oracle::two_bus_voltage(y, 0.99 * nose * dir).has_value());
  EXPECT_FALSE(oracle::two_bus_voltage(y, 1.05 * nose * dir).has_value());
  const hp::Feeder f = two_bus(y, 1.05 * nose * dir);
  EXPECT_THROW(hp::solve_fixed_point(f.sys, f.v0, f.w, f.loads.s_nom), hp::NonConvergence);
}

TEST(Oracle, ConstantPowerZipIsBitIdentical) {
  const hp::Feeder f = feeder("feeder22");
  const hp::RVector lambda = hp::RVector::LinSpaced(f.dim(), 0.6, 1.4);
  const auto a = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, lambda);
  hp::CVector s(f.dim());
  for (hp::Index m = 0; m < f.dim(); ++m) s(m) = lambda(m) * f.loads.s_nom(m);
  const auto b = hp::solve_fixed_point(f.sys, f.v0, f.w, s);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.residual, b.residual);
  for (hp::Index m = 0; m < f.dim(); ++m) EXPECT_EQ(a.v_l(m), b.v_l(m));
}

TEST(Oracle, ConstantImpedanceIsALinearSolve) {
  hp::Feeder f = feeder("chain3");
  f.loads.a.setOnes();
  f.loads.c.setZero();
  const auto sol = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, hp::RVector::Ones(f.dim()));
  // s = s_nom |v|² / v_nom² is a shunt admittance −conj(s_nom)/v_nom² at the node
  hp::CMatrix y = f.sys.yll();
  for (hp::Index m = 0; m < f.dim(); ++m)
    y(m, m) -= std::conj(f.loads.s_nom(m)) / (f.loads.v_nom_mag(m) * f.loads.v_nom_mag(m));
  const hp::CVector v = y.fullPivLu().solve(hp::CVector(-f.sys.yl0() * f.v0));
  EXPECT_LT((sol.v_l - v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Oracle, ZeroLambdaReturnsW) {
  const hp::Feeder f = feeder("ieee13_zip");
  const auto sol = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, hp::RVector::Zero(f.dim()));
  EXPECT_LT((sol.v_l - f.w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Oracle, AllFeedersPassIndependentMismatch) {
  for (const char* name : {"two_bus", "chain3", "feeder22", "ieee13_zip", "bus5"}) {
    const hp::Feeder f = feeder(name);
    for (double scale : {0.1, 1.0, 1.5}) {
      const hp::RVector lambda = hp::RVector::Constant(f.dim(), scale);
      const auto sol = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, lambda);
      EXPECT_LE(full_mismatch(f, sol.v_l, f.loads.injections(lambda, sol.v_l)), 1e-8) << name << " " << scale;
    }
  }
}

TEST(Oracle, HeavierLoadsLowerVoltagesOnRadialFeeders) {
  for (const char* name : {"chain3", "feeder22", "ieee13_zip"}) {
    const hp::Feeder f = feeder(name);
    hp::RVector prev;
    for (double scale : {0.5, 1.0, 1.5}) {
      const auto sol = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, hp::RVector::Constant(f.dim(), scale));
      const hp::RVector mag = sol.v_l.cwiseAbs();
      if (prev.size()) {
        for (hp::Index m = 0; m < f.dim(); ++m) EXPECT_LE(mag(m), prev(m) + 1e-12) << name << " " << m;
      }
      prev = mag;
    }
  }
}

TEST(Oracle, Deterministic) {
  const hp::Feeder f = feeder("ieee13_zip");
  const hp::RVector lambda = hp::RVector::Constant(f.dim(), 1.2);
  const auto a = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, lambda);
  const auto b = hp::solve_zip_fixed_point(f.sys, f.v0, f.w, f.loads, lambda);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE((a.v_l.array() == b.v_l.array()).all());
}

TEST(Oracle, RejectsBadOptions) {
  const hp::Feeder f = feeder("two_bus");
  hp::SolveOptions o;
  o.tol = 0.0;
  EXPECT_THROW(hp::solve_fixed_point(f.sys, f.v0, f.w, f.loads.s_nom, o), hp::InvalidInput);
  o = {};
  o.max_iter = 1;
  EXPECT_THROW(hp::solve_fixed_point(f.sys, f.v0, f.w, f.loads.s_nom, o), hp::NonConvergence);
  EXPECT_THROW(hp::solve_fixed_point(f.sys, f.v0, f.w, hp::CVector::Zero(3)), hp::DimensionMismatch);
}
