#include <gtest/gtest.h>

#include <random>

#include "../oracles/dense_assembly.hpp"
#include "common.hpp"

using namespace testing_support;
using hp::Complex;

TEST(Network, TwoBusBlocks) {
  const Complex y{5.0, -15.0};
  const hp::Feeder f = two_bus(y, {-0.8, -0.3});
  ASSERT_EQ(f.sys.load_dim(), 1);
  EXPECT_EQ(f.sys.yll()(0, 0), y);
  EXPECT_EQ(f.sys.yl0()(0, 0), -y);
  EXPECT_NEAR(std::abs(f.w(0) - 1.0), 0.0, 1e-15);
}

TEST(Network, ThreeNodeChain) {
  const hp::Feeder f = feeder("chain3");
  const Complex y12 = 1.0 / Complex(0.01, 0.03), y23 = 1.0 / Complex(0.015, 0.025);
  ASSERT_EQ(f.sys.load_dim(), 2);
  EXPECT_LT(std::abs(f.sys.yll()(0, 0) - (y12 + y23)), 1e-12);
  EXPECT_LT(std::abs(f.sys.yll()(0, 1) + y23), 1e-12);
  EXPECT_LT(std::abs(f.sys.yll()(1, 0) + y23), 1e-12);
  EXPECT_LT(std::abs(f.sys.yll()(1, 1) - y23), 1e-12);
  EXPECT_LT(std::abs(f.sys.yl0()(0, 0) + y12), 1e-12);
  EXPECT_EQ(f.sys.yl0()(1, 0), Complex{});
}

namespace {

hp::CMatrix random_block(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  hp::CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = {u(rng), u(rng)};
  m += hp::CMatrix::Identity(n, n) * Complex(4.0, -8.0);  // keep it well conditioned
  return m;
}

}  // namespace

TEST(Network, MissingPhaseMatchesDenseAssembly) {
  // 0(abc, slack) -abc- 1(abc) -ab- 2(ab) -b- 3(b), with shunts on the first line
  std::mt19937_64 rng(7);
  const hp::CMatrix y01 = random_block(rng, 3), y12 = random_block(rng, 2), y23 = random_block(rng, 1);
  const hp::CMatrix sh = hp::CMatrix::Identity(3, 3) * Complex(0.0, 0.02);
  auto b01 = branch("0", "1", y01);
  b01.y_shunt_from = sh;
  b01.y_shunt_to = sh;
  const std::vector<hp::NodeSpec> nodes{node("0", "abc", hp::NodeKind::slack), node("1", "abc"), node("2", "ab"),
                                        node("3", "b")};
  const std::vector<hp::BranchSpec> branches{b01, branch("1", "2", y12), branch("2", "3", y23)};
  const hp::AdmittanceSystem sys = hp::assemble_admittance(nodes, branches);

  const oracle::Reduced ref = oracle::dense_admittance(
      {{"abc", true}, {"abc", false}, {"ab", false}, {"b", false}},
      {{0, 1, "abc", y01, sh, sh}, {1, 2, "ab", y12, {}, {}}, {2, 3, "b", y23, {}, {}}});
  ASSERT_EQ(sys.slack_dim(), ref.slack_dim);
  ASSERT_EQ(sys.load_dim(), 6);
  EXPECT_EQ(sys.node_phases()[2].count(), 2);
  const hp::Index s = sys.slack_dim(), n = sys.load_dim();
  EXPECT_LT((sys.y00() - ref.full.topLeftCorner(s, s)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sys.y0l() - ref.full.topRightCorner(s, n)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sys.yl0() - ref.full.bottomLeftCorner(n, s)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sys.yll() - ref.full.bottomRightCorner(n, n)).cwiseAbs().maxCoeff(), 1e-14);

  // i = Y v over present phases against the dense reference
  hp::CVector v = hp::CVector::Random(s + n);
  hp::CMatrix full(s + n, s + n);
  full << sys.y00(), sys.y0l(), sys.yl0(), sys.yll();
  EXPECT_LT((full * v - ref.full * v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, KclAgainstBranchSums) {
  const hp::Feeder f = feeder("ieee13_zip");
  const hp::AdmittanceSystem& sys = f.sys;
  hp::CVector v = hp::CVector::Random(sys.slack_dim() + sys.load_dim());
  hp::CMatrix full(v.size(), v.size());
  full << sys.y00(), sys.y0l(), sys.yl0(), sys.yll();
  const hp::CVector i = full * v;

  // position of (node, phase) in the stacked vector
  auto pos = [&](hp::Index node, hp::Phase p) -> hp::Index {
    if (node == sys.slack_node()) return *sys.slack_position(node, p);
    return sys.slack_dim() + *sys.load_position(node, p);
  };
  hp::CVector sums = hp::CVector::Zero(v.size());
  for (const hp::BranchSpec& b : f.branches) {
    const hp::Index from = *sys.node_index(b.from), to = *sys.node_index(b.to);
    const auto phases = sys.node_phases()[static_cast<std::size_t>(from)]
                            .intersect(sys.node_phases()[static_cast<std::size_t>(to)])
                            .phases();
    for (std::size_t p = 0; p < phases.size(); ++p) {
      for (std::size_t q = 0; q < phases.size(); ++q) {
        const Complex y = b.y_series(static_cast<hp::Index>(p), static_cast<hp::Index>(q));
        const Complex dv = v(pos(from, phases[q])) - v(pos(to, phases[q]));
        sums(pos(from, phases[p])) += y * dv;
        sums(pos(to, phases[p])) -= y * dv;
        if (b.y_shunt_from)
          sums(pos(from, phases[p])) += (*b.y_shunt_from)(static_cast<hp::Index>(p), static_cast<hp::Index>(q)) *
                                        v(pos(from, phases[q]));
        if (b.y_shunt_to)
          sums(pos(to, phases[p])) +=
              (*b.y_shunt_to)(static_cast<hp::Index>(p), static_cast<hp::Index>(q)) * v(pos(to, phases[q]));
      }
    }
  }
  EXPECT_LT((i - sums).cwiseAbs().maxCoeff(), 1e-12 * i.cwiseAbs().maxCoeff());
  // symmetric branch blocks give a symmetric matrix
  EXPECT_LT((full - full.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, WIsZeroInjectionSolution) {
  for (const char* name : {"two_bus", "chain3", "feeder22", "ieee13_zip", "bus5"}) {
    const hp::Feeder f = feeder(name);
    const hp::CVector i = f.sys.yl0() * f.v0 + f.sys.yll() * f.w;
    EXPECT_LT(i.cwiseAbs().maxCoeff(), 1e-10) << name;
  }
}

TEST(Network, ShuntFreeRadialWIsReplicatedSource) {
  const hp::Feeder f = feeder("feeder22");
  for (hp::Index m = 0; m < f.dim(); ++m) EXPECT_LT(std::abs(f.w(m) - f.v0(0)), 1e-12);
}

TEST(Network, DroppingAZeroInjectionLeafKeepsOtherVoltages) {
  const Complex y{5.0, -15.0};
  auto src = node("0", "a", hp::NodeKind::slack);
  auto n1 = node("1", "a");
  n1.zip = hp::NodeLoad{{0.0}, {0.0}, {1.0}, {Complex(-0.5, -0.2)}, {1.0}};
  const hp::Feeder small = hp::make_feeder(1.0, {src, n1}, {branch("0", "1", scalar(y))});
  const hp::Feeder big = hp::make_feeder(1.0, {src, n1, node("2", "a")},
                                         {branch("0", "1", scalar(y)), branch("1", "2", scalar(2.0 * y))});
  const hp::CVector s_small = small.loads.s_nom;
  const hp::CVector s_big = big.loads.s_nom;
  const auto a = hp::solve_fixed_point(small.sys, small.v0, small.w, s_small);
  const auto b = hp::solve_fixed_point(big.sys, big.v0, big.w, s_big);
  EXPECT_LT(std::abs(a.v_l(0) - b.v_l(0)), 1e-12);
  const hp::ComplexLinearModel ma = hp::build_flat_model(small.sys, small.w, small.w);
  const hp::ComplexLinearModel mb = hp::build_flat_model(big.sys, big.w, big.w);
  EXPECT_LT(std::abs(hp::predict_voltages(ma, s_small)(0) - hp::predict_voltages(mb, s_big)(0)), 1e-12);
}

TEST(Network, RejectsBadTopologies) {
  const hp::CMatrix y = scalar({1.0, -3.0});
  using Nodes = std::vector<hp::NodeSpec>;
  using Branches = std::vector<hp::BranchSpec>;
  const auto slack = node("0", "a", hp::NodeKind::slack);
  EXPECT_THROW(hp::assemble_admittance(Nodes{slack, node("1", "a"), node("2", "a")}, Branches{branch("0", "1", y)}),
               hp::InvalidInput);  // disconnected
  EXPECT_THROW(hp::assemble_admittance(Nodes{node("0", "a"), node("1", "a")}, Branches{branch("0", "1", y)}),
               hp::InvalidInput);  // no slack
  EXPECT_THROW(hp::assemble_admittance(Nodes{slack, node("1", "a", hp::NodeKind::slack)}, Branches{branch("0", "1", y)}),
               hp::InvalidInput);  // two slacks
  EXPECT_THROW(hp::assemble_admittance(Nodes{slack, node("1", "ab")},
                                       Branches{branch("0", "1", hp::CMatrix::Identity(2, 2))}),
               hp::InvalidInput);  // phase b absent at the slack end
  EXPECT_THROW(hp::assemble_admittance(Nodes{slack, node("1", "a")}, Branches{branch("0", "1", scalar(0.0))}),
               hp::Error);  // singular series block
}

TEST(Network, FeederJsonRejectsUnknownKeysAndRoundTrips) {
  hp::Json doc = hp::read_json_file(feeder_path("ieee13_zip"));
  const hp::Feeder f = hp::parse_feeder(doc);
  const hp::Feeder g = hp::parse_feeder(hp::feeder_to_json(f));
  EXPECT_EQ((f.sys.yll() - g.sys.yll()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((f.loads.s_nom - g.loads.s_nom).cwiseAbs().maxCoeff(), 0.0);

  hp::Json bad = doc;
  bad["colour"] = "blue";
  EXPECT_THROW(hp::parse_feeder(bad), hp::InvalidInput);
  bad = doc;
  bad["nodes"][1]["voltage"] = 1.0;
  EXPECT_THROW(hp::parse_feeder(bad), hp::InvalidInput);
  bad = doc;
  bad["branches"][0]["length"] = 1.0;
  EXPECT_THROW(hp::parse_feeder(bad), hp::InvalidInput);
}

TEST(Network, PhysicalUnitsAreConverted) {
  // 4.16 kV, 5 MVA: Z_base = 3.46112 Ω; 1/(0.3461+1.0383j) Ω → p.u. y = Z_base/z
  const double kv = 4.16, mva = 5.0, zb = kv * kv / mva;
  const Complex z_ohm{0.3461, 1.0383};
  const Complex y_si = 1.0 / z_ohm;
  const hp::Json doc = {
      {"base_mva", mva},
      {"units", "physical"},
      {"base_kv", kv},
      {"nodes",
       {{{"id", "s"}, {"kind", "slack"}, {"phases", "a"}},
        {{"id", "l"},
         {"kind", "pq"},
         {"phases", "a"},
         {"zip", {{"a", {0.0}}, {"b", {0.0}}, {"c", {1.0}}, {"s_nom", {{-0.5, -0.2}}}}}}}},
      {"branches", {{{"from", "s"}, {"to", "l"}, {"y_series", {{{y_si.real(), y_si.imag()}}}}}}}};
  const hp::Feeder f = hp::parse_feeder(doc);
  EXPECT_LT(std::abs(f.sys.yll()(0, 0) - y_si * zb), 1e-12);
  // per-phase MW/Mvar on a per-phase base of mva/3
  EXPECT_LT(std::abs(f.loads.s_nom(0) - Complex(-0.5, -0.2) * 3.0 / mva), 1e-15);
}

TEST(Network, ContentHashTracksContent) {
  hp::Json doc = hp::read_json_file(feeder_path("chain3"));
  const std::string h1 = hp::parse_feeder(doc).content_hash;
  EXPECT_EQ(h1.size(), 64u);
  EXPECT_EQ(h1, hp::parse_feeder(doc).content_hash);
  doc["base_mva"] = 2.0;
  EXPECT_NE(h1, hp::parse_feeder(doc).content_hash);
}
