#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <memory>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridpf/types.hpp"

namespace hybridpf {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline char phase_letter(Phase p) { return static_cast<char>('a' + static_cast<int>(p)); }

inline Phase parse_phase(char ch) {
  switch (ch) {
    case 'a': return Phase::a;
    case 'b': return Phase::b;
    case 'c': return Phase::c;
    default: throw InvalidInput(std::string("unknown phase '") + ch + "'");
  }
}

/// Ordered subset of {a, b, c}.
class PhaseMask {
public:
  PhaseMask() = default;

  static PhaseMask parse(std::string_view text) {
    PhaseMask mask;
    for (char ch : text) {
      const Phase p = parse_phase(ch);
      if (mask.has(p)) throw InvalidInput("phase listed twice in '" + std::string(text) + "'");
      mask.bits_ |= bit(p);
    }
    if (mask.empty()) throw InvalidInput("empty phase mask");
    return mask;
  }

  static PhaseMask of(std::initializer_list<Phase> phases) {
    PhaseMask mask;
    for (Phase p : phases) mask.bits_ |= bit(p);
    return mask;
  }

  bool has(Phase p) const { return (bits_ & bit(p)) != 0; }
  bool empty() const { return bits_ == 0; }
  int count() const { return std::popcount(bits_); }

  PhaseMask intersect(PhaseMask other) const {
    PhaseMask out;
    out.bits_ = static_cast<std::uint8_t>(bits_ & other.bits_);
    return out;
  }

  std::vector<Phase> phases() const {
    std::vector<Phase> out;
    for (Phase p : {Phase::a, Phase::b, Phase::c})
      if (has(p)) out.push_back(p);
    return out;
  }

  /// Position of `p` among the present phases.
  int rank(Phase p) const {
    int r = 0;
    for (Phase q : {Phase::a, Phase::b, Phase::c}) {
      if (q == p) return has(p) ? r : -1;
      if (has(q)) ++r;
    }
    return -1;
  }

  std::string str() const {
    std::string s;
    for (Phase p : phases()) s.push_back(phase_letter(p));
    return s;
  }

  friend bool operator==(PhaseMask, PhaseMask) = default;

private:
  static std::uint8_t bit(Phase p) { return static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
  std::uint8_t bits_ = 0;
};

enum class NodeKind { slack, pq };

/// Per-phase load block of a node, in the order of its phase mask.
struct NodeLoad {
  std::vector<double> a, b, c;
  std::vector<Complex> s_nom;
  std::vector<double> v_nom;
};

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::pq;
  PhaseMask phases;
  std::vector<Complex> v_slack;  // slack only; empty means balanced 1.0 p.u.
  std::optional<NodeLoad> zip;
};

/// Series (and optional shunt) admittance between two nodes, over the phases
/// shared by both terminals, in a-b-c order.
struct BranchSpec {
  std::string from;
  std::string to;
  CMatrix y_series;
  std::optional<CMatrix> y_shunt_from;
  std::optional<CMatrix> y_shunt_to;
};

struct NodePhase {
  Index node = 0;
  Phase phase = Phase::a;
  friend bool operator==(const NodePhase&, const NodePhase&) = default;
};

struct AssembledBranch {
  Index from = 0;
  Index to = 0;
  std::vector<Phase> phases;
  CMatrix y_series;
};

/// Balanced positive-sequence phasor for phase p at magnitude 1.
inline Complex balanced_phasor(Phase p) {
  constexpr double shift = 2.0 * std::numbers::pi / 3.0;
  switch (p) {
    case Phase::a: return {1.0, 0.0};
    case Phase::b: return std::polar(1.0, -shift);
    case Phase::c: return std::polar(1.0, shift);
  }
  return {1.0, 0.0};
}

/// Node admittance matrix partitioned by slack membership:
///
///     [i_0]   [Y00 Y0L] [v_0]
///     [i_L] = [YL0 YLL] [v_L]
///
/// Rows and columns exist only for phases present at a node. YLL is factored
/// once at construction; the object is immutable afterwards.
class AdmittanceSystem {
public:
  const CMatrix& y00() const { return y00_; }
  const CMatrix& y0l() const { return y0l_; }
  const CMatrix& yl0() const { return yl0_; }
  const CMatrix& yll() const { return yll_; }

  Index slack_dim() const { return static_cast<Index>(slack_index_.size()); }
  Index load_dim() const { return static_cast<Index>(load_index_.size()); }

  const std::vector<NodePhase>& slack_index() const { return slack_index_; }
  const std::vector<NodePhase>& load_index() const { return load_index_; }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<PhaseMask>& node_phases() const { return node_phases_; }
  Index slack_node() const { return slack_node_; }
  Index node_count() const { return static_cast<Index>(node_ids_.size()); }

  const std::vector<AssembledBranch>& branches() const { return branches_; }

  std::optional<Index> node_index(std::string_view id) const {
    auto it = node_lookup_.find(std::string(id));
    if (it == node_lookup_.end()) return std::nullopt;
    return it->second;
  }

  /// Position of (node, phase) in v_L, if that node-phase is a non-slack unknown.
  std::optional<Index> load_position(Index node, Phase p) const {
    const auto it = std::find(load_index_.begin(), load_index_.end(), NodePhase{node, p});
    if (it == load_index_.end()) return std::nullopt;
    return static_cast<Index>(it - load_index_.begin());
  }

  std::optional<Index> slack_position(Index node, Phase p) const {
    const auto it = std::find(slack_index_.begin(), slack_index_.end(), NodePhase{node, p});
    if (it == slack_index_.end()) return std::nullopt;
    return static_cast<Index>(it - slack_index_.begin());
  }

  /// YLL^{-1} rhs through the cached factorization.
  CVector solve_ll(const CVector& rhs) const {
    require_size(rhs.size(), load_dim(), "YLL solve");
    return lu_->solve(rhs);
  }

  CMatrix solve_ll(const CMatrix& rhs) const {
    require_size(rhs.rows(), load_dim(), "YLL solve");
    return lu_->solve(rhs);
  }

  friend AdmittanceSystem assemble_admittance(std::span<const NodeSpec> nodes,
                                              std::span<const BranchSpec> branches);

private:
  CMatrix y00_, y0l_, yl0_, yll_;
  std::vector<NodePhase> slack_index_;
  std::vector<NodePhase> load_index_;
  std::vector<std::string> node_ids_;
  std::vector<PhaseMask> node_phases_;
  std::unordered_map<std::string, Index> node_lookup_;
  Index slack_node_ = 0;
  std::vector<AssembledBranch> branches_;
  std::shared_ptr<const Eigen::PartialPivLU<CMatrix>> lu_;
};

namespace detail {

inline void check_square(const CMatrix& m, Index n, const std::string& what) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionMismatch(what + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                            " block, got " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

}  // namespace detail

/// Standard nodal assembly. Each branch adds y_series to the diagonal blocks
/// of both terminals and -y_series to the off-diagonal blocks, shunts add to
/// their terminal's diagonal block. The result is split into the slack and
/// non-slack partitions.
inline AdmittanceSystem assemble_admittance(std::span<const NodeSpec> nodes,
                                            std::span<const BranchSpec> branches) {
  AdmittanceSystem sys;
  const Index n_nodes = static_cast<Index>(nodes.size());
  if (n_nodes < 2) throw InvalidInput("a network needs a slack node and at least one pq node");

  Index slack_count = 0;
  for (Index i = 0; i < n_nodes; ++i) {
    const NodeSpec& node = nodes[static_cast<std::size_t>(i)];
    if (node.phases.empty()) throw InvalidInput("node '" + node.id + "' has no phases");
    if (!sys.node_lookup_.emplace(node.id, i).second)
      throw InvalidInput("duplicate node id '" + node.id + "'");
    sys.node_ids_.push_back(node.id);
    sys.node_phases_.push_back(node.phases);
    if (node.kind == NodeKind::slack) {
      ++slack_count;
      sys.slack_node_ = i;
    }
  }
  if (slack_count != 1)
    throw InvalidInput("expected exactly one slack node, found " + std::to_string(slack_count));

  // Global indexing over present phases only: slack phases first, then the
  // non-slack node-phases in node order.
  std::vector<std::array<Index, 3>> global(static_cast<std::size_t>(n_nodes),
                                           std::array<Index, 3>{-1, -1, -1});
  Index next = 0;
  for (Phase p : nodes[static_cast<std::size_t>(sys.slack_node_)].phases.phases()) {
    global[static_cast<std::size_t>(sys.slack_node_)][static_cast<int>(p)] = next++;
    sys.slack_index_.push_back({sys.slack_node_, p});
  }
  for (Index i = 0; i < n_nodes; ++i) {
    if (i == sys.slack_node_) continue;
    for (Phase p : nodes[static_cast<std::size_t>(i)].phases.phases()) {
      global[static_cast<std::size_t>(i)][static_cast<int>(p)] = next++;
      sys.load_index_.push_back({i, p});
    }
  }
  const Index dim = next;
  CMatrix y = CMatrix::Zero(dim, dim);

  std::vector<std::vector<Index>> adjacency(static_cast<std::size_t>(n_nodes));
  for (const BranchSpec& br : branches) {
    const auto from = sys.node_index(br.from);
    const auto to = sys.node_index(br.to);
    if (!from) throw InvalidInput("branch references unknown node '" + br.from + "'");
    if (!to) throw InvalidInput("branch references unknown node '" + br.to + "'");
    if (*from == *to) throw InvalidInput("branch '" + br.from + "' connects a node to itself");

    const PhaseMask shared = sys.node_phases_[static_cast<std::size_t>(*from)].intersect(
        sys.node_phases_[static_cast<std::size_t>(*to)]);
    const std::string name = br.from + "-" + br.to;
    if (br.y_series.rows() > shared.count()) {
      throw InvalidInput("branch " + name + " references " + std::to_string(br.y_series.rows()) +
                         " phases but its terminals share only '" + shared.str() + "'");
    }
    if (shared.empty()) throw InvalidInput("branch " + name + " has no shared phase");
    detail::check_square(br.y_series, shared.count(), "branch " + name + " y_series");
    if (Eigen::FullPivLU<CMatrix>(br.y_series).rank() != br.y_series.rows())
      throw InvalidInput("branch " + name + " has a singular series admittance");

    std::vector<Index> gf, gt;
    for (Phase p : shared.phases()) {
      gf.push_back(global[static_cast<std::size_t>(*from)][static_cast<int>(p)]);
      gt.push_back(global[static_cast<std::size_t>(*to)][static_cast<int>(p)]);
    }
    const Index k = shared.count();
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c < k; ++c) {
        const Complex ys = br.y_series(r, c);
        y(gf[r], gf[c]) += ys;
        y(gt[r], gt[c]) += ys;
        y(gf[r], gt[c]) -= ys;
        y(gt[r], gf[c]) -= ys;
      }
    }
    auto add_shunt = [&](const std::optional<CMatrix>& sh, const std::vector<Index>& g,
                         const char* side) {
      if (!sh) return;
      detail::check_square(*sh, k, "branch " + name + " " + side + " shunt");
      for (Index r = 0; r < k; ++r)
        for (Index c = 0; c < k; ++c) y(g[r], g[c]) += (*sh)(r, c);
    };
    add_shunt(br.y_shunt_from, gf, "from");
    add_shunt(br.y_shunt_to, gt, "to");

    adjacency[static_cast<std::size_t>(*from)].push_back(*to);
    adjacency[static_cast<std::size_t>(*to)].push_back(*from);
    sys.branches_.push_back({*from, *to, shared.phases(), br.y_series});
  }

  // Connectivity from the slack.
  std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
  std::queue<Index> frontier;
  frontier.push(sys.slack_node_);
  seen[static_cast<std::size_t>(sys.slack_node_)] = true;
  while (!frontier.empty()) {
    const Index u = frontier.front();
    frontier.pop();
    for (Index v : adjacency[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        frontier.push(v);
      }
    }
  }
  for (Index i = 0; i < n_nodes; ++i) {
    if (!seen[static_cast<std::size_t>(i)])
      throw InvalidInput("network is disconnected: node '" + sys.node_ids_[static_cast<std::size_t>(i)] +
                         "' is unreachable from the slack");
  }

  const Index ns = sys.slack_dim();
  const Index nl = sys.load_dim();
  sys.y00_ = y.topLeftCorner(ns, ns);
  sys.y0l_ = y.topRightCorner(ns, nl);
  sys.yl0_ = y.bottomLeftCorner(nl, ns);
  sys.yll_ = y.bottomRightCorner(nl, nl);

  Eigen::FullPivLU<CMatrix> check(sys.yll_);
  if (nl == 0 || !check.isInvertible()) throw SingularSystem("YLL is singular");
  sys.lu_ = std::make_shared<const Eigen::PartialPivLU<CMatrix>>(sys.yll_);
  return sys;
}

/// Slack voltage vector from the node specs; balanced 1.0 p.u. when unspecified.
inline CVector slack_voltage(std::span<const NodeSpec> nodes) {
  for (const NodeSpec& node : nodes) {
    if (node.kind != NodeKind::slack) continue;
    const auto phases = node.phases.phases();
    CVector v0(static_cast<Index>(phases.size()));
    if (node.v_slack.empty()) {
      for (std::size_t k = 0; k < phases.size(); ++k) v0(static_cast<Index>(k)) = balanced_phasor(phases[k]);
    } else {
      if (node.v_slack.size() != phases.size())
        throw InvalidInput("slack voltage count does not match the slack phase count");
      for (std::size_t k = 0; k < phases.size(); ++k) v0(static_cast<Index>(k)) = node.v_slack[k];
    }
    return v0;
  }
  throw InvalidInput("no slack node");
}

/// Zero-injection voltage w = -YLL^{-1} YL0 v0.
inline CVector compute_w(const AdmittanceSystem& sys, const CVector& v0) {
  require_size(v0.size(), sys.slack_dim(), "slack voltage");
  return -sys.solve_ll(CVector(sys.yl0() * v0));
}

}  // namespace hybridpf
