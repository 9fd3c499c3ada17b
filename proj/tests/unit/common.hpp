#pragma once

#include <filesystem>
#include <string>

#include "hybridpf/hybridpf.hpp"

namespace testing_support {

namespace hp = hybridpf;

inline std::filesystem::path feeder_path(const std::string& name) {
  return std::filesystem::path(HYBRIDPF_DATA_DIR) / "feeders" / (name + ".json");
}

inline hp::Feeder feeder(const std::string& name) { return hp::load_feeder(feeder_path(name)); }

inline hp::NodeSpec node(std::string id, const char* phases, hp::NodeKind kind = hp::NodeKind::pq) {
  hp::NodeSpec n;
  n.id = std::move(id);
  n.kind = kind;
  n.phases = hp::PhaseMask::parse(phases);
  return n;
}

inline hp::BranchSpec branch(std::string from, std::string to, hp::CMatrix y) {
  hp::BranchSpec b;
  b.from = std::move(from);
  b.to = std::move(to);
  b.y_series = std::move(y);
  return b;
}

inline hp::CMatrix scalar(hp::Complex y) { return hp::CMatrix::Constant(1, 1, y); }

/// Single-phase source 0 feeding node 1 through y, with a constant-power
/// injection s at node 1.
inline hp::Feeder two_bus(hp::Complex y, hp::Complex s) {
  auto src = node("0", "a", hp::NodeKind::slack);
  src.v_slack = {1.0};
  auto load = node("1", "a");
  load.zip = hp::NodeLoad{{0.0}, {0.0}, {1.0}, {s}, {1.0}};
  return hp::make_feeder(1.0, {src, load}, {branch("0", "1", scalar(y))});
}

}  // namespace testing_support
