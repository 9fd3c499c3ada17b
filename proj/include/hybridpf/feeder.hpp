#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "hybridpf/network.hpp"
#include "hybridpf/zip_load.hpp"

namespace hybridpf {

using Json = nlohmann::json;

/// A parsed feeder: the node/branch description plus everything derived from
/// it once (partitioned admittance, slack voltage, zero-injection voltage and
/// the per-node-phase load table).
struct Feeder {
  double base_mva = 1.0;
  std::vector<NodeSpec> nodes;
  std::vector<BranchSpec> branches;
  AdmittanceSystem sys;
  CVector v0;
  CVector w;
  ZipLoadSpec loads;
  std::string content_hash;

  Index dim() const { return sys.load_dim(); }
};

inline std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

/// Per-node-phase load table in v_L order. Node-phases without a load block
/// get a zero constant-power entry.
inline ZipLoadSpec collect_loads(const AdmittanceSystem& sys, std::span<const NodeSpec> nodes) {
  const Index n = sys.load_dim();
  ZipLoadSpec spec = ZipLoadSpec::constant_power(CVector::Zero(n));
  for (Index m = 0; m < n; ++m) {
    const NodePhase np = sys.load_index()[static_cast<std::size_t>(m)];
    const NodeSpec& node = nodes[static_cast<std::size_t>(np.node)];
    if (!node.zip) continue;
    const auto k = static_cast<std::size_t>(node.phases.rank(np.phase));
    spec.a(m) = node.zip->a[k];
    spec.b(m) = node.zip->b[k];
    spec.c(m) = node.zip->c[k];
    spec.s_nom(m) = node.zip->s_nom[k];
    spec.v_nom_mag(m) = node.zip->v_nom[k];
  }
  spec.validate();
  return spec;
}

inline Feeder make_feeder(double base_mva, std::vector<NodeSpec> nodes,
                          std::vector<BranchSpec> branches) {
  if (!(base_mva > 0.0)) throw InvalidInput("base_mva must be positive");
  for (const NodeSpec& node : nodes) {
    if (node.kind == NodeKind::slack && node.zip)
      throw InvalidInput("slack node '" + node.id + "' cannot carry a load");
    if (node.kind == NodeKind::pq && !node.v_slack.empty())
      throw InvalidInput("pq node '" + node.id + "' cannot carry v_slack");
    if (node.zip) {
      const auto n = static_cast<std::size_t>(node.phases.count());
      const NodeLoad& z = *node.zip;
      if (z.a.size() != n || z.b.size() != n || z.c.size() != n || z.s_nom.size() != n ||
          z.v_nom.size() != n)
        throw InvalidInput("zip block of node '" + node.id + "' must list one entry per phase");
    }
  }
  Feeder f;
  f.base_mva = base_mva;
  f.sys = assemble_admittance(nodes, branches);
  f.v0 = slack_voltage(nodes);
  f.w = compute_w(f.sys, f.v0);
  f.loads = collect_loads(f.sys, nodes);
  f.nodes = std::move(nodes);
  f.branches = std::move(branches);
  return f;
}

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidInput("unknown key '" + key + "' in " + where);
  }
}

inline const Json& require_key(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidInput("missing key '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

inline Complex parse_complex(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InvalidInput(where + ": complex numbers are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline CMatrix parse_cmatrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidInput(where + ": expected a non-empty matrix");
  const auto rows = static_cast<Index>(j.size());
  Index cols = -1;
  CMatrix m;
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw InvalidInput(where + ": matrix rows must be arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) throw InvalidInput(where + ": ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = parse_complex(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

inline Json cmatrix_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<double> parse_reals(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const Json& x : j) {
    if (!x.is_number()) throw InvalidInput(where + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::vector<Complex> parse_complexes(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array of [re, im] pairs");
  std::vector<Complex> out;
  for (const Json& x : j) out.push_back(parse_complex(x, where));
  return out;
}

}  // namespace detail

/// Parses a feeder document. Keys:
///   base_mva, units ("pu" default | "physical"), base_kv (physical only),
///   nodes[]: id, kind ("slack"|"pq"), phases ("abc", "ab", ...), v_slack, zip{a,b,c,s_nom,v_nom}
///   branches[]: from, to, y_series, y_shunt_from, y_shunt_to
/// With units "physical" admittances are in siemens and s_nom in MVA
/// ([MW, Mvar] per phase); both are converted to per-unit on base_mva/base_kv.
inline Feeder parse_feeder(const Json& doc) {
  using namespace detail;
  reject_unknown_keys(doc, {"base_mva", "units", "base_kv", "nodes", "branches"}, "feeder");
  const double base_mva = require_key(doc, "base_mva", "feeder").get<double>();
  const std::string units = doc.value("units", std::string("pu"));
  double y_scale = 1.0;
  double s_scale = 1.0;
  if (units == "physical") {
    const double base_kv = require_key(doc, "base_kv", "feeder").get<double>();
    if (!(base_kv > 0.0)) throw InvalidInput("base_kv must be positive");
    y_scale = base_kv * base_kv / base_mva;  // siemens -> p.u. (multiply by Z_base)
    s_scale = 3.0 / base_mva;                // per-phase MVA -> p.u. of the per-phase base
  } else if (units != "pu") {
    throw InvalidInput("units must be 'pu' or 'physical'");
  } else if (doc.contains("base_kv")) {
    throw InvalidInput("base_kv is only meaningful with units 'physical'");
  }

  std::vector<NodeSpec> nodes;
  for (const Json& jn : require_key(doc, "nodes", "feeder")) {
    reject_unknown_keys(jn, {"id", "kind", "phases", "v_slack", "zip"}, "node");
    NodeSpec node;
    node.id = require_key(jn, "id", "node").get<std::string>();
    const std::string where = "node '" + node.id + "'";
    const std::string kind = require_key(jn, "kind", where).get<std::string>();
    if (kind == "slack") node.kind = NodeKind::slack;
    else if (kind == "pq") node.kind = NodeKind::pq;
    else throw InvalidInput(where + ": kind must be 'slack' or 'pq'");
    node.phases = PhaseMask::parse(require_key(jn, "phases", where).get<std::string>());
    if (jn.contains("v_slack")) node.v_slack = parse_complexes(jn.at("v_slack"), where + " v_slack");
    if (jn.contains("zip")) {
      const Json& jz = jn.at("zip");
      reject_unknown_keys(jz, {"a", "b", "c", "s_nom", "v_nom"}, where + " zip");
      NodeLoad z;
      z.a = parse_reals(require_key(jz, "a", where), where + " zip a");
      z.b = parse_reals(require_key(jz, "b", where), where + " zip b");
      z.c = parse_reals(require_key(jz, "c", where), where + " zip c");
      z.s_nom = parse_complexes(require_key(jz, "s_nom", where), where + " zip s_nom");
      for (Complex& s : z.s_nom) s *= s_scale;
      if (jz.contains("v_nom")) z.v_nom = parse_reals(jz.at("v_nom"), where + " zip v_nom");
      else z.v_nom.assign(z.s_nom.size(), 1.0);
      node.zip = std::move(z);
    }
    nodes.push_back(std::move(node));
  }

  std::vector<BranchSpec> branches;
  for (const Json& jb : require_key(doc, "branches", "feeder")) {
    reject_unknown_keys(jb, {"from", "to", "y_series", "y_shunt_from", "y_shunt_to"}, "branch");
    BranchSpec br;
    br.from = require_key(jb, "from", "branch").get<std::string>();
    br.to = require_key(jb, "to", "branch").get<std::string>();
    const std::string where = "branch " + br.from + "-" + br.to;
    br.y_series = parse_cmatrix(require_key(jb, "y_series", where), where + " y_series") * y_scale;
    if (jb.contains("y_shunt_from"))
      br.y_shunt_from = parse_cmatrix(jb.at("y_shunt_from"), where + " y_shunt_from") * y_scale;
    if (jb.contains("y_shunt_to"))
      br.y_shunt_to = parse_cmatrix(jb.at("y_shunt_to"), where + " y_shunt_to") * y_scale;
    branches.push_back(std::move(br));
  }

  Feeder f = make_feeder(base_mva, std::move(nodes), std::move(branches));
  f.content_hash = sha256_hex(doc.dump());
  return f;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline Feeder load_feeder(const std::filesystem::path& path) {
  try {
    return parse_feeder(read_json_file(path));
  } catch (const Json::exception& e) {
    throw InvalidInput("feeder '" + path.string() + "': " + e.what());
  }
}

/// Per-unit feeder document; parse_feeder(feeder_to_json(f)) rebuilds f.
inline Json feeder_to_json(const Feeder& f) {
  using detail::complex_json;
  Json doc;
  doc["base_mva"] = f.base_mva;
  Json nodes = Json::array();
  for (const NodeSpec& node : f.nodes) {
    Json jn;
    jn["id"] = node.id;
    jn["kind"] = node.kind == NodeKind::slack ? "slack" : "pq";
    jn["phases"] = node.phases.str();
    if (!node.v_slack.empty()) {
      Json vs = Json::array();
      for (Complex v : node.v_slack) vs.push_back(complex_json(v));
      jn["v_slack"] = vs;
    }
    if (node.zip) {
      Json s = Json::array();
      for (Complex v : node.zip->s_nom) s.push_back(complex_json(v));
      jn["zip"] = {{"a", node.zip->a}, {"b", node.zip->b}, {"c", node.zip->c},
                   {"s_nom", s}, {"v_nom", node.zip->v_nom}};
    }
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  Json branches = Json::array();
  for (const BranchSpec& br : f.branches) {
    Json jb = {{"from", br.from}, {"to", br.to}, {"y_series", detail::cmatrix_json(br.y_series)}};
    if (br.y_shunt_from) jb["y_shunt_from"] = detail::cmatrix_json(*br.y_shunt_from);
    if (br.y_shunt_to) jb["y_shunt_to"] = detail::cmatrix_json(*br.y_shunt_to);
    branches.push_back(std::move(jb));
  }
  doc["branches"] = std::move(branches);
  return doc;
}

/// "node.phase" label of a non-slack position, e.g. "671.b".
inline std::string position_label(const AdmittanceSystem& sys, Index m) {
  const NodePhase np = sys.load_index()[static_cast<std::size_t>(m)];
  return sys.node_ids()[static_cast<std::size_t>(np.node)] + "." + phase_letter(np.phase);
}

}  // namespace hybridpf
