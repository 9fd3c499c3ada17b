#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hybridpf/data.hpp"

namespace hybridpf {

inline constexpr const char* kSampleHeader =
    "sample_id,timestamp,node,phase,v_re,v_im,p,q,lambda,weight,corrupted";

/// Shortest text that round-trips a double exactly.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_samples(std::ostream& out, const AdmittanceSystem& sys, const SampleSet& samples) {
  out << kSampleHeader << '\n';
  for (const OperatingSample& s : samples) {
    require_size(s.v_l.size(), sys.load_dim(), "sample voltage");
    require_size(s.s_l.size(), sys.load_dim(), "sample injection");
    for (Index m = 0; m < sys.load_dim(); ++m) {
      const NodePhase np = sys.load_index()[static_cast<std::size_t>(m)];
      out << s.id << ',' << s.timestamp << ',' << sys.node_ids()[static_cast<std::size_t>(np.node)]
          << ',' << phase_letter(np.phase) << ',' << format_real(s.v_l(m).real()) << ','
          << format_real(s.v_l(m).imag()) << ',' << format_real(s.s_l(m).real()) << ','
          << format_real(s.s_l(m).imag()) << ','
          << (s.lambda ? format_real((*s.lambda)(m)) : std::string()) << ','
          << format_real(s.weight) << ',' << (s.corrupted ? 1 : 0) << '\n';
    }
  }
}

inline void save_samples(const std::filesystem::path& path, const AdmittanceSystem& sys,
                         const SampleSet& samples) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  write_samples(out, sys, samples);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& text, long line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InvalidInput("sample file line " + std::to_string(line) + ": bad number '" + text + "'");
  return x;
}

inline long parse_long(const std::string& text, long line) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InvalidInput("sample file line " + std::to_string(line) + ": bad integer '" + text + "'");
  return x;
}

}  // namespace detail

/// Reads a sample table. Every sample must list every non-slack node-phase of
/// `sys` exactly once; rows of one sample must be contiguous.
inline SampleSet read_samples(std::istream& in, const AdmittanceSystem& sys) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("sample file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSampleHeader) throw InvalidInput("sample file header must be: " + std::string(kSampleHeader));

  const Index n = sys.load_dim();
  SampleSet out;
  std::vector<bool> seen;
  std::vector<bool> has_lambda;
  long lineno = 1;
  auto finish = [&] {
    if (out.empty()) return;
    for (Index m = 0; m < n; ++m)
      if (!seen[static_cast<std::size_t>(m)])
        throw InvalidInput("sample " + std::to_string(out.back().id) + " is missing node-phase " +
                           position_label(sys, m));
    bool any = false, all = true;
    for (bool b : has_lambda) any = any || b, all = all && b;
    if (any && !all)
      throw InvalidInput("sample " + std::to_string(out.back().id) + " has a partial lambda column");
    if (!any) out.back().lambda.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 11)
      throw InvalidInput("sample file line " + std::to_string(lineno) + ": expected 11 columns");
    const long id = detail::parse_long(c[0], lineno);
    if (out.empty() || out.back().id != id) {
      finish();
      OperatingSample s;
      s.id = id;
      s.timestamp = detail::parse_long(c[1], lineno);
      s.v_l = CVector::Zero(n);
      s.s_l = CVector::Zero(n);
      s.lambda = RVector::Zero(n);
      s.weight = detail::parse_double(c[9], lineno);
      s.corrupted = detail::parse_long(c[10], lineno) != 0;
      out.push_back(std::move(s));
      seen.assign(static_cast<std::size_t>(n), false);
      has_lambda.assign(static_cast<std::size_t>(n), false);
    }
    const auto node = sys.node_index(c[2]);
    if (!node || c[3].size() != 1)
      throw InvalidInput("sample file line " + std::to_string(lineno) + ": unknown node-phase " +
                         c[2] + "." + c[3]);
    const auto pos = sys.load_position(*node, parse_phase(c[3][0]));
    if (!pos)
      throw InvalidInput("sample file line " + std::to_string(lineno) + ": " + c[2] + "." + c[3] +
                         " is not a non-slack node-phase");
    const auto m = static_cast<std::size_t>(*pos);
    if (seen[m])
      throw InvalidInput("sample file line " + std::to_string(lineno) + ": duplicate node-phase");
    seen[m] = true;
    OperatingSample& s = out.back();
    s.v_l(*pos) = {detail::parse_double(c[4], lineno), detail::parse_double(c[5], lineno)};
    s.s_l(*pos) = {detail::parse_double(c[6], lineno), detail::parse_double(c[7], lineno)};
    if (!c[8].empty()) {
      (*s.lambda)(*pos) = detail::parse_double(c[8], lineno);
      has_lambda[m] = true;
    }
  }
  finish();
  return out;
}

inline SampleSet load_samples(const std::filesystem::path& path, const AdmittanceSystem& sys) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return read_samples(in, sys);
}

}  // namespace hybridpf
