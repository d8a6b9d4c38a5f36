#pragma once

// Text format for a single precoding instance:
//
//   headroom: 0.5
//   noise_term: 2e-14
//   rate_threshold: 1
//   channel:
//   <K lines of M comma-separated gains>
//
// Scalars may appear in any order before the "channel:" line; '#' starts a comment line.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lifi/io.hpp"
#include "lifi/zf_ccp.hpp"

namespace lifi {

inline ProblemSpec read_problem(std::istream& in, const std::string& source = "<problem>") {
  ProblemSpec p;
  bool have[3] = {false, false, false};
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  bool in_channel = false;
  auto where = [&] { return source + ":" + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    if (in_channel) {
      std::vector<double> row;
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) row.push_back(io::parse_double(tok, where()));
      if (!rows.empty() && row.size() != rows.front().size())
        throw ParseError(where() + ": channel row has " + std::to_string(row.size()) +
                         " entries, expected " + std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(where() + ": expected 'key: value'");
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 1);
    if (key == "channel") {
      in_channel = true;
    } else if (key == "headroom") {
      p.headroom = io::parse_double(value, where()), have[0] = true;
    } else if (key == "noise_term") {
      p.noise_term = io::parse_double(value, where()), have[1] = true;
    } else if (key == "rate_threshold") {
      p.rate_threshold = io::parse_double(value, where()), have[2] = true;
    } else {
      throw ParseError(where() + ": unknown key '" + key + "'");
    }
  }
  if (!have[0] || !have[1] || !have[2])
    throw ParseError(source + ": headroom, noise_term and rate_threshold are all required");
  if (rows.empty()) throw ParseError(source + ": missing channel block");
  p.channel.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t m = 0; m < rows[k].size(); ++m)
      p.channel(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = rows[k][m];
  validate(p);
  return p;
}

inline ProblemSpec read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path + "'");
  return read_problem(in, path);
}

inline void write_problem(std::ostream& out, const ProblemSpec& p) {
  out << "headroom: " << io::format_double(p.headroom) << '\n'
      << "noise_term: " << io::format_double(p.noise_term) << '\n'
      << "rate_threshold: " << io::format_double(p.rate_threshold) << '\n'
      << "channel:\n";
  for (Eigen::Index k = 0; k < p.channel.rows(); ++k) {
    for (Eigen::Index m = 0; m < p.channel.cols(); ++m)
      out << (m ? "," : "") << io::format_double(p.channel(k, m));
    out << '\n';
  }
}

/// Structured text summary; the precoder follows as M lines of K comma-separated values.
inline void write_solution(std::ostream& out, const PrecoderSolution& s, bool with_timing) {
  std::string adm;
  for (int k : s.admitted) adm += (adm.empty() ? "" : " ") + std::to_string(k);
  std::vector<double> g(s.gains.data(), s.gains.data() + s.gains.size());
  std::vector<double> r(s.rates.data(), s.rates.data() + s.rates.size());
  out << "admitted: " << adm << '\n'
      << "gains_A: " << io::join(g) << '\n'
      << "rates_nats: " << io::join(r) << '\n'
      << "objective_nats: " << io::format_double(s.objective) << '\n'
      << "iterations: " << s.iterations << '\n'
      << "peak_amplitude_A: " << io::format_double(s.peak_amplitude()) << '\n';
  if (with_timing) out << "solve_time_s: " << io::format_double(s.solve_time) << '\n';
  out << "precoder:\n";
  for (Eigen::Index m = 0; m < s.precoder.rows(); ++m) {
    for (Eigen::Index k = 0; k < s.precoder.cols(); ++k)
      out << (k ? "," : "") << io::format_double(s.precoder(m, k));
    out << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const PrecoderSolution& s) {
  out << "iteration,objective_nats\n";
  for (std::size_t i = 0; i < s.trace.size(); ++i)
    out << i << ',' << io::format_double(s.trace[i]) << '\n';
}

}  // namespace lifi
