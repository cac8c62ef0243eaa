// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "qedafqmc/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

namespace qedafqmc {

namespace {

constexpr double kSymmetryTol = 1e-12;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Fortran-style exponents (1.0D-03) are common in FCIDUMP files.
std::optional<double> to_double(std::string token) {
  for (auto& c : token)
    if (c == 'D' || c == 'd') c = 'E';
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<int> to_int(const std::string& token) {
  int v = 0;
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

std::optional<int> header_int(const std::string& header, const char* key) {
  const std::regex re(std::string("\\b") + key + "\\s*=\\s*([-+]?[0-9]+)");
  std::smatch m;
  if (!std::regex_search(header, m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

std::vector<std::string> split(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

}  // namespace

void IntegralSet::validate(bool allow_empty) const {
  if (n_orb <= 0) throw Error("IntegralSet: n_orb must be positive");
  if (oei.rows() != n_orb || oei.cols() != n_orb) throw Error("IntegralSet: oei has wrong shape");
  if (eri.n_orb() != n_orb) throw Error("IntegralSet: eri has wrong shape");
  if (n_alpha < 0 || n_beta < 0 || n_alpha > n_orb || n_beta > n_orb)
    throw Error("IntegralSet: electron counts out of range");
  if (!allow_empty && n_electrons() < 1) throw Error("IntegralSet: no electrons");
  if ((oei - oei.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
    throw Error("IntegralSet: oei is not symmetric");
  if (eri.max_symmetry_violation() > kSymmetryTol)
    throw Error("IntegralSet: eri breaks 8-fold symmetry");
}

double CavitySpec::zero_point_energy() const {
  double e = 0.0;
  for (const auto& m : modes) e += 0.5 * m.omega;
  return e;
}

IntegralSet parse_fcidump(std::istream& in) {
  std::string header;
  std::string line;
  int line_no = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    header += line + ' ';
    std::string upper = line;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper.find("&END") != std::string::npos || upper.find("$END") != std::string::npos ||
        (!is_blank(upper) && split(upper).back() == "/")) {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError(line_no, "FCIDUMP header is not terminated");
  for (auto& c : header) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

  const auto norb = header_int(header, "NORB");
  const auto nelec = header_int(header, "NELEC");
  const auto ms2 = header_int(header, "MS2");
  if (!norb) throw ParseError(line_no, "missing NORB in FCIDUMP header");
  if (!nelec) throw ParseError(line_no, "missing NELEC in FCIDUMP header");
  if (*norb <= 0) throw ParseError(line_no, "NORB must be positive");
  const int ms = ms2.value_or(0);
  if ((*nelec + ms) % 2 != 0) throw ParseError(line_no, "non-integer spin occupation");

  IntegralSet out;
  out.n_orb = *norb;
  out.n_alpha = (*nelec + ms) / 2;
  out.n_beta = (*nelec - ms) / 2;
  if (out.n_alpha < 0 || out.n_beta < 0 || out.n_alpha > out.n_orb || out.n_beta > out.n_orb)
    throw ParseError(line_no, "electron count does not fit into NORB orbitals");
  out.oei = Mat::Zero(out.n_orb, out.n_orb);
  out.eri = Eri(out.n_orb);

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tok = split(line);
    if (tok.size() != 5) throw ParseError(line_no, "expected 'value p q r s'");
    const auto value = to_double(tok[0]);
    if (!value) throw ParseError(line_no, "bad integral value '" + tok[0] + "'");
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      const auto v = to_int(tok[k + 1]);
      if (!v || *v < 0 || *v > out.n_orb) throw ParseError(line_no, "index out of range");
      idx[k] = *v;
    }
    const auto [p, q, r, s] = idx;
    if (p == 0 && q == 0 && r == 0 && s == 0) {
      out.core_energy = *value;
    } else if (r == 0 && s == 0) {
      if (p == 0 || q == 0) throw ParseError(line_no, "index out of range");
      out.oei(p - 1, q - 1) = *value;
      out.oei(q - 1, p - 1) = *value;
    } else {
      if (p == 0 || q == 0 || r == 0 || s == 0) throw ParseError(line_no, "index out of range");
      out.eri.set_symmetric(p - 1, q - 1, r - 1, s - 1, *value);
    }
  }
  return out;
}

IntegralSet read_fcidump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open FCIDUMP file " + path.string());
  return parse_fcidump(in);
}

void write_fcidump(std::ostream& out, const IntegralSet& ints) {
  const int m = ints.n_orb;
  out << "&FCI NORB=" << m << ",NELEC=" << ints.n_electrons()
      << ",MS2=" << ints.n_alpha - ints.n_beta << ",\n ORBSYM=";
  for (int i = 0; i < m; ++i) out << "1,";
  out << "\n ISYM=1,\n&END\n";
  for (int p = 0; p < m; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r < m; ++r)
        for (int s = 0; s <= r; ++s) {
          if (p * m + q < r * m + s) continue;
          const double v = ints.eri(p, q, r, s);
          if (v == 0.0) continue;
          out << format_double(v) << ' ' << p + 1 << ' ' << q + 1 << ' ' << r + 1 << ' ' << s + 1
              << '\n';
        }
  for (int p = 0; p < m; ++p)
    for (int q = 0; q <= p; ++q) {
      const double v = ints.oei(p, q);
      if (v == 0.0) continue;
      out << format_double(v) << ' ' << p + 1 << ' ' << q + 1 << " 0 0\n";
    }
  out << format_double(ints.core_energy) << " 0 0 0 0\n";
}

CavitySpec parse_cavity(std::istream& in) {
  CavitySpec cav;
  std::optional<int> n_modes, n_orb;
  std::vector<std::map<std::pair<int, int>, double>> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (is_blank(line)) continue;
    const auto tok = split(line);

    if (!n_modes) {
      if (tok.size() != 4 || tok[0] != "NMODES" || tok[2] != "NORB")
        throw ParseError(line_no, "expected 'NMODES <k> NORB <m>'");
      n_modes = to_int(tok[1]);
      n_orb = to_int(tok[3]);
      if (!n_modes || *n_modes < 0) throw ParseError(line_no, "bad NMODES");
      if (!n_orb || *n_orb <= 0) throw ParseError(line_no, "bad NORB");
      continue;
    }

    if (tok[0] == "MODE") {
      if (cav.n_modes() == *n_modes)
        throw ParseError(line_no, "more MODE blocks than NMODES=" + std::to_string(*n_modes));
      ModeSpec mode;
      mode.coupling = Mat::Zero(*n_orb, *n_orb);
      bool has_omega = false, has_nmax = false;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const auto eq = tok[k].find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value, got " + tok[k]);
        const std::string key = tok[k].substr(0, eq);
        const std::string val = tok[k].substr(eq + 1);
        if (key == "omega") {
          const auto v = to_double(val);
          if (!v || *v <= 0.0) throw ParseError(line_no, "omega must be a positive real");
          mode.omega = *v;
          has_omega = true;
        } else if (key == "nmax") {
          const auto v = to_int(val);
          if (!v || *v < 0) throw ParseError(line_no, "nmax must be a non-negative integer");
          mode.n_max = *v;
          has_nmax = true;
        } else if (key == "dnuc") {
          const auto v = to_double(val);
          if (!v) throw ParseError(line_no, "bad dnuc value");
          mode.nuclear_projection = *v;
        } else {
          throw ParseError(line_no, "unknown MODE key '" + key + "'");
        }
      }
      if (!has_omega || !has_nmax) throw ParseError(line_no, "MODE needs omega= and nmax=");
      cav.modes.push_back(std::move(mode));
      seen.emplace_back();
      continue;
    }

    if (cav.modes.empty()) throw ParseError(line_no, "coupling entry before first MODE");
    if (tok.size() != 3) throw ParseError(line_no, "expected 'p q value'");
    const auto p = to_int(tok[0]);
    const auto q = to_int(tok[1]);
    const auto v = to_double(tok[2]);
    if (!p || !q || *p < 1 || *q < 1 || *p > *n_orb || *q > *n_orb)
      throw ParseError(line_no, "orbital index out of range");
    if (!v) throw ParseError(line_no, "bad coupling value");
    const std::pair<int, int> key = std::minmax(*p - 1, *q - 1);
    auto& entries = seen.back();
    if (const auto it = entries.find(key); it != entries.end() && it->second != *v)
      throw ParseError(line_no, "conflicting duplicate entry (" + std::to_string(key.first + 1) +
                                    "," + std::to_string(key.second + 1) + ")");
    entries[key] = *v;
    auto& g = cav.modes.back().coupling;
    g(key.first, key.second) = *v;
    g(key.second, key.first) = *v;
  }
  if (!n_modes) throw ParseError(0, "empty cavity file");
  if (cav.n_modes() != *n_modes)
    throw ParseError(line_no, "found " + std::to_string(cav.n_modes()) + " MODE blocks, NMODES=" +
                                  std::to_string(*n_modes));
  cav.n_orb = *n_orb;
  return cav;
}

CavitySpec read_cavity(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cavity file " + path.string());
  return parse_cavity(in);
}

void write_cavity(std::ostream& out, const CavitySpec& cav) {
  int n_orb = cav.n_orb;
  if (n_orb == 0 && !cav.modes.empty()) n_orb = static_cast<int>(cav.modes.front().coupling.rows());
  out << "NMODES " << cav.n_modes() << " NORB " << n_orb << '\n';
  for (const auto& m : cav.modes) {
    out << "MODE omega=" << format_double(m.omega) << " nmax=" << m.n_max
        << " dnuc=" << format_double(m.nuclear_projection) << '\n';
    for (int p = 0; p < m.coupling.rows(); ++p)
      for (int q = p; q < m.coupling.cols(); ++q)
        if (m.coupling(p, q) != 0.0)
          out << p + 1 << ' ' << q + 1 << ' ' << format_double(m.coupling(p, q)) << '\n';
  }
}

ModeSpec make_diagonal_mode(int n_orb, double omega, int n_max, double g_diag,
                            double nuclear_projection) {
  ModeSpec m;
  m.omega = omega;
  m.n_max = n_max;
  m.coupling = g_diag * Mat::Identity(n_orb, n_orb);
  m.nuclear_projection = nuclear_projection;
  return m;
}

Fixture build_fixture(std::string_view name, std::span<const double> params) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi)
      throw Error("fixture " + std::string(name) + " takes " + std::to_string(lo) + "-" +
                  std::to_string(hi) + " parameters");
  };
  auto electrons = [&](std::size_t pos, int max_elec) {
    const double v = params.size() > pos ? params[pos] : 2.0;
    const int n = static_cast<int>(v);
    if (n != v || n < 1 || n > max_elec) throw Error("fixture: bad electron count");
    return n;
  };

  Fixture fx;
  auto& ints = fx.integrals;
  if (name == "hubbard_dimer") {
    need(2, 3);
    const double t = params[0], u = params[1];
    if (t <= 0.0) throw Error("hubbard_dimer: hopping t must be positive");
    const int n = electrons(2, 4);
    ints.n_orb = 2;
    ints.oei = Mat::Zero(2, 2);
    ints.oei(0, 1) = ints.oei(1, 0) = -t;
    ints.eri = Eri(2);
    ints.eri(0, 0, 0, 0) = u;
    ints.eri(1, 1, 1, 1) = u;
    ints.n_alpha = (n + 1) / 2;
    ints.n_beta = n / 2;
  } else if (name == "single_level") {
    need(2, 3);
    const int n = electrons(2, 2);
    ints.n_orb = 1;
    ints.oei = Mat::Constant(1, 1, params[0]);
    ints.eri = Eri(1);
    ints.eri(0, 0, 0, 0) = params[1];
    ints.n_alpha = (n + 1) / 2;
    ints.n_beta = n / 2;
  } else if (name == "photon_only") {
    need(1, 1);
    if (params[0] <= 0.0) throw Error("photon_only: omega must be positive");
    ints.n_orb = 1;
    ints.oei = Mat::Zero(1, 1);
    ints.eri = Eri(1);
    fx.cavity.modes.push_back(make_diagonal_mode(1, params[0], 5, 0.0));
    fx.cavity.n_orb = 1;
  } else {
    throw Error("unknown fixture '" + std::string(name) + "'");
  }
  return fx;
}

void check_compatible(const IntegralSet& ints, const CavitySpec& cav) {
  if (cav.n_orb != 0 && cav.n_orb != ints.n_orb)
    throw Error("cavity NORB=" + std::to_string(cav.n_orb) + " does not match integrals NORB=" +
                std::to_string(ints.n_orb));
  for (int a = 0; a < cav.n_modes(); ++a) {
    const auto& m = cav.modes[a];
    if (m.coupling.rows() != ints.n_orb || m.coupling.cols() != ints.n_orb)
      throw Error("cavity mode " + std::to_string(a) + ": NORB mismatch with integrals (" +
                  std::to_string(m.coupling.rows()) + " vs " + std::to_string(ints.n_orb) + ")");
    if (m.omega <= 0.0) throw Error("cavity mode " + std::to_string(a) + ": omega must be > 0");
    if (m.n_max < 0) throw Error("cavity mode " + std::to_string(a) + ": n_max must be >= 0");
    if ((m.coupling - m.coupling.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
      throw Error("cavity mode " + std::to_string(a) + ": coupling is not symmetric");
  }
}

CavitySpec fold_nuclear_projection(const CavitySpec& cav, int n_electrons) {
  CavitySpec out = cav;
  for (auto& m : out.modes) {
    if (m.nuclear_projection == 0.0) continue;
    if (n_electrons <= 0) throw Error("nuclear dipole projection needs at least one electron");
    m.coupling.diagonal().array() += m.nuclear_projection / n_electrons;
    m.nuclear_projection = 0.0;
  }
  return out;
}

}  // namespace qedafqmc
