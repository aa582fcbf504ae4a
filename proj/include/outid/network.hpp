#ifndef OUTID_NETWORK_HPP
#define OUTID_NETWORK_HPP

#include <algorithm>
#include <cctype>
#include <complex>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace outid {

using Complex = std::complex<double>;

/// Parse failure with 1-based line/column of the offending token.
class CaseSyntaxError : public std::runtime_error {
 public:
  CaseSyntaxError(const std::string& msg, int line, int col)
      : std::runtime_error("syntax error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

class CaseSemanticError : public std::runtime_error {
 public:
  explicit CaseSemanticError(const std::string& msg)
      : std::runtime_error("semantic error: " + msg) {}
};

enum class BusKind { Reference, Generator, Load };

struct Bus {
  int id = 0;           // densified internal id, 1..N
  int external_id = 0;  // id as written in the case file
  BusKind kind = BusKind::Load;
  double p_load = 0.0, q_load = 0.0;  // demand, p.u.
  double p_gen = 0.0, q_gen = 0.0;    // dispatched generation, p.u.
  double v_setpoint = 1.0;            // used for Reference/Generator buses
  double shunt_g = 0.0, shunt_b = 0.0;

  double p_inject() const { return p_gen - p_load; }
  double q_inject() const { return q_gen - q_load; }
};

struct Branch {
  int id = 0;  // 1-based line index, case-file order
  int from_bus = 0, to_bus = 0;  // internal bus ids
  double r = 0.0, x = 0.0;
  double b_charging = 0.0;
  double tap = 1.0;  // off-nominal turns ratio at the from side
  bool in_service = true;

  Complex series_admittance() const { return 1.0 / Complex(r, x); }
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double base_mva = 100.0;

  Eigen::MatrixXd incidence;        // N x L signed incidence, +1 from, -1 to
  Eigen::MatrixXcd admittance;      // N x N bus admittance (pi-model)
  Eigen::VectorXcd line_admittance; // length L series admittances

  int bus_count() const { return static_cast<int>(buses.size()); }
  int line_count() const { return static_cast<int>(branches.size()); }

  int reference_bus() const {
    for (const auto& b : buses)
      if (b.kind == BusKind::Reference) return b.id;
    throw CaseSemanticError("no reference bus");
  }

  const Branch& branch(int line_id) const {
    if (line_id < 1 || line_id > line_count())
      throw std::out_of_range("unknown line id " + std::to_string(line_id));
    return branches[static_cast<size_t>(line_id - 1)];
  }
};

/// Y with series terms per the incidence identity plus shunt and
/// half-line-charging terms on the diagonals (standard pi-model). Branch taps
/// enter the same way MATPOWER applies them.
inline Eigen::MatrixXcd build_admittance(const NetworkModel& model) {
  const int n = model.bus_count();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : model.branches) {
    if (!br.in_service) continue;
    const Complex ys = br.series_admittance();
    const Complex bc(0.0, br.b_charging / 2.0);
    const double t = br.tap;
    const int f = br.from_bus - 1, to = br.to_bus - 1;
    y(f, f) += (ys + bc) / (t * t);
    y(to, to) += ys + bc;
    y(f, to) += -ys / t;
    y(to, f) += -ys / t;
  }
  for (const auto& b : model.buses)
    y(b.id - 1, b.id - 1) += Complex(b.shunt_g, b.shunt_b);
  return y;
}

inline void finalize_model(NetworkModel& model) {
  const int n = model.bus_count();
  const int l = model.line_count();
  model.incidence = Eigen::MatrixXd::Zero(n, l);
  model.line_admittance.resize(l);
  for (int j = 0; j < l; ++j) {
    const Branch& br = model.branches[static_cast<size_t>(j)];
    model.incidence(br.from_bus - 1, j) = 1.0;
    model.incidence(br.to_bus - 1, j) = -1.0;
    model.line_admittance(j) = br.series_admittance();
  }
  model.admittance = build_admittance(model);
}

inline void validate_model(const NetworkModel& model) {
  std::set<int> seen;
  int refs = 0;
  for (const auto& b : model.buses) {
    if (!seen.insert(b.external_id).second)
      throw CaseSemanticError("duplicate bus id " +
                              std::to_string(b.external_id));
    if (b.kind == BusKind::Reference) ++refs;
  }
  if (refs == 0) throw CaseSemanticError("no reference bus");
  if (refs > 1) throw CaseSemanticError("more than one reference bus");
  for (const auto& br : model.branches) {
    if (br.from_bus == br.to_bus)
      throw CaseSemanticError("branch " + std::to_string(br.id) +
                              " connects a bus to itself");
    if (br.in_service && br.x == 0.0)
      throw CaseSemanticError("branch " + std::to_string(br.id) +
                              " has zero reactance");
  }
}

namespace detail {

struct Token {
  std::string text;
  int line, col;
};

inline std::vector<Token> tokenize_case(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '%') {  // comment to end of line
      while (i < text.size() && text[i] != '\n') advance(text[i++]);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      advance(c);
      ++i;
      continue;
    }
    if (c == '[' || c == ']' || c == ';' || c == '=') {
      out.push_back({std::string(1, c), line, col});
      advance(c);
      ++i;
      continue;
    }
    if (c == '\'') {  // quoted string, e.g. the version field
      int sl = line, sc = col;
      advance(c);
      ++i;
      std::string s = "'";
      while (i < text.size() && text[i] != '\'') {
        s += text[i];
        advance(text[i++]);
      }
      if (i == text.size()) throw CaseSyntaxError("unterminated string", sl, sc);
      s += '\'';
      advance(text[i++]);
      out.push_back({s, sl, sc});
      continue;
    }
    int sl = line, sc = col;
    std::string word;
    while (i < text.size()) {
      char w = text[i];
      if (std::isspace(static_cast<unsigned char>(w)) || w == '[' ||
          w == ']' || w == ';' || w == '=' || w == ',' || w == '%')
        break;
      word += w;
      advance(w);
      ++i;
    }
    out.push_back({word, sl, sc});
  }
  return out;
}

inline double parse_number(const Token& t) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t.text, &pos);
  } catch (const std::exception&) {
    throw CaseSyntaxError("expected a number, got '" + t.text + "'", t.line,
                          t.col);
  }
  if (pos != t.text.size())
    throw CaseSyntaxError("expected a number, got '" + t.text + "'", t.line,
                          t.col);
  return v;
}

}  // namespace detail

/// Parse the documented plain-text MATPOWER subset (docs/case-format.md):
/// mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch. Bus ids are densified to 1..N
/// in file order; the original ids are kept in Bus::external_id.
inline NetworkModel parse_case(const std::string& text) {
  using detail::Token;
  auto toks = detail::tokenize_case(text);
  double base_mva = 100.0;
  std::vector<std::vector<double>> bus_rows, gen_rows, branch_rows;

  size_t i = 0;
  auto expect = [&](const std::string& s) {
    if (i >= toks.size())
      throw CaseSyntaxError("unexpected end of input, expected '" + s + "'",
                            toks.empty() ? 1 : toks.back().line,
                            toks.empty() ? 1 : toks.back().col);
    if (toks[i].text != s)
      throw CaseSyntaxError("expected '" + s + "', got '" + toks[i].text + "'",
                            toks[i].line, toks[i].col);
    ++i;
  };
  while (i < toks.size()) {
    const Token& t = toks[i];
    if (t.text == "function") {  // tolerate the MATLAB function header
      while (i < toks.size() && toks[i].line == t.line) ++i;
      continue;
    }
    if (t.text.rfind("mpc.", 0) != 0)
      throw CaseSyntaxError("expected an mpc.<field> assignment, got '" +
                                t.text + "'",
                            t.line, t.col);
    std::string field = t.text.substr(4);
    ++i;
    expect("=");
    if (field == "baseMVA" || field == "version") {
      if (i >= toks.size())
        throw CaseSyntaxError("missing value for " + field, t.line, t.col);
      if (field == "baseMVA") base_mva = detail::parse_number(toks[i]);
      ++i;
      expect(";");
      continue;
    }
    std::vector<std::vector<double>>* table = nullptr;
    if (field == "bus") table = &bus_rows;
    else if (field == "gen") table = &gen_rows;
    else if (field == "branch") table = &branch_rows;
    else
      throw CaseSyntaxError("unsupported field 'mpc." + field + "'", t.line,
                            t.col);
    expect("[");
    std::vector<double> row;
    while (i < toks.size() && toks[i].text != "]") {
      if (toks[i].text == ";") {
        if (!row.empty()) table->push_back(row);
        row.clear();
        ++i;
        continue;
      }
      row.push_back(detail::parse_number(toks[i]));
      ++i;
    }
    if (!row.empty()) table->push_back(row);
    expect("]");
    expect(";");
  }
  if (bus_rows.empty()) throw CaseSemanticError("case has no bus table");
  if (base_mva <= 0.0) throw CaseSemanticError("baseMVA must be positive");

  NetworkModel model;
  model.base_mva = base_mva;
  std::map<int, int> id_map;  // external -> internal
  for (const auto& row : bus_rows) {
    if (row.size() < 6)
      throw CaseSemanticError("bus row needs at least 6 columns");
    Bus b;
    b.external_id = static_cast<int>(row[0]);
    b.id = static_cast<int>(model.buses.size()) + 1;
    const int type = static_cast<int>(row[1]);
    if (type == 3) b.kind = BusKind::Reference;
    else if (type == 2) b.kind = BusKind::Generator;
    else if (type == 1) b.kind = BusKind::Load;
    else
      throw CaseSemanticError("bus " + std::to_string(b.external_id) +
                              " has unsupported type " + std::to_string(type));
    b.p_load = row[2] / base_mva;
    b.q_load = row[3] / base_mva;
    b.shunt_g = row[4] / base_mva;
    b.shunt_b = row[5] / base_mva;
    if (!id_map.emplace(b.external_id, b.id).second)
      throw CaseSemanticError("duplicate bus id " +
                              std::to_string(b.external_id));
    model.buses.push_back(b);
  }
  auto lookup = [&](double ext, const std::string& what) {
    auto it = id_map.find(static_cast<int>(ext));
    if (it == id_map.end())
      throw CaseSemanticError(what + " references unknown bus " +
                              std::to_string(static_cast<int>(ext)));
    return it->second;
  };
  for (const auto& row : gen_rows) {
    if (row.size() < 8)
      throw CaseSemanticError("gen row needs at least 8 columns");
    if (row[7] == 0.0) continue;  // out of service
    Bus& b = model.buses[static_cast<size_t>(lookup(row[0], "generator")) - 1];
    b.p_gen += row[1] / base_mva;
    b.q_gen += row[2] / base_mva;
    b.v_setpoint = row[5];
  }
  for (const auto& row : branch_rows) {
    if (row.size() < 11)
      throw CaseSemanticError("branch row needs at least 11 columns");
    Branch br;
    br.id = static_cast<int>(model.branches.size()) + 1;
    br.from_bus = lookup(row[0], "branch " + std::to_string(br.id));
    br.to_bus = lookup(row[1], "branch " + std::to_string(br.id));
    br.r = row[2];
    br.x = row[3];
    br.b_charging = row[4];
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    if (row[9] != 0.0)
      throw CaseSemanticError("branch " + std::to_string(br.id) +
                              ": phase-shift angles are not supported");
    br.in_service = row[10] != 0.0;
    model.branches.push_back(br);
  }
  validate_model(model);
  finalize_model(model);
  return model;
}

/// Canonical case-text serialization; parse_case(serialize_case(m)) is
/// identical to m. Numbers use 17 significant digits.
inline std::string serialize_case(const NetworkModel& model) {
  std::ostringstream os;
  os.precision(17);
  os << "mpc.baseMVA = " << model.base_mva << ";\n";
  os << "mpc.bus = [\n";
  for (const auto& b : model.buses) {
    int type = b.kind == BusKind::Reference ? 3
               : b.kind == BusKind::Generator ? 2 : 1;
    os << "  " << b.external_id << " " << type << " "
       << b.p_load * model.base_mva << " " << b.q_load * model.base_mva << " "
       << b.shunt_g * model.base_mva << " " << b.shunt_b * model.base_mva
       << " 1 1 0 0 1 1.1 0.9;\n";
  }
  os << "];\n";
  os << "mpc.gen = [\n";
  for (const auto& b : model.buses) {
    if (b.p_gen != 0.0 || b.q_gen != 0.0 || b.kind != BusKind::Load)
      os << "  " << b.external_id << " " << b.p_gen * model.base_mva << " "
         << b.q_gen * model.base_mva << " 0 0 " << b.v_setpoint
         << " " << model.base_mva << " 1 0 0;\n";
  }
  os << "];\n";
  os << "mpc.branch = [\n";
  for (const auto& br : model.branches) {
    const Bus& f = model.buses[static_cast<size_t>(br.from_bus) - 1];
    const Bus& t = model.buses[static_cast<size_t>(br.to_bus) - 1];
    os << "  " << f.external_id << " " << t.external_id << " " << br.r << " "
       << br.x << " " << br.b_charging << " 0 0 0 "
       << (br.tap == 1.0 ? 0.0 : br.tap) << " 0 " << (br.in_service ? 1 : 0)
       << ";\n";
  }
  os << "];\n";
  return os.str();
}

/// Copy with the given lines switched out of service and Y rebuilt.
inline NetworkModel remove_lines(const NetworkModel& model,
                                 const std::set<int>& lines) {
  NetworkModel out = model;
  for (int id : lines) {
    if (id < 1 || id > out.line_count())
      throw std::out_of_range("unknown line id " + std::to_string(id));
    out.branches[static_cast<size_t>(id - 1)].in_service = false;
  }
  out.admittance = build_admittance(out);
  return out;
}

struct IslandReport {
  int count = 0;
  std::vector<int> labels;  // per bus, 0-based component index
};

/// Connected components of the in-service branch graph over all N buses.
inline IslandReport count_islands(const NetworkModel& model) {
  const int n = model.bus_count();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const auto& br : model.branches) {
    if (!br.in_service) continue;
    adj[static_cast<size_t>(br.from_bus - 1)].push_back(br.to_bus - 1);
    adj[static_cast<size_t>(br.to_bus - 1)].push_back(br.from_bus - 1);
  }
  IslandReport rep;
  rep.labels.assign(static_cast<size_t>(n), -1);
  for (int s = 0; s < n; ++s) {
    if (rep.labels[static_cast<size_t>(s)] != -1) continue;
    std::vector<int> stack{s};
    rep.labels[static_cast<size_t>(s)] = rep.count;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (rep.labels[static_cast<size_t>(v)] == -1) {
          rep.labels[static_cast<size_t>(v)] = rep.count;
          stack.push_back(v);
        }
      }
    }
    ++rep.count;
  }
  return rep;
}

}  // namespace outid

#endif  // OUTID_NETWORK_HPP
