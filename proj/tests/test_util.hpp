#ifndef OUTID_TEST_UTIL_HPP
#define OUTID_TEST_UTIL_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "outid/network.hpp"

namespace testutil {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline outid::NetworkModel load_case39() {
  static const outid::NetworkModel model =
      outid::parse_case(read_file(std::string(OUTID_DATA_DIR) + "/case39.m"));
  return model;
}

/// Two buses joined by one line: bus 1 reference, bus 2 load.
inline std::string two_bus_case(double r = 0.0, double x = 0.1,
                                double load_mw = 0.0, double load_mvar = 0.0) {
  std::ostringstream os;
  os.precision(17);
  os << "mpc.baseMVA = 100;\n"
     << "mpc.bus = [\n"
     << "  1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
     << "  2 1 " << load_mw << " " << load_mvar
     << " 0 0 1 1 0 345 1 1.1 0.9;\n"
     << "];\n"
     << "mpc.gen = [\n  1 0 0 999 -999 1.0 100 1 999 0;\n];\n"
     << "mpc.branch = [\n  1 2 " << r << " " << x << " 0 0 0 0 0 0 1;\n];\n";
  return os.str();
}

}  // namespace testutil

#endif
