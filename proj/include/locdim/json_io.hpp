#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace locdim {

using json = nlohmann::json;

namespace detail {

inline void dump_string(std::ostringstream& os, const std::string& s) {
  // reuse the library's escaping for strings
  os << json(s).dump();
}

inline void dump_value(std::ostringstream& os, const json& j, int indent, int level) {
  auto newline = [&](int lvl) {
    if (indent < 0) return;
    os << '\n' << std::string(static_cast<size_t>(indent * lvl), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { os << "{}"; return; }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        newline(level + 1);
        dump_string(os, it.key());
        os << (indent < 0 ? ":" : ": ");
        dump_value(os, it.value(), indent, level + 1);
      }
      newline(level);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { os << "[]"; return; }
      // numeric arrays stay on one line
      bool flat = true;
      for (const auto& e : j)
        if (e.is_structured()) { flat = false; break; }
      os << '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (flat && indent >= 0 ? ", " : ",");
        first = false;
        if (!flat) newline(level + 1);
        dump_value(os, e, indent, level + 1);
      }
      if (!flat) newline(level);
      os << ']';
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) { os << "null"; return; }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf;
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

// Serializes with every double printed to 17 significant digits so that a
// round trip through text is exact and output is byte-stable.
inline std::string dump_json(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::dump_value(os, j, indent, 0);
  return os.str();
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << dump_json(j) << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace locdim
