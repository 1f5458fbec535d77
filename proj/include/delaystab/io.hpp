// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaystab/nbv.hpp"
#include "delaystab/perturbation.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

/// 17 significant digits: enough for exact double round-trips, and a stable
/// byte format for deterministic outputs.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// JSON value for a double; non-finite values become null.
inline std::string json_number(double x) {
  if (!std::isfinite(x)) return "null";
  return format_double(x);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open for writing");
  out << content;
}

namespace detail {

inline std::string line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return std::to_string(line);
}

inline double require_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline Mat parse_matrix(const nlohmann::json& j, int dim,
                        const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ParseError(path + ": expected " + std::to_string(dim) + " rows");
  Mat m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw ParseError(path + "[" + std::to_string(r) + "]: expected " +
                       std::to_string(dim) + " entries");
    for (int c = 0; c < dim; ++c)
      m(r, c) = require_number(row[c], path + "[" + std::to_string(r) + "][" +
                                           std::to_string(c) + "]");
  }
  return m;
}

}  // namespace detail

/// Parses the system file format. Field errors name the offending JSON path;
/// syntax errors carry the line number.
inline MatrixNBV parse_system(const std::string& text,
                              const std::string& source = "<system>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ":" + detail::line_of_offset(text, e.byte) +
                     ": " + e.what());
  }
  try {
    if (!j.is_object()) throw ParseError("top level: expected an object");
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
      throw ParseError("dimension: required integer field");
    MatrixNBV m;
    m.dimension = j["dimension"].get<int>();
    if (j.contains("norm")) {
      if (!j["norm"].is_string()) throw ParseError("norm: expected a string");
      m.norm = op_norm_from_name(j["norm"].get<std::string>());
    }
    if (j.contains("atoms")) {
      if (!j["atoms"].is_array()) throw ParseError("atoms: expected an array");
      for (std::size_t k = 0; k < j["atoms"].size(); ++k) {
        const auto& a = j["atoms"][k];
        const std::string path = "atoms[" + std::to_string(k) + "]";
        if (!a.is_object() || !a.contains("tau") || !a.contains("matrix"))
          throw ParseError(path + ": expected {tau, matrix}");
        Atom atom;
        atom.tau = detail::require_number(a["tau"], path + ".tau");
        atom.matrix =
            detail::parse_matrix(a["matrix"], m.dimension, path + ".matrix");
        m.atoms.push_back(std::move(atom));
      }
    }
    if (j.contains("density")) {
      const auto& d = j["density"];
      if (!d.is_object() || !d.contains("breakpoints") || !d.contains("pieces"))
        throw ParseError("density: expected {breakpoints, pieces}");
      if (!d["breakpoints"].is_array())
        throw ParseError("density.breakpoints: expected an array");
      for (std::size_t i = 0; i < d["breakpoints"].size(); ++i)
        m.breakpoints.push_back(detail::require_number(
            d["breakpoints"][i], "density.breakpoints[" + std::to_string(i) + "]"));
      if (!d["pieces"].is_array())
        throw ParseError("density.pieces: expected an array");
      for (std::size_t i = 0; i < d["pieces"].size(); ++i)
        m.pieces.push_back(detail::parse_matrix(
            d["pieces"][i], m.dimension, "density.pieces[" + std::to_string(i) + "]"));
    }
    validate(m);
    return m;
  } catch (const ParseError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline MatrixNBV load_system(const std::string& path) {
  return parse_system(read_file(path), path);
}

inline Perturbation parse_perturbation(const std::string& text,
                                       const std::string& source = "<perturbation>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ":" + detail::line_of_offset(text, e.byte) +
                     ": " + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
      throw ParseError("kind: required string field");
    const std::string kind = j["kind"].get<std::string>();
    Perturbation p;
    if (kind == "piecewise_linear") {
      p.kind = Perturbation::Kind::PiecewiseLinear;
      if (!j.contains("knots") || !j["knots"].is_array())
        throw ParseError("knots: required array field");
      for (std::size_t i = 0; i < j["knots"].size(); ++i) {
        const auto& k = j["knots"][i];
        const std::string path = "knots[" + std::to_string(i) + "]";
        if (!k.is_array() || k.size() != 2)
          throw ParseError(path + ": expected [theta, value]");
        p.knots.push_back({detail::require_number(k[0], path + "[0]"),
                           detail::require_number(k[1], path + "[1]")});
      }
    } else if (kind == "binning") {
      p.kind = Perturbation::Kind::Binning;
      if (!j.contains("bins") || !j["bins"].is_array())
        throw ParseError("bins: required array field");
      for (std::size_t i = 0; i < j["bins"].size(); ++i) {
        const auto& b = j["bins"][i];
        const std::string path = "bins[" + std::to_string(i) + "]";
        if (!b.is_object() || !b.contains("from") || !b.contains("to"))
          throw ParseError(path + ": expected {from, to}");
        if (!b["from"].is_array() || b["from"].size() != 2)
          throw ParseError(path + ".from: expected [lo, hi]");
        p.bins.push_back({detail::require_number(b["from"][0], path + ".from[0]"),
                          detail::require_number(b["from"][1], path + ".from[1]"),
                          detail::require_number(b["to"], path + ".to")});
      }
    } else {
      throw ParseError("kind: expected \"piecewise_linear\" or \"binning\"");
    }
    validate(p);
    return p;
  } catch (const ParseError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline Perturbation load_perturbation(const std::string& path) {
  return parse_perturbation(read_file(path), path);
}

inline std::string serialize_matrix(const Mat& m) {
  std::string s = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) s += ",";
    s += "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) s += ",";
      s += format_double(m(r, c));
    }
    s += "]";
  }
  s += "]";
  return s;
}

inline std::string serialize_system(const MatrixNBV& m) {
  std::string s = "{\"dimension\":" + std::to_string(m.dimension) +
                  ",\"norm\":\"" + op_norm_name(m.norm) + "\"";
  s += ",\"atoms\":[";
  for (std::size_t k = 0; k < m.atoms.size(); ++k) {
    if (k) s += ",";
    s += "{\"tau\":" + format_double(m.atoms[k].tau) +
         ",\"matrix\":" + serialize_matrix(m.atoms[k].matrix) + "}";
  }
  s += "]";
  if (m.has_density()) {
    s += ",\"density\":{\"breakpoints\":[";
    for (std::size_t j = 0; j < m.breakpoints.size(); ++j) {
      if (j) s += ",";
      s += format_double(m.breakpoints[j]);
    }
    s += "],\"pieces\":[";
    for (std::size_t j = 0; j < m.pieces.size(); ++j) {
      if (j) s += ",";
      s += serialize_matrix(m.pieces[j]);
    }
    s += "]}";
  }
  s += "}\n";
  return s;
}

inline std::string serialize_perturbation(const Perturbation& p) {
  std::string s;
  if (p.kind == Perturbation::Kind::PiecewiseLinear) {
    s = "{\"kind\":\"piecewise_linear\",\"knots\":[";
    for (std::size_t i = 0; i < p.knots.size(); ++i) {
      if (i) s += ",";
      s += "[" + format_double(p.knots[i].theta) + "," +
           format_double(p.knots[i].value) + "]";
    }
    s += "]}\n";
  } else {
    s = "{\"kind\":\"binning\",\"bins\":[";
    for (std::size_t i = 0; i < p.bins.size(); ++i) {
      if (i) s += ",";
      s += "{\"from\":[" + format_double(p.bins[i].lo) + "," +
           format_double(p.bins[i].hi) + "],\"to\":" +
           format_double(p.bins[i].target) + "}";
    }
    s += "]}\n";
  }
  return s;
}

}  // namespace delaystab
