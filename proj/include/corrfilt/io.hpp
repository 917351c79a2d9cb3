/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/evaluation.hpp"
#include "corrfilt/hnfm.hpp"
#include "corrfilt/kl.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/networks.hpp"

namespace corrfilt {

using Json = nlohmann::ordered_json;

// CSV

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

// Splits one CSV line; fields may be double-quoted with "" as an escaped quote.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": unterminated quote");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// First line: column labels. Every further non-blank line: one numeric
/// record. Rows are counted from 1 at the header.
inline DataMatrix read_data_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    labels = detail::split_csv_line(line, row);
    break;
  }
  if (labels.empty()) throw Error(ErrorKind::ParseError, "no header row");
  if (!labels.empty() && labels[0].rfind("\xEF\xBB\xBF", 0) == 0) labels[0] = labels[0].substr(3);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j].empty()) throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(j + 1) + ": empty label");
  }
  const std::size_t n = labels.size();
  std::vector<double> values;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line, row);
    if (fields.size() != n) {
      throw Error(ErrorKind::RaggedRows, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                             " fields, header has " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = detail::parse_double(fields[j]);
      if (!v) {
        throw Error(ErrorKind::NonNumericCell, "row " + std::to_string(row) + ", column " + std::to_string(j + 1) + " (" + labels[j] +
                                                   "): '" + fields[j] + "'");
      }
      values.push_back(*v);
    }
    ++records;
  }
  if (records == 0) throw Error(ErrorKind::DimensionTooSmall, "no data rows after the header");
  Matrix x(static_cast<Eigen::Index>(records), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < records; ++r) {
    for (std::size_t j = 0; j < n; ++j) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = values[r * n + j];
  }
  return DataMatrix(std::move(x), std::move(labels));
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  return in;
}

inline DataMatrix read_data_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_data_csv(in);
}

/// A square matrix in the data layout: header of labels, one row per element.
inline CorrelationMatrix read_correlation_csv(const std::string& path) {
  const DataMatrix m = read_data_csv(path);
  if (m.records() != m.elements()) {
    throw Error(ErrorKind::DimensionMismatch, path + ": correlation file has " + std::to_string(m.records()) + " rows and " +
                                                  std::to_string(m.elements()) + " columns");
  }
  return CorrelationMatrix(m.values(), m.labels());
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels) {
  for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << detail::csv_field(labels[j]);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_number(m(i, j));
    out << '\n';
  }
}

inline std::string correlation_csv(const CorrelationMatrix& c) {
  std::ostringstream out;
  write_matrix_csv(out, c.values(), c.labels());
  return out.str();
}

inline std::string data_csv(const DataMatrix& d) {
  std::ostringstream out;
  write_matrix_csv(out, d.values(), d.labels());
  return out.str();
}

// Graphs

inline Json graph_json(const CorrelationGraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    Json je = {{"source", e.i}, {"target", e.j}, {"source_label", g.labels[e.i]}, {"target_label", g.labels[e.j]}, {"weight", e.weight}};
    if (e.support) je["support"] = *e.support;
    edges.push_back(std::move(je));
  }
  return {{"kind", std::string(to_string(g.kind))}, {"n", g.n}, {"labels", g.labels}, {"edges", std::move(edges)}};
}

inline std::string graph_dot(const CorrelationGraph& g) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::string out = "graph " + std::string(to_string(g.kind)) + " {\n";
  for (std::size_t i = 0; i < g.n; ++i) out += "  " + std::to_string(i) + " [label=" + quote(g.labels[i]) + "];\n";
  for (const auto& e : g.edges) {
    out += "  " + std::to_string(e.i) + " -- " + std::to_string(e.j) + " [weight=" + detail::format_number(e.weight);
    std::string label = detail::format_number(e.weight);
    if (e.support) label += " (" + detail::format_number(*e.support) + ")";
    out += ", label=" + quote(label) + "];\n";
  }
  return out + "}\n";
}

// Trees and factor models

inline Json dendrogram_json(const Dendrogram& d) {
  Json nodes = Json::array();
  const std::size_t n = d.leaf_count();
  for (std::size_t k = 0; k < d.internal_count(); ++k) {
    const auto& nd = d.nodes()[k];
    Json j = {{"id", n + k}, {"children", nd.children}, {"rho", nd.rho}};
    if (nd.support) j["support"] = *nd.support;
    nodes.push_back(std::move(j));
  }
  Json out = {{"labels", d.labels()}, {"nodes", std::move(nodes)}};
  if (d.linkage()) out["linkage"] = std::string(to_string(*d.linkage()));
  return out;
}

inline Dendrogram dendrogram_from_json(const Json& j) {
  try {
    const auto labels = j.at("labels").get<std::vector<std::string>>();
    std::vector<DendrogramNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      DendrogramNode nd;
      nd.children = jn.at("children").get<std::vector<std::size_t>>();
      nd.rho = jn.at("rho").get<double>();
      if (jn.contains("support")) nd.support = jn.at("support").get<double>();
      nodes.push_back(std::move(nd));
    }
    std::optional<Linkage> linkage;
    if (j.contains("linkage")) linkage = j.at("linkage").get<std::string>() == "SLCA" ? Linkage::Single : Linkage::Average;
    return Dendrogram(labels, std::move(nodes), linkage);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("dendrogram JSON: ") + e.what());
  }
}

inline Json hnfm_json(const HnfmSpec& spec) {
  Json out = dendrogram_json(spec.tree);
  for (std::size_t k = 0; k < spec.gamma.size(); ++k) out["nodes"][k]["gamma"] = spec.gamma[k];
  out["newick"] = to_newick(spec.tree);
  out["eta"] = spec.eta;
  out["root_sign"] = spec.root_sign ? Json(*spec.root_sign) : Json(nullptr);
  out["mu"] = spec.mu ? Json(*spec.mu) : Json(nullptr);
  return out;
}

inline HnfmSpec hnfm_from_json(const Json& j) {
  HnfmSpec spec;
  spec.tree = dendrogram_from_json(j);
  try {
    for (const auto& jn : j.at("nodes")) spec.gamma.push_back(jn.at("gamma").get<double>());
    spec.eta = j.at("eta").get<std::vector<double>>();
    if (j.contains("root_sign") && !j.at("root_sign").is_null()) spec.root_sign = j.at("root_sign").get<std::vector<int>>();
    if (j.contains("mu") && !j.at("mu").is_null()) spec.mu = j.at("mu").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("factor model JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

// Evaluation

inline Json kl_reference_json(const KlReference& r) {
  return {{"n", r.n}, {"t", r.t}, {"e_sigma_c", r.e_sigma_c}, {"e_c_sigma", r.e_c_sigma}, {"e_c_c", r.e_c_c}};
}

inline Json plane_point_json(const PlanePoint& p) {
  return {{"label", p.label}, {"x", p.x}, {"y", p.y}, {"x_err", p.x_err}, {"y_err", p.y_err}};
}

inline Json report_json(const EvaluationReport& r) {
  Json points = Json::array();
  for (const auto& p : r.points) points.push_back(plane_point_json(p));
  Json curve = Json::array();
  for (const auto& ap : r.alpha_curve) {
    Json j = plane_point_json(ap.point);
    j["alpha"] = ap.alpha;
    curve.push_back(std::move(j));
  }
  Json out = {
      {"n", r.n},
      {"t", r.t},
      {"replicas", r.replicas},
      {"seed", r.seed},
      {"kl_mode", std::string(to_string(r.kl_mode))},
      {"stability_pairs", {{"count", r.stability_pairs}, {"subsampled", r.pairs_subsampled}}},
      {"reference", {{"x", 0.0}, {"y", r.reference.y}, {"y_low", r.reference.y_low}, {"y_high", r.reference.y_high}, {"source", r.reference.source}}},
      {"points", std::move(points)},
      {"alpha_curve", std::move(curve)},
      {"alpha_k", r.alpha_k ? Json(*r.alpha_k) : Json(nullptr)},
      {"alpha_frobenius", r.alpha_frobenius ? Json(*r.alpha_frobenius) : Json(nullptr)},
  };
  if (r.t > r.n + 1) out["wishart"] = kl_reference_json(wishart_expectations(r.n, r.t));
  return out;
}

/// One row per plane point, per alpha-curve point and for the reference.
inline std::string report_csv(const EvaluationReport& r) {
  std::string out = "series,label,alpha,x,y,x_err,y_err\n";
  auto row = [&](const char* series, const PlanePoint& p, const std::string& alpha) {
    out += std::string(series) + "," + detail::csv_field(p.label) + "," + alpha + "," + detail::format_number(p.x) + "," +
           detail::format_number(p.y) + "," + detail::format_number(p.x_err) + "," + detail::format_number(p.y_err) + "\n";
  };
  for (const auto& p : r.points) row("filter", p, "");
  for (const auto& ap : r.alpha_curve) row("alpha_curve", ap.point, detail::format_number(ap.alpha));
  PlanePoint ref{"reference", 0.0, r.reference.y, 0.0, 0.5 * (r.reference.y_high - r.reference.y_low)};
  row("reference", ref, "");
  return out;
}

// Manifest

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace corrfilt
