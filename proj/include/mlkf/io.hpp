#ifndef MLKF_IO_HPP
#define MLKF_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"

namespace mlkf::io {

using json = nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_index(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string_view> fields;
};

struct CsvText {
  std::string text;
  std::vector<CsvRow> rows;  // non-blank lines
};

inline CsvText read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  CsvText csv;
  csv.text = ss.str();
  std::string_view all(csv.text);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= all.size()) {
    const std::size_t nl = all.find('\n', start);
    const std::string_view line = all.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (!trim(line).empty()) csv.rows.push_back({line_no, split(line)});
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return csv;
}

[[noreturn]] inline void row_error(const std::string& path, std::size_t line, const std::string& what) {
  throw input_error(path + ": row " + std::to_string(line) + ": " + what);
}

inline void expect_header(const std::string& path, const CsvText& csv, const std::vector<std::string_view>& names) {
  if (csv.rows.empty()) throw input_error(path + ": file is empty");
  const auto& first = csv.rows.front();
  if (first.fields.size() != names.size() || !std::equal(names.begin(), names.end(), first.fields.begin())) {
    std::string expected;
    for (std::size_t i = 0; i < names.size(); ++i) expected += (i ? "," : "") + std::string(names[i]);
    row_error(path, first.line, "expected header '" + expected + "'");
  }
}

}  // namespace detail

/// Numeric CSV matrix without a header.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  const auto csv = detail::read_csv(path);
  if (csv.rows.empty()) throw input_error(path + ": file is empty");
  const std::size_t cols = csv.rows.front().fields.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.fields.size() != cols) {
      detail::row_error(path, row.line, "expected " + std::to_string(cols) + " fields, found " +
                                            std::to_string(row.fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!detail::parse_double(row.fields[c], v) || !std::isfinite(v)) {
        detail::row_error(path, row.line, "field " + std::to_string(c + 1) + " is not a finite number ('" +
                                              std::string(row.fields[c]) + "')");
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return out;
}

/// Single-column numeric CSV without a header.
inline Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() != 1) throw input_error(path + ": expected a single column, found " + std::to_string(m.cols()));
  return m.col(0);
}

/// LayerSpec plus the external group label of each internal group, per layer.
struct LayerSpecFile {
  LayerSpec spec;
  std::vector<std::vector<long long>> group_labels;
};

/// CSV with header `variable,layer,group`, 1-based variable and layer ids, one row per
/// (variable, layer). Every layer must list every variable exactly once. Group labels are
/// positive integers; internal group order follows ascending label.
inline LayerSpecFile read_layer_spec_csv(const std::string& path) {
  const auto csv = detail::read_csv(path);
  detail::expect_header(path, csv, {"variable", "layer", "group"});
  std::map<long long, std::map<long long, long long>> layers;  // layer -> variable -> label
  long long max_var = 0;
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.fields.size() != 3) detail::row_error(path, row.line, "expected 3 fields");
    long long var = 0;
    long long layer = 0;
    long long group = 0;
    if (!detail::parse_index(row.fields[0], var) || var < 1) detail::row_error(path, row.line, "variable must be a positive integer");
    if (!detail::parse_index(row.fields[1], layer) || layer < 1) detail::row_error(path, row.line, "layer must be a positive integer");
    if (!detail::parse_index(row.fields[2], group) || group < 1) detail::row_error(path, row.line, "group must be a positive integer");
    if (!layers[layer].emplace(var, group).second) {
      detail::row_error(path, row.line, "variable " + std::to_string(var) + " listed twice in layer " + std::to_string(layer));
    }
    max_var = std::max(max_var, var);
  }
  if (layers.empty()) throw input_error(path + ": no layer rows");
  const auto N = static_cast<Index>(max_var);
  long long expected_layer = 1;
  LayerSpecFile out;
  std::vector<Partition> parts;
  for (const auto& [layer, vars] : layers) {
    if (layer != expected_layer) {
      throw input_error(path + ": layer ids must be 1..M without gaps (missing layer " + std::to_string(expected_layer) + ")");
    }
    ++expected_layer;
    if (vars.size() != N) {
      throw input_error(path + ": layer " + std::to_string(layer) + " lists " + std::to_string(vars.size()) +
                        " of " + std::to_string(N) + " variables (partial layer)");
    }
    std::map<long long, Index> dense;
    for (const auto& [var, label] : vars) dense.emplace(label, 0);
    std::vector<long long> labels;
    for (auto& [label, idx] : dense) {
      idx = labels.size();
      labels.push_back(label);
    }
    std::vector<Index> group_of(N);
    for (const auto& [var, label] : vars) group_of[static_cast<Index>(var - 1)] = dense.at(label);
    parts.push_back(Partition::from_labels(std::move(group_of)));
    out.group_labels.push_back(std::move(labels));
  }
  out.spec = LayerSpec(N, std::move(parts));
  return out;
}

/// Default 1..G labels for a LayerSpec built in code.
inline std::vector<std::vector<long long>> default_labels(const LayerSpec& spec) {
  std::vector<std::vector<long long>> out(spec.num_layers());
  for (Index m = 0; m < spec.num_layers(); ++m) {
    for (Index g = 0; g < spec.num_groups(m); ++g) out[m].push_back(static_cast<long long>(g + 1));
  }
  return out;
}

inline void write_layer_spec_csv(std::ostream& os, const LayerSpec& spec) {
  os << "variable,layer,group\n";
  for (Index m = 0; m < spec.num_layers(); ++m) {
    for (Index j = 0; j < spec.num_variables(); ++j) os << j + 1 << ',' << m + 1 << ',' << spec.group_of(j, m) + 1 << '\n';
  }
}

/// `variable,pvalue` with every variable 1..N listed once.
inline std::vector<double> read_variable_pvalues_csv(const std::string& path, Index N) {
  const auto csv = detail::read_csv(path);
  detail::expect_header(path, csv, {"variable", "pvalue"});
  std::vector<double> p(N, std::nan(""));
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.fields.size() != 2) detail::row_error(path, row.line, "expected 2 fields");
    long long var = 0;
    double v = 0.0;
    if (!detail::parse_index(row.fields[0], var) || var < 1 || static_cast<Index>(var) > N) {
      detail::row_error(path, row.line, "variable must lie in 1.." + std::to_string(N));
    }
    if (!detail::parse_double(row.fields[1], v)) detail::row_error(path, row.line, "p-value is not a number");
    if (!(v >= 0.0 && v <= 1.0)) detail::row_error(path, row.line, "p-value outside [0,1]");
    if (!std::isnan(p[static_cast<Index>(var - 1)])) detail::row_error(path, row.line, "variable listed twice");
    p[static_cast<Index>(var - 1)] = v;
  }
  for (Index j = 0; j < N; ++j) {
    if (std::isnan(p[j])) throw input_error(path + ": no p-value for variable " + std::to_string(j + 1));
  }
  return p;
}

/// `layer,group,pvalue` with group labels matching the LayerSpec file.
inline std::vector<std::vector<double>> read_group_pvalues_csv(const std::string& path, const LayerSpecFile& layers) {
  const auto csv = detail::read_csv(path);
  detail::expect_header(path, csv, {"layer", "group", "pvalue"});
  const auto& spec = layers.spec;
  std::vector<std::vector<double>> p(spec.num_layers());
  for (Index m = 0; m < spec.num_layers(); ++m) p[m].assign(spec.num_groups(m), std::nan(""));
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.fields.size() != 3) detail::row_error(path, row.line, "expected 3 fields");
    long long layer = 0;
    long long label = 0;
    double v = 0.0;
    if (!detail::parse_index(row.fields[0], layer) || layer < 1 || static_cast<Index>(layer) > spec.num_layers()) {
      detail::row_error(path, row.line, "layer must lie in 1.." + std::to_string(spec.num_layers()));
    }
    if (!detail::parse_index(row.fields[1], label)) detail::row_error(path, row.line, "group must be an integer");
    if (!detail::parse_double(row.fields[2], v)) detail::row_error(path, row.line, "p-value is not a number");
    if (!(v >= 0.0 && v <= 1.0)) detail::row_error(path, row.line, "p-value outside [0,1]");
    const auto& labels = layers.group_labels[static_cast<Index>(layer - 1)];
    const auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) detail::row_error(path, row.line, "unknown group " + std::to_string(label));
    auto& slot = p[static_cast<Index>(layer - 1)][static_cast<Index>(it - labels.begin())];
    if (!std::isnan(slot)) detail::row_error(path, row.line, "group listed twice");
    slot = v;
  }
  for (Index m = 0; m < spec.num_layers(); ++m) {
    for (Index g = 0; g < spec.num_groups(m); ++g) {
      if (std::isnan(p[m][g])) {
        throw input_error(path + ": no p-value for layer " + std::to_string(m + 1) + " group " +
                          std::to_string(layers.group_labels[m][g]));
      }
    }
  }
  return p;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << format_double(m(r, c));
    os << '\n';
  }
}

/// JSON number, or the string "inf" / "-inf" for infinities (JSON has no infinity literal).
inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

namespace detail {

inline void escape(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += static_cast<char>(ch);
        }
    }
  }
  out += '"';
}

inline void dump(std::string& out, const json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map storage: keys already sorted
        if (!first) {
          out += ',';
          out += nl;
        }
        first = false;
        out += pad;
        escape(out, it.key());
        out += indent > 0 ? ": " : ":";
        dump(out, it.value(), indent, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += indent > 0 ? ", " : ",";
        first = false;
        dump(out, v, indent, depth + 1);
      }
      out += ']';
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    case json::value_t::string:
      escape(out, j.get<std::string>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Sorted keys, doubles at 17 significant digits. indent = 0 gives the compact canonical form.
inline std::string to_string(const json& j, int indent = 2) {
  std::string out;
  detail::dump(out, j, indent, 0);
  if (indent > 0) out += '\n';
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Digest of the canonical compact JSON; independent of the order keys were inserted in.
inline std::string digest(const json& j) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_string(j, 0))));
  return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw input_error(path + ": write failed");
}

}  // namespace mlkf::io

#endif  // MLKF_IO_HPP
