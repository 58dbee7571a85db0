// SPDX-License-Identifier: Apache-2.0
#pragma once

// Weighted categorical survey microdata: schema, encoded storage, CSV and
// schema-file I/O, and a marginals-driven synthetic generator.
//
// Cells are stored as 0-based category codes in declaration order. Files
// always carry category labels, never codes, so encoded data stays stable
// when a schema gains categories.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "surveykit/error.hpp"
#include "surveykit/rng.hpp"

namespace surveykit {

enum class VariableKind { nominal, ordinal, binary };

inline const char* to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::nominal: return "nominal";
    case VariableKind::ordinal: return "ordinal";
    case VariableKind::binary: return "binary";
  }
  return "nominal";
}

inline VariableKind parse_variable_kind(std::string_view text) {
  if (text == "nominal") return VariableKind::nominal;
  if (text == "ordinal") return VariableKind::ordinal;
  if (text == "binary") return VariableKind::binary;
  fail(ErrorCode::parse_error, "unknown variable kind '" + std::string(text) + "'");
}

struct VariableSpec {
  std::string name;
  std::vector<std::string> categories;
  VariableKind kind = VariableKind::nominal;

  std::size_t category_count() const { return categories.size(); }

  int code_of(std::string_view label) const {
    for (std::size_t k = 0; k < categories.size(); ++k) {
      if (categories[k] == label) return static_cast<int>(k);
    }
    return -1;
  }

  void validate() const {
    require(categories.size() >= 2, ErrorCode::schema_mismatch,
            "variable '" + name + "' declares fewer than 2 categories");
    for (std::size_t a = 0; a < categories.size(); ++a) {
      for (std::size_t b = a + 1; b < categories.size(); ++b) {
        require(categories[a] != categories[b], ErrorCode::schema_mismatch,
                "variable '" + name + "' has duplicate category '" + categories[a] + "'");
      }
    }
  }

  bool operator==(const VariableSpec&) const = default;
};

struct CategoricalDataset {
  std::vector<VariableSpec> specs;
  std::vector<int> cells;      // row-major, n_rows x n_vars
  std::vector<double> weights; // survey design weights, >= 0

  std::size_t n_rows() const { return specs.empty() ? 0 : cells.size() / specs.size(); }
  std::size_t n_vars() const { return specs.size(); }

  std::span<const int> row(std::size_t i) const {
    return {cells.data() + i * n_vars(), n_vars()};
  }
  std::span<int> row(std::size_t i) { return {cells.data() + i * n_vars(), n_vars()}; }

  int at(std::size_t i, std::size_t j) const { return cells[i * n_vars() + j]; }

  void validate() const {
    for (const auto& spec : specs) spec.validate();
    require(!specs.empty(), ErrorCode::schema_mismatch, "dataset has no variables");
    require(cells.size() % specs.size() == 0, ErrorCode::dimension_mismatch,
            "cell storage is not a whole number of rows");
    const std::size_t n = n_rows();
    require(weights.size() == n, ErrorCode::dimension_mismatch,
            "weight count does not match row count");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n_vars(); ++j) {
        const int code = at(i, j);
        require(code >= 0 && static_cast<std::size_t>(code) < specs[j].category_count(),
                ErrorCode::unknown_category,
                "row " + std::to_string(i) + " variable '" + specs[j].name +
                    "' holds out-of-range code " + std::to_string(code));
      }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      require(weights[i] >= 0.0, ErrorCode::negative_weight,
              "row " + std::to_string(i) + " has negative weight");
      total += weights[i];
    }
    require(total > 0.0, ErrorCode::all_zero_weights, "all survey weights are zero");
  }

  // Copy of the selected rows, weights included.
  CategoricalDataset subset(std::span<const std::size_t> row_ids) const {
    CategoricalDataset out;
    out.specs = specs;
    out.cells.reserve(row_ids.size() * n_vars());
    out.weights.reserve(row_ids.size());
    for (const std::size_t i : row_ids) {
      const auto r = row(i);
      out.cells.insert(out.cells.end(), r.begin(), r.end());
      out.weights.push_back(weights[i]);
    }
    return out;
  }

  bool operator==(const CategoricalDataset&) const = default;
};

struct NormalizedWeights {
  std::vector<double> values; // nonnegative, sum to 1

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

inline NormalizedWeights normalize_weights(std::span<const double> weights) {
  double total = 0.0;
  for (const double w : weights) {
    require(w >= 0.0, ErrorCode::negative_weight, "weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, ErrorCode::all_zero_weights, "cannot normalize all-zero weights");
  NormalizedWeights out;
  out.values.reserve(weights.size());
  for (const double w : weights) out.values.push_back(w / total);
  return out;
}

inline NormalizedWeights normalize_weights(const CategoricalDataset& data) {
  return normalize_weights(std::span<const double>(data.weights));
}

inline NormalizedWeights uniform_weights(std::size_t n) {
  NormalizedWeights out;
  out.values.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

// --- schema and marginals files -------------------------------------------
//
// Line-oriented, UTF-8, '#' comments. A schema (.vars) file is a sequence of
// blocks:
//
//   variable <name>
//   kind nominal|ordinal|binary
//   category <label>
//   category <label>
//
// A marginals file uses the same layout but each category line ends with its
// relative frequency:
//
//   category <label> <frequency>
//
// Labels may contain spaces (and commas); in a marginals file the frequency is
// the final whitespace-separated token.

namespace detail {

inline std::string strip(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && (text[b] == ' ' || text[b] == '\t' || text[b] == '\r')) ++b;
  while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\r')) --e;
  return std::string(text.substr(b, e - b));
}

inline std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

inline std::string format_double(double value) {
  char buffer[32];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

struct Marginals {
  std::vector<VariableSpec> specs;
  std::vector<std::vector<double>> frequencies; // parallel to specs

  std::size_t n_vars() const { return specs.size(); }
};

namespace detail {

// Shared block parser; `with_frequencies` selects the marginals grammar.
inline Marginals parse_schema_file(const std::filesystem::path& path, bool with_frequencies) {
  auto in = open_input(path);
  Marginals out;
  std::string line;
  std::size_t line_no = 0;
  auto context = [&](const std::string& msg) {
    return path.string() + ":" + std::to_string(line_no) + ": " + msg;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    const std::size_t split = text.find_first_of(" \t");
    const std::string keyword = text.substr(0, split);
    std::string rest = split == std::string::npos ? std::string() : strip(text.substr(split + 1));
    if (keyword == "variable") {
      require(!rest.empty(), ErrorCode::parse_error, context("variable needs a name"));
      out.specs.push_back(VariableSpec{rest, {}, VariableKind::nominal});
      out.frequencies.emplace_back();
    } else if (keyword == "kind") {
      require(!out.specs.empty(), ErrorCode::parse_error, context("kind before any variable"));
      out.specs.back().kind = parse_variable_kind(rest);
    } else if (keyword == "category") {
      require(!out.specs.empty(), ErrorCode::parse_error, context("category before any variable"));
      require(!rest.empty(), ErrorCode::parse_error, context("category needs a label"));
      if (with_frequencies) {
        const std::size_t last_space = rest.find_last_of(" \t");
        require(last_space != std::string::npos, ErrorCode::parse_error,
                context("expected 'category <label> <frequency>'"));
        const auto freq = parse_double(strip(rest.substr(last_space + 1)));
        require(freq.has_value(), ErrorCode::parse_error,
                context("category frequency is not a number"));
        out.specs.back().categories.push_back(strip(rest.substr(0, last_space)));
        out.frequencies.back().push_back(*freq);
      } else {
        out.specs.back().categories.push_back(rest);
      }
    } else {
      fail(ErrorCode::parse_error, context("unknown directive '" + keyword + "'"));
    }
  }
  for (const auto& spec : out.specs) spec.validate();
  require(!out.specs.empty(), ErrorCode::parse_error, path.string() + ": no variables declared");
  return out;
}

}  // namespace detail

inline std::vector<VariableSpec> load_varspec(const std::filesystem::path& path) {
  return detail::parse_schema_file(path, false).specs;
}

inline void save_varspec(const std::filesystem::path& path,
                         std::span<const VariableSpec> specs) {
  auto out = detail::open_output(path);
  for (const auto& spec : specs) {
    out << "variable " << spec.name << "\n";
    out << "kind " << to_string(spec.kind) << "\n";
    for (const auto& category : spec.categories) out << "category " << category << "\n";
    out << "\n";
  }
}

// Published marginals are rounded, so rows may sum to 0.99..1.01; they are
// renormalized on load. Anything further off is rejected.
inline Marginals load_marginals(const std::filesystem::path& path) {
  Marginals m = detail::parse_schema_file(path, true);
  for (std::size_t v = 0; v < m.n_vars(); ++v) {
    double total = 0.0;
    for (const double f : m.frequencies[v]) {
      require(f >= 0.0, ErrorCode::invalid_marginal,
              "variable '" + m.specs[v].name + "' has a negative frequency");
      total += f;
    }
    require(std::abs(total - 1.0) <= 0.01, ErrorCode::invalid_marginal,
            "variable '" + m.specs[v].name + "' frequencies sum to " +
                detail::format_double(total) + ", expected 1 +- 0.01");
    for (double& f : m.frequencies[v]) f /= total;
  }
  return m;
}

// Rows drawn independently per variable from the marginal frequencies.
// Unit weights; deterministic for a given seed.
inline CategoricalDataset generate_fixture(const Marginals& marginals, std::size_t n,
                                           std::uint64_t seed) {
  require(n >= 1, ErrorCode::invalid_argument, "fixture needs at least one row");
  for (std::size_t v = 0; v < marginals.n_vars(); ++v) {
    require(marginals.frequencies[v].size() == marginals.specs[v].category_count(),
            ErrorCode::invalid_marginal,
            "variable '" + marginals.specs[v].name + "' frequency count mismatch");
  }
  CategoricalDataset out;
  out.specs = marginals.specs;
  out.cells.assign(n * marginals.n_vars(), 0);
  out.weights.assign(n, 1.0);

  Rng rng(seed);
  std::vector<double> cumulative;
  for (std::size_t v = 0; v < marginals.n_vars(); ++v) {
    cumulative.assign(marginals.frequencies[v].begin(), marginals.frequencies[v].end());
    for (std::size_t k = 1; k < cumulative.size(); ++k) cumulative[k] += cumulative[k - 1];
    for (std::size_t i = 0; i < n; ++i) {
      out.cells[i * marginals.n_vars() + v] = static_cast<int>(sample_cumulative(cumulative, rng));
    }
  }
  return out;
}

// --- CSV ------------------------------------------------------------------
//
// RFC 4180 style: comma-delimited, double quotes around fields containing
// commas, quotes or newlines, embedded quotes doubled. Header row required.
// The weight column (default "WEIGHT") is optional; absent means unit
// weights.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no,
                                               const std::string& file) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\r' && i + 1 == line.size()) {
      // tolerate CRLF
    } else {
      field.push_back(c);
    }
  }
  require(!quoted, ErrorCode::parse_error,
          file + ":" + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(field);
  return fields;
}

inline std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n") != std::string::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline CategoricalDataset load_csv(const std::filesystem::path& path,
                                   std::vector<VariableSpec> specs,
                                   const std::string& weight_column = "WEIGHT") {
  for (const auto& spec : specs) spec.validate();
  auto in = detail::open_input(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::schema_mismatch,
          path.string() + ": missing header row");
  const auto header = detail::split_csv_line(line, 1, path.string());

  // Header must list every schema variable exactly once; one optional weight
  // column; nothing else.
  std::vector<int> column_of(specs.size(), -1);
  int weight_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == weight_column) {
      require(weight_col < 0, ErrorCode::schema_mismatch,
              path.string() + ": duplicate weight column '" + weight_column + "'");
      weight_col = static_cast<int>(c);
      continue;
    }
    bool matched = false;
    for (std::size_t v = 0; v < specs.size(); ++v) {
      if (header[c] == specs[v].name) {
        require(column_of[v] < 0, ErrorCode::schema_mismatch,
                path.string() + ": duplicate column '" + header[c] + "'");
        column_of[v] = static_cast<int>(c);
        matched = true;
        break;
      }
    }
    require(matched, ErrorCode::schema_mismatch,
            path.string() + ": unexpected column '" + header[c] + "'");
  }
  for (std::size_t v = 0; v < specs.size(); ++v) {
    require(column_of[v] >= 0, ErrorCode::schema_mismatch,
            path.string() + ": missing column '" + specs[v].name + "'");
  }

  CategoricalDataset out;
  out.specs = std::move(specs);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = detail::split_csv_line(line, line_no, path.string());
    require(fields.size() == header.size(), ErrorCode::schema_mismatch,
            path.string() + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    const std::size_t row_index = out.weights.size();
    for (std::size_t v = 0; v < out.specs.size(); ++v) {
      const std::string& value = fields[static_cast<std::size_t>(column_of[v])];
      require(!value.empty(), ErrorCode::missing_cell,
              path.string() + ": row " + std::to_string(row_index) + " variable '" +
                  out.specs[v].name + "' is empty");
      const int code = out.specs[v].code_of(value);
      require(code >= 0, ErrorCode::unknown_category,
              path.string() + ": row " + std::to_string(row_index) + " variable '" +
                  out.specs[v].name + "' has unknown category '" + value + "'");
      out.cells.push_back(code);
    }
    if (weight_col >= 0) {
      const auto w = detail::parse_double(fields[static_cast<std::size_t>(weight_col)]);
      require(w.has_value(), ErrorCode::parse_error,
              path.string() + ": row " + std::to_string(row_index) + " weight is not a number");
      require(*w >= 0.0, ErrorCode::negative_weight,
              path.string() + ": row " + std::to_string(row_index) + " has negative weight");
      out.weights.push_back(*w);
    } else {
      out.weights.push_back(1.0);
    }
  }
  out.validate();
  return out;
}

inline CategoricalDataset load_csv(const std::filesystem::path& path,
                                   const std::filesystem::path& spec_path,
                                   const std::string& weight_column = "WEIGHT") {
  return load_csv(path, load_varspec(spec_path), weight_column);
}

// Serialization always uses labels. The weight column is written only when
// some weight differs from 1, so self-weighting fixtures round-trip
// byte-identically.
inline void save_csv(const std::filesystem::path& path, const CategoricalDataset& data,
                     const std::string& weight_column = "WEIGHT") {
  data.validate();
  auto out = detail::open_output(path);
  const bool write_weights =
      std::any_of(data.weights.begin(), data.weights.end(), [](double w) { return w != 1.0; });
  for (std::size_t v = 0; v < data.n_vars(); ++v) {
    if (v > 0) out << ',';
    out << detail::csv_escape(data.specs[v].name);
  }
  if (write_weights) out << ',' << detail::csv_escape(weight_column);
  out << '\n';
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t v = 0; v < data.n_vars(); ++v) {
      if (v > 0) out << ',';
      out << detail::csv_escape(data.specs[v].categories[static_cast<std::size_t>(data.at(i, v))]);
    }
    if (write_weights) out << ',' << detail::format_double(data.weights[i]);
    out << '\n';
  }
}

}  // namespace surveykit
