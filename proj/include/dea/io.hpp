#pragma once

// CSV tables and JSON model documents.

#include <cstdint>
#include <string>
#include <vector>

#include "dea/dea.hpp"
#include "json.hpp"

namespace dea::io {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x header.size()

  Index column(const std::string& name) const;  // throws ConfigInvalid if absent
  Matrix columns(const std::vector<std::string>& names) const;
};

/// Header line mandatory, comma separated, '.' decimal point. Blank lines are
/// skipped. ParseError names the 1-based data row and column.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// %.17g formatting, so values survive the text round trip exactly.
std::string format_double(double x);
std::string format_csv(const std::vector<std::string>& header, const Matrix& values);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Resolves a column-group spec against a header. A spec is a comma list
/// whose entries are exact names or "prefix:<p>" (all columns starting with
/// <p>, in header order). An empty spec selects columns named <group><digits>.
std::vector<std::string> select_columns(const std::vector<std::string>& header, const std::string& spec,
                                        char group);

/// FNV-1a 64 over the bit patterns of the entries, column-major.
std::uint64_t fingerprint(const Matrix& m, std::uint64_t seed = 0xcbf29ce484222325ULL);

nlohmann::json matrix_to_json(const Matrix& m);  // array of rows
Matrix matrix_from_json(const nlohmann::json& j);

struct ModelDocument {
  DeaModel model;
  std::vector<std::string> x_columns;
  std::vector<std::string> y_columns;
  std::vector<std::string> z_columns;
  std::uint64_t data_fingerprint = 0;
  Vector b_hat;  // empty if unavailable
};

nlohmann::json model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const nlohmann::json& j);

}  // namespace dea::io
