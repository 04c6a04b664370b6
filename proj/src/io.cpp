#include "dea/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dea::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
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

bool is_group_column(const std::string& name, char group) {
  if (name.size() < 2 || name[0] != group) return false;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return false;
  }
  return true;
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<Index>(j);
  }
  throw Error(ErrorCode::ConfigInvalid, "column '" + name + "' not found in the CSV header");
}

Matrix CsvTable::columns(const std::vector<std::string>& names) const {
  Matrix out(values.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Index>(j)) = values.col(column(names[j]));
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (!have_header) {
      std::set<std::string> seen;
      for (auto f : fields) {
        if (f.empty()) throw Error(ErrorCode::ParseError, "header has an empty column name");
        if (!seen.insert(std::string(f)).second) {
          throw Error(ErrorCode::ParseError, "duplicate column '" + std::string(f) + "' in header");
        }
        table.header.emplace_back(f);
      }
      have_header = true;
      continue;
    }
    const std::size_t row_no = rows.size() + 1;
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row_no) + " (line " + std::to_string(line_no) +
                                             ") has " + std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = fields[j];
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (!f.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[j]);
      if (f.empty() || ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(row_no) + " (line " + std::to_string(line_no) +
                                               "), column '" + table.header[j] + "': cannot parse '" +
                                               std::string(f) + "' as a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "CSV is empty (a header line is required)");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

std::string format_double(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

std::string format_csv(const std::vector<std::string>& header, const Matrix& values) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j > 0) out += ',';
    out += header[j];
  }
  out += '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::FileNotFound, "write to '" + path + "' failed");
}

std::vector<std::string> select_columns(const std::vector<std::string>& header, const std::string& spec,
                                        char group) {
  std::vector<std::string> out;
  if (trim(spec).empty()) {
    for (const auto& name : header) {
      if (is_group_column(name, group)) out.push_back(name);
    }
    return out;
  }
  const std::set<std::string> names(header.begin(), header.end());
  for (auto entry : split(spec)) {
    if (entry.empty()) throw Error(ErrorCode::ConfigInvalid, "empty entry in column list '" + spec + "'");
    if (entry.substr(0, 7) == "prefix:") {
      const auto prefix = entry.substr(7);
      bool any = false;
      for (const auto& name : header) {
        if (std::string_view(name).substr(0, prefix.size()) == prefix) {
          out.push_back(name);
          any = true;
        }
      }
      if (!any) throw Error(ErrorCode::ConfigInvalid, "no column starts with '" + std::string(prefix) + "'");
    } else {
      if (!names.count(std::string(entry))) {
        throw Error(ErrorCode::ConfigInvalid, "column '" + std::string(entry) + "' not found in the CSV header");
      }
      out.emplace_back(entry);
    }
  }
  return out;
}

std::uint64_t fingerprint(const Matrix& m, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int b = 0; b < 8; ++b) {
        h ^= bits & 0xffU;
        h *= 0x100000001b3ULL;
        bits >>= 8;
      }
    }
  }
  return h;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorCode::ParseError, "ragged matrix in model document");
    }
    for (Index k = 0; k < cols; ++k) out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

namespace {

nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

nlohmann::json model_to_json(const ModelDocument& doc) {
  const DeaModel& m = doc.model;
  nlohmann::json w = nlohmann::json::array();
  for (Index k = 0; k < m.q(); ++k) w.push_back(vector_to_json(m.w.col(k)));
  nlohmann::json cov{{"sigma_full", matrix_to_json(m.covariances.sigma_full.matrix())},
                     {"sigma_res", matrix_to_json(m.covariances.sigma_res.matrix())},
                     {"n_samples", m.covariances.n_samples},
                     {"p", m.covariances.p},
                     {"r", m.covariances.r}};
  if (m.covariances.sigma_noise) cov["sigma_noise"] = matrix_to_json(m.covariances.sigma_noise->matrix());
  nlohmann::json j{{"kind", std::string(to_string(m.kind))},
                   {"w", w},
                   {"eigenvalues", vector_to_json(m.eigenvalues)},
                   {"dfn", m.dfn},
                   {"dfd", m.dfd},
                   {"ridge", m.ridge},
                   {"regressor", {{"kind", std::string(regression::to_string(m.regressor.kind))},
                                  {"knn_k", m.regressor.knn_k}}},
                   {"columns", {{"x", doc.x_columns}, {"y", doc.y_columns}, {"z", doc.z_columns}}},
                   {"data_fingerprint", doc.data_fingerprint},
                   {"covariances", cov}};
  if (m.partial) {
    j["partial"] = {{"sigma_x", matrix_to_json(m.partial->sigma_x)},
                    {"sigma_cross", matrix_to_json(m.partial->sigma_cross)},
                    {"sigma_y", matrix_to_json(m.partial->sigma_y)}};
    nlohmann::json xd = nlohmann::json::array();
    for (Index k = 0; k < m.x_directions.cols(); ++k) xd.push_back(vector_to_json(m.x_directions.col(k)));
    j["x_directions"] = xd;
  }
  if (doc.b_hat.size() > 0) j["b_hat"] = vector_to_json(doc.b_hat);
  return j;
}

ModelDocument model_from_json(const nlohmann::json& j) {
  ModelDocument doc;
  try {
    DeaModel& m = doc.model;
    m.kind = statistic_kind_from_string(j.at("kind").get<std::string>());
    const auto& w = j.at("w");
    if (!w.is_array() || w.empty()) throw Error(ErrorCode::ParseError, "model has no directions");
    const Index d = static_cast<Index>(w[0].size());
    m.w.resize(d, static_cast<Index>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k) {
      const Vector col = vector_from_json(w[k]);
      if (col.size() != d) throw Error(ErrorCode::ParseError, "direction columns differ in length");
      m.w.col(static_cast<Index>(k)) = col;
    }
    m.eigenvalues = vector_from_json(j.at("eigenvalues"));
    m.dfn = j.at("dfn").get<Index>();
    m.dfd = j.at("dfd").get<Index>();
    m.ridge = j.at("ridge").get<double>();
    const auto& reg = j.at("regressor");
    m.regressor.kind = regression::regressor_kind_from_string(reg.at("kind").get<std::string>());
    m.regressor.knn_k = reg.at("knn_k").get<int>();
    const auto& cov = j.at("covariances");
    m.covariances.sigma_full = SymMatrixd(matrix_from_json(cov.at("sigma_full")));
    m.covariances.sigma_res = SymMatrixd(matrix_from_json(cov.at("sigma_res")));
    if (cov.contains("sigma_noise")) m.covariances.sigma_noise = SymMatrixd(matrix_from_json(cov.at("sigma_noise")));
    m.covariances.n_samples = cov.at("n_samples").get<Index>();
    m.covariances.p = cov.at("p").get<Index>();
    m.covariances.r = cov.at("r").get<Index>();
    if (j.contains("partial")) {
      const auto& pc = j.at("partial");
      m.partial = PartialCovariances{matrix_from_json(pc.at("sigma_x")), matrix_from_json(pc.at("sigma_cross")),
                                     matrix_from_json(pc.at("sigma_y"))};
    }
    if (j.contains("x_directions")) {
      const auto& xd = j.at("x_directions");
      const Index p = xd.empty() ? 0 : static_cast<Index>(xd[0].size());
      m.x_directions.resize(p, static_cast<Index>(xd.size()));
      for (std::size_t k = 0; k < xd.size(); ++k) m.x_directions.col(static_cast<Index>(k)) = vector_from_json(xd[k]);
    }
    const auto& cols = j.at("columns");
    doc.x_columns = cols.at("x").get<std::vector<std::string>>();
    doc.y_columns = cols.at("y").get<std::vector<std::string>>();
    doc.z_columns = cols.at("z").get<std::vector<std::string>>();
    doc.data_fingerprint = j.at("data_fingerprint").get<std::uint64_t>();
    if (j.contains("b_hat")) doc.b_hat = vector_from_json(j.at("b_hat"));
    if (static_cast<Index>(doc.y_columns.size()) != d || m.covariances.d() != d) {
      throw Error(ErrorCode::ParseError, "model document has inconsistent dimensions");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model document: ") + e.what());
  }
  return doc;
}

}  // namespace dea::io
