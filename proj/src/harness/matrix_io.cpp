#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lgmd/harness.hpp"

namespace lgmd {

namespace {

[[noreturn]] void parse_fail(std::size_t line, std::size_t col, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& field, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) parse_fail(line, col, "not a number: '" + field + "'");
  return v;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur)) {
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

// RFC-4180 fields of one record; quoted fields may contain commas and "" escapes.
std::vector<std::string> csv_fields(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
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
      if (!trim(cur).empty()) parse_fail(lineno, out.size() + 1, "stray quote");
      quoted = was_quoted = true;
      cur.clear();
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) parse_fail(lineno, out.size() + 1, "unterminated quote");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

MatrixFormat parse_matrix_format(const std::string& name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "mtx" || name == "mm" || name == "matrix-market") return MatrixFormat::MatrixMarket;
  throw Error(ErrorCode::ConfigError, "unknown matrix format '" + name + "'");
}

MatrixFormat format_from_path(const std::string& path) {
  auto ends = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".mtx") || ends(".mm") ? MatrixFormat::MatrixMarket : MatrixFormat::Csv;
}

DataMatrix parse_csv(const std::string& text) {
  const auto lines = split_lines(text);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> linenos;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (trim(lines[l]).empty()) continue;
    rows.push_back(csv_fields(lines[l], l + 1));
    linenos.push_back(l + 1);
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, "line 1, column 1: empty matrix file");
  const std::size_t cols = rows.front().size();
  const auto n = static_cast<Index>(rows.size()), p = static_cast<Index>(cols);
  Matrix values = Matrix::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
  Mask mask = Mask::Constant(n, p, true);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.size() != cols) {
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(linenos[static_cast<std::size_t>(i)]) +
                                                    ": expected " + std::to_string(cols) + " fields, found " +
                                                    std::to_string(r.size()));
    }
    for (Index j = 0; j < p; ++j) {
      const std::string& f = r[static_cast<std::size_t>(j)];
      if (f.empty()) {
        mask(i, j) = false;
      } else {
        values(i, j) = parse_number(f, linenos[static_cast<std::size_t>(i)], static_cast<std::size_t>(j) + 1);
      }
    }
  }
  if (mask.all()) return DataMatrix(std::move(values));
  return DataMatrix(std::move(values), std::move(mask));
}

DataMatrix parse_matrix_market(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) parse_fail(1, 1, "missing MatrixMarket banner");
  std::istringstream banner(lines[0]);
  std::string tag, object, layout, field, symmetry;
  banner >> tag >> object >> layout >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  layout = lower(layout);
  field = lower(field);
  symmetry = lower(symmetry);
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") parse_fail(1, 1, "missing MatrixMarket banner");
  if (layout != "coordinate" && layout != "array") parse_fail(1, 1, "unsupported layout '" + layout + "'");
  if (field != "real" && field != "integer" && field != "double") parse_fail(1, 1, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric") parse_fail(1, 1, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  std::size_t l = 1;
  while (l < lines.size() && (trim(lines[l]).empty() || lines[l][0] == '%')) ++l;
  if (l >= lines.size()) parse_fail(l, 1, "missing size line");

  auto tokens = [](const std::string& s) {
    std::vector<std::string> t;
    std::istringstream in(s);
    for (std::string w; in >> w;) t.push_back(w);
    return t;
  };
  auto as_index = [&](const std::string& s, std::size_t line, std::size_t col) {
    const double v = parse_number(s, line, col);
    if (v < 0 || v != std::floor(v)) parse_fail(line, col, "expected a non-negative integer");
    return static_cast<Index>(v);
  };

  const auto size = tokens(lines[l]);
  const std::size_t size_line = l + 1;
  if (size.size() != (layout == "coordinate" ? 3u : 2u)) parse_fail(size_line, 1, "malformed size line");
  const Index n = as_index(size[0], size_line, 1), p = as_index(size[1], size_line, 2);
  if (n == 0 || p == 0) parse_fail(size_line, 1, "empty matrix");
  Matrix values = Matrix::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
  Mask mask = Mask::Constant(n, p, layout == "array");

  std::vector<std::pair<std::size_t, std::vector<std::string>>> body;
  for (++l; l < lines.size(); ++l) {
    if (trim(lines[l]).empty() || lines[l][0] == '%') continue;
    body.emplace_back(l + 1, tokens(lines[l]));
  }
  if (layout == "coordinate") {
    const Index nnz = as_index(size[2], size_line, 3);
    if (static_cast<Index>(body.size()) != nnz) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(nnz) + " entries, found " + std::to_string(body.size()));
    }
    for (const auto& [line, t] : body) {
      if (t.size() != 3) parse_fail(line, 1, "expected 'row col value'");
      const Index i = as_index(t[0], line, 1), j = as_index(t[1], line, 2);
      if (i < 1 || i > n || j < 1 || j > p) parse_fail(line, 1, "index out of range");
      const double v = parse_number(t[2], line, 3);
      values(i - 1, j - 1) = v;
      mask(i - 1, j - 1) = true;
      if (symmetric) {
        values(j - 1, i - 1) = v;
        mask(j - 1, i - 1) = true;
      }
    }
  } else {
    if (symmetric) parse_fail(1, 1, "symmetric array files are not supported");
    if (static_cast<Index>(body.size()) != n * p) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(n * p) + " values, found " + std::to_string(body.size()));
    }
    Index idx = 0;
    for (const auto& [line, t] : body) {
      if (t.size() != 1) parse_fail(line, 2, "expected one value per line");
      values(idx % n, idx / n) = parse_number(t[0], line, 1);
      ++idx;
    }
  }
  if (mask.all()) return DataMatrix(std::move(values));
  return DataMatrix(std::move(values), std::move(mask));
}

DataMatrix load_matrix(const std::string& path, MatrixFormat format) {
  const std::string text = read_file(path);
  return format == MatrixFormat::Csv ? parse_csv(text) : parse_matrix_market(text);
}

std::string to_csv(const DataMatrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      if (m.observed(i, j)) out += format_double(m.values()(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string to_matrix_market(const DataMatrix& m) {
  std::string out;
  if (!m.has_mask()) {
    out = "%%MatrixMarket matrix array real general\n" + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) out += format_double(m.values()(i, j)) + "\n";
    }
    return out;
  }
  out = "%%MatrixMarket matrix coordinate real general\n" + std::to_string(m.rows()) + " " +
        std::to_string(m.cols()) + " " + std::to_string(m.observed_count()) + "\n";
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m.observed(i, j)) {
        out += std::to_string(i + 1) + " " + std::to_string(j + 1) + " " + format_double(m.values()(i, j)) + "\n";
      }
    }
  }
  return out;
}

void save_matrix(const DataMatrix& m, const std::string& path, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << (format == MatrixFormat::Csv ? to_csv(m) : to_matrix_market(m));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace lgmd
