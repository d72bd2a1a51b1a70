#pragma once

// File formats: dense CSV and Matrix Market matrices, one-value-per-line
// label / mask files, key = value config files, sweep CSVs and the
// Hopkins-style sequence directory layout.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "subseg/pipeline.hpp"

namespace subseg::io {

namespace fs = std::filesystem;

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_double(std::string_view text, const std::string& what) {
  const std::string s = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    fail(ErrorKind::InvalidInput, what + ": cannot parse '" + s + "' as a number");
  return value;
}

inline long long parse_int(std::string_view text, const std::string& what) {
  const std::string s = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    fail(ErrorKind::InvalidInput, what + ": cannot parse '" + s + "' as an integer");
  return value;
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

// ---------------------------------------------------------------------------
// Matrices

/// Dense CSV: one matrix row per line, comma separated, no header. Ragged
/// rows are a validation error.
inline Matrix read_csv_matrix(std::istream& in, const std::string& name = "matrix") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(parse_double(cell, name + " line " + std::to_string(line_no)));
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::InvalidInput, name + " line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(rows.front().size()) + " values, found " +
                                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::InvalidInput, name + " is empty");
  Matrix M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

/// Writes with 17 significant digits, which round-trips every double.
inline void write_csv_matrix(std::ostream& out, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

/// Matrix Market, real general, array or coordinate layout.
inline Matrix read_matrix_market(std::istream& in, const std::string& name = "matrix") {
  std::string header;
  if (!std::getline(in, header)) fail(ErrorKind::InvalidInput, name + " is empty");
  std::string banner, object, layout, field, symmetry;
  std::istringstream hs(header);
  hs >> banner >> object >> layout >> field >> symmetry;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  layout = lower(layout);
  field = lower(field);
  symmetry = lower(symmetry);
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    fail(ErrorKind::InvalidInput, name + ": missing %%MatrixMarket matrix banner");
  if (field != "real" && field != "integer" && field != "double")
    fail(ErrorKind::InvalidInput, name + ": only real Matrix Market files are supported");
  if (symmetry != "general" && symmetry != "symmetric")
    fail(ErrorKind::InvalidInput, name + ": unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  std::string line;
  do {
    if (!std::getline(in, line)) fail(ErrorKind::InvalidInput, name + ": missing size line");
  } while (trim(line).empty() || line[0] == '%');
  std::istringstream size_line(line);
  long long rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (layout == "coordinate") size_line >> nnz;
  if (!size_line || rows < 1 || cols < 1)
    fail(ErrorKind::InvalidInput, name + ": bad size line '" + trim(line) + "'");

  Matrix M = Matrix::Zero(rows, cols);
  auto next_token = [&](std::string& tok) { return static_cast<bool>(in >> tok); };
  std::string a, b, c;
  if (layout == "array") {
    // column-major; symmetric stores the lower triangle only
    for (long long j = 0; j < cols; ++j)
      for (long long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_token(a)) fail(ErrorKind::InvalidInput, name + ": truncated array data");
        M(i, j) = parse_double(a, name);
        if (symmetric) M(j, i) = M(i, j);
      }
  } else if (layout == "coordinate") {
    for (long long e = 0; e < nnz; ++e) {
      if (!next_token(a) || !next_token(b) || !next_token(c))
        fail(ErrorKind::InvalidInput, name + ": truncated coordinate data");
      const long long i = parse_int(a, name) - 1, j = parse_int(b, name) - 1;
      if (i < 0 || i >= rows || j < 0 || j >= cols)
        fail(ErrorKind::InvalidInput, name + ": entry index out of range");
      M(i, j) = parse_double(c, name);
      if (symmetric) M(j, i) = M(i, j);
    }
  } else {
    fail(ErrorKind::InvalidInput, name + ": unknown Matrix Market layout '" + layout + "'");
  }
  return M;
}

inline void write_matrix_market(std::ostream& out, const Matrix& M) {
  out << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) out << format_double(M(i, j)) << '\n';
}

inline bool is_matrix_market(const fs::path& path) {
  const auto ext = path.extension().string();
  return ext == ".mtx" || ext == ".mm";
}

/// Reads a matrix file, choosing the format from the extension
/// (.mtx / .mm -> Matrix Market, anything else -> dense CSV).
inline Matrix read_matrix(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::Io, "no such file '" + path.string() + "'");
  auto in = open_in(path);
  Matrix M = is_matrix_market(path) ? read_matrix_market(in, path.string())
                                    : read_csv_matrix(in, path.string());
  require_finite(M, path.string().c_str());
  return M;
}

inline void write_matrix(const fs::path& path, const Matrix& M) {
  auto out = open_out(path);
  if (is_matrix_market(path))
    write_matrix_market(out, M);
  else
    write_csv_matrix(out, M);
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Labels and masks: one integer per line.

inline Labels read_labels(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::Io, "no such file '" + path.string() + "'");
  auto in = open_in(path);
  Labels labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    const long long v = parse_int(t, path.string());
    if (v < 0) fail(ErrorKind::InvalidInput, path.string() + ": labels must be nonnegative");
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) fail(ErrorKind::InvalidInput, path.string() + " contains no labels");
  return labels;
}

template <class Seq>
void write_column(const fs::path& path, const Seq& values) {
  auto out = open_out(path);
  for (auto v : values) out << static_cast<int>(v) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// key = value configuration

/// Flat `key = value` file; `#` starts a comment. Typed getters name the
/// offending key in their errors.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& source = "config") {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::InvalidInput,
             source + " line " + std::to_string(line_no) + ": expected 'key = value'");
      auto key = trim(std::string_view(line).substr(0, eq));
      if (key.empty())
        fail(ErrorKind::InvalidInput, source + " line " + std::to_string(line_no) + ": empty key");
      cfg.values_[key] = trim(std::string_view(line).substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig load(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::Io, "no such config file '" + path.string() + "'");
    auto in = open_in(path);
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<double> get_double(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    return parse_double(*s, "field '" + key + "'");
  }
  std::optional<long long> get_int(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    return parse_int(*s, "field '" + key + "'");
  }
  std::optional<std::vector<double>> get_doubles(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!trim(item).empty()) out.push_back(parse_double(item, "field '" + key + "'"));
    return out;
  }

  /// Fails on any key outside `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_)
      if (!allowed.count(key)) fail(ErrorKind::InvalidInput, "unknown config field '" + key + "'");
  }

 private:
  std::map<std::string, std::string> values_;
};

inline const std::set<std::string>& spec_keys() {
  static const std::set<std::string> keys = {
      "k", "subspace_dim", "ambient_dim", "points_per_subspace", "noise_variance_factor",
      "outlier_fraction", "outlier_variance_factor", "seed"};
  return keys;
}

/// Overlays config values onto `spec`; fields not present keep their value.
inline SyntheticSpec apply_spec(const KeyValueConfig& cfg, SyntheticSpec spec = {}) {
  auto int_field = [&](const char* key, int& dst) {
    if (auto v = cfg.get_int(key)) {
      if (*v < 1 || *v > 1'000'000)
        fail(ErrorKind::InvalidInput, std::string("field '") + key + "' out of range");
      dst = static_cast<int>(*v);
    }
  };
  int_field("k", spec.k);
  int_field("subspace_dim", spec.subspace_dim);
  int_field("ambient_dim", spec.ambient_dim);
  int_field("points_per_subspace", spec.points_per_subspace);
  if (auto v = cfg.get_double("noise_variance_factor")) spec.noise_variance_factor = *v;
  if (auto v = cfg.get_double("outlier_fraction")) spec.outlier_fraction = *v;
  if (auto v = cfg.get_double("outlier_variance_factor")) spec.outlier_variance_factor = *v;
  if (auto v = cfg.get_int("seed")) spec.seed = static_cast<std::uint64_t>(*v);
  spec.validate();
  return spec;
}

inline void write_spec(std::ostream& out, const SyntheticSpec& spec) {
  out << "k = " << spec.k << '\n'
      << "subspace_dim = " << spec.subspace_dim << '\n'
      << "ambient_dim = " << spec.ambient_dim << '\n'
      << "points_per_subspace = " << spec.points_per_subspace << '\n'
      << "noise_variance_factor = " << format_double(spec.noise_variance_factor) << '\n'
      << "outlier_fraction = " << format_double(spec.outlier_fraction) << '\n'
      << "outlier_variance_factor = " << format_double(spec.outlier_variance_factor) << '\n'
      << "seed = " << spec.seed << '\n';
}

// ---------------------------------------------------------------------------
// Sweep output

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v, 12) : std::string();
}

/// fraction,method,trial,accuracy ; failed trials leave accuracy empty.
inline void write_results_csv(std::ostream& out, const SweepResult& r) {
  out << "fraction,method,trial,accuracy\n";
  for (const auto& row : r.rows)
    out << format_double(row.fraction, 12) << ',' << to_string(row.method) << ',' << row.trial
        << ',' << format_optional(row.accuracy) << '\n';
}

/// fraction,method,mean,std ; undefined statistics are written as nan.
inline void write_summary_csv(std::ostream& out, const SweepResult& r) {
  out << "fraction,method,mean,std\n";
  for (const auto& s : r.summary)
    out << format_double(s.fraction, 12) << ',' << to_string(s.method) << ','
        << format_double(s.mean, 12) << ',' << format_double(s.std, 12) << '\n';
}

/// Mean +/- std curves per method as a standalone SVG.
inline void write_summary_svg(std::ostream& out, const SweepResult& r) {
  const double W = 640, H = 400, left = 60, right = 20, top = 20, bottom = 50;
  double fmin = 0.0, fmax = 0.0;
  bool first = true;
  for (const auto& s : r.summary) {
    fmin = first ? s.fraction : std::min(fmin, s.fraction);
    fmax = first ? s.fraction : std::max(fmax, s.fraction);
    first = false;
  }
  if (fmax <= fmin) fmax = fmin + 1.0;
  auto px = [&](double f) { return left + (f - fmin) / (fmax - fmin) * (W - left - right); };
  auto py = [&](double a) { return top + (1.0 - std::clamp(a, 0.0, 1.0)) * (H - top - bottom); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << W - right << "\" y2=\""
      << py(0) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left << "\" y2=\"" << py(1)
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double a = t / 5.0;
    out << "<text x=\"" << left - 8 << "\" y=\"" << py(a) + 4 << "\" text-anchor=\"end\">"
        << format_double(a, 3) << "</text>\n";
  }
  out << "<text x=\"" << (W + left) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">outlier fraction</text>\n";

  const char* colors[] = {"#d62728", "#1f77b4"};
  for (Method m : {Method::Lrr, Method::Rsi}) {
    const char* color = colors[static_cast<int>(m)];
    std::string path;
    for (const auto& s : r.summary) {
      if (s.method != m || std::isnan(s.mean)) continue;
      path += (path.empty() ? "M" : " L") + format_double(px(s.fraction), 6) + ' ' +
              format_double(py(s.mean), 6);
      if (!std::isnan(s.std))
        out << "<line x1=\"" << px(s.fraction) << "\" y1=\"" << py(s.mean - s.std) << "\" x2=\""
            << px(s.fraction) << "\" y2=\"" << py(s.mean + s.std) << "\" stroke=\"" << color
            << "\"/>\n";
      out << "<text x=\"" << px(s.fraction) << "\" y=\"" << H - bottom + 16
          << "\" text-anchor=\"middle\">" << format_double(s.fraction, 3) << "</text>\n";
    }
    out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 16 + 16 * static_cast<int>(m);
    out << "<text x=\"" << W - right - 40 << "\" y=\"" << ly << "\" fill=\"" << color << "\">"
        << to_string(m) << "</text>\n";
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Hopkins-style sequences

struct Sequence {
  Matrix X;
  Labels truth;
  int k = 0;  // number of distinct motions
};

/// Loads a preprocessed motion sequence directory holding `X.csv`
/// (2F stacked image coordinates x tracked points) and `labels.csv` (one
/// motion id per point). Missing or empty directory is an I/O error; a
/// partial or inconsistent directory is a validation error.
inline Sequence load_hopkins_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "no such directory '" + dir.string() + "'");
  if (fs::is_empty(dir)) fail(ErrorKind::Io, "directory '" + dir.string() + "' is empty");
  const auto xpath = dir / "X.csv", lpath = dir / "labels.csv";
  if (!fs::exists(xpath)) fail(ErrorKind::InvalidInput, "missing " + xpath.string());
  if (!fs::exists(lpath)) fail(ErrorKind::InvalidInput, "missing " + lpath.string());
  Sequence seq;
  seq.X = read_matrix(xpath);
  seq.truth = read_labels(lpath);
  if (static_cast<Eigen::Index>(seq.truth.size()) != seq.X.cols())
    fail(ErrorKind::InvalidInput, lpath.string() + ": " + std::to_string(seq.truth.size()) +
                                      " labels for " + std::to_string(seq.X.cols()) + " columns");
  std::set<int> distinct(seq.truth.begin(), seq.truth.end());
  seq.k = static_cast<int>(distinct.size());
  return seq;
}

inline void write_hopkins_sequence(const fs::path& dir, const Matrix& X, const Labels& truth) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  write_matrix(dir / "X.csv", X);
  write_column(dir / "labels.csv", truth);
}

}  // namespace subseg::io
