#include "symlab/snapshot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "symlab/errors.hpp"

namespace symlab {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& where) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  if (p != end && end[-1] == '\r') --end;
  while (p <= end) {
    const char* comma = std::find(p, end, ',');
    double v = 0.0;
    const char* first = p;
    while (first < comma && *first == ' ') ++first;
    if (first < comma && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, comma, v);
    if (ec != std::errc() || ptr != comma) throw IoError(where + ": malformed number");
    out.push_back(v);
    p = comma + 1;
  }
  return out;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
  }
}

void write_rows(std::ostream& out, const Matrix& m, const Vector* extra) {
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    if (extra) {
      std::snprintf(buf, sizeof buf, "%.17g", (*extra)(i));
      out << (m.cols() ? "," : "") << buf;
    }
    out << '\n';
  }
}

Matrix read_table(const std::string& path, int extra_cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = parse_row(line, path + ":1");
  if (header.size() != 2 || header[0] < 0 || header[1] < 0 ||
      header[0] != static_cast<long long>(header[0]) ||
      header[1] != static_cast<long long>(header[1])) {
    throw IoError(path + ": header must be 'rows,cols'");
  }
  const auto rows = static_cast<Eigen::Index>(header[0]);
  const auto cols = static_cast<Eigen::Index>(header[1]) + extra_cols;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string where = path + ":" + std::to_string(i + 2);
    if (!std::getline(in, line)) throw IoError(where + ": missing row");
    const auto row = parse_row(line, where);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw IoError(where + ": wrong column count");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw IoError(path + ": trailing data after the declared rows");
  }
  return m;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Matrix& m) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << m.rows() << ',' << m.cols() << '\n';
  write_rows(out, m, nullptr);
  if (!out) throw IoError("write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) { return read_table(path, 0); }

void write_measure_csv(const std::string& path, const EmpiricalMeasure& mu) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << mu.points.rows() << ',' << mu.points.cols() << '\n';
  write_rows(out, mu.points, &mu.weights);
  if (!out) throw IoError("write failed: " + path);
}

EmpiricalMeasure read_measure_csv(const std::string& path) {
  const Matrix t = read_table(path, 1);
  return EmpiricalMeasure(t.leftCols(t.cols() - 1), t.col(t.cols() - 1));
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run_dir(const std::string& dir, const RunRecord& record, const std::string& config_json) {
  const fs::path root(dir);
  write_text((root / "config.json").string(), config_json);
  std::ostringstream traj;
  traj << "epoch,loss\n";
  char buf[32];
  for (const auto& snap : record.snapshots) {
    write_matrix_csv((root / "snapshots" / ("epoch_" + std::to_string(snap.epoch) + ".csv")).string(),
                     snap.params);
    std::snprintf(buf, sizeof buf, "%.17g", snap.loss);
    traj << snap.epoch << ',' << buf << '\n';
  }
  write_matrix_csv((root / "final.csv").string(), record.final_ensemble.params);
  write_text((root / "trajectory.csv").string(), traj.str());
}

}  // namespace symlab
