#include "grdr/matrix_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "grdr/util.hpp"

namespace grdr {
namespace {

// Skips blank lines and '#' comments; returns false at EOF.
bool next_content_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') continue;
    return true;
  }
  return false;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m,
                  const std::string& header_comment) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << m.rows() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ' ';
      os << format_g17(m(i, j));
    }
    os << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  std::string line;
  if (!next_content_line(is, line))
    throw std::runtime_error("matrix file: missing dimension line");
  long d = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> d) || d < 1)
      throw std::runtime_error("matrix file: invalid dimension '" + line + "'");
  }
  Eigen::MatrixXd m(d, d);
  for (long i = 0; i < d; ++i) {
    if (!next_content_line(is, line))
      throw std::runtime_error("matrix file: truncated at row " +
                               std::to_string(i));
    std::istringstream ls(line);
    for (long j = 0; j < d; ++j) {
      if (!(ls >> m(i, j)))
        throw std::runtime_error("matrix file: malformed row " +
                                 std::to_string(i));
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error("matrix file: too many entries in row " +
                               std::to_string(i));
  }
  return m;
}

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m,
                       const std::string& header_comment) {
  auto os = open_for_write(path);
  write_matrix(os, m, header_comment);
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  auto is = open_for_read(path);
  return read_matrix(is);
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << format_g17(v[i]) << "\n";
}

Eigen::VectorXd read_vector(std::istream& is) {
  std::vector<double> values;
  std::string line;
  while (next_content_line(is, line)) {
    std::istringstream ls(line);
    double v;
    while (ls >> v) values.push_back(v);
  }
  if (values.empty()) throw std::runtime_error("vector file: no values");
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

Eigen::VectorXd read_vector_file(const std::string& path) {
  auto is = open_for_read(path);
  return read_vector(is);
}

void write_vector_file(const std::string& path, const Eigen::VectorXd& v) {
  auto os = open_for_write(path);
  write_vector(os, v);
}

}  // namespace grdr
