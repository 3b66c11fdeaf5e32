#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace grdr {

/// Plain-text matrix format: optional leading '#' comment lines, one line
/// with the dimension d, then d rows of d space-separated values. Writers
/// emit 17 significant digits so values round-trip exactly.
void write_matrix(std::ostream& os, const Eigen::MatrixXd& m,
                  const std::string& header_comment = "");
Eigen::MatrixXd read_matrix(std::istream& is);

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m,
                       const std::string& header_comment = "");
Eigen::MatrixXd read_matrix_file(const std::string& path);

/// Single-column vector format (one value per line, '#' comments allowed).
void write_vector(std::ostream& os, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(std::istream& is);
Eigen::VectorXd read_vector_file(const std::string& path);
void write_vector_file(const std::string& path, const Eigen::VectorXd& v);

}  // namespace grdr
