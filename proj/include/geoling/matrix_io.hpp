#pragma once

#include <Eigen/Dense>
#include <string>

namespace geoling {

// Binary dense matrix file: 16-byte header (8-byte magic "GEOLMAT1",
// uint32 rows, uint32 cols, little-endian), then rows*cols float64 values in
// row-major order, little-endian.
void save_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);

} // namespace geoling
