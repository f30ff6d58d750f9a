#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "gsdnet/spectral.hpp"

namespace gsdnet {

// Format a double so that text round-trips to the exact same bits.
std::string fmt_double(double x);

// Row-major binary container: magic "GSDM", u32 version, i64 rows, i64 cols,
// then rows*cols raw doubles in row-major order.
void save_matrix_binary(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_binary(const std::string& path);

// CSV: first line "rows,cols", then one comma-separated line per row.
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

inline void save_symmetric_binary(const std::string& path, const SymmetricMatrix& m) {
    save_matrix_binary(path, m.entries());
}
inline void save_symmetric_csv(const std::string& path, const SymmetricMatrix& m) {
    save_matrix_csv(path, m.entries());
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gsdnet
