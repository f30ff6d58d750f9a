#include "gsdnet/matrix_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "gsdnet/errors.hpp"
#include "gsdnet/hash.hpp"

namespace gsdnet {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {
constexpr char kMagic[4] = {'G', 'S', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("matrix_io: truncated stream");
    return v;
}
}  // namespace

void save_matrix_binary(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("save_matrix_binary: cannot open " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    put<std::int64_t>(os, m.rows());
    put<std::int64_t>(os, m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put(os, m(i, j));
    if (!os) throw io_error("save_matrix_binary: write failed for " + path);
}

Eigen::MatrixXd load_matrix_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("load_matrix_binary: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("load_matrix_binary: bad magic in " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw io_error("load_matrix_binary: unsupported version");
    const auto rows = get<std::int64_t>(is);
    const auto cols = get<std::int64_t>(is);
    if (rows < 0 || cols < 0) throw io_error("load_matrix_binary: negative shape");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get<double>(is);
    return m;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
    os << m.rows() << "," << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ",";
            os << fmt_double(m(i, j));
        }
        os << "\n";
    }
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream os(path);
    if (!os) throw io_error("save_matrix_csv: cannot open " + path);
    write_matrix_csv(os, m);
    if (!os) throw io_error("save_matrix_csv: write failed for " + path);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("load_matrix_csv: cannot open " + path);
    std::string header;
    if (!std::getline(is, header)) throw io_error("load_matrix_csv: empty file " + path);
    Eigen::Index rows = 0, cols = 0;
    if (std::sscanf(header.c_str(), "%ld,%ld", &rows, &cols) != 2)
        throw io_error("load_matrix_csv: malformed shape header in " + path);
    Eigen::MatrixXd m(rows, cols);
    std::string line;
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(is, line)) throw io_error("load_matrix_csv: truncated " + path);
        std::istringstream ls(line);
        std::string cell;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!std::getline(ls, cell, ',')) throw io_error("load_matrix_csv: short row");
            m(i, j) = std::strtod(cell.c_str(), nullptr);
        }
    }
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("read_file: cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("write_file: cannot open " + path);
    os << content;
    if (!os) throw io_error("write_file: write failed for " + path);
}

std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

}  // namespace gsdnet
