#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "gsdnet/matrix_io.hpp"
#include "gsdnet/rng.hpp"
#include "gsdnet/spectral.hpp"

#include "oracles.hpp"

using namespace gsdnet;

namespace {
SymmetricMatrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return SymmetricMatrix(rng.normal_matrix(n, n));
}
}  // namespace

TEST_CASE("SymmetricMatrix symmetrizes and validates") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 2.0, 4.0, 3.0;
    SymmetricMatrix s(m);
    CHECK(s(0, 1) == doctest::Approx(3.0));
    CHECK(s(0, 1) == s(1, 0));

    Eigen::MatrixXd bad(2, 3);
    CHECK_THROWS_AS(SymmetricMatrix{bad}, std::invalid_argument);
    Eigen::MatrixXd nan2 = Eigen::MatrixXd::Zero(2, 2);
    nan2(0, 0) = std::nan("");
    CHECK_THROWS_AS(SymmetricMatrix{nan2}, std::invalid_argument);
}

TEST_CASE("eigh: identity matrix") {
    SymmetricMatrix eye(Eigen::MatrixXd::Identity(3, 3));
    const SpectralDecomposition d = eigh(eye);
    for (int i = 0; i < 3; ++i) CHECK(d.eigvals[i] == doctest::Approx(1.0).epsilon(1e-12));
    // basis is any orthogonal set; correctness judged via reconstruction
    CHECK(frobenius_distance(reconstruct(d), eye) <= 1e-12);
}

TEST_CASE("eigh: 2x2 swap matrix has eigenvalues -1, 1") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    const SpectralDecomposition d = eigh(SymmetricMatrix(m));
    CHECK(d.eigvals[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(d.eigvals[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigh: 8x8 eigenvalues match characteristic-polynomial roots") {
    const SymmetricMatrix a = random_symmetric(8, 815);
    const SpectralDecomposition d = eigh(a);
    const std::vector<double> roots = oracles::char_poly_roots(a.entries());
    REQUIRE(roots.size() == 8);
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(d.eigvals[i] - roots[static_cast<std::size_t>(i)]) <= 1e-6);
}

TEST_CASE("reconstruct: identity basis returns the diagonal") {
    SpectralDecomposition d;
    d.eigvals = Eigen::VectorXd::Ones(3);
    d.eigvecs = Eigen::MatrixXd::Identity(3, 3);
    CHECK((reconstruct(d).entries() - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("reconstruct: null spectrum gives the zero matrix") {
    const SymmetricMatrix a = random_symmetric(5, 99);
    SpectralDecomposition d = eigh(a);
    d.eigvals.setZero();
    CHECK(reconstruct(d).entries().norm() <= 1e-14);
}

TEST_CASE("eigh/reconstruct round trip on random 16x16") {
    const SymmetricMatrix a = random_symmetric(16, 161);
    const SpectralDecomposition d = eigh(a);
    CHECK(frobenius_distance(reconstruct(d), a) <= 1e-8 * a.frobenius_norm());

    const SpectralDecomposition d2 = eigh(reconstruct(d));
    for (int i = 0; i < 16; ++i) CHECK(std::abs(d2.eigvals[i] - d.eigvals[i]) <= 1e-8);
}

TEST_CASE("frobenius_distance examples and properties") {
    const SymmetricMatrix a = random_symmetric(4, 7);
    CHECK(frobenius_distance(a, a) == 0.0);

    Eigen::MatrixXd swap2(2, 2);
    swap2 << 0.0, 1.0, 1.0, 0.0;
    CHECK(frobenius_distance(SymmetricMatrix(swap2), SymmetricMatrix::zero(2)) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    // element-wise sum-of-squares oracle, exact match
    const SymmetricMatrix b = random_symmetric(4, 8);
    double ss = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double diff = a(i, j) - b(i, j);
            ss += diff * diff;
        }
    CHECK(frobenius_distance(a, b) == std::sqrt(ss));

    // triangle inequality on random triples
    for (std::uint64_t s = 0; s < 20; ++s) {
        const SymmetricMatrix x = random_symmetric(6, 100 + s);
        const SymmetricMatrix y = random_symmetric(6, 200 + s);
        const SymmetricMatrix z = random_symmetric(6, 300 + s);
        CHECK(frobenius_distance(x, z) <=
              frobenius_distance(x, y) + frobenius_distance(y, z) + 1e-12);
    }

    CHECK_THROWS_AS(frobenius_distance(random_symmetric(3, 1), random_symmetric(4, 1)),
                    std::invalid_argument);
}

TEST_CASE("eigh properties: orthogonality, round trip, trace, determinism") {
    for (Eigen::Index n : {2, 4, 8, 16, 32, 64}) {
        const SymmetricMatrix a = random_symmetric(n, 4000 + static_cast<std::uint64_t>(n));
        const SpectralDecomposition d = eigh(a);

        const Eigen::MatrixXd gram = d.eigvecs.transpose() * d.eigvecs;
        CHECK((gram - Eigen::MatrixXd::Identity(n, n)).norm() <=
              1e-8 * static_cast<double>(n));
        double max_cross = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                max_cross = std::max(max_cross, std::abs(gram(i, j)));
        CHECK(max_cross <= 1e-8);

        CHECK(frobenius_distance(reconstruct(d), a) <= 1e-8 * a.frobenius_norm());
        CHECK(std::abs(d.eigvals.sum() - a.trace()) <= 1e-8 * static_cast<double>(n));

        for (Eigen::Index i = 1; i < n; ++i) CHECK(d.eigvals[i] >= d.eigvals[i - 1]);

        // bit-identical repeat
        const SpectralDecomposition d2 = eigh(a);
        CHECK(std::memcmp(d.eigvals.data(), d2.eigvals.data(),
                          sizeof(double) * static_cast<std::size_t>(n)) == 0);
        CHECK(std::memcmp(d.eigvecs.data(), d2.eigvecs.data(),
                          sizeof(double) * static_cast<std::size_t>(n * n)) == 0);

        // sign convention: largest-magnitude entry of each column non-negative
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::Index arg = 0;
            d.eigvecs.col(k).cwiseAbs().maxCoeff(&arg);
            CHECK(d.eigvecs(arg, k) >= 0.0);
        }
    }
}

TEST_CASE("eigh: degenerate spectra reconstruct correctly") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = 1.0;
    m(2, 3) = m(3, 2) = 1.0;
    const SymmetricMatrix a(m);
    const SpectralDecomposition d = eigh(a);
    CHECK(frobenius_distance(reconstruct(d), a) <= 1e-12);
    CHECK(d.eigvals[0] == doctest::Approx(-1.0));
    CHECK(d.eigvals[1] == doctest::Approx(-1.0));
}

TEST_CASE("eigh: sweep cap reports a convergence error with the residual") {
    EighOptions opts;
    opts.max_sweeps = 0;
    const SymmetricMatrix a = random_symmetric(6, 55);
    CHECK_THROWS_AS(eigh(a, opts), convergence_error);
    try {
        eigh(a, opts);
    } catch (const convergence_error& e) {
        CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
}

TEST_CASE("matrix serialization round trips with explicit shape header") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gsdnet_spectral_io";
    fs::create_directories(dir);

    Rng rng(12);
    const Eigen::MatrixXd m = rng.normal_matrix(5, 3);

    const std::string bin = (dir / "m.bin").string();
    save_matrix_binary(bin, m);
    const Eigen::MatrixXd back = load_matrix_binary(bin);
    REQUIRE(back.rows() == 5);
    REQUIRE(back.cols() == 3);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 15) == 0);

    const std::string csv = (dir / "m.csv").string();
    save_matrix_csv(csv, m);
    const std::string text = read_file(csv);
    CHECK(text.rfind("5,3\n", 0) == 0);
    const Eigen::MatrixXd back_csv = load_matrix_csv(csv);
    CHECK(std::memcmp(back_csv.data(), m.data(), sizeof(double) * 15) == 0);

    const SymmetricMatrix a = random_symmetric(4, 3);
    save_symmetric_binary((dir / "a.bin").string(), a);
    CHECK((load_matrix_binary((dir / "a.bin").string()) - a.entries()).norm() == 0.0);
}
