#include "gsdnet/compare.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

#include "gsdnet/graph.hpp"
#include "gsdnet/matrix_io.hpp"
#include "gsdnet/rng.hpp"

namespace gsdnet::harness {

SymmetricMatrix adjacency_space_noised(const SymmetricMatrix& a,
                                       const sde::DiffusionSchedule& s, double t,
                                       const Eigen::MatrixXd& noise) {
    if (noise.rows() != a.size() || noise.cols() != a.size())
        throw std::invalid_argument("adjacency_space_noised: noise shape mismatch");
    const Eigen::MatrixXd perturbed =
        s.mean_scale(t) * a.entries() + s.std_dev(t) * noise;
    return SymmetricMatrix(perturbed);  // construction symmetrizes
}

Eigen::VectorXd spectral_noised_eigvals(const SpectralDecomposition& d,
                                        const sde::DiffusionSchedule& s, double t,
                                        const Eigen::VectorXd& noise) {
    return sde::forward_sample(s, d.eigvals, t, noise);
}

SymmetricMatrix reconstruct_with_frozen_basis(const SpectralDecomposition& d,
                                              const Eigen::VectorXd& vals) {
    if (vals.size() != d.eigvals.size())
        throw std::invalid_argument("reconstruct_with_frozen_basis: size mismatch");
    SpectralDecomposition noised;
    noised.eigvals = vals;
    noised.eigvecs = d.eigvecs;
    return reconstruct(noised);
}

double subspace_alignment(const SpectralDecomposition& original,
                          const Eigen::VectorXd& noised_vals, double cluster_tol) {
    const Eigen::Index n = original.size();
    if (noised_vals.size() != n)
        throw std::invalid_argument("subspace_alignment: size mismatch");

    const SymmetricMatrix rebuilt = reconstruct_with_frozen_basis(original, noised_vals);
    const SpectralDecomposition redone = eigh(rebuilt);

    // sort the analytically known noised values to line up with the
    // re-decomposition's ascending order, remembering original indices
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        return noised_vals[i] < noised_vals[j];
    });

    double min_align = 1.0;
    Eigen::Index k = 0;
    while (k < n) {
        Eigen::Index k_end = k + 1;
        while (k_end < n &&
               noised_vals[order[static_cast<std::size_t>(k_end)]] -
                       noised_vals[order[static_cast<std::size_t>(k_end - 1)]] <=
                   cluster_tol)
            ++k_end;
        const Eigen::Index width = k_end - k;
        Eigen::MatrixXd u_orig(n, width), u_new(n, width);
        for (Eigen::Index c = 0; c < width; ++c) {
            u_orig.col(c) = original.eigvecs.col(order[static_cast<std::size_t>(k + c)]);
            u_new.col(c) = redone.eigvecs.col(k + c);
        }
        const Eigen::MatrixXd cross = u_orig.transpose() * u_new;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
        min_align = std::min(min_align, svd.singularValues().minCoeff());
        k = k_end;
    }
    return min_align;
}

namespace {
double upper_median_abs(const SymmetricMatrix& m) {
    std::vector<double> vals;
    const Eigen::Index n = m.size();
    for (Eigen::Index i = 0; i < n - 1; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) vals.push_back(std::abs(m(i, j)));
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    const std::size_t half = vals.size() / 2;
    return vals.size() % 2 == 1 ? vals[half] : 0.5 * (vals[half - 1] + vals[half]);
}
}  // namespace

double edge_sign_retention(const SymmetricMatrix& original, const SymmetricMatrix& perturbed) {
    if (original.size() != perturbed.size())
        throw std::invalid_argument("edge_sign_retention: shape mismatch");
    const Eigen::Index n = original.size();
    if (n < 2) return 1.0;
    const double med_orig = upper_median_abs(original);
    const double med_pert = upper_median_abs(perturbed);
    long kept = 0, total = 0;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const bool above_orig = std::abs(original(i, j)) >= med_orig;
            const bool above_pert = std::abs(perturbed(i, j)) >= med_pert;
            if (above_orig == above_pert) ++kept;
            ++total;
        }
    }
    return static_cast<double>(kept) / static_cast<double>(total);
}

double empirical_snr(const SymmetricMatrix& a, const sde::DiffusionSchedule& s, double t,
                     long perturbed_dim) {
    if (perturbed_dim < 1) throw std::invalid_argument("empirical_snr: perturbed_dim < 1");
    const double sd = s.std_dev(t);
    if (sd <= 0.0) return std::numeric_limits<double>::infinity();
    return s.mean_scale(t) * a.frobenius_norm() /
           (sd * std::sqrt(static_cast<double>(perturbed_dim)));
}

std::vector<ComparisonRow> diffusion_space_comparison(
    const std::vector<SymmetricMatrix>& graphs, const sde::DiffusionSchedule& schedule,
    const std::vector<double>& times, std::uint64_t seed) {
    for (double t : times)
        if (!(t > 0.0 && t <= 1.0))
            throw std::invalid_argument("diffusion_space_comparison: times must be in (0, 1]");

    std::vector<ComparisonRow> rows;
    rows.reserve(graphs.size() * times.size() * 8);
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        const SymmetricMatrix& a = graphs[g];
        const Eigen::Index n = a.size();
        const SpectralDecomposition spec = eigh(a);
        const double a_norm = std::max(a.frobenius_norm(), 1e-300);

        // one noise draw per graph, shared across times, so each graph traces
        // a smooth degradation path
        Rng rng(derive_seed(seed, 0xc0de + 1000003ULL * g));
        const Eigen::MatrixXd mat_noise_g = rng.normal_matrix(n, n);
        const Eigen::VectorXd vec_noise_g = rng.normal_vector(n);

        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const double t = times[ti];

            // adjacency-space noising
            const Eigen::MatrixXd& mat_noise = mat_noise_g;
            const SymmetricMatrix adj_noised =
                adjacency_space_noised(a, schedule, t, mat_noise);
            const double adj_dist = frobenius_distance(adj_noised, a) / a_norm;
            const Eigen::VectorXd adj_eigs = eigh(adj_noised).eigvals;
            const double adj_spec_dist = (adj_eigs - spec.eigvals).norm();
            const double adj_retention = edge_sign_retention(a, adj_noised);
            const double adj_snr = empirical_snr(a, schedule, t, n * (n + 1) / 2);

            // spectral-space noising with frozen eigenvectors
            const Eigen::VectorXd& vec_noise = vec_noise_g;
            const Eigen::VectorXd lam_noised =
                spectral_noised_eigvals(spec, schedule, t, vec_noise);
            const SymmetricMatrix spec_noised =
                reconstruct_with_frozen_basis(spec, lam_noised);
            const double spec_dist = frobenius_distance(spec_noised, a) / a_norm;
            Eigen::VectorXd lam_sorted = lam_noised;
            std::sort(lam_sorted.data(), lam_sorted.data() + lam_sorted.size());
            const double spec_spec_dist = (lam_sorted - spec.eigvals).norm();
            const double spec_retention = edge_sign_retention(a, spec_noised);
            const double spec_snr = empirical_snr(a, schedule, t, n);

            const int gid = static_cast<int>(g);
            rows.push_back({gid, "adjacency", t, "rel_frobenius", adj_dist});
            rows.push_back({gid, "adjacency", t, "spectral_l2", adj_spec_dist});
            rows.push_back({gid, "adjacency", t, "edge_sign_retention", adj_retention});
            rows.push_back({gid, "adjacency", t, "snr", adj_snr});
            rows.push_back({gid, "spectral", t, "rel_frobenius", spec_dist});
            rows.push_back({gid, "spectral", t, "spectral_l2", spec_spec_dist});
            rows.push_back({gid, "spectral", t, "edge_sign_retention", spec_retention});
            rows.push_back({gid, "spectral", t, "snr", spec_snr});
        }
    }
    return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
    os << "# gsdnet-curves-v1\n";
    os << "graph_id,space,t,metric,value\n";
    for (const auto& r : rows)
        os << r.graph_id << "," << r.space << "," << fmt_double(r.t) << "," << r.metric
           << "," << fmt_double(r.value) << "\n";
}

std::vector<SymmetricMatrix> make_windowed_feature_graphs(int count, int n_nodes,
                                                          int feature_dim, int window,
                                                          std::uint64_t seed) {
    if (count < 1 || n_nodes < 1 || feature_dim < 1)
        throw std::invalid_argument("make_windowed_feature_graphs: bad shape");
    std::vector<SymmetricMatrix> out;
    out.reserve(static_cast<std::size_t>(count));
    GraphBuildOptions opts;
    opts.window = window;
    for (int g = 0; g < count; ++g) {
        Rng rng(derive_seed(seed, 0x6eaf + static_cast<std::uint64_t>(g)));
        const Eigen::MatrixXd feats = rng.normal_matrix(n_nodes, feature_dim);
        bool degenerate = false;
        Eigen::MatrixXd a =
            windowed_cosine_adjacency(feats, {n_nodes}, opts, &degenerate);
        out.emplace_back(a);
    }
    return out;
}

}  // namespace gsdnet::harness
