#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsdnet/sde.hpp"
#include "gsdnet/spectral.hpp"

namespace gsdnet::harness {

// Entrywise forward_sample on the whole matrix, then symmetrized.
SymmetricMatrix adjacency_space_noised(const SymmetricMatrix& a,
                                       const sde::DiffusionSchedule& s, double t,
                                       const Eigen::MatrixXd& noise);

// forward_sample on the eigenvalues only; the eigenvector basis is frozen.
Eigen::VectorXd spectral_noised_eigvals(const SpectralDecomposition& d,
                                        const sde::DiffusionSchedule& s, double t,
                                        const Eigen::VectorXd& noise);

// U diag(vals) U^T with the original basis.
SymmetricMatrix reconstruct_with_frozen_basis(const SpectralDecomposition& d,
                                              const Eigen::VectorXd& vals);

// Minimal cross-basis alignment between the original eigenvectors and the
// re-decomposition of the frozen-basis reconstruction. Eigenvalues within
// cluster_tol are grouped and compared as invariant subspaces (smallest
// singular value of the cross-Gram block). 1 means identical subspaces.
double subspace_alignment(const SpectralDecomposition& original,
                          const Eigen::VectorXd& noised_vals, double cluster_tol = 1e-8);

// Fraction of strict-upper-triangle entries whose |value| stays on the same
// side of the median |value| after perturbation.
double edge_sign_retention(const SymmetricMatrix& original, const SymmetricMatrix& perturbed);

// mean_scale(t) ||A||_F / (std(t) sqrt(perturbed_dim))
double empirical_snr(const SymmetricMatrix& a, const sde::DiffusionSchedule& s, double t,
                     long perturbed_dim);

struct ComparisonRow {
    int graph_id = 0;
    std::string space;   // "adjacency" or "spectral"
    double t = 0.0;
    std::string metric;  // rel_frobenius, spectral_l2, edge_sign_retention, snr
    double value = 0.0;
};

// Degradation curves for both noising spaces at each time. Deterministic
// under the seed; one noise draw per graph is shared across all times so the
// per-graph curves trace a single degradation path.
std::vector<ComparisonRow> diffusion_space_comparison(
    const std::vector<SymmetricMatrix>& graphs, const sde::DiffusionSchedule& schedule,
    const std::vector<double>& times, std::uint64_t seed);

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

// Seeded single-chain windowed-cosine graphs over random feature rows, the
// graph family used by the degradation experiment.
std::vector<SymmetricMatrix> make_windowed_feature_graphs(int count, int n_nodes,
                                                          int feature_dim, int window,
                                                          std::uint64_t seed);

}  // namespace gsdnet::harness
