#include "gsdnet/synthetic.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "gsdnet/rng.hpp"

namespace gsdnet {

void SyntheticConfig::validate() const {
    if (n_samples < 3) throw std::invalid_argument("SyntheticConfig: n_samples must be >= 3");
    if (n_min < 1 || n_max < n_min)
        throw std::invalid_argument("SyntheticConfig: need 1 <= n_min <= n_max");
    if (latent_dim < 1) throw std::invalid_argument("SyntheticConfig: latent_dim must be >= 1");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("SyntheticConfig: modality dims must be >= 1");
    if (eta < 0.0) throw std::invalid_argument("SyntheticConfig: eta must be >= 0");
    if (!(ar_coeff >= 0.0 && ar_coeff < 1.0))
        throw std::invalid_argument("SyntheticConfig: ar_coeff must be in [0, 1)");
    double total = 0.0;
    for (double s : split) {
        if (s < 0.0) throw std::invalid_argument("SyntheticConfig: negative split ratio");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("SyntheticConfig: split ratios must sum to 1");
}

namespace {

Eigen::MatrixXd full_rank_map(Rng& rng, int in, int out) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXd m = scale * rng.normal_matrix(in, out);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        if (svd.singularValues().minCoeff() > 1e-6) return m;
    }
    throw numeric_error("full_rank_map: could not draw a full-rank map");
}

}  // namespace

SyntheticDataset generate(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0xda7a));

    const int dl = cfg.dims[0], da = cfg.dims[1], dv = cfg.dims[2];
    const Eigen::MatrixXd map_l = full_rank_map(rng, cfg.latent_dim, dl);
    const Eigen::MatrixXd map_a = full_rank_map(rng, dl, da);
    const Eigen::MatrixXd map_v = full_rank_map(rng, dl, dv);
    Eigen::VectorXd readout = rng.normal_vector(cfg.latent_dim);
    readout /= readout.norm();

    Dataset all;
    all.samples.reserve(static_cast<std::size_t>(cfg.n_samples));
    for (int s = 0; s < cfg.n_samples; ++s) {
        const int n = cfg.n_min + rng.uniform_int(cfg.n_max - cfg.n_min + 1);
        Eigen::MatrixXd latent(n, cfg.latent_dim);
        latent.row(0) = rng.normal_vector(cfg.latent_dim).transpose();
        const double rho = cfg.ar_coeff;
        const double innov = std::sqrt(1.0 - rho * rho);
        for (int i = 1; i < n; ++i)
            latent.row(i) =
                rho * latent.row(i - 1) + innov * rng.normal_vector(cfg.latent_dim).transpose();

        MultimodalSample sample;
        Eigen::MatrixXd xl = latent * map_l;
        Eigen::MatrixXd xa = xl * map_a + cfg.eta * rng.normal_matrix(n, da);
        Eigen::MatrixXd xv = xl * map_v + cfg.eta * rng.normal_matrix(n, dv);
        sample.modalities[0] = std::move(xl);
        sample.modalities[1] = std::move(xa);
        sample.modalities[2] = std::move(xv);
        const double signal = readout.dot(latent.colwise().mean().transpose());
        sample.label = cfg.label_scale * signal + cfg.label_noise * rng.normal();
        sample.validate();
        all.samples.push_back(std::move(sample));
    }

    // seeded shuffle, then contiguous disjoint splits
    std::vector<std::size_t> order(all.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(order[i - 1], order[j]);
    }

    const int n_train = static_cast<int>(std::lround(cfg.split[0] * cfg.n_samples));
    const int n_val = static_cast<int>(std::lround(cfg.split[1] * cfg.n_samples));
    SyntheticDataset out;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& s = all.samples[order[k]];
        if (static_cast<int>(k) < n_train)
            out.train.samples.push_back(s);
        else if (static_cast<int>(k) < n_train + n_val)
            out.val.samples.push_back(s);
        else
            out.test.samples.push_back(s);
    }
    return out;
}

}  // namespace gsdnet
