#pragma once

#include <array>
#include <cstdint>

#include "gsdnet/multimodal.hpp"

namespace gsdnet {

// Desk-scale multimodal conversations: a latent AR(1) utterance process
// drives the language modality exactly; audio and video are random full-rank
// linear maps of language plus eta-scaled noise; the label is a linear
// readout of the mean latent plus label noise.
struct SyntheticConfig {
    std::uint64_t seed = 1;
    int n_samples = 120;
    int n_min = 6;
    int n_max = 10;
    int latent_dim = 4;
    std::array<int, 3> dims = {12, 10, 8};  // l, a, v raw dims
    double eta = 0.1;
    double label_noise = 0.1;
    double ar_coeff = 0.5;
    double label_scale = 2.2;
    std::array<double, 3> split = {0.7, 0.15, 0.15};

    void validate() const;
};

struct SyntheticDataset {
    Dataset train;
    Dataset val;
    Dataset test;
};

SyntheticDataset generate(const SyntheticConfig& cfg);

}  // namespace gsdnet
