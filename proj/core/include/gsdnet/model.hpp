#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsdnet/checkpoint.hpp"
#include "gsdnet/graph.hpp"
#include "gsdnet/multimodal.hpp"
#include "gsdnet/nn.hpp"
#include "gsdnet/score_net.hpp"
#include "gsdnet/sde.hpp"
#include "gsdnet/spectral.hpp"

namespace gsdnet {

// Sinusoidal positional embedding over utterance positions:
// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(pos / 10000^(2i/d)).
Eigen::MatrixXd positional_embedding(int n_positions, int dim);

// 7-bucket index of a score under uniform buckets on [-3, 3], clamped.
int bucket7(double y);
// 1 for positive, 0 for negative-or-zero.
int binary_label(double y);

struct GsdnetConfig {
    int common_dim = 24;                        // shared feature dim d
    std::array<int, 3> raw_dims = {0, 0, 0};    // per-modality input dims
    std::array<int, 3> kernel_sizes = {3, 3, 3};
    std::vector<int> score_hidden = {128, 128};
    std::vector<int> eig_score_hidden = {64, 64};
    std::vector<int> decoder_hidden = {64};
    std::vector<int> eig_decoder_hidden = {32};
    std::vector<int> head_hidden = {32};
    int time_embed_dim = 16;
    int gcn_hidden = 32;
    int gcn_layers = 2;
    int window = 2;
    double beta = 0.1;
    int k_rec = 5;  // reverse steps inside train_step's reconstruction branch
    int spectrum_summary_dim = 8;
    sde::DiffusionSchedule feature_schedule = sde::DiffusionSchedule::vp();
    sde::DiffusionSchedule eigen_schedule = sde::DiffusionSchedule::vp();
    nn::AdamConfig optimizer;

    void validate() const;
};

struct StepLosses {
    double score_x = 0.0;
    double score_eig = 0.0;
    double rec = 0.0;
    double pred = 0.0;
    double total = 0.0;
};

// Single definition of the loss composition so logs and tests reproduce the
// exact same floating-point expression.
inline double total_loss(double beta, double rec, double score_x, double score_eig,
                         double pred) {
    return beta * (rec + score_x + score_eig) + pred;
}

struct TrainStepOptions {
    std::optional<double> fixed_t;        // overrides the t ~ U(t_eps, 1) draw
    bool zero_noise = false;              // zero perturbation/chain noise
    std::optional<int> k_rec_override;
};

struct RecoverResult {
    EncodedModalities encoded;       // observed slots plus chain-recovered slots
    SpectralDecomposition spectrum;  // of the assembled full-graph adjacency
    SymmetricMatrix adjacency = SymmetricMatrix::zero(1);
    // decoded back to raw per-modality dims, missing slots only
    std::array<std::optional<Eigen::MatrixXd>, 3> decoded_raw;
    // recovered per-modality subgraph spectra, missing slots only
    std::array<std::optional<Eigen::VectorXd>, 3> recovered_subspectrum;
    bool bypassed = false;  // complete pattern, chains skipped
};

struct Prediction {
    double score = 0.0;
    int binary = 0;
    int bucket = 0;
    double recovery_mse = 0.0;  // raw-space MSE per missing cell, 0 when none
    bool recovered = false;
};

// The full pipeline: per-modality conv encoders, feature and spectrum score
// nets, reconstruction decoders, GCN fusion stack and prediction head, all
// updated jointly by one Adam instance.
class GsdnetModel {
public:
    GsdnetModel(GsdnetConfig cfg, std::uint64_t seed);

    const GsdnetConfig& config() const { return cfg_; }

    // Conv1d + positional embedding for every modality observed under the
    // pattern (or every present modality with the complete pattern).
    EncodedModalities encode(const MultimodalSample& sample,
                             const MissingPattern& pattern = MissingPattern::complete()) const;

    // One joint optimization step on a sample whose "missing" modalities are
    // simulated by the pattern. The sample must carry ground truth for all
    // three modalities.
    StepLosses train_step(const MultimodalSample& sample, const MissingPattern& pattern,
                          Rng& rng, const TrainStepOptions& opts = {});

    // Conditional generation of the missing modalities. Requires a trained
    // model and at least one prior train_step.
    RecoverResult recover(const MultimodalSample& sample, const MissingPattern& pattern,
                          const sde::SdeStepPlan& plan, Rng& rng) const;

    // Normalized-adjacency GCN stack, mean-pooled over nodes.
    Eigen::VectorXd gcn_forward(const Eigen::MatrixXd& features,
                                const SymmetricMatrix& adjacency) const;
    double predict_from_fused(const Eigen::VectorXd& fused) const;

    // recover (when needed) + fuse + head.
    Prediction predict(const MultimodalSample& sample, const MissingPattern& pattern,
                       const sde::SdeStepPlan& plan, Rng& rng) const;

    // Same pipeline but with missing raw modalities replaced by a fixed row
    // (the mean-imputation baseline).
    Prediction predict_with_imputation(const MultimodalSample& sample,
                                       const MissingPattern& pattern,
                                       const std::array<Eigen::VectorXd, 3>& fill_rows) const;

    long train_step_count() const { return train_steps_; }
    std::size_t parameter_count() const;
    void set_learning_rate(double lr) { adam_.set_learning_rate(lr); }

    // Per-utterance condition for the feature score net of `target`: the two
    // other modality slots (zeros when unobserved) plus availability bits.
    Eigen::VectorXd feature_condition(const EncodedModalities& enc,
                                      const MissingPattern& pattern, Modality target,
                                      int utterance) const;
    // Quantile ladder over the concatenated observed subgraph spectra.
    static Eigen::VectorXd spectrum_summary(const std::vector<Eigen::VectorXd>& spectra,
                                            int dim);

    std::vector<nn::ParamBlock*> param_blocks();
    ScoreNet& feature_score_net(Modality m) { return sx_[static_cast<std::size_t>(m)]; }
    ScoreNet& spectrum_score_net(Modality m) { return se_[static_cast<std::size_t>(m)]; }
    nn::Mlp& feature_decoder(Modality m) { return dx_[static_cast<std::size_t>(m)]; }
    nn::Mlp& spectrum_decoder(Modality m) { return de_[static_cast<std::size_t>(m)]; }
    nn::Conv1d& encoder(Modality m) { return enc_[static_cast<std::size_t>(m)]; }
    nn::Mlp& head() { return head_; }

    CheckpointBlob to_checkpoint() const;
    static GsdnetModel from_checkpoint(const CheckpointBlob& blob);
    // manifest helpers for dataset/config consistency checks
    std::string manifest_json() const;

private:
    EncodedModalities encode_recorded(const MultimodalSample& sample);

    GsdnetConfig cfg_;
    std::vector<nn::Conv1d> enc_;
    std::vector<ScoreNet> sx_;
    std::vector<ScoreNet> se_;
    std::vector<nn::Mlp> dx_;
    std::vector<nn::Mlp> de_;
    std::vector<nn::GcnLayer> gcn_;
    nn::Mlp head_;
    nn::Adam adam_;
    long train_steps_ = 0;

    friend class Trainer;
};

}  // namespace gsdnet
