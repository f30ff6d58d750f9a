#pragma once

#include <cstdint>
#include <string>

#include "gsdnet/model.hpp"
#include "gsdnet/multimodal.hpp"
#include "gsdnet/rng.hpp"

namespace gsdnet {

// Drives train_step over a dataset: per step one uniform sample draw and one
// uniform pattern draw from the 7-entry availability menu. All entropy comes
// from the single owned generator, so a checkpointed generator state resumes
// the exact trajectory.
class Trainer {
public:
    Trainer(GsdnetModel& model, const Dataset& train, std::uint64_t seed);

    StepLosses step();
    long step_count() const { return model_->train_step_count(); }

    // Model checkpoint extended with the trainer generator state and the
    // dataset hash, for bit-identical resume.
    CheckpointBlob make_checkpoint(const std::string& dataset_hash) const;
    // Restores model + trainer from a checkpoint made by make_checkpoint.
    // Verifies the dataset hash when expected_dataset_hash is non-empty.
    static std::pair<GsdnetModel, Rng> restore(const CheckpointBlob& blob,
                                               const std::string& expected_dataset_hash);
    void set_rng(Rng rng) { rng_ = std::move(rng); }

private:
    GsdnetModel* model_;
    const Dataset* train_;
    Rng rng_;
};

std::string checkpoint_dataset_hash(const CheckpointBlob& blob);

}  // namespace gsdnet
