#include "gsdnet/trainer.hpp"

#include <json.hpp>

namespace gsdnet {

using nlohmann::json;

Trainer::Trainer(GsdnetModel& model, const Dataset& train, std::uint64_t seed)
    : model_(&model), train_(&train), rng_(seed) {
    if (train.empty()) throw std::invalid_argument("Trainer: empty training set");
}

StepLosses Trainer::step() {
    const int idx = rng_.uniform_int(static_cast<int>(train_->size()));
    const auto& menu = MissingPattern::menu();
    const MissingPattern pattern = menu[static_cast<std::size_t>(rng_.uniform_int(7))];
    return model_->train_step(train_->samples[static_cast<std::size_t>(idx)], pattern, rng_);
}

CheckpointBlob Trainer::make_checkpoint(const std::string& dataset_hash) const {
    CheckpointBlob blob = model_->to_checkpoint();
    json manifest = json::parse(blob.manifest_json);
    manifest["trainer"] = {{"rng", rng_.serialize()}, {"dataset_hash", dataset_hash}};
    blob.manifest_json = manifest.dump();
    return blob;
}

std::pair<GsdnetModel, Rng> Trainer::restore(const CheckpointBlob& blob,
                                             const std::string& expected_dataset_hash) {
    const json manifest = json::parse(blob.manifest_json);
    if (!manifest.contains("trainer"))
        throw io_error("Trainer::restore: checkpoint has no trainer state");
    const std::string stored_hash =
        manifest["trainer"].at("dataset_hash").get<std::string>();
    if (!expected_dataset_hash.empty() && stored_hash != expected_dataset_hash)
        throw io_error("Trainer::restore: dataset hash mismatch (checkpoint " + stored_hash +
                       ", dataset " + expected_dataset_hash + ")");
    GsdnetModel model = GsdnetModel::from_checkpoint(blob);
    Rng rng = Rng::deserialize(manifest["trainer"].at("rng").get<std::string>());
    return {std::move(model), std::move(rng)};
}

std::string checkpoint_dataset_hash(const CheckpointBlob& blob) {
    const json manifest = json::parse(blob.manifest_json);
    if (!manifest.contains("trainer")) return {};
    return manifest["trainer"].at("dataset_hash").get<std::string>();
}

}  // namespace gsdnet
