#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gsdnet {

// Versioned binary container: a JSON manifest plus ordered named flat double
// arrays. Doubles are written as raw bytes, so save/load round-trips
// bit-exactly.
struct CheckpointBlob {
    std::string manifest_json;
    std::vector<std::pair<std::string, Eigen::VectorXd>> arrays;

    const Eigen::VectorXd* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointBlob& blob);
CheckpointBlob load_checkpoint(const std::string& path);

}  // namespace gsdnet
