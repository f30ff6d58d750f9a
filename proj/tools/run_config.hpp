#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gsdnet/model.hpp"
#include "gsdnet/sde.hpp"
#include "gsdnet/synthetic.hpp"

namespace gsdnet::cli {

// Bad flags, malformed config files, unknown keys, hash mismatches. Exit 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<double> beta;
    std::optional<double> missing_rate;
    std::optional<std::string> pattern;
    std::optional<int> steps;
};

// The fully resolved run configuration: schema defaults, overlaid with the
// config file (unknown keys rejected), overlaid with CLI flags. The resolved
// JSON is the snapshot written next to every run's outputs.
class RunConfig {
public:
    static RunConfig load(const std::string& config_path, const Overrides& ov);

    const nlohmann::json& resolved() const { return resolved_; }
    std::string snapshot() const;  // pretty dump + trailing newline
    // Content hash of the run semantics: the resolved config minus the output
    // location and thread cap.
    std::string hash() const;

    std::uint64_t seed() const;
    std::string out_dir() const;
    int threads() const;

    SyntheticConfig synthetic_config() const;
    // raw_dims filled by the caller from the dataset
    GsdnetConfig model_config() const;
    sde::SdeStepPlan step_plan() const;

    std::string train_dataset() const;
    int train_steps() const;
    int checkpoint_every() const;
    std::string resume_path() const;

    std::string eval_checkpoint() const;
    std::string eval_dataset() const;
    std::string eval_mode() const;  // "fixed-pattern" or "random-rate"
    std::vector<std::string> eval_patterns() const;
    std::vector<double> eval_rates() const;
    std::string eval_imputation() const;  // "diffusion" or "mean"

    int compare_n_graphs() const;
    int compare_n_nodes() const;
    int compare_feature_dim() const;
    int compare_window() const;
    std::vector<double> compare_times() const;

    std::string recover_checkpoint() const;
    std::string recover_dataset() const;
    std::string recover_pattern() const;
    int recover_max_samples() const;

    // Writes resolved_config.json and config_hash.txt under out_dir.
    void write_snapshot() const;

private:
    nlohmann::json resolved_;
};

}  // namespace gsdnet::cli
