#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsdnet/model.hpp"
#include "gsdnet/multimodal.hpp"
#include "gsdnet/sde.hpp"

namespace gsdnet::harness {

// A dataset plus a per-sample availability pattern. Ground truth stays in
// place so recovery error can be measured against it.
struct MaskedDataset {
    Dataset data;
    std::vector<MissingPattern> patterns;
};

// Whole-modality masking per one fixed availability pattern.
MaskedDataset apply_missing_pattern(const Dataset& ds, const MissingPattern& pattern);

// Independent per-(sample, modality) masking at the given rate in [0, 0.7].
// Samples that would lose every modality are re-rolled.
MaskedDataset apply_missing_rate(const Dataset& ds, double rate, std::uint64_t seed);

struct EvalRow {
    std::string condition_id;
    std::uint64_t seed = 0;
    int n_samples = 0;
    double acc2 = 0.0;
    double f1 = 0.0;
    double acc7 = 0.0;
    double recovery_mse = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::string config_hash;
    double runtime_seconds = 0.0;  // metadata only; kept out of the CSV

    // Arithmetic mean of the per-row metrics, condition id "Average".
    EvalRow average() const;
    void write_csv(std::ostream& os) const;  // includes the Average row
    std::string to_json() const;             // rows + average + runtime + hash
};

struct SamplePrediction {
    double yhat = 0.0;
    double recovery_mse = 0.0;
    bool has_recovery = false;
};

using Predictor = std::function<SamplePrediction(const MultimodalSample&,
                                                 const MissingPattern&,
                                                 std::uint64_t sample_seed)>;

// Runs the predictor over every sample (deterministic per-sample seeds, safe
// to parallelize) and computes ACC2 / binary macro-F1 / ACC7 / recovery MSE.
// ACC2 and F1 exclude exactly-zero labels.
EvalRow evaluate(const Predictor& predictor, const MaskedDataset& masked,
                 const std::string& condition_id, std::uint64_t seed, int threads = 1);

// Column means of each modality pooled over all utterances of the dataset.
std::array<Eigen::VectorXd, 3> modality_means(const Dataset& ds);

Predictor model_predictor(const GsdnetModel& model, const sde::SdeStepPlan& plan);
Predictor mean_imputation_predictor(const GsdnetModel& model,
                                    const std::array<Eigen::VectorXd, 3>& fill_rows);

}  // namespace gsdnet::harness
