#include "gsdnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "gsdnet/matrix_io.hpp"
#include "gsdnet/rng.hpp"

namespace gsdnet::harness {

using nlohmann::json;

MaskedDataset apply_missing_pattern(const Dataset& ds, const MissingPattern& pattern) {
    MaskedDataset out;
    out.data = ds;
    out.patterns.assign(ds.size(), pattern);
    return out;
}

MaskedDataset apply_missing_rate(const Dataset& ds, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 0.7))
        throw std::invalid_argument("apply_missing_rate: rate must be in [0, 0.7]");
    MaskedDataset out;
    out.data = ds;
    out.patterns.reserve(ds.size());
    Rng rng(derive_seed(seed, 0x3a5c));
    for (std::size_t s = 0; s < ds.size(); ++s) {
        std::array<bool, 3> alpha{};
        do {
            for (int m = 0; m < 3; ++m)
                alpha[static_cast<std::size_t>(m)] = rng.uniform() >= rate;
        } while (!alpha[0] && !alpha[1] && !alpha[2]);
        out.patterns.push_back(MissingPattern::from_alpha(alpha));
    }
    return out;
}

namespace {

struct Counts {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

double f1_of(long tp, long fp, long fn) {
    const long denom = 2 * tp + fp + fn;
    return denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
}

}  // namespace

EvalRow evaluate(const Predictor& predictor, const MaskedDataset& masked,
                 const std::string& condition_id, std::uint64_t seed, int threads) {
    if (masked.data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    if (masked.patterns.size() != masked.data.size())
        throw std::invalid_argument("evaluate: pattern/sample count mismatch");
    const auto n = masked.data.size();

    std::vector<SamplePrediction> preds(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            preds[i] = predictor(masked.data.samples[i], masked.patterns[i],
                                 derive_seed(seed, 0xeea1 + i));
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) /
                                  static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            const std::size_t b = static_cast<std::size_t>(w) * chunk;
            if (b >= n) break;
            pool.emplace_back(work, b, std::min(n, b + chunk));
        }
        for (auto& th : pool) th.join();
    }

    EvalRow row;
    row.condition_id = condition_id;
    row.seed = seed;
    row.n_samples = static_cast<int>(n);

    Counts c;  // positive class = label > 0, zero labels excluded
    long acc7_hits = 0;
    double mse_sum = 0.0;
    long mse_count = 0;
    long nonzero = 0, acc2_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double label = masked.data.samples[i].label;
        const double yhat = preds[i].yhat;
        if (label != 0.0) {
            ++nonzero;
            const bool truth_pos = label > 0.0;
            const bool pred_pos = yhat > 0.0;
            if (truth_pos == pred_pos) ++acc2_hits;
            if (truth_pos && pred_pos) ++c.tp;
            if (!truth_pos && pred_pos) ++c.fp;
            if (truth_pos && !pred_pos) ++c.fn;
            if (!truth_pos && !pred_pos) ++c.tn;
        }
        if (bucket7(yhat) == bucket7(label)) ++acc7_hits;
        if (preds[i].has_recovery) {
            mse_sum += preds[i].recovery_mse;
            ++mse_count;
        }
    }
    row.acc2 = nonzero > 0 ? static_cast<double>(acc2_hits) / static_cast<double>(nonzero) : 0.0;
    const double f1_pos = f1_of(c.tp, c.fp, c.fn);
    const double f1_neg = f1_of(c.tn, c.fn, c.fp);
    row.f1 = 0.5 * (f1_pos + f1_neg);
    row.acc7 = static_cast<double>(acc7_hits) / static_cast<double>(n);
    row.recovery_mse = mse_count > 0 ? mse_sum / static_cast<double>(mse_count) : 0.0;
    return row;
}

EvalRow EvalReport::average() const {
    EvalRow avg;
    avg.condition_id = "Average";
    if (rows.empty()) return avg;
    avg.seed = rows.front().seed;
    for (const auto& r : rows) {
        avg.n_samples += r.n_samples;
        avg.acc2 += r.acc2;
        avg.f1 += r.f1;
        avg.acc7 += r.acc7;
        avg.recovery_mse += r.recovery_mse;
    }
    const auto k = static_cast<double>(rows.size());
    avg.acc2 /= k;
    avg.f1 /= k;
    avg.acc7 /= k;
    avg.recovery_mse /= k;
    return avg;
}

void EvalReport::write_csv(std::ostream& os) const {
    os << "# gsdnet-report-v1\n";
    os << "condition,seed,n_samples,acc2,f1,acc7,recovery_mse,config_hash\n";
    auto emit = [&](const EvalRow& r) {
        os << r.condition_id << "," << r.seed << "," << r.n_samples << ","
           << fmt_double(r.acc2) << "," << fmt_double(r.f1) << "," << fmt_double(r.acc7)
           << "," << fmt_double(r.recovery_mse) << "," << config_hash << "\n";
    };
    for (const auto& r : rows) emit(r);
    emit(average());
}

std::string EvalReport::to_json() const {
    json j;
    j["format"] = "gsdnet-report-v1";
    j["config_hash"] = config_hash;
    j["runtime_seconds"] = runtime_seconds;
    auto row_json = [](const EvalRow& r) {
        return json{{"condition", r.condition_id}, {"seed", r.seed},
                    {"n_samples", r.n_samples},   {"acc2", r.acc2},
                    {"f1", r.f1},                 {"acc7", r.acc7},
                    {"recovery_mse", r.recovery_mse}};
    };
    j["rows"] = json::array();
    for (const auto& r : rows) j["rows"].push_back(row_json(r));
    j["average"] = row_json(average());
    return j.dump(2);
}

std::array<Eigen::VectorXd, 3> modality_means(const Dataset& ds) {
    std::array<Eigen::VectorXd, 3> means;
    for (Modality m : kAllModalities) {
        const auto mi = static_cast<std::size_t>(m);
        Eigen::VectorXd sum;
        long rows = 0;
        for (const auto& s : ds.samples) {
            if (!s.has(m)) continue;
            const Eigen::MatrixXd& x = s.get(m);
            if (sum.size() == 0) sum = Eigen::VectorXd::Zero(x.cols());
            sum += x.colwise().sum().transpose();
            rows += x.rows();
        }
        if (rows == 0) throw std::invalid_argument("modality_means: modality never present");
        means[mi] = sum / static_cast<double>(rows);
    }
    return means;
}

Predictor model_predictor(const GsdnetModel& model, const sde::SdeStepPlan& plan) {
    return [&model, plan](const MultimodalSample& sample, const MissingPattern& pattern,
                          std::uint64_t sample_seed) {
        Rng rng(sample_seed);
        const Prediction p = model.predict(sample, pattern, plan, rng);
        return SamplePrediction{p.score, p.recovery_mse, p.recovered};
    };
}

Predictor mean_imputation_predictor(const GsdnetModel& model,
                                    const std::array<Eigen::VectorXd, 3>& fill_rows) {
    return [&model, fill_rows](const MultimodalSample& sample, const MissingPattern& pattern,
                               std::uint64_t) {
        const Prediction p = model.predict_with_imputation(sample, pattern, fill_rows);
        return SamplePrediction{p.score, p.recovery_mse, p.recovered};
    };
}

}  // namespace gsdnet::harness
