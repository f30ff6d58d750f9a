#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsdnet/compare.hpp"
#include "gsdnet/errors.hpp"
#include "gsdnet/eval.hpp"
#include "gsdnet/hash.hpp"
#include "gsdnet/matrix_io.hpp"
#include "gsdnet/model.hpp"
#include "gsdnet/synthetic.hpp"
#include "gsdnet/trainer.hpp"

#include "run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gsdnet;
using cli::config_error;
using cli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

std::array<int, 3> dataset_raw_dims(const Dataset& ds) {
    std::array<int, 3> dims = {0, 0, 0};
    for (const auto& s : ds.samples)
        for (Modality m : kAllModalities)
            if (s.has(m)) dims[static_cast<std::size_t>(m)] = static_cast<int>(s.get(m).cols());
    for (int d : dims)
        if (d < 1)
            throw config_error("dataset: some modality is never present, cannot size model");
    return dims;
}

// The generation manifest sits next to the split files and carries the
// generator hash that ties checkpoints to datasets.
std::string manifest_path_for(const std::string& dataset_path) {
    return (fs::path(dataset_path).parent_path() / "manifest.json").string();
}

std::string generator_hash_for(const std::string& dataset_path) {
    const std::string mpath = manifest_path_for(dataset_path);
    if (!fs::exists(mpath))
        throw config_error("dataset manifest not found next to '" + dataset_path + "'");
    const json manifest = json::parse(read_file(mpath));
    return manifest.at("generator_hash").get<std::string>();
}

int cmd_generate(const RunConfig& rc) {
    const SyntheticConfig cfg = rc.synthetic_config();
    const SyntheticDataset ds = generate(cfg);
    const std::string dir = rc.out_dir();
    fs::create_directories(dir);
    rc.write_snapshot();
    save_dataset(dir + "/train.bin", ds.train);
    save_dataset(dir + "/val.bin", ds.val);
    save_dataset(dir + "/test.bin", ds.test);

    json manifest;
    manifest["format"] = "gsdnet-dataset";
    manifest["version"] = 1;
    manifest["generator_hash"] = rc.hash();
    manifest["seed"] = rc.seed();
    manifest["counts"] = {{"train", ds.train.size()},
                          {"val", ds.val.size()},
                          {"test", ds.test.size()}};
    manifest["files"] = {{"train", file_hash(dir + "/train.bin")},
                         {"val", file_hash(dir + "/val.bin")},
                         {"test", file_hash(dir + "/test.bin")}};
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    std::cout << "generated " << ds.train.size() << "/" << ds.val.size() << "/"
              << ds.test.size() << " samples under " << dir << "\n";
    return kExitOk;
}

int cmd_train(const RunConfig& rc) {
    const std::string dataset_path = rc.train_dataset();
    if (dataset_path.empty()) throw config_error("config: 'train.dataset' is required");
    const Dataset train = load_dataset(dataset_path);
    if (train.empty()) throw config_error("dataset: training split is empty");
    const std::string gen_hash = generator_hash_for(dataset_path);

    const std::string dir = rc.out_dir();
    fs::create_directories(dir);
    rc.write_snapshot();

    GsdnetConfig mcfg = rc.model_config();
    mcfg.raw_dims = dataset_raw_dims(train);

    std::optional<GsdnetModel> model;
    std::optional<Rng> resume_rng;
    const std::string resume = rc.resume_path();
    const std::string loss_path = dir + "/loss.csv";
    bool append_log = false;
    if (!resume.empty()) {
        auto [restored, rng] = Trainer::restore(load_checkpoint(resume), gen_hash);
        model.emplace(std::move(restored));
        resume_rng = std::move(rng);
        append_log = fs::exists(loss_path);
    } else {
        model.emplace(mcfg, derive_seed(rc.seed(), 0x0de1));
    }

    Trainer trainer(*model, train, derive_seed(rc.seed(), 0x7a11));
    if (resume_rng) trainer.set_rng(*resume_rng);

    std::ofstream log(loss_path, append_log ? std::ios::app : std::ios::out);
    if (!log) throw io_error("train: cannot open " + loss_path);
    if (!append_log) {
        log << "# gsdnet-loss-v1\n";
        log << "step,score_x,score_eig,rec,pred,total\n";
    }

    const int total_steps = rc.train_steps();
    const int every = rc.checkpoint_every();
    const long start_step = model->train_step_count();
    try {
        for (long s = start_step; s < total_steps; ++s) {
            const StepLosses losses = trainer.step();
            log << (s + 1) << "," << fmt_double(losses.score_x) << ","
                << fmt_double(losses.score_eig) << "," << fmt_double(losses.rec) << ","
                << fmt_double(losses.pred) << "," << fmt_double(losses.total) << "\n";
            log.flush();
            if (every > 0 && (s + 1) % every == 0)
                save_checkpoint(dir + "/ckpt_step" + std::to_string(s + 1) + ".bin",
                                trainer.make_checkpoint(gen_hash));
        }
    } catch (const numeric_error&) {
        // keep the last good checkpoint and the loss log, then fail loudly
        log.flush();
        throw;
    }
    save_checkpoint(dir + "/ckpt_final.bin", trainer.make_checkpoint(gen_hash));
    std::cout << "trained to step " << model->train_step_count() << ", checkpoint at " << dir
              << "/ckpt_final.bin\n";
    return kExitOk;
}

int cmd_eval(const RunConfig& rc) {
    const std::string ckpt_path = rc.eval_checkpoint();
    const std::string dataset_path = rc.eval_dataset();
    if (ckpt_path.empty()) throw config_error("config: 'eval.checkpoint' is required");
    if (dataset_path.empty()) throw config_error("config: 'eval.dataset' is required");

    const CheckpointBlob blob = load_checkpoint(ckpt_path);
    const std::string ckpt_hash = checkpoint_dataset_hash(blob);
    const std::string gen_hash = generator_hash_for(dataset_path);
    if (!ckpt_hash.empty() && ckpt_hash != gen_hash)
        throw config_error("eval: checkpoint/dataset manifest hash mismatch (" + ckpt_hash +
                           " vs " + gen_hash + ")");

    const GsdnetModel model = GsdnetModel::from_checkpoint(blob);
    const Dataset data = load_dataset(dataset_path);
    const sde::SdeStepPlan plan = rc.step_plan();
    const std::string dir = rc.out_dir();
    fs::create_directories(dir);
    rc.write_snapshot();

    harness::Predictor predictor;
    std::array<Eigen::VectorXd, 3> means;
    if (rc.eval_imputation() == "mean") {
        // imputation baseline fills from the training split of the same run
        const std::string train_path =
            (fs::path(dataset_path).parent_path() / "train.bin").string();
        means = harness::modality_means(load_dataset(train_path));
        predictor = harness::mean_imputation_predictor(model, means);
    } else {
        predictor = harness::model_predictor(model, plan);
    }

    const auto t0 = std::chrono::steady_clock::now();
    harness::EvalReport report;
    report.config_hash = rc.hash();
    if (rc.eval_mode() == "fixed-pattern") {
        for (const std::string& pid : rc.eval_patterns()) {
            const MissingPattern pattern = MissingPattern::from_string(pid);
            const auto masked = harness::apply_missing_pattern(data, pattern);
            report.rows.push_back(harness::evaluate(predictor, masked, pattern.id(),
                                                    rc.seed(), rc.threads()));
        }
    } else {
        for (double rate : rc.eval_rates()) {
            const auto masked =
                harness::apply_missing_rate(data, rate, derive_seed(rc.seed(), 0xa7e));
            char cid[32];
            std::snprintf(cid, sizeof(cid), "rate=%.1f", rate);
            report.rows.push_back(
                harness::evaluate(predictor, masked, cid, rc.seed(), rc.threads()));
        }
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream csv(dir + "/report.csv");
    report.write_csv(csv);
    write_file(dir + "/report.json", report.to_json() + "\n");
    std::cout << "evaluated " << report.rows.size() << " conditions, report at " << dir
              << "/report.csv\n";
    return kExitOk;
}

int cmd_compare(const RunConfig& rc) {
    const std::string dir = rc.out_dir();
    fs::create_directories(dir);
    rc.write_snapshot();
    const auto graphs = harness::make_windowed_feature_graphs(
        rc.compare_n_graphs(), rc.compare_n_nodes(), rc.compare_feature_dim(),
        rc.compare_window(), rc.seed());
    const GsdnetConfig mcfg_defaults;  // schedule comes from the config section
    const auto schedule = rc.model_config().feature_schedule;
    (void)mcfg_defaults;
    const auto rows =
        harness::diffusion_space_comparison(graphs, schedule, rc.compare_times(), rc.seed());
    std::ofstream csv(dir + "/curves.csv");
    harness::write_comparison_csv(csv, rows);
    std::cout << "wrote " << rows.size() << " curve rows to " << dir << "/curves.csv\n";
    return kExitOk;
}

int cmd_recover(const RunConfig& rc) {
    const std::string ckpt_path = rc.recover_checkpoint();
    const std::string dataset_path = rc.recover_dataset();
    if (ckpt_path.empty()) throw config_error("config: 'recover.checkpoint' is required");
    if (dataset_path.empty()) throw config_error("config: 'recover.dataset' is required");

    const CheckpointBlob blob = load_checkpoint(ckpt_path);
    const std::string ckpt_hash = checkpoint_dataset_hash(blob);
    const std::string gen_hash = generator_hash_for(dataset_path);
    if (!ckpt_hash.empty() && ckpt_hash != gen_hash)
        throw config_error("recover: checkpoint/dataset manifest hash mismatch");

    const GsdnetModel model = GsdnetModel::from_checkpoint(blob);
    const Dataset data = load_dataset(dataset_path);
    const MissingPattern pattern = MissingPattern::from_string(rc.recover_pattern());
    sde::SdeStepPlan plan;
    plan.num_steps = rc.resolved()["recover"]["num_steps"].get<int>();
    plan.validate();

    const std::string dir = rc.out_dir();
    fs::create_directories(dir + "/embeddings");
    rc.write_snapshot();

    std::ofstream mse_csv(dir + "/recovery_mse.csv");
    mse_csv << "# gsdnet-recovery-v1\n";
    mse_csv << "sample,pattern,recovery_mse\n";

    const int limit = rc.recover_max_samples();
    const std::size_t n =
        limit > 0 ? std::min<std::size_t>(data.size(), static_cast<std::size_t>(limit))
                  : data.size();
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(rc.seed(), 0x4ec0 + i));
        const RecoverResult rec = model.recover(data.samples[i], pattern, plan, rng);
        double se = 0.0;
        long cells = 0;
        for (Modality m : pattern.missing_set()) {
            const auto mi = static_cast<std::size_t>(m);
            const std::string stem =
                dir + "/embeddings/sample" + std::to_string(i) + "_" + modality_code(m);
            save_matrix_csv(stem + "_embedding.csv", rec.encoded.get(m));
            if (rec.decoded_raw[mi]) {
                save_matrix_csv(stem + "_decoded.csv", *rec.decoded_raw[mi]);
                if (data.samples[i].has(m)) {
                    const Eigen::MatrixXd diff =
                        *rec.decoded_raw[mi] - data.samples[i].get(m);
                    se += diff.squaredNorm();
                    cells += diff.size();
                }
            }
        }
        mse_csv << i << "," << pattern.id() << ","
                << fmt_double(cells > 0 ? se / static_cast<double>(cells) : 0.0) << "\n";
    }
    std::cout << "recovered " << n << " samples under pattern " << pattern.id() << " into "
              << dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral graph diffusion toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    cli::Overrides ov;
    std::uint64_t seed_flag = 0;
    std::string out_flag;
    int threads_flag = 0;
    double beta_flag = 0.0, rate_flag = 0.0;
    std::string pattern_flag;
    int steps_flag = 0;

    app.add_option("--config", config_path, "Path to the JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed_flag, "Override the run seed");
    auto* out_opt = app.add_option("--out", out_flag, "Override the output directory");
    auto* threads_opt = app.add_option("--threads", threads_flag, "Worker thread cap");
    auto* beta_opt = app.add_option("--beta", beta_flag, "Override the miss-loss weight");
    auto* rate_opt =
        app.add_option("--missing-rate", rate_flag, "Evaluate a single random missing rate");
    auto* pattern_opt =
        app.add_option("--pattern", pattern_flag, "Availability pattern, e.g. lv");
    auto* steps_opt = app.add_option("--steps", steps_flag, "Override step counts");

    auto* generate = app.add_subcommand("generate", "Write synthetic dataset splits");
    auto* train = app.add_subcommand("train", "Train a model on a generated split");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint over missing conditions");
    auto* compare =
        app.add_subcommand("compare", "Adjacency-space vs spectral-space degradation curves");
    auto* recover = app.add_subcommand("recover", "Export recovered modalities for a pattern");
    for (auto* sub : {generate, train, eval, compare, recover}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*seed_opt) ov.seed = seed_flag;
    if (*out_opt) ov.out = out_flag;
    if (*threads_opt) ov.threads = threads_flag;
    if (*beta_opt) ov.beta = beta_flag;
    if (*rate_opt) ov.missing_rate = rate_flag;
    if (*pattern_opt) ov.pattern = pattern_flag;
    if (*steps_opt) ov.steps = steps_flag;

    try {
        const RunConfig rc = RunConfig::load(config_path, ov);
        if (*generate) return cmd_generate(rc);
        if (*train) return cmd_train(rc);
        if (*eval) return cmd_eval(rc);
        if (*compare) return cmd_compare(rc);
        if (*recover) return cmd_recover(rc);
        throw config_error("no subcommand given");
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const convergence_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const io_error& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitIo;
    }
}
