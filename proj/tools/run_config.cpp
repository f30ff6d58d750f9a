#include "run_config.hpp"

#include <filesystem>
#include <fstream>

#include "gsdnet/hash.hpp"
#include "gsdnet/matrix_io.hpp"

namespace gsdnet::cli {

using nlohmann::json;

namespace {

json default_schema() {
    return json{
        {"seed", 42},
        {"out", "runs/out"},
        {"threads", 1},
        {"data",
         {{"n_samples", 120},
          {"n_min", 6},
          {"n_max", 10},
          {"latent_dim", 4},
          {"dims", {{"l", 12}, {"a", 10}, {"v", 8}}},
          {"eta", 0.1},
          {"label_noise", 0.1},
          {"ar_coeff", 0.5},
          {"label_scale", 2.2},
          {"split", {0.7, 0.15, 0.15}}}},
        {"model",
         {{"common_dim", 24},
          {"kernel_sizes", {{"l", 3}, {"a", 3}, {"v", 3}}},
          {"score_hidden", {128, 128}},
          {"eig_score_hidden", {64, 64}},
          {"decoder_hidden", {64}},
          {"eig_decoder_hidden", {32}},
          {"head_hidden", {32}},
          {"time_embed_dim", 16},
          {"gcn_hidden", 32},
          {"gcn_layers", 2},
          {"window", 2},
          {"beta", 0.1},
          {"k_rec", 5},
          {"spectrum_summary_dim", 8},
          {"lr", 1e-3}}},
        {"schedule",
         {{"feature",
           {{"kind", "vp"}, {"beta_min", 0.1}, {"beta_max", 20.0}, {"sigma_min", 0.01},
            {"sigma_max", 50.0}}},
          {"spectrum",
           {{"kind", "vp"}, {"beta_min", 0.1}, {"beta_max", 20.0}, {"sigma_min", 0.01},
            {"sigma_max", 50.0}}}}},
        {"train",
         {{"dataset", ""}, {"steps", 2000}, {"checkpoint_every", 500}, {"resume", ""}}},
        {"eval",
         {{"checkpoint", ""},
          {"dataset", ""},
          {"mode", "fixed-pattern"},
          {"patterns", {"l", "v", "a", "lv", "la", "va", "lva"}},
          {"rates", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}},
          {"num_steps", 200},
          {"corrector_steps", 0},
          {"corrector_snr", 0.16},
          {"imputation", "diffusion"}}},
        {"compare",
         {{"n_graphs", 50},
          {"n_nodes", 16},
          {"feature_dim", 8},
          {"window", 2},
          {"times", {0.1, 0.25, 0.5, 0.75, 1.0}}}},
        {"recover",
         {{"checkpoint", ""},
          {"dataset", ""},
          {"pattern", "lv"},
          {"num_steps", 200},
          {"max_samples", 0}}}};
}

// Overlay `file` onto `base`; a key absent from the schema is an error that
// names the offending key by path.
void merge_strict(json& base, const json& file, const std::string& path) {
    if (!file.is_object())
        throw config_error("config: expected an object at '" + (path.empty() ? "." : path) +
                           "'");
    for (auto it = file.begin(); it != file.end(); ++it) {
        const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key()))
            throw config_error("config: unknown key '" + key_path + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && it.value().is_object())
            merge_strict(slot, it.value(), key_path);
        else
            slot = it.value();
    }
}

template <typename T>
T field(const json& j, const std::string& path) {
    const json* cur = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (!cur->contains(key)) throw config_error("config: missing key '" + path + "'");
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return cur->get<T>();
    } catch (const json::exception&) {
        throw config_error("config: bad value type at '" + path + "'");
    }
}

sde::DiffusionSchedule schedule_from_section(const json& sec, const std::string& path) {
    const std::string kind = field<std::string>(sec, "kind");
    if (kind == "vp")
        return sde::DiffusionSchedule::vp(field<double>(sec, "beta_min"),
                                          field<double>(sec, "beta_max"));
    if (kind == "ve")
        return sde::DiffusionSchedule::ve(field<double>(sec, "sigma_min"),
                                          field<double>(sec, "sigma_max"));
    throw config_error("config: '" + path + ".kind' must be 'vp' or 've'");
}

}  // namespace

RunConfig RunConfig::load(const std::string& config_path, const Overrides& ov) {
    RunConfig rc;
    rc.resolved_ = default_schema();
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw config_error("config: cannot open '" + config_path + "'");
        json file;
        try {
            file = json::parse(is);
        } catch (const json::exception& e) {
            throw config_error(std::string("config: parse failure: ") + e.what());
        }
        merge_strict(rc.resolved_, file, "");
    }
    if (ov.seed) rc.resolved_["seed"] = *ov.seed;
    if (ov.out) rc.resolved_["out"] = *ov.out;
    if (ov.threads) rc.resolved_["threads"] = *ov.threads;
    if (ov.beta) rc.resolved_["model"]["beta"] = *ov.beta;
    if (ov.missing_rate) {
        rc.resolved_["eval"]["mode"] = "random-rate";
        rc.resolved_["eval"]["rates"] = {*ov.missing_rate};
    }
    if (ov.pattern) {
        rc.resolved_["eval"]["mode"] = "fixed-pattern";
        rc.resolved_["eval"]["patterns"] = {*ov.pattern};
        rc.resolved_["recover"]["pattern"] = *ov.pattern;
    }
    if (ov.steps) {
        rc.resolved_["train"]["steps"] = *ov.steps;
        rc.resolved_["eval"]["num_steps"] = *ov.steps;
        rc.resolved_["recover"]["num_steps"] = *ov.steps;
    }
    return rc;
}

std::string RunConfig::snapshot() const { return resolved_.dump(2) + "\n"; }

std::string RunConfig::hash() const {
    // output location and worker caps do not change what a run computes
    json semantic = resolved_;
    semantic.erase("out");
    semantic.erase("threads");
    return content_hash(semantic.dump(2));
}

std::uint64_t RunConfig::seed() const { return field<std::uint64_t>(resolved_, "seed"); }
std::string RunConfig::out_dir() const { return field<std::string>(resolved_, "out"); }
int RunConfig::threads() const {
    const int t = field<int>(resolved_, "threads");
    if (t < 1) throw config_error("config: 'threads' must be >= 1");
    return t;
}

SyntheticConfig RunConfig::synthetic_config() const {
    SyntheticConfig c;
    c.seed = seed();
    c.n_samples = field<int>(resolved_, "data.n_samples");
    c.n_min = field<int>(resolved_, "data.n_min");
    c.n_max = field<int>(resolved_, "data.n_max");
    c.latent_dim = field<int>(resolved_, "data.latent_dim");
    c.dims = {field<int>(resolved_, "data.dims.l"), field<int>(resolved_, "data.dims.a"),
              field<int>(resolved_, "data.dims.v")};
    c.eta = field<double>(resolved_, "data.eta");
    c.label_noise = field<double>(resolved_, "data.label_noise");
    c.ar_coeff = field<double>(resolved_, "data.ar_coeff");
    c.label_scale = field<double>(resolved_, "data.label_scale");
    const auto split = field<std::vector<double>>(resolved_, "data.split");
    if (split.size() != 3) throw config_error("config: 'data.split' must have 3 entries");
    c.split = {split[0], split[1], split[2]};
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

GsdnetConfig RunConfig::model_config() const {
    GsdnetConfig c;
    c.common_dim = field<int>(resolved_, "model.common_dim");
    c.kernel_sizes = {field<int>(resolved_, "model.kernel_sizes.l"),
                      field<int>(resolved_, "model.kernel_sizes.a"),
                      field<int>(resolved_, "model.kernel_sizes.v")};
    c.score_hidden = field<std::vector<int>>(resolved_, "model.score_hidden");
    c.eig_score_hidden = field<std::vector<int>>(resolved_, "model.eig_score_hidden");
    c.decoder_hidden = field<std::vector<int>>(resolved_, "model.decoder_hidden");
    c.eig_decoder_hidden = field<std::vector<int>>(resolved_, "model.eig_decoder_hidden");
    c.head_hidden = field<std::vector<int>>(resolved_, "model.head_hidden");
    c.time_embed_dim = field<int>(resolved_, "model.time_embed_dim");
    c.gcn_hidden = field<int>(resolved_, "model.gcn_hidden");
    c.gcn_layers = field<int>(resolved_, "model.gcn_layers");
    c.window = field<int>(resolved_, "model.window");
    c.beta = field<double>(resolved_, "model.beta");
    c.k_rec = field<int>(resolved_, "model.k_rec");
    c.spectrum_summary_dim = field<int>(resolved_, "model.spectrum_summary_dim");
    c.optimizer.lr = field<double>(resolved_, "model.lr");
    try {
        c.feature_schedule = schedule_from_section(resolved_["schedule"]["feature"],
                                                   "schedule.feature");
        c.eigen_schedule = schedule_from_section(resolved_["schedule"]["spectrum"],
                                                 "schedule.spectrum");
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

sde::SdeStepPlan RunConfig::step_plan() const {
    sde::SdeStepPlan plan;
    plan.num_steps = field<int>(resolved_, "eval.num_steps");
    plan.corrector_steps = field<int>(resolved_, "eval.corrector_steps");
    plan.corrector_snr = field<double>(resolved_, "eval.corrector_snr");
    try {
        plan.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return plan;
}

std::string RunConfig::train_dataset() const {
    return field<std::string>(resolved_, "train.dataset");
}
int RunConfig::train_steps() const { return field<int>(resolved_, "train.steps"); }
int RunConfig::checkpoint_every() const {
    return field<int>(resolved_, "train.checkpoint_every");
}
std::string RunConfig::resume_path() const {
    return field<std::string>(resolved_, "train.resume");
}

std::string RunConfig::eval_checkpoint() const {
    return field<std::string>(resolved_, "eval.checkpoint");
}
std::string RunConfig::eval_dataset() const {
    return field<std::string>(resolved_, "eval.dataset");
}
std::string RunConfig::eval_mode() const {
    const auto m = field<std::string>(resolved_, "eval.mode");
    if (m != "fixed-pattern" && m != "random-rate")
        throw config_error("config: 'eval.mode' must be 'fixed-pattern' or 'random-rate'");
    return m;
}
std::vector<std::string> RunConfig::eval_patterns() const {
    return field<std::vector<std::string>>(resolved_, "eval.patterns");
}
std::vector<double> RunConfig::eval_rates() const {
    return field<std::vector<double>>(resolved_, "eval.rates");
}
std::string RunConfig::eval_imputation() const {
    const auto m = field<std::string>(resolved_, "eval.imputation");
    if (m != "diffusion" && m != "mean")
        throw config_error("config: 'eval.imputation' must be 'diffusion' or 'mean'");
    return m;
}

int RunConfig::compare_n_graphs() const { return field<int>(resolved_, "compare.n_graphs"); }
int RunConfig::compare_n_nodes() const { return field<int>(resolved_, "compare.n_nodes"); }
int RunConfig::compare_feature_dim() const {
    return field<int>(resolved_, "compare.feature_dim");
}
int RunConfig::compare_window() const { return field<int>(resolved_, "compare.window"); }
std::vector<double> RunConfig::compare_times() const {
    return field<std::vector<double>>(resolved_, "compare.times");
}

std::string RunConfig::recover_checkpoint() const {
    return field<std::string>(resolved_, "recover.checkpoint");
}
std::string RunConfig::recover_dataset() const {
    return field<std::string>(resolved_, "recover.dataset");
}
std::string RunConfig::recover_pattern() const {
    return field<std::string>(resolved_, "recover.pattern");
}
int RunConfig::recover_max_samples() const {
    return field<int>(resolved_, "recover.max_samples");
}

void RunConfig::write_snapshot() const {
    const std::string dir = out_dir();
    std::filesystem::create_directories(dir);
    write_file(dir + "/resolved_config.json", snapshot());
    write_file(dir + "/config_hash.txt", hash() + "\n");
}

}  // namespace gsdnet::cli
