#include "gsdnet/score_net.hpp"

#include <stdexcept>

#include <json.hpp>

#include "gsdnet/checkpoint.hpp"
#include "schedule_json.hpp"

namespace gsdnet {

namespace {
nn::Mlp::Config mlp_config(const ScoreNet::Config& cfg) {
    if (cfg.input_dim < 1) throw std::invalid_argument("ScoreNet: input_dim must be >= 1");
    if (cfg.cond_dim < 0) throw std::invalid_argument("ScoreNet: cond_dim must be >= 0");
    nn::Mlp::Config m;
    m.dims.push_back(cfg.input_dim + cfg.cond_dim + cfg.time_embed_dim);
    for (int h : cfg.hidden_dims) m.dims.push_back(h);
    m.dims.push_back(cfg.input_dim);
    m.hidden_activation = nn::Activation::Tanh;
    m.zero_init_last = true;
    return m;
}
}  // namespace

ScoreNet::ScoreNet(Config cfg, Rng& rng, std::string name)
    : cfg_(cfg), time_embed_(cfg.time_embed_dim), mlp_(mlp_config(cfg), rng, std::move(name)) {}

Eigen::VectorXd ScoreNet::assemble(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                                   double t) const {
    if (state.size() != cfg_.input_dim)
        throw std::invalid_argument("ScoreNet: state dimension mismatch");
    if (cond.size() != cfg_.cond_dim)
        throw std::invalid_argument("ScoreNet: condition dimension mismatch");
    Eigen::VectorXd in(cfg_.input_dim + cfg_.cond_dim + cfg_.time_embed_dim);
    in.head(cfg_.input_dim) = state;
    if (cfg_.cond_dim > 0) in.segment(cfg_.input_dim, cfg_.cond_dim) = cond;
    in.tail(cfg_.time_embed_dim) = time_embed_(t);
    return in;
}

Eigen::VectorXd ScoreNet::forward(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                                  double t) {
    return mlp_.forward(assemble(state, cond, t));
}

ScoreNet::InputGrads ScoreNet::backward(const Eigen::VectorXd& upstream) {
    Eigen::VectorXd din = mlp_.backward(upstream);
    InputGrads g;
    g.state = din.head(cfg_.input_dim);
    g.cond = din.segment(cfg_.input_dim, cfg_.cond_dim);
    return g;
}

Eigen::VectorXd ScoreNet::evaluate(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                                   double t) const {
    return mlp_.evaluate(assemble(state, cond, t));
}

DsmResult dsm_loss(ScoreNet& net, const sde::DiffusionSchedule& schedule,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& cond, double t,
                   const Eigen::VectorXd& noise, bool accumulate_grads) {
    if (!(t >= sde::kTimeEpsilon && t <= 1.0))
        throw std::invalid_argument("dsm_loss: t must be in [t_eps, 1]");
    DsmResult r;
    r.xt = sde::forward_sample(schedule, x0, t, noise);
    r.target = sde::analytic_score(schedule, r.xt, x0, t);
    const double sd = schedule.std_dev(t);
    const double weight = sd * sd;
    if (accumulate_grads) {
        r.pred = net.forward(r.xt, cond, t);
        Eigen::VectorXd resid = r.pred - r.target;
        r.loss = weight * resid.squaredNorm();
        net.backward(2.0 * weight * resid);
    } else {
        r.pred = net.evaluate(r.xt, cond, t);
        r.loss = weight * (r.pred - r.target).squaredNorm();
    }
    return r;
}

void save_score_net(const std::string& path, ScoreNet& net,
                    const sde::DiffusionSchedule& schedule) {
    nlohmann::json manifest;
    manifest["format"] = "gsdnet-scorenet";
    manifest["version"] = 1;
    const auto& c = net.config();
    manifest["config"] = {{"input_dim", c.input_dim},
                          {"cond_dim", c.cond_dim},
                          {"time_embed_dim", c.time_embed_dim},
                          {"hidden_dims", c.hidden_dims}};
    manifest["schedule"] = schedule_to_json(schedule);
    CheckpointBlob blob;
    blob.manifest_json = manifest.dump();
    for (auto* b : net.param_blocks()) blob.arrays.emplace_back(b->name, b->value);
    save_checkpoint(path, blob);
}

std::pair<ScoreNet, sde::DiffusionSchedule> load_score_net(const std::string& path) {
    const CheckpointBlob blob = load_checkpoint(path);
    const nlohmann::json manifest = nlohmann::json::parse(blob.manifest_json);
    if (manifest.at("format").get<std::string>() != "gsdnet-scorenet")
        throw io_error("load_score_net: not a score-net checkpoint");
    ScoreNet::Config c;
    const auto& jc = manifest.at("config");
    c.input_dim = jc.at("input_dim").get<int>();
    c.cond_dim = jc.at("cond_dim").get<int>();
    c.time_embed_dim = jc.at("time_embed_dim").get<int>();
    c.hidden_dims = jc.at("hidden_dims").get<std::vector<int>>();
    Rng rng(0);
    ScoreNet net(c, rng);
    for (auto* b : net.param_blocks()) {
        const Eigen::VectorXd* arr = blob.find(b->name);
        if (!arr) throw io_error("load_score_net: missing array " + b->name);
        if (arr->size() != b->value.size())
            throw io_error("load_score_net: size mismatch for " + b->name);
        b->value = *arr;
    }
    return {std::move(net), schedule_from_json(manifest.at("schedule"))};
}

}  // namespace gsdnet
