#pragma once

#include <vector>

#include <Eigen/Core>

#include "gsdnet/nn.hpp"
#include "gsdnet/sde.hpp"

namespace gsdnet {

// MLP score estimator over [state ; condition ; time embedding]. The final
// layer is zero-initialized so the estimated score starts at zero. Output
// dimension always equals the state dimension.
//
// Internally the MLP predicts the noise direction and the returned score is
// -mlp(state, cond, t) / std(t), so the network output stays unit-scale while
// the score carries the kernel's 1/std magnitude. Callable only for t with
// std(t) > 0.
class ScoreNet {
public:
    struct Config {
        int input_dim = 0;  // state size, also output size
        int cond_dim = 0;
        int time_embed_dim = 16;
        std::vector<int> hidden_dims = {128, 128};
    };

    ScoreNet(Config cfg, const sde::DiffusionSchedule& schedule, Rng& rng,
             std::string name = "score");

    const sde::DiffusionSchedule& schedule() const { return schedule_; }

    Eigen::VectorXd forward(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                            double t);

    struct InputGrads {
        Eigen::VectorXd state;
        Eigen::VectorXd cond;
    };
    // Accumulates parameter gradients for the recorded forward, returns the
    // gradient w.r.t. the state and condition inputs.
    InputGrads backward(const Eigen::VectorXd& upstream);

    Eigen::VectorXd evaluate(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                             double t) const;

    std::vector<nn::ParamBlock*> param_blocks() { return mlp_.param_blocks(); }
    void zero_grad() { mlp_.zero_grad(); }
    std::size_t parameter_count() const { return mlp_.parameter_count(); }
    const Config& config() const { return cfg_; }

private:
    Eigen::VectorXd assemble(const Eigen::VectorXd& state, const Eigen::VectorXd& cond,
                             double t) const;
    double output_scale(double t) const;  // -1 / std(t)
    Config cfg_;
    sde::DiffusionSchedule schedule_;
    nn::TimeEmbedding time_embed_;
    nn::Mlp mlp_;
    double recorded_scale_ = 0.0;
};

struct DsmResult {
    double loss = 0.0;
    Eigen::VectorXd xt;      // perturbed state used for the regression
    Eigen::VectorXd target;  // analytic kernel score
    Eigen::VectorXd pred;    // network estimate
};

// Denoising score-matching loss at one (x0, cond, t, noise) draw:
//   xt     = mean_scale(t) x0 + std(t) noise
//   loss   = std(t)^2 ||net(xt, cond, t) - analytic_score(xt, x0, t)||^2
// Accumulates the network's parameter gradients unless accumulate_grads is
// false. Requires t in [kTimeEpsilon, 1].
DsmResult dsm_loss(ScoreNet& net, const sde::DiffusionSchedule& schedule,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& cond, double t,
                   const Eigen::VectorXd& noise, bool accumulate_grads = true);

// Standalone net checkpoint: shapes + flat parameters + the schedule it was
// trained against. Round-trips bit-exactly.
void save_score_net(const std::string& path, ScoreNet& net,
                    const sde::DiffusionSchedule& schedule);
std::pair<ScoreNet, sde::DiffusionSchedule> load_score_net(const std::string& path);

}  // namespace gsdnet
