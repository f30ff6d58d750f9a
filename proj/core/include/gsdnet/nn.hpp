#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsdnet/rng.hpp"

namespace gsdnet::nn {

// One named flat parameter vector with its gradient accumulator.
struct ParamBlock {
    std::string name;
    Eigen::VectorXd value;
    Eigen::VectorXd grad;

    ParamBlock(std::string n, Eigen::Index size)
        : name(std::move(n)),
          value(Eigen::VectorXd::Zero(size)),
          grad(Eigen::VectorXd::Zero(size)) {}
};

inline void zero_grads(std::vector<ParamBlock*>& blocks) {
    for (auto* b : blocks) b->grad.setZero();
}

enum class Activation { Tanh, Relu, Identity };

// Fully connected net. forward() records activations for one backward();
// evaluate() is const and records nothing. Gradients accumulate into the
// blocks until zero_grad.
class Mlp {
public:
    struct Config {
        std::vector<int> dims;  // [in, hidden..., out]
        Activation hidden_activation = Activation::Tanh;
        bool zero_init_last = false;
        double init_scale = 1.0;
    };

    Mlp() = default;  // empty net; must be assigned before use
    Mlp(Config cfg, Rng& rng, std::string name = "mlp");

    Eigen::VectorXd forward(const Eigen::VectorXd& x);
    // Accumulates parameter grads, returns dL/dx. Throws without a prior forward.
    Eigen::VectorXd backward(const Eigen::VectorXd& upstream);
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

    std::vector<ParamBlock*> param_blocks();
    void zero_grad();
    std::size_t parameter_count() const;
    const Config& config() const { return cfg_; }

    // weight matrix view of layer l: (dims[l+1] x dims[l]), row-major storage
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    weight(int layer);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    weight(int layer) const;
    Eigen::VectorXd& bias_value(int layer) { return params_[2 * static_cast<std::size_t>(layer) + 1].value; }

private:
    Config cfg_;
    std::vector<ParamBlock> params_;  // W0, b0, W1, b1, ...
    // recorded state
    bool recorded_ = false;
    std::vector<Eigen::VectorXd> inputs_;   // input to each layer
    std::vector<Eigen::VectorXd> preacts_;  // z of each layer
};

// 1-D convolution along the row (sequence) axis with zero "same" padding.
// Input N x in_dim, output N x out_dim; kernel tap k applies a full
// in_dim x out_dim linear map to the row at offset k - pad_left.
class Conv1d {
public:
    struct Config {
        int kernel_size = 3;
        int in_dim = 0;
        int out_dim = 0;
        bool identity_init = false;  // center tap = I (needs in_dim == out_dim)
        double init_scale = 1.0;
    };

    Conv1d(Config cfg, Rng& rng, std::string name = "conv");

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream);
    Eigen::MatrixXd evaluate(const Eigen::MatrixXd& x) const;

    std::vector<ParamBlock*> param_blocks();
    const Config& config() const { return cfg_; }

private:
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Config cfg_;
    int pad_left_ = 0;
    std::vector<ParamBlock> params_;  // W (k*in*out), b (out)
    bool recorded_ = false;
    Eigen::MatrixXd input_;
};

// Sinusoidal embedding of a scalar t: [sin(f_k t), cos(f_k t)] over a
// geometric frequency ladder. Unit-bounded, injective on [1e-3, 1].
class TimeEmbedding {
public:
    explicit TimeEmbedding(int dim, double min_freq = 1.0, double max_freq = 1000.0);
    Eigen::VectorXd operator()(double t) const;
    int dim() const { return dim_; }

private:
    int dim_;
    std::vector<double> freqs_;
};

// Graph convolution H' = ReLU(A_norm H W), no bias. The caller provides the
// normalized adjacency.
class GcnLayer {
public:
    struct Config {
        int in_dim = 0;
        int out_dim = 0;
        double init_scale = 1.0;
    };

    GcnLayer(Config cfg, Rng& rng, std::string name = "gcn");

    Eigen::MatrixXd forward(const Eigen::MatrixXd& a_norm, const Eigen::MatrixXd& h);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream);  // returns dL/dH
    Eigen::MatrixXd evaluate(const Eigen::MatrixXd& a_norm, const Eigen::MatrixXd& h) const;

    std::vector<ParamBlock*> param_blocks();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> weight();

private:
    Config cfg_;
    std::vector<ParamBlock> params_;  // W
    bool recorded_ = false;
    Eigen::MatrixXd a_norm_, input_, preact_;
};

// D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a);

// Adam with bias correction over an ordered list of blocks.
struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Applies one update from the blocks' accumulated grads. Moment shapes are
    // created on first use and must match thereafter.
    void step(const std::vector<ParamBlock*>& blocks);

    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }
    void set_learning_rate(double lr) { cfg_.lr = lr; }
    const std::vector<Eigen::VectorXd>& first_moments() const { return m_; }
    const std::vector<Eigen::VectorXd>& second_moments() const { return v_; }

    // exact state round-trip for checkpoint resume
    void set_state(long step_count, std::vector<Eigen::VectorXd> m,
                   std::vector<Eigen::VectorXd> v);

private:
    AdamConfig cfg_;
    long step_count_ = 0;
    std::vector<Eigen::VectorXd> m_, v_;
};

}  // namespace gsdnet::nn
