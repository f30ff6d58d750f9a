#include "gsdnet/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gsdnet::nn {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::VectorXd apply_activation(const Eigen::VectorXd& z, Activation act) {
    switch (act) {
        case Activation::Tanh: return z.array().tanh();
        case Activation::Relu: return z.cwiseMax(0.0);
        case Activation::Identity: return z;
    }
    return z;
}

Eigen::VectorXd activation_grad(const Eigen::VectorXd& z, Activation act) {
    switch (act) {
        case Activation::Tanh: {
            Eigen::ArrayXd th = z.array().tanh();
            return (1.0 - th * th).matrix();
        }
        case Activation::Relu:
            return (z.array() > 0.0).cast<double>().matrix();
        case Activation::Identity:
            return Eigen::VectorXd::Ones(z.size());
    }
    return Eigen::VectorXd::Ones(z.size());
}

void normal_init(Eigen::VectorXd& w, Rng& rng, double scale) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
}

}  // namespace

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(Config cfg, Rng& rng, std::string name) : cfg_(std::move(cfg)) {
    if (cfg_.dims.size() < 2) throw std::invalid_argument("Mlp: need at least [in, out] dims");
    for (int d : cfg_.dims)
        if (d < 1) throw std::invalid_argument("Mlp: all dims must be >= 1");
    const int n_layers = static_cast<int>(cfg_.dims.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
        const int in = cfg_.dims[static_cast<std::size_t>(l)];
        const int out = cfg_.dims[static_cast<std::size_t>(l) + 1];
        params_.emplace_back(name + ".W" + std::to_string(l),
                             static_cast<Eigen::Index>(in) * out);
        params_.emplace_back(name + ".b" + std::to_string(l), out);
        const bool zero = cfg_.zero_init_last && l == n_layers - 1;
        if (!zero)
            normal_init(params_[2 * static_cast<std::size_t>(l)].value, rng,
                        cfg_.init_scale / std::sqrt(static_cast<double>(in)));
    }
}

RowMajorMap Mlp::weight(int layer) {
    const int in = cfg_.dims[static_cast<std::size_t>(layer)];
    const int out = cfg_.dims[static_cast<std::size_t>(layer) + 1];
    return RowMajorMap(params_[2 * static_cast<std::size_t>(layer)].value.data(), out, in);
}

ConstRowMajorMap Mlp::weight(int layer) const {
    const int in = cfg_.dims[static_cast<std::size_t>(layer)];
    const int out = cfg_.dims[static_cast<std::size_t>(layer) + 1];
    return ConstRowMajorMap(params_[2 * static_cast<std::size_t>(layer)].value.data(), out, in);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) {
    if (cfg_.dims.size() < 2) throw std::logic_error("Mlp::forward: uninitialized net");
    if (x.size() != cfg_.dims.front())
        throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    const int n_layers = static_cast<int>(cfg_.dims.size()) - 1;
    inputs_.assign(static_cast<std::size_t>(n_layers), {});
    preacts_.assign(static_cast<std::size_t>(n_layers), {});
    Eigen::VectorXd h = x;
    for (int l = 0; l < n_layers; ++l) {
        inputs_[static_cast<std::size_t>(l)] = h;
        Eigen::VectorXd z = weight(l) * h + params_[2 * static_cast<std::size_t>(l) + 1].value;
        preacts_[static_cast<std::size_t>(l)] = z;
        h = (l == n_layers - 1) ? z : apply_activation(z, cfg_.hidden_activation);
    }
    recorded_ = true;
    return h;
}

Eigen::VectorXd Mlp::backward(const Eigen::VectorXd& upstream) {
    if (!recorded_) throw std::logic_error("Mlp::backward: no recorded forward pass");
    if (upstream.size() != cfg_.dims.back())
        throw std::invalid_argument("Mlp::backward: upstream dimension mismatch");
    const int n_layers = static_cast<int>(cfg_.dims.size()) - 1;
    Eigen::VectorXd delta = upstream;
    for (int l = n_layers - 1; l >= 0; --l) {
        if (l != n_layers - 1)
            delta = delta.cwiseProduct(
                activation_grad(preacts_[static_cast<std::size_t>(l)], cfg_.hidden_activation));
        const int in = cfg_.dims[static_cast<std::size_t>(l)];
        const int out = cfg_.dims[static_cast<std::size_t>(l) + 1];
        RowMajorMap gw(params_[2 * static_cast<std::size_t>(l)].grad.data(), out, in);
        gw.noalias() += delta * inputs_[static_cast<std::size_t>(l)].transpose();
        params_[2 * static_cast<std::size_t>(l) + 1].grad += delta;
        delta = weight(l).transpose() * delta;
    }
    recorded_ = false;
    return delta;
}

Eigen::VectorXd Mlp::evaluate(const Eigen::VectorXd& x) const {
    if (cfg_.dims.size() < 2) throw std::logic_error("Mlp::evaluate: uninitialized net");
    if (x.size() != cfg_.dims.front())
        throw std::invalid_argument("Mlp::evaluate: input dimension mismatch");
    const int n_layers = static_cast<int>(cfg_.dims.size()) - 1;
    Eigen::VectorXd h = x;
    for (int l = 0; l < n_layers; ++l) {
        Eigen::VectorXd z = weight(l) * h + params_[2 * static_cast<std::size_t>(l) + 1].value;
        h = (l == n_layers - 1) ? z : apply_activation(z, cfg_.hidden_activation);
    }
    return h;
}

std::vector<ParamBlock*> Mlp::param_blocks() {
    std::vector<ParamBlock*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
}

void Mlp::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(Config cfg, Rng& rng, std::string name) : cfg_(cfg) {
    if (cfg_.kernel_size < 1) throw std::invalid_argument("Conv1d: kernel_size must be >= 1");
    if (cfg_.in_dim < 1 || cfg_.out_dim < 1)
        throw std::invalid_argument("Conv1d: dims must be >= 1");
    pad_left_ = (cfg_.kernel_size - 1) / 2;
    params_.emplace_back(name + ".W", static_cast<Eigen::Index>(cfg_.kernel_size) *
                                          cfg_.in_dim * cfg_.out_dim);
    params_.emplace_back(name + ".b", cfg_.out_dim);
    if (cfg_.identity_init) {
        if (cfg_.in_dim != cfg_.out_dim)
            throw std::invalid_argument("Conv1d: identity init needs in_dim == out_dim");
        const int center = pad_left_;
        for (int i = 0; i < cfg_.in_dim; ++i)
            params_[0].value[(static_cast<Eigen::Index>(center) * cfg_.in_dim + i) * cfg_.out_dim +
                             i] = 1.0;
    } else {
        normal_init(params_[0].value, rng,
                    cfg_.init_scale /
                        std::sqrt(static_cast<double>(cfg_.kernel_size) * cfg_.in_dim));
    }
}

Eigen::MatrixXd Conv1d::apply(const Eigen::MatrixXd& x) const {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, cfg_.out_dim);
    for (Eigen::Index i = 0; i < n; ++i) y.row(i) = params_[1].value.transpose();
    for (int k = 0; k < cfg_.kernel_size; ++k) {
        ConstRowMajorMap wk(
            params_[0].value.data() + static_cast<Eigen::Index>(k) * cfg_.in_dim * cfg_.out_dim,
            cfg_.in_dim, cfg_.out_dim);
        const int off = k - pad_left_;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index src = i + off;
            if (src < 0 || src >= n) continue;
            y.row(i).noalias() += x.row(src) * wk;
        }
    }
    return y;
}

Eigen::MatrixXd Conv1d::forward(const Eigen::MatrixXd& x) {
    if (x.cols() != cfg_.in_dim) throw std::invalid_argument("Conv1d::forward: in_dim mismatch");
    if (x.rows() < 1) throw std::invalid_argument("Conv1d::forward: need at least one row");
    input_ = x;
    recorded_ = true;
    return apply(x);
}

Eigen::MatrixXd Conv1d::backward(const Eigen::MatrixXd& upstream) {
    if (!recorded_) throw std::logic_error("Conv1d::backward: no recorded forward pass");
    if (upstream.rows() != input_.rows() || upstream.cols() != cfg_.out_dim)
        throw std::invalid_argument("Conv1d::backward: upstream shape mismatch");
    const Eigen::Index n = input_.rows();
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, cfg_.in_dim);
    for (int k = 0; k < cfg_.kernel_size; ++k) {
        RowMajorMap gk(
            params_[0].grad.data() + static_cast<Eigen::Index>(k) * cfg_.in_dim * cfg_.out_dim,
            cfg_.in_dim, cfg_.out_dim);
        ConstRowMajorMap wk(
            params_[0].value.data() + static_cast<Eigen::Index>(k) * cfg_.in_dim * cfg_.out_dim,
            cfg_.in_dim, cfg_.out_dim);
        const int off = k - pad_left_;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index src = i + off;
            if (src < 0 || src >= n) continue;
            gk.noalias() += input_.row(src).transpose() * upstream.row(i);
            dx.row(src).noalias() += upstream.row(i) * wk.transpose();
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) params_[1].grad += upstream.row(i).transpose();
    recorded_ = false;
    return dx;
}

Eigen::MatrixXd Conv1d::evaluate(const Eigen::MatrixXd& x) const {
    if (x.cols() != cfg_.in_dim) throw std::invalid_argument("Conv1d::evaluate: in_dim mismatch");
    if (x.rows() < 1) throw std::invalid_argument("Conv1d::evaluate: need at least one row");
    return apply(x);
}

std::vector<ParamBlock*> Conv1d::param_blocks() {
    return {&params_[0], &params_[1]};
}

// ---------------------------------------------------------------- TimeEmbedding

TimeEmbedding::TimeEmbedding(int dim, double min_freq, double max_freq) : dim_(dim) {
    if (dim < 2 || dim % 2 != 0)
        throw std::invalid_argument("TimeEmbedding: dim must be an even integer >= 2");
    if (!(min_freq > 0.0 && max_freq > min_freq))
        throw std::invalid_argument("TimeEmbedding: need 0 < min_freq < max_freq");
    const int half = dim / 2;
    freqs_.resize(static_cast<std::size_t>(half));
    if (half == 1) {
        freqs_[0] = min_freq;
    } else {
        const double ratio = max_freq / min_freq;
        for (int k = 0; k < half; ++k)
            freqs_[static_cast<std::size_t>(k)] =
                min_freq * std::pow(ratio, static_cast<double>(k) / (half - 1));
    }
}

Eigen::VectorXd TimeEmbedding::operator()(double t) const {
    Eigen::VectorXd e(dim_);
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
        e[static_cast<Eigen::Index>(2 * k)] = std::sin(freqs_[k] * t);
        e[static_cast<Eigen::Index>(2 * k + 1)] = std::cos(freqs_[k] * t);
    }
    return e;
}

// ---------------------------------------------------------------- GcnLayer

GcnLayer::GcnLayer(Config cfg, Rng& rng, std::string name) : cfg_(cfg) {
    if (cfg_.in_dim < 1 || cfg_.out_dim < 1)
        throw std::invalid_argument("GcnLayer: dims must be >= 1");
    params_.emplace_back(name + ".W",
                         static_cast<Eigen::Index>(cfg_.in_dim) * cfg_.out_dim);
    normal_init(params_[0].value, rng,
                cfg_.init_scale / std::sqrt(static_cast<double>(cfg_.in_dim)));
}

RowMajorMap GcnLayer::weight() {
    return RowMajorMap(params_[0].value.data(), cfg_.in_dim, cfg_.out_dim);
}

Eigen::MatrixXd GcnLayer::forward(const Eigen::MatrixXd& a_norm, const Eigen::MatrixXd& h) {
    if (a_norm.rows() != a_norm.cols() || a_norm.rows() != h.rows())
        throw std::invalid_argument("GcnLayer::forward: shape mismatch");
    if (h.cols() != cfg_.in_dim) throw std::invalid_argument("GcnLayer::forward: in_dim mismatch");
    ConstRowMajorMap w(params_[0].value.data(), cfg_.in_dim, cfg_.out_dim);
    a_norm_ = a_norm;
    input_ = h;
    preact_ = a_norm * h * w;
    recorded_ = true;
    return preact_.cwiseMax(0.0);
}

Eigen::MatrixXd GcnLayer::backward(const Eigen::MatrixXd& upstream) {
    if (!recorded_) throw std::logic_error("GcnLayer::backward: no recorded forward pass");
    if (upstream.rows() != preact_.rows() || upstream.cols() != preact_.cols())
        throw std::invalid_argument("GcnLayer::backward: upstream shape mismatch");
    Eigen::MatrixXd dz =
        upstream.cwiseProduct((preact_.array() > 0.0).cast<double>().matrix());
    RowMajorMap gw(params_[0].grad.data(), cfg_.in_dim, cfg_.out_dim);
    Eigen::MatrixXd ah = a_norm_ * input_;
    gw.noalias() += ah.transpose() * dz;
    ConstRowMajorMap w(params_[0].value.data(), cfg_.in_dim, cfg_.out_dim);
    Eigen::MatrixXd dh = a_norm_.transpose() * (dz * w.transpose());
    recorded_ = false;
    return dh;
}

Eigen::MatrixXd GcnLayer::evaluate(const Eigen::MatrixXd& a_norm,
                                   const Eigen::MatrixXd& h) const {
    if (a_norm.rows() != a_norm.cols() || a_norm.rows() != h.rows())
        throw std::invalid_argument("GcnLayer::evaluate: shape mismatch");
    if (h.cols() != cfg_.in_dim)
        throw std::invalid_argument("GcnLayer::evaluate: in_dim mismatch");
    ConstRowMajorMap w(params_[0].value.data(), cfg_.in_dim, cfg_.out_dim);
    return (a_norm * h * w).cwiseMax(0.0);
}

std::vector<ParamBlock*> GcnLayer::param_blocks() { return {&params_[0]}; }

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("normalize_adjacency: matrix must be square");
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd with_loops = a + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd d = with_loops.rowwise().sum();
    Eigen::VectorXd d_inv_sqrt = d.array().max(1e-300).rsqrt();
    return d_inv_sqrt.asDiagonal() * with_loops * d_inv_sqrt.asDiagonal();
}

// ---------------------------------------------------------------- Adam

void Adam::step(const std::vector<ParamBlock*>& blocks) {
    if (m_.empty()) {
        m_.reserve(blocks.size());
        v_.reserve(blocks.size());
        for (const auto* b : blocks) {
            m_.push_back(Eigen::VectorXd::Zero(b->value.size()));
            v_.push_back(Eigen::VectorXd::Zero(b->value.size()));
        }
    }
    if (m_.size() != blocks.size())
        throw std::invalid_argument("Adam::step: block count changed");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        ParamBlock& b = *blocks[i];
        if (m_[i].size() != b.value.size())
            throw std::invalid_argument("Adam::step: shape mismatch for block " + b.name);
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * b.grad;
        v_[i] = cfg_.beta2 * v_[i].array().matrix() +
                (1.0 - cfg_.beta2) * b.grad.cwiseProduct(b.grad);
        Eigen::ArrayXd m_hat = m_[i].array() / bc1;
        Eigen::ArrayXd v_hat = v_[i].array() / bc2;
        b.value.array() -= cfg_.lr * m_hat / (v_hat.sqrt() + cfg_.eps);
    }
}

void Adam::set_state(long step_count, std::vector<Eigen::VectorXd> m,
                     std::vector<Eigen::VectorXd> v) {
    if (m.size() != v.size()) throw std::invalid_argument("Adam::set_state: m/v count mismatch");
    step_count_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace gsdnet::nn
