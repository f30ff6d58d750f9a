#include "gsdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "schedule_json.hpp"

namespace gsdnet {

using nlohmann::json;

Eigen::MatrixXd positional_embedding(int n_positions, int dim) {
    if (n_positions < 1 || dim < 1)
        throw std::invalid_argument("positional_embedding: bad shape");
    Eigen::MatrixXd pe(n_positions, dim);
    for (int pos = 0; pos < n_positions; ++pos) {
        for (int j = 0; j < dim; ++j) {
            const int two_i = (j / 2) * 2;
            const double denom =
                std::pow(10000.0, static_cast<double>(two_i) / static_cast<double>(dim));
            const double arg = static_cast<double>(pos) / denom;
            pe(pos, j) = (j % 2 == 0) ? std::sin(arg) : std::cos(arg);
        }
    }
    return pe;
}

int bucket7(double y) {
    const int b = static_cast<int>(std::floor((y + 3.0) * 7.0 / 6.0));
    return std::clamp(b, 0, 6);
}

int binary_label(double y) { return y > 0.0 ? 1 : 0; }

void GsdnetConfig::validate() const {
    if (common_dim < 1) throw std::invalid_argument("GsdnetConfig: common_dim must be >= 1");
    for (int d : raw_dims)
        if (d < 1) throw std::invalid_argument("GsdnetConfig: raw_dims must be >= 1");
    for (int k : kernel_sizes)
        if (k < 1) throw std::invalid_argument("GsdnetConfig: kernel_sizes must be >= 1");
    if (gcn_layers < 1) throw std::invalid_argument("GsdnetConfig: gcn_layers must be >= 1");
    if (window < 0) throw std::invalid_argument("GsdnetConfig: window must be >= 0");
    if (beta < 0.0) throw std::invalid_argument("GsdnetConfig: beta must be >= 0");
    if (k_rec < 1) throw std::invalid_argument("GsdnetConfig: k_rec must be >= 1");
    if (spectrum_summary_dim < 2)
        throw std::invalid_argument("GsdnetConfig: spectrum_summary_dim must be >= 2");
}

namespace {

std::string slot_name(Modality m) { return std::string(1, modality_code(m)); }

constexpr const char* kGraphRule = "windowed-cosine-v1";

}  // namespace

GsdnetModel::GsdnetModel(GsdnetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const int d = cfg_.common_dim;

    enc_.reserve(3);
    sx_.reserve(3);
    se_.reserve(3);
    dx_.reserve(3);
    de_.reserve(3);
    for (Modality m : kAllModalities) {
        const auto i = static_cast<std::size_t>(m);
        nn::Conv1d::Config cc;
        cc.kernel_size = cfg_.kernel_sizes[i];
        cc.in_dim = cfg_.raw_dims[i];
        cc.out_dim = d;
        enc_.emplace_back(cc, rng, "enc." + slot_name(m));

        ScoreNet::Config sc;
        sc.input_dim = d;
        sc.cond_dim = 2 * d + 2;
        sc.time_embed_dim = cfg_.time_embed_dim;
        sc.hidden_dims = cfg_.score_hidden;
        sx_.emplace_back(sc, rng, "sx." + slot_name(m));

        ScoreNet::Config ec;
        ec.input_dim = 1;
        ec.cond_dim = 1 + cfg_.spectrum_summary_dim;
        ec.time_embed_dim = cfg_.time_embed_dim;
        ec.hidden_dims = cfg_.eig_score_hidden;
        se_.emplace_back(ec, rng, "se." + slot_name(m));

        nn::Mlp::Config dc;
        dc.dims.push_back(d);
        for (int h : cfg_.decoder_hidden) dc.dims.push_back(h);
        dc.dims.push_back(cfg_.raw_dims[i]);
        dx_.emplace_back(dc, rng, "dx." + slot_name(m));

        nn::Mlp::Config lc;
        lc.dims.push_back(2);  // [lambda, quantile]
        for (int h : cfg_.eig_decoder_hidden) lc.dims.push_back(h);
        lc.dims.push_back(1);
        de_.emplace_back(lc, rng, "de." + slot_name(m));
    }

    gcn_.reserve(static_cast<std::size_t>(cfg_.gcn_layers));
    for (int l = 0; l < cfg_.gcn_layers; ++l) {
        nn::GcnLayer::Config gc;
        gc.in_dim = (l == 0) ? d : cfg_.gcn_hidden;
        gc.out_dim = cfg_.gcn_hidden;
        gcn_.emplace_back(gc, rng, "gcn." + std::to_string(l));
    }

    nn::Mlp::Config hc;
    hc.dims.push_back(cfg_.gcn_hidden);
    for (int h : cfg_.head_hidden) hc.dims.push_back(h);
    hc.dims.push_back(1);
    hc.zero_init_last = true;
    head_ = nn::Mlp(hc, rng, "head");

    adam_ = nn::Adam(cfg_.optimizer);
}

std::vector<nn::ParamBlock*> GsdnetModel::param_blocks() {
    std::vector<nn::ParamBlock*> out;
    auto append = [&out](std::vector<nn::ParamBlock*> v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    for (auto& c : enc_) append(c.param_blocks());
    for (auto& s : sx_) append(s.param_blocks());
    for (auto& s : se_) append(s.param_blocks());
    for (auto& m : dx_) append(m.param_blocks());
    for (auto& m : de_) append(m.param_blocks());
    for (auto& g : gcn_) append(g.param_blocks());
    append(head_.param_blocks());
    return out;
}

std::size_t GsdnetModel::parameter_count() const {
    std::size_t n = 0;
    for (auto* b : const_cast<GsdnetModel*>(this)->param_blocks())
        n += static_cast<std::size_t>(b->value.size());
    return n;
}

EncodedModalities GsdnetModel::encode(const MultimodalSample& sample,
                                      const MissingPattern& pattern) const {
    sample.validate();
    EncodedModalities out;
    out.n_utterances = sample.n_utterances();
    out.dim = cfg_.common_dim;
    const Eigen::MatrixXd pe = positional_embedding(out.n_utterances, cfg_.common_dim);
    for (Modality m : kAllModalities) {
        if (!pattern.observed(m) || !sample.has(m)) continue;
        Eigen::MatrixXd x = enc_[static_cast<std::size_t>(m)].evaluate(sample.get(m));
        x += pe;
        out.feats[static_cast<std::size_t>(m)] = std::move(x);
    }
    if (out.present().empty())
        throw std::invalid_argument("encode: no observed modality present in sample");
    return out;
}

EncodedModalities GsdnetModel::encode_recorded(const MultimodalSample& sample) {
    EncodedModalities out;
    out.n_utterances = sample.n_utterances();
    out.dim = cfg_.common_dim;
    const Eigen::MatrixXd pe = positional_embedding(out.n_utterances, cfg_.common_dim);
    for (Modality m : kAllModalities) {
        Eigen::MatrixXd x = enc_[static_cast<std::size_t>(m)].forward(sample.get(m));
        x += pe;
        out.feats[static_cast<std::size_t>(m)] = std::move(x);
    }
    return out;
}

Eigen::VectorXd GsdnetModel::feature_condition(const EncodedModalities& enc,
                                               const MissingPattern& pattern,
                                               Modality target, int utterance) const {
    const int d = cfg_.common_dim;
    Eigen::VectorXd cond = Eigen::VectorXd::Zero(2 * d + 2);
    int slot = 0;
    for (Modality m : kAllModalities) {
        if (m == target) continue;
        if (pattern.observed(m) && enc.has(m)) {
            cond.segment(slot * d, d) = enc.get(m).row(utterance).transpose();
            cond[2 * d + slot] = 1.0;
        }
        ++slot;
    }
    return cond;
}

Eigen::VectorXd GsdnetModel::spectrum_summary(const std::vector<Eigen::VectorXd>& spectra,
                                              int dim) {
    if (dim < 2) throw std::invalid_argument("spectrum_summary: dim must be >= 2");
    std::vector<double> all;
    for (const auto& s : spectra)
        for (Eigen::Index i = 0; i < s.size(); ++i) all.push_back(s[i]);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    if (all.empty()) return out;
    std::sort(all.begin(), all.end());
    const auto last = static_cast<double>(all.size() - 1);
    for (int k = 0; k < dim; ++k) {
        const double pos = last * static_cast<double>(k) / (dim - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = static_cast<std::size_t>(std::ceil(pos));
        const double frac = pos - std::floor(pos);
        out[k] = (1.0 - frac) * all[lo] + frac * all[hi];
    }
    return out;
}

namespace {

double coordinate_quantile(int i, int n) {
    return n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
}

}  // namespace

StepLosses GsdnetModel::train_step(const MultimodalSample& sample,
                                   const MissingPattern& pattern, Rng& rng,
                                   const TrainStepOptions& opts) {
    sample.validate();
    for (Modality m : kAllModalities)
        if (!sample.has(m))
            throw std::invalid_argument(
                "train_step: sample must carry ground truth for all modalities");
    if (pattern.observed_set().empty())
        throw std::invalid_argument("train_step: pattern must observe at least one modality");

    auto blocks = param_blocks();
    nn::zero_grads(blocks);

    const int n = sample.n_utterances();
    const int d = cfg_.common_dim;
    const int k_rec = opts.k_rec_override.value_or(cfg_.k_rec);
    const auto missing = pattern.missing_set();

    // (1) encode every modality from ground truth, recording the conv pass
    EncodedModalities enc = encode_recorded(sample);

    // (2) per-modality subgraph spectra from the ground-truth encodings
    GraphBuildOptions gopts;
    gopts.window = cfg_.window;
    std::array<Eigen::VectorXd, 3> spectra;
    for (Modality m : kAllModalities)
        spectra[static_cast<std::size_t>(m)] =
            build_modality_subgraph(enc, m, gopts).spectrum.eigvals;

    std::vector<Eigen::VectorXd> observed_spectra;
    for (Modality m : pattern.observed_set())
        observed_spectra.push_back(spectra[static_cast<std::size_t>(m)]);
    const Eigen::VectorXd summary =
        spectrum_summary(observed_spectra, cfg_.spectrum_summary_dim);

    // (3) one diffusion time per step
    const double t = opts.fixed_t.value_or(rng.uniform(sde::kTimeEpsilon, 1.0));
    if (!(t >= sde::kTimeEpsilon && t <= 1.0))
        throw std::invalid_argument("train_step: t must be in [t_eps, 1]");

    StepLosses losses;
    std::array<std::optional<Eigen::MatrixXd>, 3> reconstructed_enc;

    auto chain_noise = [&](Eigen::Index dim) {
        return opts.zero_noise ? Eigen::VectorXd::Zero(dim).eval() : rng.normal_vector(dim);
    };

    for (Modality m : missing) {
        const auto mi = static_cast<std::size_t>(m);
        ScoreNet& snet = sx_[mi];
        const Eigen::MatrixXd& x0 = enc.get(m);

        // (4) feature DSM, row-wise with shared t, plus the perturbed rows
        Eigen::MatrixXd xt(n, d);
        double loss_m = 0.0;
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd cond = feature_condition(enc, pattern, m, i);
            const DsmResult r = dsm_loss(snet, cfg_.feature_schedule, x0.row(i).transpose(),
                                         cond, t, chain_noise(d));
            loss_m += r.loss;
            xt.row(i) = r.xt.transpose();
        }
        losses.score_x += loss_m / n;

        // (5) short reverse chain from the perturbed state, then decode
        Eigen::MatrixXd xrec = xt;
        if (t - sde::kTimeEpsilon > 1e-15) {
            const double dt = (t - sde::kTimeEpsilon) / k_rec;
            for (int k = 0; k < k_rec; ++k) {
                const double tau = t - k * dt;
                for (int i = 0; i < n; ++i) {
                    const Eigen::VectorXd cond = feature_condition(enc, pattern, m, i);
                    const Eigen::VectorXd score =
                        snet.evaluate(xrec.row(i).transpose(), cond, tau);
                    xrec.row(i) = sde::reverse_step(cfg_.feature_schedule,
                                                    xrec.row(i).transpose(), tau, dt, score,
                                                    chain_noise(d))
                                      .transpose();
                }
            }
        }
        reconstructed_enc[mi] = xrec;

        nn::Mlp& dec = dx_[mi];
        const Eigen::MatrixXd& raw = sample.get(m);
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd xhat = dec.forward(xrec.row(i).transpose());
            const Eigen::VectorXd resid = xhat - raw.row(i).transpose();
            losses.rec += resid.squaredNorm();
            dec.backward(2.0 * resid);
        }

        // spectrum stream: DSM, chain and decode per coordinate
        ScoreNet& enet = se_[mi];
        const Eigen::VectorXd& lam0 = spectra[mi];
        Eigen::VectorXd lam_t(n);
        double eig_loss_m = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd cond(1 + cfg_.spectrum_summary_dim);
            cond[0] = coordinate_quantile(i, n);
            cond.tail(cfg_.spectrum_summary_dim) = summary;
            Eigen::VectorXd state0(1);
            state0[0] = lam0[i];
            const DsmResult r =
                dsm_loss(enet, cfg_.eigen_schedule, state0, cond, t, chain_noise(1));
            eig_loss_m += r.loss;
            lam_t[i] = r.xt[0];
        }
        losses.score_eig += eig_loss_m / n;

        Eigen::VectorXd lam_rec = lam_t;
        if (t - sde::kTimeEpsilon > 1e-15) {
            const double dt = (t - sde::kTimeEpsilon) / k_rec;
            for (int k = 0; k < k_rec; ++k) {
                const double tau = t - k * dt;
                for (int i = 0; i < n; ++i) {
                    Eigen::VectorXd cond(1 + cfg_.spectrum_summary_dim);
                    cond[0] = coordinate_quantile(i, n);
                    cond.tail(cfg_.spectrum_summary_dim) = summary;
                    Eigen::VectorXd state(1);
                    state[0] = lam_rec[i];
                    const Eigen::VectorXd score = enet.evaluate(state, cond, tau);
                    lam_rec[i] = sde::reverse_step(cfg_.eigen_schedule, state, tau, dt, score,
                                                   chain_noise(1))[0];
                }
            }
        }

        nn::Mlp& edec = de_[mi];
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd in(2);
            in[0] = lam_rec[i];
            in[1] = coordinate_quantile(i, n);
            const Eigen::VectorXd lhat = edec.forward(in);
            const double resid = lhat[0] - lam0[i];
            losses.rec += resid * resid;
            Eigen::VectorXd up(1);
            up[0] = 2.0 * resid;
            edec.backward(up);
        }
    }

    // (6) fuse observed encodings with reconstructed slots and predict
    Eigen::MatrixXd h0(3 * n, d);
    for (Modality m : kAllModalities) {
        const auto mi = static_cast<std::size_t>(m);
        const Eigen::MatrixXd& block =
            reconstructed_enc[mi] ? *reconstructed_enc[mi] : enc.get(m);
        h0.middleRows(static_cast<Eigen::Index>(mi) * n, n) = block;
    }
    bool degenerate = false;
    const Eigen::MatrixXd a_fuse =
        windowed_cosine_adjacency(h0, {n, n, n}, gopts, &degenerate);
    const Eigen::MatrixXd a_norm = nn::normalize_adjacency(a_fuse);

    Eigen::MatrixXd h = h0;
    for (auto& layer : gcn_) h = layer.forward(a_norm, h);
    const Eigen::Index n_nodes = h.rows();
    Eigen::VectorXd pooled = h.colwise().mean().transpose();
    const Eigen::VectorXd yhat_vec = head_.forward(pooled);
    const double yhat = yhat_vec[0];
    const double resid_pred = yhat - sample.label;
    losses.pred = resid_pred * resid_pred;

    // backward through head, GCN stack and the observed encoder paths
    Eigen::VectorXd up(1);
    up[0] = 2.0 * resid_pred;
    const Eigen::VectorXd dpooled = head_.backward(up);
    Eigen::MatrixXd dh =
        Eigen::MatrixXd::Ones(n_nodes, 1) * (dpooled.transpose() / static_cast<double>(n_nodes));
    for (auto it = gcn_.rbegin(); it != gcn_.rend(); ++it) dh = it->backward(dh);
    const Eigen::MatrixXd pe = positional_embedding(n, d);
    (void)pe;  // PE is additive, gradient passes straight through
    for (Modality m : kAllModalities) {
        const auto mi = static_cast<std::size_t>(m);
        if (reconstructed_enc[mi]) continue;  // chain outputs are detached
        enc_[mi].backward(dh.middleRows(static_cast<Eigen::Index>(mi) * n, n));
    }

    losses.total = total_loss(cfg_.beta, losses.rec, losses.score_x, losses.score_eig,
                              losses.pred);
    if (!std::isfinite(losses.total)) {
        std::ostringstream os;
        os << "train_step: non-finite loss at step " << train_steps_ << " (score_x="
           << losses.score_x << ", score_eig=" << losses.score_eig << ", rec=" << losses.rec
           << ", pred=" << losses.pred << ", t=" << t << ", pattern=" << pattern.id() << ")";
        throw numeric_error(os.str());
    }

    // (8) joint Adam update
    adam_.step(blocks);
    ++train_steps_;
    return losses;
}

RecoverResult GsdnetModel::recover(const MultimodalSample& sample,
                                   const MissingPattern& pattern,
                                   const sde::SdeStepPlan& plan, Rng& rng) const {
    plan.validate();
    if (train_steps_ == 0)
        throw std::logic_error("recover: model has not been trained");
    for (Modality m : pattern.observed_set())
        if (!sample.has(m))
            throw std::invalid_argument("recover: observed modality missing from sample");

    GraphBuildOptions gopts;
    gopts.window = cfg_.window;

    RecoverResult out;
    out.encoded = encode(sample, pattern);
    const int n = out.encoded.n_utterances;
    const int d = cfg_.common_dim;
    const auto missing = pattern.missing_set();

    if (missing.empty()) {
        // identity pass-through; no chains run
        out.bypassed = true;
        ConversationGraph g = build_graph(out.encoded, gopts);
        out.adjacency = g.adjacency;
        out.spectrum = g.spectrum;
        return out;
    }

    std::vector<Eigen::VectorXd> observed_spectra;
    for (Modality m : pattern.observed_set())
        observed_spectra.push_back(
            build_modality_subgraph(out.encoded, m, gopts).spectrum.eigvals);
    const Eigen::VectorXd summary =
        spectrum_summary(observed_spectra, cfg_.spectrum_summary_dim);

    const int steps = plan.num_steps;
    const double dt = (1.0 - sde::kTimeEpsilon) / steps;

    for (Modality m : missing) {
        const auto mi = static_cast<std::size_t>(m);
        const ScoreNet& snet = sx_[mi];

        // feature chain from the prior
        Eigen::MatrixXd x(n, d);
        for (int i = 0; i < n; ++i)
            x.row(i) =
                sde::prior_sample(cfg_.feature_schedule, d, rng.normal_vector(d)).transpose();
        for (int k = 0; k < steps; ++k) {
            const double tau = 1.0 - k * dt;
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd cond = feature_condition(out.encoded, pattern, m, i);
                Eigen::VectorXd row = x.row(i).transpose();
                const Eigen::VectorXd score = snet.evaluate(row, cond, tau);
                row = sde::reverse_step(cfg_.feature_schedule, row, tau, dt, score,
                                        rng.normal_vector(d));
                const double tau_next = tau - dt;
                for (int c = 0; c < plan.corrector_steps; ++c) {
                    const Eigen::VectorXd cscore = snet.evaluate(row, cond, tau_next);
                    row = sde::corrector_step(cfg_.feature_schedule, row, tau_next, cscore,
                                              rng.normal_vector(d), plan.corrector_snr);
                }
                x.row(i) = row.transpose();
            }
        }
        out.encoded.feats[mi] = x;

        // spectrum chain from the prior, one coordinate per node
        const ScoreNet& enet = se_[mi];
        Eigen::VectorXd lam(n);
        for (int i = 0; i < n; ++i)
            lam[i] = sde::prior_sample(cfg_.eigen_schedule, 1, rng.normal_vector(1))[0];
        for (int k = 0; k < steps; ++k) {
            const double tau = 1.0 - k * dt;
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd cond(1 + cfg_.spectrum_summary_dim);
                cond[0] = coordinate_quantile(i, n);
                cond.tail(cfg_.spectrum_summary_dim) = summary;
                Eigen::VectorXd state(1);
                state[0] = lam[i];
                const Eigen::VectorXd score = enet.evaluate(state, cond, tau);
                state = sde::reverse_step(cfg_.eigen_schedule, state, tau, dt, score,
                                          rng.normal_vector(1));
                const double tau_next = tau - dt;
                for (int c = 0; c < plan.corrector_steps; ++c) {
                    const Eigen::VectorXd cscore = enet.evaluate(state, cond, tau_next);
                    state = sde::corrector_step(cfg_.eigen_schedule, state, tau_next, cscore,
                                                rng.normal_vector(1), plan.corrector_snr);
                }
                lam[i] = state[0];
            }
        }

        // decoders refine both streams
        const nn::Mlp& edec = de_[mi];
        Eigen::VectorXd lam_hat(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd in(2);
            in[0] = lam[i];
            in[1] = coordinate_quantile(i, n);
            lam_hat[i] = edec.evaluate(in)[0];
        }
        out.recovered_subspectrum[mi] = lam_hat;

        const nn::Mlp& dec = dx_[mi];
        Eigen::MatrixXd raw_hat(n, cfg_.raw_dims[mi]);
        for (int i = 0; i < n; ++i)
            raw_hat.row(i) = dec.evaluate(x.row(i).transpose()).transpose();
        out.decoded_raw[mi] = raw_hat;
    }

    // assemble the full adjacency: completed features drive the windowed rule,
    // and each missing modality's diagonal block is rebuilt from its recovered
    // eigenvector basis with the generated eigenvalues
    ConversationGraph completed = build_graph(out.encoded, gopts);
    Eigen::MatrixXd a = completed.adjacency.entries();
    for (Modality m : missing) {
        const auto mi = static_cast<std::size_t>(m);
        ConversationGraph sub = build_modality_subgraph(out.encoded, m, gopts);
        const Eigen::MatrixXd& u = sub.spectrum.eigvecs;
        const Eigen::MatrixXd block =
            u * out.recovered_subspectrum[mi]->asDiagonal() * u.transpose();
        a.block(static_cast<Eigen::Index>(mi) * n, static_cast<Eigen::Index>(mi) * n, n, n) =
            block;
    }
    out.adjacency = SymmetricMatrix(a);
    out.spectrum = eigh(out.adjacency);
    return out;
}

Eigen::VectorXd GsdnetModel::gcn_forward(const Eigen::MatrixXd& features,
                                         const SymmetricMatrix& adjacency) const {
    if (features.rows() != adjacency.size())
        throw std::invalid_argument("gcn_forward: features/adjacency mismatch");
    const Eigen::MatrixXd a_norm = nn::normalize_adjacency(adjacency.entries());
    Eigen::MatrixXd h = features;
    for (const auto& layer : gcn_) h = layer.evaluate(a_norm, h);
    return h.colwise().mean().transpose();
}

double GsdnetModel::predict_from_fused(const Eigen::VectorXd& fused) const {
    return head_.evaluate(fused)[0];
}

namespace {
double raw_recovery_mse(const MultimodalSample& sample,
                        const std::array<std::optional<Eigen::MatrixXd>, 3>& recovered) {
    double se = 0.0;
    long cells = 0;
    for (Modality m : kAllModalities) {
        const auto mi = static_cast<std::size_t>(m);
        if (!recovered[mi] || !sample.has(m)) continue;
        const Eigen::MatrixXd diff = *recovered[mi] - sample.get(m);
        se += diff.squaredNorm();
        cells += diff.size();
    }
    return cells > 0 ? se / static_cast<double>(cells) : 0.0;
}
}  // namespace

Prediction GsdnetModel::predict(const MultimodalSample& sample, const MissingPattern& pattern,
                                const sde::SdeStepPlan& plan, Rng& rng) const {
    Prediction p;
    if (pattern.complete_case()) {
        EncodedModalities enc = encode(sample, pattern);
        ConversationGraph g = build_graph(enc);
        p.score = predict_from_fused(gcn_forward(g.features, g.adjacency));
    } else {
        RecoverResult rec = recover(sample, pattern, plan, rng);
        const int n = rec.encoded.n_utterances;
        Eigen::MatrixXd h0(3 * n, cfg_.common_dim);
        for (Modality m : kAllModalities)
            h0.middleRows(static_cast<Eigen::Index>(modality_index(m)) * n, n) =
                rec.encoded.get(m);
        p.score = predict_from_fused(gcn_forward(h0, rec.adjacency));
        p.recovery_mse = raw_recovery_mse(sample, rec.decoded_raw);
        p.recovered = true;
    }
    p.binary = binary_label(p.score);
    p.bucket = bucket7(p.score);
    return p;
}

Prediction GsdnetModel::predict_with_imputation(
    const MultimodalSample& sample, const MissingPattern& pattern,
    const std::array<Eigen::VectorXd, 3>& fill_rows) const {
    MultimodalSample filled = sample;
    const int n = sample.n_utterances();
    double se = 0.0;
    long cells = 0;
    for (Modality m : kAllModalities) {
        const auto mi = static_cast<std::size_t>(m);
        if (pattern.observed(m)) continue;
        Eigen::MatrixXd fill =
            fill_rows[mi].transpose().replicate(n, 1);
        if (sample.has(m)) {
            const Eigen::MatrixXd diff = fill - sample.get(m);
            se += diff.squaredNorm();
            cells += diff.size();
        }
        filled.modalities[mi] = std::move(fill);
    }
    EncodedModalities enc = encode(filled, MissingPattern::complete());
    ConversationGraph g = build_graph(enc);
    Prediction p;
    p.score = predict_from_fused(gcn_forward(g.features, g.adjacency));
    p.binary = binary_label(p.score);
    p.bucket = bucket7(p.score);
    p.recovery_mse = cells > 0 ? se / static_cast<double>(cells) : 0.0;
    p.recovered = !pattern.complete_case();
    return p;
}

namespace {

json config_to_json(const GsdnetConfig& c) {
    json j;
    j["common_dim"] = c.common_dim;
    j["raw_dims"] = c.raw_dims;
    j["kernel_sizes"] = c.kernel_sizes;
    j["score_hidden"] = c.score_hidden;
    j["eig_score_hidden"] = c.eig_score_hidden;
    j["decoder_hidden"] = c.decoder_hidden;
    j["eig_decoder_hidden"] = c.eig_decoder_hidden;
    j["head_hidden"] = c.head_hidden;
    j["time_embed_dim"] = c.time_embed_dim;
    j["gcn_hidden"] = c.gcn_hidden;
    j["gcn_layers"] = c.gcn_layers;
    j["window"] = c.window;
    j["beta"] = c.beta;
    j["k_rec"] = c.k_rec;
    j["spectrum_summary_dim"] = c.spectrum_summary_dim;
    j["feature_schedule"] = schedule_to_json(c.feature_schedule);
    j["eigen_schedule"] = schedule_to_json(c.eigen_schedule);
    j["optimizer"] = {{"lr", c.optimizer.lr},
                      {"beta1", c.optimizer.beta1},
                      {"beta2", c.optimizer.beta2},
                      {"eps", c.optimizer.eps}};
    return j;
}

GsdnetConfig config_from_json(const json& j) {
    GsdnetConfig c;
    c.common_dim = j.at("common_dim").get<int>();
    c.raw_dims = j.at("raw_dims").get<std::array<int, 3>>();
    c.kernel_sizes = j.at("kernel_sizes").get<std::array<int, 3>>();
    c.score_hidden = j.at("score_hidden").get<std::vector<int>>();
    c.eig_score_hidden = j.at("eig_score_hidden").get<std::vector<int>>();
    c.decoder_hidden = j.at("decoder_hidden").get<std::vector<int>>();
    c.eig_decoder_hidden = j.at("eig_decoder_hidden").get<std::vector<int>>();
    c.head_hidden = j.at("head_hidden").get<std::vector<int>>();
    c.time_embed_dim = j.at("time_embed_dim").get<int>();
    c.gcn_hidden = j.at("gcn_hidden").get<int>();
    c.gcn_layers = j.at("gcn_layers").get<int>();
    c.window = j.at("window").get<int>();
    c.beta = j.at("beta").get<double>();
    c.k_rec = j.at("k_rec").get<int>();
    c.spectrum_summary_dim = j.at("spectrum_summary_dim").get<int>();
    c.feature_schedule = schedule_from_json(j.at("feature_schedule"));
    c.eigen_schedule = schedule_from_json(j.at("eigen_schedule"));
    const json& opt = j.at("optimizer");
    c.optimizer.lr = opt.at("lr").get<double>();
    c.optimizer.beta1 = opt.at("beta1").get<double>();
    c.optimizer.beta2 = opt.at("beta2").get<double>();
    c.optimizer.eps = opt.at("eps").get<double>();
    return c;
}

}  // namespace

std::string GsdnetModel::manifest_json() const {
    json j;
    j["format"] = "gsdnet-model";
    j["version"] = 1;
    j["graph_rule"] = kGraphRule;
    j["config"] = config_to_json(cfg_);
    j["train_steps"] = train_steps_;
    j["adam_step"] = adam_.step_count();
    return j.dump();
}

CheckpointBlob GsdnetModel::to_checkpoint() const {
    CheckpointBlob blob;
    blob.manifest_json = manifest_json();
    auto& self = const_cast<GsdnetModel&>(*this);
    for (auto* b : self.param_blocks()) blob.arrays.emplace_back("param." + b->name, b->value);
    const auto& m = adam_.first_moments();
    const auto& v = adam_.second_moments();
    if (!m.empty()) {
        auto blocks = self.param_blocks();
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            blob.arrays.emplace_back("adam.m." + blocks[i]->name, m[i]);
            blob.arrays.emplace_back("adam.v." + blocks[i]->name, v[i]);
        }
    }
    return blob;
}

GsdnetModel GsdnetModel::from_checkpoint(const CheckpointBlob& blob) {
    const json manifest = json::parse(blob.manifest_json);
    if (manifest.at("format").get<std::string>() != "gsdnet-model")
        throw io_error("from_checkpoint: not a model checkpoint");
    GsdnetModel model(config_from_json(manifest.at("config")), 0);
    model.train_steps_ = manifest.at("train_steps").get<long>();

    auto blocks = model.param_blocks();
    for (auto* b : blocks) {
        const Eigen::VectorXd* arr = blob.find("param." + b->name);
        if (!arr) throw io_error("from_checkpoint: missing array param." + b->name);
        if (arr->size() != b->value.size())
            throw io_error("from_checkpoint: size mismatch for param." + b->name);
        b->value = *arr;
    }
    const long adam_step = manifest.at("adam_step").get<long>();
    if (adam_step > 0) {
        std::vector<Eigen::VectorXd> m, v;
        for (auto* b : blocks) {
            const Eigen::VectorXd* am = blob.find("adam.m." + b->name);
            const Eigen::VectorXd* av = blob.find("adam.v." + b->name);
            if (!am || !av)
                throw io_error("from_checkpoint: missing Adam state for " + b->name);
            m.push_back(*am);
            v.push_back(*av);
        }
        model.adam_.set_state(adam_step, std::move(m), std::move(v));
    }
    return model;
}

}  // namespace gsdnet
