#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "gsdnet/compare.hpp"
#include "gsdnet/eval.hpp"
#include "gsdnet/matrix_io.hpp"
#include "gsdnet/multimodal.hpp"
#include "gsdnet/rng.hpp"
#include "gsdnet/synthetic.hpp"

#include "oracles.hpp"

using namespace gsdnet;
using namespace gsdnet::harness;

TEST_CASE("generate: splits are disjoint 70/15/15 and seeded") {
    SyntheticConfig cfg;
    cfg.seed = 5;
    cfg.n_samples = 100;
    const SyntheticDataset ds = generate(cfg);
    CHECK(ds.train.size() == 70);
    CHECK(ds.val.size() == 15);
    CHECK(ds.test.size() == 15);

    SyntheticConfig bad = cfg;
    bad.split = {0.5, 0.4, 0.4};
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("generate: same seed gives byte-identical datasets") {
    namespace fs = std::filesystem;
    SyntheticConfig cfg;
    cfg.seed = 17;
    cfg.n_samples = 30;
    const auto dir = fs::temp_directory_path() / "gsdnet_harness_gen";
    fs::create_directories(dir);
    const std::string p1 = (dir / "a.bin").string(), p2 = (dir / "b.bin").string();
    save_dataset(p1, generate(cfg).train);
    save_dataset(p2, generate(cfg).train);
    CHECK(read_file(p1) == read_file(p2));

    cfg.seed = 18;
    save_dataset(p2, generate(cfg).train);
    CHECK(read_file(p1) != read_file(p2));
}

TEST_CASE("generate: eta = 0 makes audio an exact linear map of language") {
    SyntheticConfig cfg;
    cfg.seed = 21;
    cfg.n_samples = 40;
    cfg.eta = 0.0;
    const SyntheticDataset ds = generate(cfg);

    // recover the (shared) map from pooled rows, then check every sample
    std::vector<const MultimodalSample*> all;
    for (const auto& s : ds.train.samples) all.push_back(&s);
    long rows = 0;
    for (const auto* s : all) rows += s->n_utterances();
    Eigen::MatrixXd xl(rows, cfg.dims[0]), xa(rows, cfg.dims[1]);
    long at = 0;
    for (const auto* s : all) {
        const auto n = s->n_utterances();
        xl.middleRows(at, n) = s->get(Modality::Language);
        xa.middleRows(at, n) = s->get(Modality::Audio);
        at += n;
    }
    const Eigen::MatrixXd map =
        xl.colPivHouseholderQr().solve(xa);  // least squares, exact if linear
    for (const auto& s : ds.test.samples)
        CHECK((s.get(Modality::Language) * map - s.get(Modality::Audio)).cwiseAbs().maxCoeff() <=
              1e-8);
}

TEST_CASE("generate: label correlates with the latent readout at eta = 0.1") {
    SyntheticConfig cfg;
    cfg.seed = 23;
    cfg.n_samples = 200;
    cfg.eta = 0.1;
    const SyntheticDataset ds = generate(cfg);

    // labels regressed on mean language features recover the readout since
    // language is an invertible map of the latent
    const auto& samples = ds.train.samples;
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd x(n, cfg.dims[0] + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i).head(cfg.dims[0]) =
            samples[static_cast<std::size_t>(i)].get(Modality::Language).colwise().mean();
        x(i, cfg.dims[0]) = 1.0;
        y[i] = samples[static_cast<std::size_t>(i)].label;
    }
    const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd fitted = x * coef;
    const double ym = y.mean(), fm = fitted.mean();
    const double cov = ((y.array() - ym) * (fitted.array() - fm)).sum();
    const double corr = cov / std::sqrt((y.array() - ym).square().sum() *
                                        (fitted.array() - fm).square().sum());
    CHECK(corr >= 0.9);
}

TEST_CASE("apply_missing: rate 0 leaves the dataset unmasked") {
    SyntheticConfig cfg;
    cfg.seed = 31;
    cfg.n_samples = 20;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked = apply_missing_rate(data, 0.0, 7);
    for (const auto& p : masked.patterns) CHECK(p.complete_case());
    CHECK(masked.data.size() == data.size());
    CHECK_THROWS_AS(apply_missing_rate(data, 0.71, 7), std::invalid_argument);
    CHECK_THROWS_AS(apply_missing_rate(data, -0.1, 7), std::invalid_argument);
}

TEST_CASE("apply_missing: full pattern keeps I_m empty everywhere") {
    SyntheticConfig cfg;
    cfg.seed = 32;
    cfg.n_samples = 10;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked =
        apply_missing_pattern(data, MissingPattern::from_string("lva"));
    for (const auto& p : masked.patterns) CHECK(p.missing_set().empty());
}

TEST_CASE("apply_missing: empirical cell rate matches the truncated binomial") {
    // each 3-cell mask is redrawn while all three land missing, so the
    // per-cell missing probability is (r - r^3) / (1 - r^3), not r itself
    SyntheticConfig cfg;
    cfg.seed = 33;
    cfg.n_samples = 3400;
    cfg.n_min = cfg.n_max = 1;
    cfg.dims = {1, 1, 1};
    const Dataset data = generate(cfg).train;
    const double rate = 0.5;
    const MaskedDataset masked = apply_missing_rate(data, rate, 11);
    long missing = 0, cells = 0;
    for (const auto& p : masked.patterns)
        for (Modality m : kAllModalities) {
            if (!p.observed(m)) ++missing;
            ++cells;
        }
    CHECK(cells >= 7000);
    const double expect = (rate - std::pow(rate, 3)) / (1.0 - std::pow(rate, 3));
    const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(cells));
    CHECK(std::abs(static_cast<double>(missing) / static_cast<double>(cells) - expect) <=
          3.0 * se);
}

TEST_CASE("pattern menu enumerates the seven availability sets") {
    const auto& menu = MissingPattern::menu();
    std::vector<std::string> ids;
    for (const auto& p : menu) ids.push_back(p.id());
    CHECK(ids == std::vector<std::string>{"l", "v", "a", "lv", "la", "va", "lva"});
}

TEST_CASE("evaluate: ground-truth oracle predictor maxes every metric") {
    SyntheticConfig cfg;
    cfg.seed = 41;
    cfg.n_samples = 60;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked =
        apply_missing_pattern(data, MissingPattern::from_string("lv"));
    const Predictor oracle = [&](const MultimodalSample& s, const MissingPattern&,
                                 std::uint64_t) {
        return SamplePrediction{s.label, 0.0, true};
    };
    const EvalRow row = evaluate(oracle, masked, "oracle", 1, 1);
    CHECK(row.acc2 == 1.0);
    CHECK(row.f1 == 1.0);
    CHECK(row.acc7 == 1.0);
}

TEST_CASE("evaluate: constant-zero predictor scores chance ACC2 on balanced labels") {
    SyntheticConfig cfg;
    cfg.seed = 42;
    cfg.n_samples = 400;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked =
        apply_missing_pattern(data, MissingPattern::from_string("lva"));
    const Predictor zero = [](const MultimodalSample&, const MissingPattern&,
                              std::uint64_t) { return SamplePrediction{0.0, 0.0, false}; };
    const EvalRow row = evaluate(zero, masked, "zero", 1, 1);
    const auto n = static_cast<double>(row.n_samples);
    CHECK(std::abs(row.acc2 - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("evaluate: metrics agree exactly with an independent confusion matrix") {
    SyntheticConfig cfg;
    cfg.seed = 43;
    cfg.n_samples = 120;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked =
        apply_missing_pattern(data, MissingPattern::from_string("va"));

    // a deliberately noisy deterministic predictor
    const Predictor noisy = [](const MultimodalSample& s, const MissingPattern&,
                               std::uint64_t seed) {
        Rng rng(seed);
        return SamplePrediction{s.label + 1.2 * rng.normal(), 0.25, true};
    };
    const EvalRow row = evaluate(noisy, masked, "noisy", 9, 1);

    long tp = 0, fp = 0, tn = 0, fn = 0, hits7 = 0, nz = 0, hits2 = 0;
    double mse = 0.0;
    for (std::size_t i = 0; i < masked.data.size(); ++i) {
        const auto& s = masked.data.samples[i];
        const SamplePrediction p = noisy(s, masked.patterns[i], derive_seed(9, 0xeea1 + i));
        if (s.label != 0.0) {
            ++nz;
            const bool t = s.label > 0, g = p.yhat > 0;
            hits2 += (t == g);
            tp += (t && g);
            fp += (!t && g);
            tn += (!t && !g);
            fn += (t && !g);
        }
        hits7 += (bucket7(p.yhat) == bucket7(s.label));
        mse += p.recovery_mse;
    }
    const double f1p = tp + fp + fn > 0 ? 2.0 * tp / double(2 * tp + fp + fn) : 0.0;
    const double f1n = tn + fn + fp > 0 ? 2.0 * tn / double(2 * tn + fn + fp) : 0.0;
    CHECK(row.acc2 == double(hits2) / double(nz));
    CHECK(row.f1 == 0.5 * (f1p + f1n));
    CHECK(row.acc7 == double(hits7) / double(masked.data.size()));
    CHECK(row.recovery_mse == doctest::Approx(mse / double(masked.data.size())).epsilon(1e-15));
}

TEST_CASE("evaluate: empty dataset is rejected and threads do not change results") {
    CHECK_THROWS_AS(evaluate([](const MultimodalSample&, const MissingPattern&,
                                std::uint64_t) { return SamplePrediction{}; },
                             MaskedDataset{}, "x", 1, 1),
                    std::invalid_argument);

    SyntheticConfig cfg;
    cfg.seed = 44;
    cfg.n_samples = 40;
    const Dataset data = generate(cfg).train;
    const MaskedDataset masked = apply_missing_rate(data, 0.3, 5);
    const Predictor noisy = [](const MultimodalSample& s, const MissingPattern&,
                               std::uint64_t seed) {
        Rng rng(seed);
        return SamplePrediction{s.label + rng.normal(), 0.1, true};
    };
    const EvalRow a = evaluate(noisy, masked, "c", 2, 1);
    const EvalRow b = evaluate(noisy, masked, "c", 2, 4);
    CHECK(a.acc2 == b.acc2);
    CHECK(a.f1 == b.f1);
    CHECK(a.acc7 == b.acc7);
    CHECK(a.recovery_mse == b.recovery_mse);
}

TEST_CASE("EvalReport: average row equals externally recomputed means") {
    EvalReport report;
    report.config_hash = "deadbeef";
    report.rows.push_back({"a", 1, 10, 0.8, 0.7, 0.4, 0.1});
    report.rows.push_back({"b", 1, 10, 0.6, 0.5, 0.2, 0.3});
    const EvalRow avg = report.average();
    CHECK(avg.acc2 == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(avg.f1 == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(avg.acc7 == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(avg.recovery_mse == doctest::Approx(0.2).epsilon(1e-15));

    std::ostringstream os;
    report.write_csv(os);
    const std::string csv = os.str();
    CHECK(csv.find("# gsdnet-report-v1") == 0);
    CHECK(csv.find("Average") != std::string::npos);
}

TEST_CASE("modality_means pools utterance rows") {
    Dataset ds;
    MultimodalSample s1, s2;
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    Eigen::MatrixXd b(1, 2);
    b << 5.0, 6.0;
    s1.modalities[0] = a;
    s2.modalities[0] = b;
    Eigen::MatrixXd dummy = Eigen::MatrixXd::Ones(2, 1);
    s1.modalities[1] = dummy;
    s1.modalities[2] = dummy;
    Eigen::MatrixXd dummy1 = Eigen::MatrixXd::Ones(1, 1);
    s2.modalities[1] = dummy1;
    s2.modalities[2] = dummy1;
    ds.samples = {s1, s2};
    const auto means = modality_means(ds);
    CHECK(means[0][0] == doctest::Approx(3.0));  // (1+3+5)/3
    CHECK(means[0][1] == doctest::Approx(4.0));
}

TEST_CASE("spectral noising freezes the eigenvector basis bit-for-bit") {
    const auto schedule = sde::DiffusionSchedule::vp();
    const auto graphs = make_windowed_feature_graphs(4, 12, 6, 2, 99);
    Rng rng(101);
    for (const auto& g : graphs) {
        const SpectralDecomposition spec = eigh(g);
        std::vector<double> before(
            spec.eigvecs.data(),
            spec.eigvecs.data() + spec.eigvecs.size());
        for (double t : {0.1, 0.5, 1.0}) {
            const Eigen::VectorXd noised =
                spectral_noised_eigvals(spec, schedule, t, rng.normal_vector(spec.size()));
            const SymmetricMatrix rebuilt = reconstruct_with_frozen_basis(spec, noised);
            // the basis used for reconstruction is exactly the input object
            CHECK(std::memcmp(before.data(), spec.eigvecs.data(),
                              sizeof(double) * before.size()) == 0);
            // invariant subspaces survive a re-decomposition
            CHECK(subspace_alignment(spec, noised) >= 1.0 - 1e-6);
            CHECK(rebuilt.size() == g.size());
        }
    }
}

TEST_CASE("degradation curves: t -> 0 limit and monotone growth") {
    const auto schedule = sde::DiffusionSchedule::vp();
    const auto graphs = make_windowed_feature_graphs(10, 16, 8, 2, 7);
    const std::vector<double> times = {0.001, 0.1, 0.3, 0.5, 0.7, 1.0};
    const auto rows = diffusion_space_comparison(graphs, schedule, times, 13);

    CHECK(rows.size() == graphs.size() * 2 * times.size() * 4);

    // seed-averaged rel_frobenius per (space, t)
    std::map<std::pair<std::string, double>, std::pair<double, int>> acc;
    for (const auto& r : rows)
        if (r.metric == "rel_frobenius") {
            auto& slot = acc[{r.space, r.t}];
            slot.first += r.value;
            slot.second += 1;
        }
    for (const std::string space : {"adjacency", "spectral"}) {
        double prev = -1.0;
        for (double t : times) {
            const auto& [sum, count] = acc[{space, t}];
            const double mean = sum / count;
            CHECK(mean > prev);
            prev = mean;
        }
        // the t -> 0 limit is a vanishing distance
        const double at_eps = acc[{space, 0.001}].first / acc[{space, 0.001}].second;
        const double at_half = acc[{space, 0.5}].first / acc[{space, 0.5}].second;
        CHECK(at_eps < 0.1);
        CHECK(at_eps < 0.05 * at_half);
    }
}

TEST_CASE("adjacency-space noising degrades more than spectral-space at t = 0.5") {
    const auto schedule = sde::DiffusionSchedule::vp();
    const auto graphs = make_windowed_feature_graphs(50, 16, 8, 2, 1);
    const auto rows = diffusion_space_comparison(graphs, schedule, {0.5}, 2);
    double adj = 0.0, spec = 0.0;
    int n_adj = 0, n_spec = 0;
    for (const auto& r : rows) {
        if (r.metric != "rel_frobenius") continue;
        if (r.space == "adjacency") {
            adj += r.value;
            ++n_adj;
        } else {
            spec += r.value;
            ++n_spec;
        }
    }
    CHECK(n_adj == 50);
    CHECK(n_spec == 50);
    CHECK(adj / n_adj > spec / n_spec);

    // the analytic SNR gap: spectral noising perturbs n coordinates instead of
    // n(n+1)/2, so its reported SNR must be strictly larger
    for (const auto& r : rows)
        if (r.metric == "snr" && r.space == "spectral") {
            for (const auto& r2 : rows)
                if (r2.metric == "snr" && r2.space == "adjacency" &&
                    r2.graph_id == r.graph_id)
                    CHECK(r.value > r2.value);
        }
}

TEST_CASE("comparison rows serialize to long-format CSV") {
    const auto schedule = sde::DiffusionSchedule::vp();
    const auto graphs = make_windowed_feature_graphs(2, 8, 4, 2, 3);
    const auto rows = diffusion_space_comparison(graphs, schedule, {0.25}, 4);
    std::ostringstream os;
    write_comparison_csv(os, rows);
    const std::string csv = os.str();
    CHECK(csv.find("# gsdnet-curves-v1\n") == 0);
    CHECK(csv.find("graph_id,space,t,metric,value\n") != std::string::npos);
    CHECK(csv.find("edge_sign_retention") != std::string::npos);

    CHECK_THROWS_AS(diffusion_space_comparison(graphs, schedule, {0.0}, 4),
                    std::invalid_argument);
}
