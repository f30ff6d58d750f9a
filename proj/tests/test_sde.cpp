#include <doctest.h>

#include <cmath>

#include "gsdnet/rng.hpp"
#include "gsdnet/sde.hpp"

#include "oracles.hpp"

using namespace gsdnet;
using sde::DiffusionSchedule;

namespace {
Eigen::VectorXd scalar(double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return v;
}
}  // namespace

TEST_CASE("schedule construction validates parameters") {
    CHECK_THROWS_AS(DiffusionSchedule::vp(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionSchedule::vp(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionSchedule::ve(0.5, 0.5), std::invalid_argument);
}

TEST_CASE("perturbation kernel endpoints and monotonicity") {
    for (const auto& s : {DiffusionSchedule::vp(), DiffusionSchedule::ve(0.01, 50.0)}) {
        const sde::PerturbationKernel kernel(s);
        CHECK(std::abs(kernel.mean_scale(0.0) - 1.0) <= 1e-12);
        CHECK(std::abs(kernel.std_dev(0.0)) <= 1e-12);
        double prev = kernel.std_dev(0.0);
        for (int k = 1; k <= 50; ++k) {
            const double sd = kernel.std_dev(k / 50.0);
            CHECK(sd > prev);
            prev = sd;
        }
        CHECK(std::isfinite(s.drift(scalar(1.5), 0.0)[0]));
        CHECK(std::isfinite(s.diffusion_coeff(0.0)));
    }

    const auto vp = DiffusionSchedule::vp(0.1, 20.0);
    // closed-form cross-check of the linear-beta integral
    const double t = 0.37;
    const double bint = 0.1 * t + 0.5 * (20.0 - 0.1) * t * t;
    CHECK(vp.mean_scale(t) == doctest::Approx(std::exp(-0.5 * bint)).epsilon(1e-14));
    CHECK(DiffusionSchedule::ve(0.01, 50.0).mean_scale(0.9) == 1.0);
}

TEST_CASE("SNR is strictly decreasing in t") {
    for (const auto& s : {DiffusionSchedule::vp(), DiffusionSchedule::ve(0.01, 50.0)}) {
        double prev = s.snr(1e-3);
        for (int k = 1; k <= 100; ++k) {
            const double t = 1e-3 + (1.0 - 1e-3) * k / 100.0;
            const double snr = s.snr(t);
            CHECK(snr < prev);
            prev = snr;
        }
    }
}

TEST_CASE("SdeStepPlan invariants") {
    sde::SdeStepPlan plan;
    plan.num_steps = 200;
    plan.validate();
    CHECK(std::abs(plan.dt() * plan.num_steps - 1.0) <= 1e-12);
    plan.num_steps = 0;
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}

TEST_CASE("forward_sample endpoints") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(5);
    const Eigen::VectorXd x0 = rng.normal_vector(7);
    const Eigen::VectorXd noise = rng.normal_vector(7);

    CHECK((sde::forward_sample(s, x0, 0.0, noise) - x0).norm() == 0.0);

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(7);
    const Eigen::VectorXd out = sde::forward_sample(s, zero, 0.6, noise);
    CHECK((out - s.std_dev(0.6) * noise).norm() == 0.0);

    CHECK_THROWS_AS(sde::forward_sample(s, x0, 1.5, noise), std::invalid_argument);
    CHECK_THROWS_AS(sde::forward_sample(s, x0, -0.1, noise), std::invalid_argument);
}

TEST_CASE("forward_sample Monte-Carlo statistics match the closed form") {
    const auto s = DiffusionSchedule::vp(0.1, 20.0);
    Rng rng(99);
    const double x0 = 1.3;
    const int n = 100000;
    for (double t : {0.1, 0.5, 0.9}) {
        std::vector<double> draws;
        draws.reserve(n);
        for (int i = 0; i < n; ++i)
            draws.push_back(sde::forward_sample(s, scalar(x0), t, scalar(rng.normal()))[0]);
        const double want_mean = s.mean_scale(t) * x0;
        const double want_std = s.std_dev(t);
        const double se_mean = want_std / std::sqrt(static_cast<double>(n));
        const double se_std = want_std / std::sqrt(2.0 * n);
        CHECK(std::abs(oracles::mean_of(draws) - want_mean) <= 3.0 * se_mean);
        CHECK(std::abs(oracles::std_of(draws) - want_std) <= 3.0 * se_std);
    }
}

TEST_CASE("analytic_score is zero at the kernel mean and fails at t=0") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(3);
    const Eigen::VectorXd x0 = rng.normal_vector(4);
    const double t = 0.4;
    const Eigen::VectorXd xt = s.mean_scale(t) * x0;
    CHECK(sde::analytic_score(s, xt, x0, t).norm() == 0.0);
    CHECK_THROWS_AS(sde::analytic_score(s, x0, x0, 0.0), numeric_error);
}

TEST_CASE("analytic_score matches finite differences of the log kernel") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = rng.uniform(0.05, 1.0);
        const double x0 = rng.normal();
        const double xt = rng.normal();
        const double m = s.mean_scale(t);
        const double sd = s.std_dev(t);
        auto log_kernel = [&](double x) {
            const double z = (x - m * x0) / sd;
            return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
        };
        const double fd = oracles::central_diff(log_kernel, xt, 1e-5);
        const double an = sde::analytic_score(s, scalar(xt), scalar(x0), t)[0];
        CHECK(std::abs(an - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("analytic_score scales as 1/std^2") {
    // two VE schedules whose std at t differ by a factor of 2
    const double t = 0.5;
    const auto s1 = DiffusionSchedule::ve(0.01, 1.0);
    const double target = 2.0 * s1.std_dev(t);
    // std(t)^2 = sigma_min^2 ((smax/smin)^{2t} - 1); scale sigma_min and max together
    const auto s2 = DiffusionSchedule::ve(0.02, 2.0);
    CHECK(s2.std_dev(t) == doctest::Approx(target).epsilon(1e-12));

    const double disp = 0.8;  // fixed displacement from the mean (x0 = 0)
    const double sc1 = sde::analytic_score(s1, scalar(disp), scalar(0.0), t)[0];
    const double sc2 = sde::analytic_score(s2, scalar(disp), scalar(0.0), t)[0];
    CHECK(sc1 / sc2 == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("reverse_step: deterministic limit and shapes") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(8);
    const double t = 0.7, dt = 0.01;
    for (Eigen::Index len : {1, 7, 64}) {
        const Eigen::VectorXd xt = rng.normal_vector(len);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(len);
        // zero score and zero noise leave only the drift term
        const Eigen::VectorXd out = sde::reverse_step(s, xt, t, dt, zero, zero);
        CHECK((out - (xt - s.drift(xt, t) * dt)).norm() <= 1e-15);
        CHECK(out.size() == len);
    }
    CHECK_THROWS_AS(
        sde::reverse_step(s, scalar(1.0), t, 0.0, scalar(0.0), scalar(0.0)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sde::reverse_step(s, scalar(1.0), 0.01, 0.5, scalar(0.0), scalar(0.0)),
        std::invalid_argument);
}

TEST_CASE("reverse chain with the exact score recovers a 1-D Gaussian") {
    // data ~ N(mu, s^2); the VP kernel convolved with the data Gaussian gives
    // p_t = N(m(t) mu, m(t)^2 s^2 + std(t)^2), whose score is closed-form
    const auto sch = DiffusionSchedule::vp(0.1, 20.0);
    const double mu = 2.0, sigma = 0.5;
    const int n_chains = 10000, n_steps = 1000;
    const double t_end = sde::kTimeEpsilon;
    const double dt = (1.0 - t_end) / n_steps;

    Rng rng(2024);
    std::vector<double> finals;
    finals.reserve(n_chains);
    for (int c = 0; c < n_chains; ++c) {
        double x = sde::prior_sample(sch, 1, scalar(rng.normal()))[0];
        for (int k = 0; k < n_steps; ++k) {
            const double t = 1.0 - k * dt;
            const double m = sch.mean_scale(t);
            const double var = m * m * sigma * sigma + sch.std_dev(t) * sch.std_dev(t);
            const double score = -(x - m * mu) / var;
            x = sde::reverse_step(sch, scalar(x), t, dt, scalar(score),
                                  scalar(rng.normal()))[0];
        }
        finals.push_back(x);
    }
    CHECK(std::abs(oracles::mean_of(finals) - mu) <= 0.05);
    CHECK(std::abs(oracles::std_of(finals) - sigma) <= 0.05);
}

TEST_CASE("corrector_step: trivial cases") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(4);
    const Eigen::VectorXd xt = rng.normal_vector(5);
    const Eigen::VectorXd noise = rng.normal_vector(5);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);

    CHECK((sde::corrector_step(s, xt, 0.5, noise, noise, 0.0) - xt).norm() == 0.0);

    // zero score: floored step size, pure diffusion
    const Eigen::VectorXd out = sde::corrector_step(s, xt, 0.5, zero, noise, 0.16);
    const double eps_floor = 1e-6;
    CHECK((out - (xt + std::sqrt(2.0 * eps_floor) * noise)).norm() <= 1e-15);
}

TEST_CASE("corrector_step: exact score keeps the variance stationary") {
    // one big product state of iid N(0, std(t)^2) coordinates
    const auto s = DiffusionSchedule::vp();
    const double t = 0.5;
    const double sd = s.std_dev(t);
    const int dim = 10000;
    Rng rng(31);
    Eigen::VectorXd x = sd * rng.normal_vector(dim);
    for (int k = 0; k < 200; ++k) {
        const Eigen::VectorXd score = -x / (sd * sd);
        x = sde::corrector_step(s, x, t, score, rng.normal_vector(dim), 0.05);
    }
    const double var = x.squaredNorm() / dim;
    CHECK(std::abs(var - sd * sd) <= 0.05 * sd * sd);
}

TEST_CASE("prior_sample") {
    Rng rng(6);
    const Eigen::VectorXd noise = rng.normal_vector(9);
    CHECK((sde::prior_sample(DiffusionSchedule::vp(), 9, noise) - noise).norm() == 0.0);
    CHECK((sde::prior_sample(DiffusionSchedule::ve(0.01, 10.0), 9, noise) - 10.0 * noise)
              .norm() == 0.0);

    // sampled variance against the closed form
    std::vector<double> draws;
    const int n = 100000;
    draws.reserve(n);
    for (int i = 0; i < n; ++i)
        draws.push_back(sde::prior_sample(DiffusionSchedule::vp(), 1, scalar(rng.normal()))[0]);
    const double se_std = 1.0 / std::sqrt(2.0 * n);
    CHECK(std::abs(oracles::std_of(draws) - 1.0) <= 3.0 * se_std);
}

TEST_CASE("kernel consistency: empirical variance of forward_sample") {
    const auto s = DiffusionSchedule::vp();
    Rng rng(77);
    const int n = 100000;
    for (double t : {0.1, 0.5, 0.9}) {
        std::vector<double> draws;
        draws.reserve(n);
        for (int i = 0; i < n; ++i)
            draws.push_back(sde::forward_sample(s, scalar(0.4), t, scalar(rng.normal()))[0]);
        const double sd = s.std_dev(t);
        CHECK(std::abs(oracles::std_of(draws) - sd) <= 3.0 * sd / std::sqrt(2.0 * n));
    }
}
