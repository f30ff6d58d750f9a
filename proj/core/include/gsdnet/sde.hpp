#pragma once

#include <Eigen/Core>

#include "gsdnet/errors.hpp"

namespace gsdnet::sde {

// Sampling chains stop here instead of t = 0 to avoid the degenerate kernel.
inline constexpr double kTimeEpsilon = 1e-3;

enum class ScheduleKind { VariancePreserving, VarianceExploding };

// Noise schedule over t in [0, 1].
//   VP: beta(t) = beta_min + t (beta_max - beta_min), f(x,t) = -beta(t) x / 2,
//       g(t) = sqrt(beta(t))
//   VE: sigma(t) = sigma_min (sigma_max/sigma_min)^t, f = 0,
//       g(t) = sigma(t) sqrt(2 log(sigma_max/sigma_min))
class DiffusionSchedule {
public:
    static DiffusionSchedule vp(double beta_min = 0.1, double beta_max = 20.0);
    static DiffusionSchedule ve(double sigma_min = 0.01, double sigma_max = 50.0);

    ScheduleKind kind() const { return kind_; }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }
    double sigma_min() const { return sigma_min_; }
    double sigma_max() const { return sigma_max_; }

    double beta(double t) const;           // VP linear beta
    double beta_integral(double t) const;  // closed-form int_0^t beta
    double sigma(double t) const;          // VE geometric sigma

    // Gaussian perturbation kernel p_t(x_t | x_0) = N(mean_scale(t) x0, std(t)^2 I)
    double mean_scale(double t) const;
    double std_dev(double t) const;
    double snr(double t) const { return mean_scale(t) / std_dev(t); }

    // drift f(x, t) = drift_coeff(t) * x
    double drift_coeff(double t) const;
    Eigen::VectorXd drift(const Eigen::VectorXd& x, double t) const;
    double diffusion_coeff(double t) const;  // g(t)

private:
    DiffusionSchedule() = default;
    ScheduleKind kind_ = ScheduleKind::VariancePreserving;
    double beta_min_ = 0.1, beta_max_ = 20.0;
    double sigma_min_ = 0.01, sigma_max_ = 50.0;
};

// View of the closed-form transition kernel of a schedule.
class PerturbationKernel {
public:
    explicit PerturbationKernel(const DiffusionSchedule& s) : schedule_(&s) {}
    double mean_scale(double t) const { return schedule_->mean_scale(t); }
    double std_dev(double t) const { return schedule_->std_dev(t); }

private:
    const DiffusionSchedule* schedule_;
};

// Discretization plan for a reverse chain over [kTimeEpsilon, 1].
struct SdeStepPlan {
    int num_steps = 200;
    int corrector_steps = 0;
    double corrector_snr = 0.16;

    double dt() const { return 1.0 / num_steps; }
    void validate() const;
};

// x_t = mean_scale(t) x0 + std(t) noise. Callers inject the noise draw.
Eigen::VectorXd forward_sample(const DiffusionSchedule& s, const Eigen::VectorXd& x0,
                               double t, const Eigen::VectorXd& noise);

// Exact score of the perturbation kernel: -(x_t - mean_scale(t) x0) / std(t)^2.
// Requires std(t) > 0 (t > 0).
Eigen::VectorXd analytic_score(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                               const Eigen::VectorXd& x0, double t);

// One Euler-Maruyama step of the reverse-time SDE:
//   x_{t-dt} = x_t - [f(x_t,t) - g(t)^2 score] dt + g(t) sqrt(dt) noise
Eigen::VectorXd reverse_step(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                             double t, double dt, const Eigen::VectorXd& score,
                             const Eigen::VectorXd& noise);

// Langevin corrector: x <- x + eps score + sqrt(2 eps) noise with
// eps = 2 (snr ||noise|| / ||score||)^2, floored when the score norm vanishes.
// snr = 0 is the identity.
Eigen::VectorXd corrector_step(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                               double t, const Eigen::VectorXd& score,
                               const Eigen::VectorXd& noise, double snr);

// Sample from the terminal prior: VP -> N(0, I), VE -> sigma_max * noise.
Eigen::VectorXd prior_sample(const DiffusionSchedule& s, Eigen::Index dim,
                             const Eigen::VectorXd& noise);

}  // namespace gsdnet::sde
