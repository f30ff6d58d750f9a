#include "gsdnet/sde.hpp"

#include <cmath>
#include <sstream>

namespace gsdnet::sde {

namespace {
void check_time_range(double t, double lo, double hi, const char* who) {
    if (!(t >= lo && t <= hi)) {
        std::ostringstream os;
        os << who << ": t = " << t << " outside [" << lo << ", " << hi << "]";
        throw std::invalid_argument(os.str());
    }
}
}  // namespace

DiffusionSchedule DiffusionSchedule::vp(double beta_min, double beta_max) {
    if (!(beta_min > 0.0 && beta_max > 0.0 && beta_min < beta_max))
        throw std::invalid_argument("DiffusionSchedule::vp: need 0 < beta_min < beta_max");
    DiffusionSchedule s;
    s.kind_ = ScheduleKind::VariancePreserving;
    s.beta_min_ = beta_min;
    s.beta_max_ = beta_max;
    return s;
}

DiffusionSchedule DiffusionSchedule::ve(double sigma_min, double sigma_max) {
    if (!(sigma_min > 0.0 && sigma_max > 0.0 && sigma_min < sigma_max))
        throw std::invalid_argument("DiffusionSchedule::ve: need 0 < sigma_min < sigma_max");
    DiffusionSchedule s;
    s.kind_ = ScheduleKind::VarianceExploding;
    s.sigma_min_ = sigma_min;
    s.sigma_max_ = sigma_max;
    return s;
}

double DiffusionSchedule::beta(double t) const {
    return beta_min_ + t * (beta_max_ - beta_min_);
}

double DiffusionSchedule::beta_integral(double t) const {
    return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
}

double DiffusionSchedule::sigma(double t) const {
    return sigma_min_ * std::pow(sigma_max_ / sigma_min_, t);
}

double DiffusionSchedule::mean_scale(double t) const {
    if (kind_ == ScheduleKind::VariancePreserving)
        return std::exp(-0.5 * beta_integral(t));
    return 1.0;
}

double DiffusionSchedule::std_dev(double t) const {
    if (kind_ == ScheduleKind::VariancePreserving) {
        // sqrt(1 - exp(-B(t))) computed stably near t = 0
        return std::sqrt(-std::expm1(-beta_integral(t)));
    }
    const double st = sigma(t);
    return std::sqrt(std::max(st * st - sigma_min_ * sigma_min_, 0.0));
}

double DiffusionSchedule::drift_coeff(double t) const {
    if (kind_ == ScheduleKind::VariancePreserving) return -0.5 * beta(t);
    return 0.0;
}

Eigen::VectorXd DiffusionSchedule::drift(const Eigen::VectorXd& x, double t) const {
    return drift_coeff(t) * x;
}

double DiffusionSchedule::diffusion_coeff(double t) const {
    if (kind_ == ScheduleKind::VariancePreserving) return std::sqrt(beta(t));
    return sigma(t) * std::sqrt(2.0 * std::log(sigma_max_ / sigma_min_));
}

void SdeStepPlan::validate() const {
    if (num_steps < 1) throw std::invalid_argument("SdeStepPlan: num_steps must be >= 1");
    if (corrector_steps < 0)
        throw std::invalid_argument("SdeStepPlan: corrector_steps must be >= 0");
    if (!(corrector_snr > 0.0))
        throw std::invalid_argument("SdeStepPlan: corrector_snr must be positive");
}

Eigen::VectorXd forward_sample(const DiffusionSchedule& s, const Eigen::VectorXd& x0,
                               double t, const Eigen::VectorXd& noise) {
    check_time_range(t, 0.0, 1.0, "forward_sample");
    if (x0.size() != noise.size())
        throw std::invalid_argument("forward_sample: x0/noise size mismatch");
    return s.mean_scale(t) * x0 + s.std_dev(t) * noise;
}

Eigen::VectorXd analytic_score(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                               const Eigen::VectorXd& x0, double t) {
    check_time_range(t, 0.0, 1.0, "analytic_score");
    if (xt.size() != x0.size())
        throw std::invalid_argument("analytic_score: xt/x0 size mismatch");
    const double sd = s.std_dev(t);
    if (!(sd > 0.0))
        throw numeric_error("analytic_score: degenerate kernel, std(t) = 0 at t = " +
                            std::to_string(t));
    return -(xt - s.mean_scale(t) * x0) / (sd * sd);
}

Eigen::VectorXd reverse_step(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                             double t, double dt, const Eigen::VectorXd& score,
                             const Eigen::VectorXd& noise) {
    if (!(t > 0.0 && t <= 1.0))
        throw std::invalid_argument("reverse_step: t must be in (0, 1]");
    if (!(dt > 0.0)) throw std::invalid_argument("reverse_step: dt must be positive");
    if (dt > t + 1e-12) throw std::invalid_argument("reverse_step: dt must not exceed t");
    if (xt.size() != score.size() || xt.size() != noise.size())
        throw std::invalid_argument("reverse_step: size mismatch");
    const double g = s.diffusion_coeff(t);
    return xt - (s.drift(xt, t) - g * g * score) * dt + g * std::sqrt(dt) * noise;
}

Eigen::VectorXd corrector_step(const DiffusionSchedule& s, const Eigen::VectorXd& xt,
                               double t, const Eigen::VectorXd& score,
                               const Eigen::VectorXd& noise, double snr) {
    (void)s;
    if (!(t > 0.0 && t <= 1.0))
        throw std::invalid_argument("corrector_step: t must be in (0, 1]");
    if (xt.size() != score.size() || xt.size() != noise.size())
        throw std::invalid_argument("corrector_step: size mismatch");
    if (snr < 0.0) throw std::invalid_argument("corrector_step: snr must be >= 0");
    if (snr == 0.0) return xt;

    constexpr double kEpsFloor = 1e-6;
    const double score_norm = score.norm();
    const double noise_norm = noise.norm();
    double eps;
    if (score_norm <= 1e-300) {
        eps = kEpsFloor;
    } else {
        const double ratio = snr * noise_norm / score_norm;
        eps = 2.0 * ratio * ratio;
        if (!(eps > 0.0)) eps = kEpsFloor;
    }
    return xt + eps * score + std::sqrt(2.0 * eps) * noise;
}

Eigen::VectorXd prior_sample(const DiffusionSchedule& s, Eigen::Index dim,
                             const Eigen::VectorXd& noise) {
    if (dim < 1) throw std::invalid_argument("prior_sample: dim must be >= 1");
    if (noise.size() != dim)
        throw std::invalid_argument("prior_sample: noise size must equal dim");
    if (s.kind() == ScheduleKind::VariancePreserving) return noise;
    return s.sigma_max() * noise;
}

}  // namespace gsdnet::sde
