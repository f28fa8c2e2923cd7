#include "crosswatch/kalman.hpp"

#include <cmath>

#include "crosswatch/errors.hpp"

namespace crosswatch::kalman {

namespace {
constexpr double kSymmetryTol = 1e-6;
constexpr double kMinScale = 1.0; // floor for the size-dependent noise scale

void symmetrize(Eigen::MatrixXd& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

void check_symmetry(const Eigen::MatrixXd& m) {
    const double drift = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (drift > kSymmetryTol) {
        throw ValidationError("covariance lost symmetry (drift " +
                              std::to_string(drift) + "); check noise configuration");
    }
}
} // namespace

void NoiseConfig::validate() const {
    const double vals[] = {position_weight, velocity_weight, measurement_weight,
                           init_position_factor, init_velocity_factor,
                           shape_std, shape_velocity_std, shape_measurement_std};
    for (double v : vals) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError("noise configuration entries must be positive and finite");
        }
    }
}

Filter::Filter(Mode mode, NoiseConfig noise) : mode_(mode), noise_(noise) {
    noise_.validate();
    const int n = state_dim(mode_);
    motion_ = Eigen::MatrixXd::Identity(n, n);
    if (mode_ == Mode::Sort) {
        // velocities: vx -> cx, vy -> cy, vs -> s; aspect ratio r is static
        motion_(0, 4) = 1.0;
        motion_(1, 5) = 1.0;
        motion_(2, 6) = 1.0;
    } else {
        for (int i = 0; i < kObsDim; ++i) motion_(i, i + kObsDim) = 1.0;
    }
    observe_ = Eigen::MatrixXd::Zero(kObsDim, n);
    for (int i = 0; i < kObsDim; ++i) observe_(i, i) = 1.0;
}

double Filter::scale_of(const Eigen::VectorXd& mean) const {
    // sqrt(area) in Sort mode, height in DeepSort mode
    const double raw = mode_ == Mode::Sort ? std::sqrt(std::abs(mean[2])) : std::abs(mean[3]);
    return std::max(raw, kMinScale);
}

Eigen::VectorXd Filter::process_std(const Eigen::VectorXd& mean) const {
    const int n = state_dim(mode_);
    const double c = scale_of(mean);
    Eigen::VectorXd std(n);
    if (mode_ == Mode::Sort) {
        const double s = std::max(std::abs(mean[2]), kMinScale);
        std << noise_.position_weight * c, noise_.position_weight * c,
            noise_.position_weight * s, noise_.shape_std,
            noise_.velocity_weight * c, noise_.velocity_weight * c,
            noise_.velocity_weight * s;
    } else {
        std << noise_.position_weight * c, noise_.position_weight * c,
            noise_.shape_std, noise_.position_weight * c,
            noise_.velocity_weight * c, noise_.velocity_weight * c,
            noise_.shape_velocity_std, noise_.velocity_weight * c;
    }
    return std;
}

Eigen::Vector4d Filter::measurement_std(const Eigen::VectorXd& mean) const {
    const double c = scale_of(mean);
    if (mode_ == Mode::Sort) {
        const double s = std::max(std::abs(mean[2]), kMinScale);
        return {noise_.measurement_weight * c, noise_.measurement_weight * c,
                noise_.measurement_weight * s, noise_.shape_measurement_std};
    }
    return {noise_.measurement_weight * c, noise_.measurement_weight * c,
            noise_.shape_measurement_std, noise_.measurement_weight * c};
}

GaussianState Filter::init_from_observation(const Eigen::Vector4d& obs) const {
    const int n = state_dim(mode_);
    GaussianState st;
    st.mean = Eigen::VectorXd::Zero(n);
    st.mean.head<kObsDim>() = obs;

    const double c = scale_of(st.mean);
    Eigen::VectorXd std(n);
    const double pos = noise_.init_position_factor * noise_.position_weight * c;
    const double vel = noise_.init_velocity_factor * pos;
    if (mode_ == Mode::Sort) {
        const double s = std::max(std::abs(obs[2]), kMinScale);
        const double pos_s = noise_.init_position_factor * noise_.position_weight * s;
        std << pos, pos, pos_s, noise_.shape_std,
            vel, vel, noise_.init_velocity_factor * pos_s;
    } else {
        std << pos, pos, noise_.shape_std, pos,
            vel, vel, noise_.init_velocity_factor * noise_.shape_std, vel;
    }
    st.cov = std.array().square().matrix().asDiagonal();
    return st;
}

void Filter::predict(GaussianState& state) const {
    check_symmetry(state.cov);
    const Eigen::VectorXd q = process_std(state.mean);
    state.mean = motion_ * state.mean;
    state.cov = motion_ * state.cov * motion_.transpose();
    state.cov += Eigen::MatrixXd(q.array().square().matrix().asDiagonal());
    symmetrize(state.cov);
}

std::pair<Eigen::Vector4d, Eigen::Matrix4d> Filter::project(const GaussianState& state) const {
    const Eigen::Vector4d y = observe_ * state.mean;
    const Eigen::Vector4d r = measurement_std(state.mean);
    Eigen::Matrix4d s = observe_ * state.cov * observe_.transpose();
    s += Eigen::Matrix4d(r.array().square().matrix().asDiagonal());
    s = 0.5 * (s + s.transpose()).eval();
    return {y, s};
}

void Filter::update(GaussianState& state, const Eigen::Vector4d& obs) const {
    const Eigen::Vector4d y = observe_ * state.mean;
    const Eigen::Vector4d r = measurement_std(state.mean);
    const Eigen::Matrix4d rm = r.array().square().matrix().asDiagonal();
    Eigen::Matrix4d s = observe_ * state.cov * observe_.transpose() + rm;
    s = 0.5 * (s + s.transpose()).eval();

    const Eigen::LDLT<Eigen::Matrix4d> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw ValidationError("singular innovation covariance; noise configuration is degenerate");
    }
    // K = P H^T S^-1, computed via the factorization
    const Eigen::MatrixXd pht = state.cov * observe_.transpose();
    const Eigen::MatrixXd gain = ldlt.solve(pht.transpose()).transpose();

    state.mean += gain * (obs - y);

    // Joseph form with the same R that shaped the gain
    const int n = state_dim(mode_);
    const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(n, n) - gain * observe_;
    state.cov = ikh * state.cov * ikh.transpose() + gain * rm * gain.transpose();
    symmetrize(state.cov);
}

Eigen::Vector4d Filter::observation_from_box(const geometry::BBox& b) const {
    return mode_ == Mode::Sort ? geometry::to_sort_obs(b) : geometry::to_deepsort_obs(b);
}

geometry::BBox Filter::box_from_state(const GaussianState& state) const {
    const Eigen::Vector4d z = state.mean.head<kObsDim>();
    return mode_ == Mode::Sort ? geometry::from_sort_obs(z) : geometry::from_deepsort_obs(z);
}

bool Filter::state_valid(const GaussianState& state) const {
    // components 2 and 3 are (area, aspect) or (aspect, height); either way
    // both must stay positive for the state to describe a real box
    return state.mean.allFinite() && state.mean[2] > 0.0 && state.mean[3] > 0.0;
}

} // namespace crosswatch::kalman
