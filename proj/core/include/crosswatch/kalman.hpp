#pragma once

#include <Eigen/Dense>
#include <utility>

#include "crosswatch/geometry.hpp"

namespace crosswatch::kalman {

// Which box parameterization the filter tracks.
//
// Sort:     state (cx, cy, s, r, vx, vy, vs), 7-dim. s is box area, r the
//           aspect ratio; r carries no velocity term.
// DeepSort: state (cx, cy, g, h, vx, vy, vg, vh), 8-dim. g is the aspect
//           ratio w/h, h the box height.
//
// Both use a constant-velocity model with unit frame interval.
enum class Mode { Sort, DeepSort };

inline int state_dim(Mode m) { return m == Mode::Sort ? 7 : 8; }
inline constexpr int kObsDim = 4;

// Diagonal noise scaled by the observed object size, so that large objects
// tolerate proportionally more pixel slack. Position-like components scale
// with the box scale (sqrt(area) in Sort mode, height in DeepSort mode);
// dimensionless shape components use the fixed std values below.
struct NoiseConfig {
    double position_weight = 1.0 / 20;     // process std per unit of box scale
    double velocity_weight = 1.0 / 160;    // process std for velocity components
    double measurement_weight = 1.0 / 20;  // observation std per unit of box scale
    double init_position_factor = 2.0;     // initial position std multiplier
    double init_velocity_factor = 10.0;    // initial velocity std, as a multiple
                                           // of the matching position std
    double shape_std = 1e-2;               // aspect-ratio components
    double shape_velocity_std = 1e-5;
    double shape_measurement_std = 1e-1;

    void validate() const; // throws ValidationError on non-positive entries
};

struct GaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

class Filter {
public:
    Filter(Mode mode, NoiseConfig noise = {});

    Mode mode() const { return mode_; }

    // Start a state from one observation: positions copied, velocities zero,
    // velocity uncertainty deliberately large because the initial motion is
    // unknown.
    GaussianState init_from_observation(const Eigen::Vector4d& obs) const;

    // One constant-velocity step. Keeps the covariance symmetric; throws if
    // symmetry has drifted beyond tolerance, which indicates a misconfigured
    // noise setup rather than normal numerical jitter.
    void predict(GaussianState& state) const;

    // Project the state into observation space: (measurement mean, innovation
    // covariance S including measurement noise).
    std::pair<Eigen::Vector4d, Eigen::Matrix4d> project(const GaussianState& state) const;

    // Measurement update, Joseph-form covariance for PSD safety. Throws
    // ValidationError when the innovation covariance is not invertible.
    void update(GaussianState& state, const Eigen::Vector4d& obs) const;

    // Box conversion helpers for whichever mode is active.
    Eigen::Vector4d observation_from_box(const geometry::BBox& b) const;
    geometry::BBox box_from_state(const GaussianState& state) const;

    // A state can drift into nonsense while coasting (non-positive area or
    // height); the tracker drops such tracks.
    bool state_valid(const GaussianState& state) const;

private:
    Eigen::VectorXd process_std(const Eigen::VectorXd& mean) const;
    Eigen::Vector4d measurement_std(const Eigen::VectorXd& mean) const;
    double scale_of(const Eigen::VectorXd& mean) const;

    Mode mode_;
    NoiseConfig noise_;
    Eigen::MatrixXd motion_;   // F
    Eigen::MatrixXd observe_;  // H
};

} // namespace crosswatch::kalman
