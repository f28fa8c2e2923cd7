#include <doctest.h>

#include "crosswatch/errors.hpp"
#include "crosswatch/kalman.hpp"

#include <cmath>

using namespace crosswatch;
using namespace crosswatch::kalman;

namespace {

// Independent 2-state constant-velocity recursion over plain doubles.  When
// every observed component except the x-center is held constant, the filter's
// noise scale is constant and the (cx, vx) block evolves on its own, so this
// tiny hand-rolled filter must reproduce it exactly.
struct Scalar2 {
    double x0 = 0, x1 = 0;          // position, velocity
    double p00 = 0, p01 = 0, p11 = 0;
    double q_pos, q_vel, r_pos;     // stds, constant because the scale is

    Scalar2(double z, double scale, const NoiseConfig& n)
        : q_pos(n.position_weight * scale),
          q_vel(n.velocity_weight * scale),
          r_pos(n.measurement_weight * scale) {
        x0 = z;
        const double pos = n.init_position_factor * n.position_weight * scale;
        const double vel = n.init_velocity_factor * pos;
        p00 = pos * pos;
        p11 = vel * vel;
    }

    void predict() {
        x0 += x1;
        const double n00 = p00 + p01 + p01 + p11;
        const double n01 = p01 + p11;
        p00 = n00 + q_pos * q_pos;
        p01 = n01;
        p11 = p11 + q_vel * q_vel;
    }

    void update(double z) {
        const double r2 = r_pos * r_pos;
        const double s = p00 + r2;
        const double k0 = p00 / s;
        const double k1 = p01 / s;
        const double innov = z - x0;
        x0 += k0 * innov;
        x1 += k1 * innov;
        // Joseph form, mirroring the engine
        const double a = 1.0 - k0;
        const double n00 = a * a * p00 + k0 * k0 * r2;
        const double n01 = a * (p01 - k1 * p00) + k0 * k1 * r2;
        const double n11 = p11 - 2.0 * k1 * p01 + k1 * k1 * p00 + k1 * k1 * r2;
        p00 = n00;
        p01 = n01;
        p11 = n11;
    }
};

void compare_block(const GaussianState& st, const Scalar2& sc, int pos_idx, int vel_idx) {
    CHECK(std::abs(st.mean[pos_idx] - sc.x0) < 1e-9);
    CHECK(std::abs(st.mean[vel_idx] - sc.x1) < 1e-9);
    CHECK(std::abs(st.cov(pos_idx, pos_idx) - sc.p00) < 1e-9);
    CHECK(std::abs(st.cov(pos_idx, vel_idx) - sc.p01) < 1e-9);
    CHECK(std::abs(st.cov(vel_idx, vel_idx) - sc.p11) < 1e-9);
}

} // namespace

TEST_CASE("initialization from an observation, aspect-height mode") {
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({120.0, 60.0, 2.0, 20.0});
    REQUIRE(st.mean.size() == 8);
    CHECK(st.mean[0] == 120.0);
    CHECK(st.mean[1] == 60.0);
    CHECK(st.mean[2] == 2.0);
    CHECK(st.mean[3] == 20.0);
    for (int i = 4; i < 8; ++i) CHECK(st.mean[i] == 0.0);
    // scale = height = 20: position std 2*(1/20)*20 = 2, velocity std 10x that
    CHECK(st.cov(0, 0) == doctest::Approx(4.0));
    CHECK(st.cov(1, 1) == doctest::Approx(4.0));
    CHECK(st.cov(2, 2) == doctest::Approx(1e-4));
    CHECK(st.cov(3, 3) == doctest::Approx(4.0));
    CHECK(st.cov(4, 4) == doctest::Approx(400.0));
    CHECK(st.cov(5, 5) == doctest::Approx(400.0));
    CHECK(st.cov(6, 6) == doctest::Approx(1e-2));
    CHECK(st.cov(7, 7) == doctest::Approx(400.0));
    // off-diagonals start at zero
    CHECK(st.cov(0, 4) == 0.0);
}

TEST_CASE("initialization from an observation, area-scale mode") {
    Filter f(Mode::Sort, {});
    GaussianState st = f.init_from_observation({120.0, 60.0, 800.0, 2.0});
    REQUIRE(st.mean.size() == 7);
    const double c = std::sqrt(800.0);
    const double pos = 2.0 * (1.0 / 20) * c;
    const double pos_s = 2.0 * (1.0 / 20) * 800.0;
    CHECK(st.cov(0, 0) == doctest::Approx(pos * pos));
    CHECK(st.cov(2, 2) == doctest::Approx(pos_s * pos_s));
    CHECK(st.cov(3, 3) == doctest::Approx(1e-4));
    CHECK(st.cov(4, 4) == doctest::Approx(100.0 * pos * pos));
    CHECK(st.cov(6, 6) == doctest::Approx(100.0 * pos_s * pos_s));
}

TEST_CASE("x-center block matches the scalar recursion, aspect-height mode") {
    const double h0 = 20.0;
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 2.0, h0});
    Scalar2 oracle(100.0, h0, {});
    for (int t = 1; t <= 60; ++t) {
        f.predict(st);
        oracle.predict();
        compare_block(st, oracle, 0, 4);
        const double z = 100.0 + 3.0 * t + 10.0 * std::sin(0.3 * t);
        f.update(st, {z, 50.0, 2.0, h0});
        oracle.update(z);
        compare_block(st, oracle, 0, 4);
        // the constant components must be reproduced exactly
        CHECK(st.mean[3] == h0);
        CHECK(st.mean[7] == 0.0);
    }
}

TEST_CASE("x-center block matches the scalar recursion, area-scale mode") {
    const double s0 = 800.0;
    Filter f(Mode::Sort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, s0, 2.0});
    Scalar2 oracle(100.0, std::sqrt(s0), {});
    for (int t = 1; t <= 60; ++t) {
        f.predict(st);
        oracle.predict();
        compare_block(st, oracle, 0, 4);
        const double z = 100.0 - 2.0 * t + 5.0 * std::cos(0.5 * t);
        f.update(st, {z, 50.0, s0, 2.0});
        oracle.update(z);
        compare_block(st, oracle, 0, 4);
        CHECK(st.mean[2] == s0);
    }
}

TEST_CASE("zero-innovation update is a mean fixpoint") {
    for (Mode mode : {Mode::Sort, Mode::DeepSort}) {
        Filter f(mode, {});
        Eigen::Vector4d obs =
            mode == Mode::Sort ? Eigen::Vector4d{300.0, 200.0, 1200.0, 1.5}
                               : Eigen::Vector4d{300.0, 200.0, 1.5, 28.0};
        GaussianState st = f.init_from_observation(obs);
        f.predict(st);
        const Eigen::VectorXd before = st.mean;
        f.update(st, before.head<4>()); // observe exactly the prediction
        CHECK((st.mean - before).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("update shrinks positional uncertainty") {
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 2.0, 20.0});
    f.predict(st);
    const double before = st.cov(0, 0);
    f.update(st, {101.0, 50.0, 2.0, 20.0});
    CHECK(st.cov(0, 0) < before);
}

TEST_CASE("covariance stays symmetric and positive through long alternation") {
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 2.0, 20.0});
    for (int t = 1; t <= 200; ++t) {
        f.predict(st);
        if (t % 3 != 0) { // skip updates occasionally, like a missed detection
            f.update(st, {100.0 + 2.0 * t, 50.0 + 0.5 * t, 2.0, 20.0});
        }
        CHECK((st.cov - st.cov.transpose()).cwiseAbs().maxCoeff() < 1e-6);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.cov);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("predict rejects a covariance that lost symmetry") {
    Filter f(Mode::Sort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 800.0, 2.0});
    st.cov(0, 1) += 1e-3; // beyond the tolerated drift
    CHECK_THROWS_AS(f.predict(st), ValidationError);
}

TEST_CASE("projection adds measurement noise to the observed block") {
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 2.0, 20.0});
    auto [y, s] = f.project(st);
    CHECK(y[0] == doctest::Approx(100.0));
    // S = H P H^T + R with R_00 = ((1/20)*20)^2 = 1
    CHECK(s(0, 0) == doctest::Approx(st.cov(0, 0) + 1.0));
    CHECK(s(2, 2) == doctest::Approx(st.cov(2, 2) + 1e-2));
}

TEST_CASE("box round trip through state construction") {
    geometry::BBox b{100.0, 50.0, 40.0, 20.0};
    for (Mode mode : {Mode::Sort, Mode::DeepSort}) {
        Filter f(mode, {});
        GaussianState st = f.init_from_observation(f.observation_from_box(b));
        geometry::BBox back = f.box_from_state(st);
        CHECK(back.x == doctest::Approx(b.x));
        CHECK(back.y == doctest::Approx(b.y));
        CHECK(back.w == doctest::Approx(b.w));
        CHECK(back.h == doctest::Approx(b.h));
    }
}

TEST_CASE("state validity checks sign of the size components") {
    Filter f(Mode::Sort, {});
    GaussianState st = f.init_from_observation({100.0, 50.0, 800.0, 2.0});
    CHECK(f.state_valid(st));
    st.mean[2] = -1.0;
    CHECK_FALSE(f.state_valid(st));
    st.mean[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(f.state_valid(st));
}

TEST_CASE("noise configuration validation") {
    NoiseConfig bad;
    bad.position_weight = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = {};
    bad.shape_measurement_std = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_NOTHROW(NoiseConfig{}.validate());
}

TEST_CASE("noise scale never collapses for tiny boxes") {
    // A sub-pixel box must not zero out the noise; the scale floors at 1.
    Filter f(Mode::DeepSort, {});
    GaussianState st = f.init_from_observation({5.0, 5.0, 1.0, 0.2});
    // floor -> position std = 2 * (1/20) * 1 = 0.1
    CHECK(st.cov(0, 0) == doctest::Approx(0.01));
}
