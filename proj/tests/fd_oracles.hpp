// Finite-difference oracles for the filter Jacobians, shared by the unit and
// acceptance suites. Independent of the analytic Jacobian implementations.
#pragma once

#include "imudr/filter.hpp"

namespace fd_oracles {

using namespace imudr;

// Transition Jacobian of the right-invariant error dynamics by central
// differences: perturb, propagate, recover the error.
inline JacobianF fd_transition(const FilterState& x, const ImuSample& u, double dt,
                               const Vec3& g, double eps) {
    const FilterState base = propagate_state(x, u, dt, g);
    JacobianF f;
    for (int i = 0; i < err::kDim; ++i) {
        ErrorVec e = ErrorVec::Zero();
        e[i] = eps;
        const FilterState plus = propagate_state(apply_error(x, e), u, dt, g);
        e[i] = -eps;
        const FilterState minus = propagate_state(apply_error(x, e), u, dt, g);
        f.col(i) = (recover_error(base, plus) - recover_error(base, minus)) / (2.0 * eps);
    }
    return f;
}

// Noise-injected propagation for the G oracle. Noise enters the bias-corrected
// rates additively and the random walks as rate-times-dt increments (the
// convention under which every row of G scales with dt); the car-rotation walk
// is injected in the error frame.
inline FilterState propagate_with_noise(const FilterState& x, const ImuSample& u, double dt,
                                        const Vec3& g, const Eigen::Matrix<double, 18, 1>& w) {
    ImuSample un = u;
    un.omega += w.segment<3>(pnoise::kGyro);
    un.accel += w.segment<3>(pnoise::kAccel);
    FilterState out = propagate_state(x, un, dt, g);
    out.bias_gyro += w.segment<3>(pnoise::kGyroBias) * dt;
    out.bias_accel += w.segment<3>(pnoise::kAccelBias) * dt;
    out.car_rotation =
        exp_so3<double>(w.segment<3>(pnoise::kCarRotation) * dt) * out.car_rotation;
    out.lever_arm += w.segment<3>(pnoise::kLeverArm) * dt;
    return out;
}

inline JacobianG fd_noise_jacobian(const FilterState& x, const ImuSample& u, double dt,
                                   const Vec3& g, double eps) {
    const FilterState base = propagate_state(x, u, dt, g);
    JacobianG jac;
    for (int i = 0; i < pnoise::kDim; ++i) {
        Eigen::Matrix<double, 18, 1> w = Eigen::Matrix<double, 18, 1>::Zero();
        w[i] = eps;
        const FilterState plus = propagate_with_noise(x, u, dt, g, w);
        w[i] = -eps;
        const FilterState minus = propagate_with_noise(x, u, dt, g, w);
        jac.col(i) = (recover_error(base, plus) - recover_error(base, minus)) / (2.0 * eps);
    }
    return jac;
}

inline JacobianH fd_measurement_jacobian(const FilterState& x, const ImuSample& u, double eps) {
    JacobianH h;
    for (int i = 0; i < err::kDim; ++i) {
        ErrorVec e = ErrorVec::Zero();
        e[i] = eps;
        const Vec2 plus = predict_measurement(apply_error(x, e), u);
        e[i] = -eps;
        const Vec2 minus = predict_measurement(apply_error(x, e), u);
        h.col(i) = (plus - minus) / (2.0 * eps);
    }
    return h;
}

}  // namespace fd_oracles
