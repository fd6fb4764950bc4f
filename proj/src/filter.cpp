#include "imudr/filter.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace imudr {

FilterState apply_error(const FilterState& x, const ErrorVec& e, double small_angle) {
    FilterState out = x;
    const TangentSE23 xi = TangentSE23::from_vector(e.segment<9>(err::kAttitude));
    out.pose = compose(exp_se23(xi, small_angle), x.pose);
    out.bias_gyro += e.segment<3>(err::kGyroBias);
    out.bias_accel += e.segment<3>(err::kAccelBias);
    out.car_rotation =
        exp_so3<double>(e.segment<3>(err::kCarRotation), small_angle) * x.car_rotation;
    out.lever_arm += e.segment<3>(err::kLeverArm);
    return out;
}

ErrorVec recover_error(const FilterState& reference, const FilterState& x) {
    ErrorVec e;
    e.segment<9>(err::kAttitude) =
        log_se23(compose(x.pose, inverse(reference.pose))).to_vector();
    e.segment<3>(err::kGyroBias) = x.bias_gyro - reference.bias_gyro;
    e.segment<3>(err::kAccelBias) = x.bias_accel - reference.bias_accel;
    e.segment<3>(err::kCarRotation) =
        log_so3<double>(x.car_rotation * reference.car_rotation.transpose());
    e.segment<3>(err::kLeverArm) = x.lever_arm - reference.lever_arm;
    return e;
}

FilterState propagate_state(const FilterState& x, const ImuSample& u, double dt,
                            const Vec3& gravity, double small_angle) {
    if (!(dt > 0.0)) throw std::invalid_argument("propagate_state: dt must be positive");
    const Vec3 omega = u.omega - x.bias_gyro;
    const Vec3 accel = u.accel - x.bias_accel;
    FilterState out = x;
    out.pose.position = x.pose.position + x.pose.velocity * dt;
    out.pose.velocity = x.pose.velocity + (x.pose.rotation * accel + gravity) * dt;
    out.pose.rotation = x.pose.rotation * exp_so3<double>(omega * dt, small_angle);
    return out;
}

PropagationJacobians propagation_jacobians(const FilterState& x, const ImuSample& u,
                                           double dt, const Vec3& gravity) {
    (void)u;
    const Mat3& r = x.pose.rotation;
    const Mat3 vx_r = skew(x.pose.velocity) * r;
    const Mat3 px_r = skew(x.pose.position) * r;

    PropagationJacobians j;
    j.f = JacobianF::Identity();
    j.f.block<3, 3>(err::kAttitude, err::kGyroBias) = -r * dt;
    j.f.block<3, 3>(err::kVelocity, err::kAttitude) = skew(gravity) * dt;
    j.f.block<3, 3>(err::kVelocity, err::kGyroBias) = -vx_r * dt;
    j.f.block<3, 3>(err::kVelocity, err::kAccelBias) = -r * dt;
    j.f.block<3, 3>(err::kPosition, err::kVelocity) = Mat3::Identity() * dt;
    j.f.block<3, 3>(err::kPosition, err::kGyroBias) = -px_r * dt;

    j.g = JacobianG::Zero();
    j.g.block<3, 3>(err::kAttitude, pnoise::kGyro) = r * dt;
    j.g.block<3, 3>(err::kVelocity, pnoise::kGyro) = vx_r * dt;
    j.g.block<3, 3>(err::kVelocity, pnoise::kAccel) = r * dt;
    j.g.block<3, 3>(err::kPosition, pnoise::kGyro) = px_r * dt;
    j.g.block<12, 12>(err::kGyroBias, pnoise::kGyroBias) =
        Eigen::Matrix<double, 12, 12>::Identity() * dt;
    return j;
}

ErrorCov propagate_covariance(const ErrorCov& p, const JacobianF& f, const JacobianG& g,
                              const ProcessNoise& q) {
    const Eigen::Matrix<double, pnoise::kDim, 1> qd = q.covariance().diagonal();
    const ErrorCov out = f * p * f.transpose() + g * qd.asDiagonal() * g.transpose();
    return 0.5 * (out + out.transpose());
}

Vec2 predict_measurement(const FilterState& x, const ImuSample& u) {
    const Vec3 omega = u.omega - x.bias_gyro;
    const Vec3 v_car = x.car_rotation.transpose() * x.pose.rotation.transpose() *
                           x.pose.velocity +
                       omega.cross(x.lever_arm);
    return v_car.tail<2>();
}

JacobianH measurement_jacobian(const FilterState& x, const ImuSample& u) {
    const Vec3 omega = u.omega - x.bias_gyro;
    const Mat3 rct = x.car_rotation.transpose();
    const Mat3 rt = x.pose.rotation.transpose();

    Eigen::Matrix<double, 3, err::kDim> m = Eigen::Matrix<double, 3, err::kDim>::Zero();
    m.block<3, 3>(0, err::kVelocity) = rct * rt;
    m.block<3, 3>(0, err::kGyroBias) = skew(x.lever_arm);
    m.block<3, 3>(0, err::kCarRotation) = rct * skew<double>(rt * x.pose.velocity);
    m.block<3, 3>(0, err::kLeverArm) = skew(omega);
    return m.bottomRows<2>();
}

UpdateResult update(const FilterState& x, const ErrorCov& p, const Vec2& y_pred,
                    const JacobianH& h, const MeasurementNoise& n, double small_angle) {
    Mat2 s = h * p * h.transpose() + n.matrix();
    const double off = 0.5 * (s(0, 1) + s(1, 0));
    s(0, 1) = s(1, 0) = off;

    // eigenvalues of the symmetric 2x2 innovation covariance
    const double mean = 0.5 * (s(0, 0) + s(1, 1));
    const double radius = std::hypot(0.5 * (s(0, 0) - s(1, 1)), off);
    const double lo = mean - radius;
    const double hi = mean + radius;
    if (!(lo > 0.0) || hi > kMaxInnovationCondition * lo) {
        return {x, p, false};
    }

    const double det = s(0, 0) * s(1, 1) - off * off;
    Mat2 s_inv;
    s_inv << s(1, 1), -off, -off, s(0, 0);
    s_inv /= det;

    const Eigen::Matrix<double, err::kDim, 2> k = p * h.transpose() * s_inv;
    const ErrorVec e = k * (-y_pred);
    ErrorCov p_new = (ErrorCov::Identity() - k * h) * p;
    p_new = 0.5 * (p_new + p_new.transpose());
    return {apply_error(x, e, small_angle), p_new, true};
}

UpdateResult step(const FilterState& x, const ErrorCov& p, const ImuSample& u, double dt,
                  const MeasurementNoise& n, const Vec3& gravity, const ProcessNoise& q,
                  double small_angle) {
    const FilterState x_prop = propagate_state(x, u, dt, gravity, small_angle);
    const PropagationJacobians j = propagation_jacobians(x, u, dt, gravity);
    const ErrorCov p_prop = propagate_covariance(p, j.f, j.g, q);
    const Vec2 y_pred = predict_measurement(x_prop, u);
    const JacobianH h = measurement_jacobian(x_prop, u);
    return update(x_prop, p_prop, y_pred, h, n, small_angle);
}

bool Iekf::step(const ImuSample& u, double dt, const MeasurementNoise& n) {
    const UpdateResult r =
        imudr::step(x_, p_, u, dt, n, opt_.gravity, opt_.process, opt_.theta_small);
    x_ = r.state;
    p_ = r.cov;
    if (!r.applied) skipped_.push_back(u.t);
    if (++steps_ % opt_.maintenance_interval == 0) maintain();
    return r.applied;
}

void Iekf::maintain() {
    x_.pose.rotation = orthonormalize(x_.pose.rotation);
    x_.car_rotation = orthonormalize(x_.car_rotation);
    Eigen::SelfAdjointEigenSolver<ErrorCov> eig(p_);
    const ErrorVec floored = eig.eigenvalues().cwiseMax(0.0);
    p_ = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
    p_ = 0.5 * (p_ + p_.transpose());
}

}  // namespace imudr
