// Lie-group primitives for SO(3) and SE_2(3): skew operator, exponential and
// logarithm maps, group composition. All evaluations are small-angle safe.
#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>

namespace imudr {

template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Mat5T = Eigen::Matrix<S, 5, 5>;

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

// Below this rotation angle the trigonometric coefficients of the exponential
// maps switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-7;

template <typename S>
Mat3T<S> skew(const Vec3T<S>& v) {
    Mat3T<S> m;
    m << S(0), -v.z(), v.y(),
         v.z(), S(0), -v.x(),
        -v.y(), v.x(), S(0);
    return m;
}

template <typename S>
Vec3T<S> vee(const Mat3T<S>& m) {
    return Vec3T<S>(m(2, 1), m(0, 2), m(1, 0));
}

namespace detail {

// Coefficients of exp(skew(xi)) = I + c1*S + c2*S^2 and of the left Jacobian
// J = I + c2*S + c3*S^2, with theta = |xi|:
//   c1 = sin(theta)/theta
//   c2 = (1 - cos(theta))/theta^2
//   c3 = (theta - sin(theta))/theta^3
template <typename S>
struct RotCoeffs {
    S c1, c2, c3;
};

template <typename S>
RotCoeffs<S> rot_coeffs(S theta, S small_angle) {
    const S t2 = theta * theta;
    if (theta < small_angle) {
        return {S(1) - t2 / S(6), S(0.5) - t2 / S(24), S(1) / S(6) - t2 / S(120)};
    }
    const S s = std::sin(theta);
    const S half = std::sin(theta / S(2));
    // 1 - cos as 2 sin^2(theta/2): no cancellation near the branch switch
    return {s / theta, S(2) * half * half / t2, (theta - s) / (t2 * theta)};
}

}  // namespace detail

template <typename S>
Mat3T<S> exp_so3(const Vec3T<S>& xi, S small_angle = S(kSmallAngle)) {
    const auto co = detail::rot_coeffs(xi.norm(), small_angle);
    const Mat3T<S> sk = skew(xi);
    return Mat3T<S>::Identity() + co.c1 * sk + co.c2 * sk * sk;
}

// Left Jacobian of SO(3); maps the velocity/position tangent columns in the
// SE_2(3) exponential.
template <typename S>
Mat3T<S> left_jacobian_so3(const Vec3T<S>& xi, S small_angle = S(kSmallAngle)) {
    const auto co = detail::rot_coeffs(xi.norm(), small_angle);
    const Mat3T<S> sk = skew(xi);
    return Mat3T<S>::Identity() + co.c2 * sk + co.c3 * sk * sk;
}

template <typename S>
Mat3T<S> inv_left_jacobian_so3(const Vec3T<S>& xi, S small_angle = S(kSmallAngle)) {
    const S theta = xi.norm();
    const Mat3T<S> sk = skew(xi);
    S c;
    if (theta < small_angle) {
        c = S(1) / S(12) + theta * theta / S(720);
    } else {
        c = S(1) / (theta * theta) -
            (S(1) + std::cos(theta)) / (S(2) * theta * std::sin(theta));
    }
    return Mat3T<S>::Identity() - S(0.5) * sk + c * sk * sk;
}

// Inverse of exp_so3. Trace is clamped before acos; the theta = pi
// neighbourhood takes the axis from the dominant column of R + I.
template <typename S>
Vec3T<S> log_so3(const Mat3T<S>& r) {
    const S cos_theta = std::min(S(1), std::max(S(-1), (r.trace() - S(1)) / S(2)));
    const S theta = std::acos(cos_theta);
    if (theta < S(1e-6)) {
        const Vec3T<S> w = vee<S>((r - r.transpose()) * S(0.5));
        return w * (S(1) + theta * theta / S(6));
    }
    if (theta > S(M_PI) - S(1e-6)) {
        const Mat3T<S> b = r + Mat3T<S>::Identity();
        int k;
        b.colwise().norm().maxCoeff(&k);
        Vec3T<S> axis = b.col(k).normalized();
        if (axis.dot(vee<S>(r - r.transpose())) < S(0)) axis = -axis;
        return theta * axis;
    }
    return theta / (S(2) * std::sin(theta)) * vee<S>(r - r.transpose());
}

// Nearest rotation matrix in Frobenius norm (polar projection).
template <typename S>
Mat3T<S> orthonormalize(const Mat3T<S>& r) {
    Eigen::JacobiSVD<Mat3T<S>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3T<S> u = svd.matrixU();
    Mat3T<S> v = svd.matrixV();
    if ((u * v.transpose()).determinant() < S(0)) u.col(2) = -u.col(2);
    return u * v.transpose();
}

// Element of SE_2(3): the 5x5 block matrix [R v p; 0 I2] carrying rotation,
// velocity and position.
template <typename S>
struct ExtendedPoseT {
    Mat3T<S> rotation = Mat3T<S>::Identity();
    Vec3T<S> velocity = Vec3T<S>::Zero();
    Vec3T<S> position = Vec3T<S>::Zero();
};

using ExtendedPose = ExtendedPoseT<double>;

template <typename S>
struct TangentSE23T {
    Vec3T<S> xi_rot = Vec3T<S>::Zero();
    Vec3T<S> xi_vel = Vec3T<S>::Zero();
    Vec3T<S> xi_pos = Vec3T<S>::Zero();

    static TangentSE23T from_vector(const Eigen::Matrix<S, 9, 1>& v) {
        return {v.template segment<3>(0), v.template segment<3>(3),
                v.template segment<3>(6)};
    }
    Eigen::Matrix<S, 9, 1> to_vector() const {
        Eigen::Matrix<S, 9, 1> v;
        v << xi_rot, xi_vel, xi_pos;
        return v;
    }
};

using TangentSE23 = TangentSE23T<double>;

template <typename S>
ExtendedPoseT<S> exp_se23(const TangentSE23T<S>& xi, S small_angle = S(kSmallAngle)) {
    const Mat3T<S> j = left_jacobian_so3(xi.xi_rot, small_angle);
    return {exp_so3(xi.xi_rot, small_angle), j * xi.xi_vel, j * xi.xi_pos};
}

template <typename S>
TangentSE23T<S> log_se23(const ExtendedPoseT<S>& x) {
    const Vec3T<S> xi_rot = log_so3(x.rotation);
    const Mat3T<S> jinv = inv_left_jacobian_so3(xi_rot);
    return {xi_rot, jinv * x.velocity, jinv * x.position};
}

template <typename S>
ExtendedPoseT<S> compose(const ExtendedPoseT<S>& a, const ExtendedPoseT<S>& b) {
    return {a.rotation * b.rotation, a.rotation * b.velocity + a.velocity,
            a.rotation * b.position + a.position};
}

template <typename S>
ExtendedPoseT<S> inverse(const ExtendedPoseT<S>& x) {
    const Mat3T<S> rt = x.rotation.transpose();
    return {rt, -(rt * x.velocity), -(rt * x.position)};
}

template <typename S>
Mat5T<S> to_matrix(const ExtendedPoseT<S>& x) {
    Mat5T<S> m = Mat5T<S>::Identity();
    m.template topLeftCorner<3, 3>() = x.rotation;
    m.template block<3, 1>(0, 3) = x.velocity;
    m.template block<3, 1>(0, 4) = x.position;
    return m;
}

template <typename S>
ExtendedPoseT<S> from_matrix(const Mat5T<S>& m) {
    return {m.template topLeftCorner<3, 3>(), m.template block<3, 1>(0, 3),
            m.template block<3, 1>(0, 4)};
}

}  // namespace imudr
