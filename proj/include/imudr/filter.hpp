// Right-invariant extended Kalman filter for IMU-only dead-reckoning with
// lateral/vertical zero-velocity pseudo-measurements: state and covariance
// propagation, measurement prediction, and update.
#pragma once

#include "imudr/state.hpp"

#include <vector>

namespace imudr {

using JacobianF = Eigen::Matrix<double, err::kDim, err::kDim>;
using JacobianG = Eigen::Matrix<double, err::kDim, pnoise::kDim>;
using JacobianH = Eigen::Matrix<double, 2, err::kDim>;
using ErrorVec = Eigen::Matrix<double, err::kDim, 1>;

// Condition-number bound above which the innovation covariance is treated as
// numerically singular and the update is skipped.
inline constexpr double kMaxInnovationCondition = 1e12;

// Right-invariant error injection: the SE_2(3) and car-rotation blocks
// multiply on the left through their exponentials, vector blocks add.
FilterState apply_error(const FilterState& x, const ErrorVec& e,
                        double small_angle = kSmallAngle);

// Inverse of apply_error: the error e with x = apply_error(reference, e).
ErrorVec recover_error(const FilterState& reference, const FilterState& x);

// One Euler step of the IMU kinematics with bias-corrected inputs and noise
// turned off. Position integrates the pre-update velocity. Throws
// std::invalid_argument for dt <= 0.
FilterState propagate_state(const FilterState& x, const ImuSample& u, double dt,
                            const Vec3& gravity, double small_angle = kSmallAngle);

struct PropagationJacobians {
    JacobianF f;
    JacobianG g;
};

// First-order transition Jacobians of the right-invariant error dynamics:
// F = I + A*dt, and G mapping the 18 process-noise channels, rows scaled by dt.
PropagationJacobians propagation_jacobians(const FilterState& x, const ImuSample& u,
                                           double dt, const Vec3& gravity);

// Riccati propagation P' = F P F^T + G Q G^T, symmetrized.
ErrorCov propagate_covariance(const ErrorCov& p, const JacobianF& f, const JacobianG& g,
                              const ProcessNoise& q);

// Predicted car-frame lateral and upward velocity:
// rows 2..3 of R_c^T R^T v + (omega - b_gyro) x p_c.
Vec2 predict_measurement(const FilterState& x, const ImuSample& u);

// Exact Jacobian of predict_measurement with respect to the right-invariant
// error, 2 x 21.
JacobianH measurement_jacobian(const FilterState& x, const ImuSample& u);

struct UpdateResult {
    FilterState state;
    ErrorCov cov;
    bool applied = true;  // false when the innovation covariance was singular
};

// Kalman update against the zero pseudo-measurement. The innovation is
// 0 - y_pred; state blocks are corrected through apply_error and the
// covariance through (I - K H) P, symmetrized.
UpdateResult update(const FilterState& x, const ErrorCov& p, const Vec2& y_pred,
                    const JacobianH& h, const MeasurementNoise& n,
                    double small_angle = kSmallAngle);

// Propagation followed by update.
UpdateResult step(const FilterState& x, const ErrorCov& p, const ImuSample& u, double dt,
                  const MeasurementNoise& n, const Vec3& gravity, const ProcessNoise& q,
                  double small_angle = kSmallAngle);

struct IekfOptions {
    Vec3 gravity{0.0, 0.0, -9.80655};
    ProcessNoise process;
    double theta_small = kSmallAngle;
    // rotation re-orthonormalization and covariance eigenvalue flooring cadence
    int maintenance_interval = 1000;
};

// Sequential filter instance over one sequence. Not thread-safe; run distinct
// instances for distinct sequences.
class Iekf {
  public:
    Iekf(const FilterState& x0, const ErrorCov& p0, const IekfOptions& options)
        : x_(x0), p_(p0), opt_(options) {}

    // Returns false when the update was skipped (singular innovation).
    bool step(const ImuSample& u, double dt, const MeasurementNoise& n);

    const FilterState& state() const { return x_; }
    const ErrorCov& cov() const { return p_; }
    long steps() const { return steps_; }
    const std::vector<double>& skipped_update_times() const { return skipped_; }

  private:
    void maintain();

    FilterState x_;
    ErrorCov p_;
    IekfOptions opt_;
    long steps_ = 0;
    std::vector<double> skipped_;
};

}  // namespace imudr
