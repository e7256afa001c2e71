#include "srpt/estimation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace srpt {

namespace {

constexpr double kJacobianStep = 1e-6;
constexpr double kPsdTolerance = 1e-9;

void symmetrize(StateMatrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// LDLT pivots of a PSD matrix are >= 0; allow round-off relative to the largest diagonal.
bool is_psd(const StateMatrix& m) {
  Eigen::LDLT<StateMatrix> ldlt(m);
  if (ldlt.info() != Eigen::Success) return false;
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  return ldlt.vectorD().minCoeff() >= -kPsdTolerance * scale;
}

}  // namespace

ProcessCovariance ProcessCovariance::baseline() {
  StateVector std_devs;
  std_devs << 0.0125, 0.0011, 1.0, 0.3162, 0.3415, 0.0008, 1.0, 1.0, 2e-5;
  ProcessCovariance q;
  q.variances = std_devs.cwiseProduct(std_devs) / 10.0;
  return q;
}

ProcessCovariance ProcessCovariance::lap_tuned() {
  ProcessCovariance q;
  q.variances << 1.6373e-10, 9.60077e-06, 0.1, 56.4787, 1.41043, 3.88428e-12, 0.1, 0.1, 2.64692e-11;
  return q;
}

ProcessCovariance ProcessCovariance::uniform(double variance) {
  ProcessCovariance q;
  q.variances.setConstant(variance);
  return q;
}

namespace {
constexpr std::array<const char*, kStateSize> kStateNames = {
    "beta", "yaw_rate", "heading", "fy_front", "fy_rear", "vx", "x", "y", "delta"};
}

void ProcessCovariance::write(const std::filesystem::path& path) const {
  KeyValueConfig cfg;
  for (int i = 0; i < kStateSize; ++i) cfg.set(std::string("q.") + kStateNames[i], variances[i]);
  cfg.write(path);
}

ProcessCovariance ProcessCovariance::read(const std::filesystem::path& path) {
  ProcessCovariance q = lap_tuned();
  q.apply(KeyValueConfig::from_file(path));
  return q;
}

void ProcessCovariance::apply(const KeyValueConfig& cfg) {
  for (int i = 0; i < kStateSize; ++i) cfg.assign(std::string("q.") + kStateNames[i], &variances[i]);
  if ((variances.array() < 0.0).any()) throw std::invalid_argument("process variances must be >= 0");
}

MeasurementVector measurement_model(const StateVector& x, const VehicleParams& p) {
  return {(x[kFyFront] * std::cos(x[kSteer]) + x[kFyRear]) / p.m, x[kYawRate], x[kVx], x[kSteer]};
}

StateMatrix transition_jacobian(const StateVector& x, const ControlCommand& u, double dt,
                                const VehicleParams& p) {
  StateMatrix f;
  for (int j = 0; j < kStateSize; ++j) {
    StateVector hi = x;
    StateVector lo = x;
    hi[j] += kJacobianStep;
    lo[j] -= kJacobianStep;
    StateVector diff = integrate_estimator_model(hi, u, dt, p) - integrate_estimator_model(lo, u, dt, p);
    diff[kHeading] = wrap_angle(diff[kHeading]);
    f.col(j) = diff / (2.0 * kJacobianStep);
  }
  return f;
}

MeasurementJacobian measurement_jacobian(const StateVector& x, const VehicleParams& p) {
  MeasurementJacobian h;
  for (int j = 0; j < kStateSize; ++j) {
    StateVector hi = x;
    StateVector lo = x;
    hi[j] += kJacobianStep;
    lo[j] -= kJacobianStep;
    h.col(j) = (measurement_model(hi, p).to_vector() - measurement_model(lo, p).to_vector()) /
               (2.0 * kJacobianStep);
  }
  return h;
}

EkfBelief ekf_predict(const EkfBelief& b, const ControlCommand& u, double dt,
                      const ProcessCovariance& q, const VehicleParams& p) {
  const StateMatrix f = transition_jacobian(b.mean, u, dt, p);
  EkfBelief next;
  next.mean = integrate_estimator_model(b.mean, u, dt, p);
  next.cov = f * b.cov * f.transpose();
  next.cov.diagonal() += q.variances;
  symmetrize(next.cov);
  if (!next.cov.allFinite() || !is_psd(next.cov)) {
    throw EstimationError("ekf_predict: covariance is not positive semidefinite");
  }
  return next;
}

EkfBelief ekf_update(const EkfBelief& b, const MeasurementVector& z, const MeasurementCovariance& r,
                     const VehicleParams& p) {
  const MeasurementJacobian h = measurement_jacobian(b.mean, p);
  const Eigen::Matrix4d s = h * b.cov * h.transpose() + r.matrix();
  const Eigen::LLT<Eigen::Matrix4d> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    throw EstimationError("ekf_update: innovation covariance is singular");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  Eigen::Matrix<double, kStateSize, 4> gain = llt.solve(h * b.cov).transpose();
  for (int j = 0; j < kStateSize; ++j) {
    if (h.col(j).isZero(0.0)) gain.row(j).setZero();
  }

  const MeasurementVectorXd innovation = z.to_vector() - measurement_model(b.mean, p).to_vector();
  EkfBelief next;
  next.mean = b.mean + gain * innovation;
  next.mean[kHeading] = wrap_angle(next.mean[kHeading]);

  // Joseph form stays valid for the partially zeroed gain.
  const StateMatrix i_kh = StateMatrix::Identity() - gain * h;
  next.cov = i_kh * b.cov * i_kh.transpose() + gain * r.matrix() * gain.transpose();
  symmetrize(next.cov);
  return next;
}

ExtendedKalmanFilter::ExtendedKalmanFilter(const VehicleParams& params, const ProcessCovariance& q,
                                           const MeasurementCovariance& r,
                                           const StateVector& initial_state, double initial_variance)
    : params_(params), q_(q), r_(r) {
  belief_.mean = initial_state;
  belief_.cov = StateMatrix::Identity() * initial_variance;
}

void ExtendedKalmanFilter::predict(const ControlCommand& u) {
  belief_ = ekf_predict(belief_, u, kPredictionStep, q_, params_);
}

void ExtendedKalmanFilter::update(const MeasurementVector& z) {
  belief_ = ekf_update(belief_, z, r_, params_);
}

}  // namespace srpt
