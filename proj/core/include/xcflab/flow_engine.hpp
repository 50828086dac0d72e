#ifndef XCFLAB_FLOW_ENGINE_HPP
#define XCFLAB_FLOW_ENGINE_HPP

#include <functional>
#include <vector>

#include "xcflab/functionals.hpp"
#include "xcflab/homogeneous_geometry.hpp"

namespace xcflab {

enum class GuardStatus { OK, NotSPD, CurvatureSignLost };

/// Classifies a state: SPD metric and (for the XCF family) negative
/// sectional curvatures. Polled by integrate() every accepted step.
GuardStatus event_guard(const Mat3& g, const StructureConstants& C);

enum class TrajectoryStatus {
  Completed,
  TruncatedNotSPD,
  TruncatedCurvatureSign,
};

/// Time-stamped metric samples of one flow, with per-sample monitors and the
/// RHS values needed for cubic Hermite dense output.
struct Trajectory {
  FlowSpec spec;
  StructureConstants C = StructureConstants::hyperbolic_model();
  std::vector<double> times;
  std::vector<Mat3> metrics;
  std::vector<Mat3> derivs;
  std::vector<MonitorRecord> monitors;
  TrajectoryStatus status = TrajectoryStatus::Completed;

  std::size_t size() const { return times.size(); }
  const Mat3& back_metric() const { return metrics.back(); }

  /// Cubic Hermite interpolation at time t (t within the sampled range).
  Mat3 sample_at(double t) const;
};

/// Generic embedded Dormand-Prince 5(4) stepper on flat vectors; exposed so
/// tests can drive it with manufactured right-hand sides.
struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  double max_step = 1.0;
};

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
/// Called after each accepted step; returning false truncates integration.
using OdeWatcher = std::function<bool(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct OdeResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> derivs;
  bool truncated = false;
};

/// Integrates y' = f(t, y) to t_end. Throws StiffnessError on step-size
/// underflow.
OdeResult ode_integrate(const OdeRhs& f, const Eigen::VectorXd& y0, double t_end,
                        const OdeOptions& opts, const OdeWatcher& watcher = nullptr);

struct IntegrateOptions {
  OdeOptions ode;
  /// Target metric for the deviation monitor; defaults to the matched
  /// hyperbolic metric of the flow (identity scaled to curvature K).
  std::optional<Mat3> deviation_target;
};

/// Integrates the flow from g0 to t_end with local error <= tol, polling
/// event_guard each accepted step. On a guard trigger the trajectory is
/// truncated and flagged.
Trajectory integrate(const FlowSpec& spec, const FrameMetric& g0, double t_end,
                     double tol, const StructureConstants& C,
                     const IntegrateOptions& opts = {});

/// Space-time change of scale between KXCF and XCF: psi(t) = A e^{2 K^2 t},
/// ttilde(t) = A^2 (e^{4 K^2 t} - 1) / (4 K^2).
struct RescaleMap {
  double K = -1.0;
  double A = 1.0;

  RescaleMap(double K_, double A_);
  double psi(double t) const;
  double t_tilde(double t) const;
};

/// Maps a KXCF trajectory through (t, g) -> (ttilde(t), psi(t) g); the image
/// is an XCF trajectory. Throws DomainError on flow-kind or K mismatch.
Trajectory rescale_xcf(const Trajectory& traj_kxcf, const RescaleMap& map);

struct DecayFit {
  double C_fit = 0.0;
  double omega_fit = 0.0;
  /// RMS residual of the straight-line fit of log d(t); approximately the
  /// relative envelope error.
  double residual = 0.0;
};

/// Least-squares line fit of log d(t) on [t_a, t_b], where
/// d(t) = |g(t) - g_target|_F. Throws UnderflowError when d drops below
/// 1e-14 inside the window.
DecayFit fit_decay_rate(const Trajectory& traj, const Mat3& g_target,
                        double t_a, double t_b);

/// Same fit applied to an arbitrary positive series d(t_i).
DecayFit fit_exponential(const std::vector<double>& ts, const std::vector<double>& ds,
                         double t_a, double t_b);

/// Limit metric of an exponentially converging trajectory, estimated by
/// componentwise Aitken extrapolation of three late dense samples.
Mat3 richardson_limit(const Trajectory& traj, double spacing = 0.5);

/// Matched hyperbolic metric of normalization constant K on the hyperbolic
/// model: (1/|K|) * identity has constant curvature K.
Mat3 matched_hyperbolic_metric(double K);

} // namespace xcflab

#endif
