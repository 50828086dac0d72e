#ifndef XCFLAB_FUNCTIONALS_HPP
#define XCFLAB_FUNCTIONALS_HPP

#include <vector>

#include "xcflab/tensor_core.hpp"

namespace xcflab {

/// Per-sample monitor channels along a trajectory.
struct MonitorRecord {
  double t = 0.0;
  double j_density = 0.0;
  double effvol_density = 0.0;
  Vec3 abc = Vec3::Zero();   ///< sectional triple (a, b, c)
  double y_norm = 0.0;       ///< |Y(g_ref, g(t))| in the evolving metric
  double deviation = 0.0;    ///< Frobenius distance to the flow's target metric
  /// The density channels are defined only while P stays positive definite;
  /// outside that regime they are recorded as zero with this flag cleared.
  bool in_regime = true;
};

/// AM-GM defect of the dual Einstein endomorphism: tr(P)/3 - det(P)^{1/3}.
/// P is expressed relative to g (a g-orthonormal frame), so its eigenvalues
/// are the sectional triple (a, b, c). Nonnegative on SPD input; zero exactly
/// at constant curvature. Throws RegimeError when det P <= 0.
double j_density(const Mat3& P);

/// Same functional evaluated from the eigenvalue triple directly.
double j_density_from_triple(const Vec3& abc);

/// Effective-volume density sqrt(det P) * sqrt(det g), P relative to g.
double effvol_density(const Mat3& P, const FrameMetric& g);
double effvol_density_from_triple(const Vec3& abc, const FrameMetric& g);

struct Trajectory; // flow_engine.hpp

/// Discrete monotonicity report over a trajectory's monitor channels.
struct MonotonicityReport {
  int j_violations = 0;        ///< steps with j increasing beyond tolerance
  int effvol_violations = 0;   ///< steps with effective volume decreasing
  double worst_j_increase = 0.0;
  double worst_effvol_decrease = 0.0;
  int samples = 0;
  bool truncated = false;      ///< regime exit mid-trajectory
  /// Exponential fit of the y_norm channel (DXCF): log y ~ log C - rate * t.
  double y_rate = 0.0;
  double y_fit_residual = 0.0;
  bool y_fit_valid = false;
};

/// Checks j_density nonincreasing and effvol_density nondecreasing per
/// accepted step (relative tolerance 1e-10), and fits the y_norm channel.
MonotonicityReport monitor_trajectory(const Trajectory& traj);

} // namespace xcflab

#endif
