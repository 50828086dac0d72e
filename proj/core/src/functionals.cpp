#include "xcflab/functionals.hpp"

#include <cmath>

#include "xcflab/flow_engine.hpp"

namespace xcflab {

double j_density_from_triple(const Vec3& abc) {
  const double det = abc[0] * abc[1] * abc[2];
  if (!(det > 0.0))
    throw RegimeError("j_density: det P <= 0 (outside negative-curvature regime)");
  return (abc[0] + abc[1] + abc[2]) / 3.0 - std::cbrt(det);
}

double j_density(const Mat3& P) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (P + Mat3(P.transpose())));
  return j_density_from_triple(es.eigenvalues());
}

double effvol_density_from_triple(const Vec3& abc, const FrameMetric& g) {
  const double det = abc[0] * abc[1] * abc[2];
  if (!(det > 0.0))
    throw RegimeError("effvol_density: det P <= 0 (outside negative-curvature regime)");
  return std::sqrt(det) * std::sqrt(g.det());
}

double effvol_density(const Mat3& P, const FrameMetric& g) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (P + Mat3(P.transpose())));
  return effvol_density_from_triple(es.eigenvalues(), g);
}

MonotonicityReport monitor_trajectory(const Trajectory& traj) {
  MonotonicityReport rep;
  rep.samples = static_cast<int>(traj.size());
  rep.truncated = traj.status != TrajectoryStatus::Completed;

  constexpr double kRelTol = 1e-10;
  for (std::size_t i = 1; i < traj.monitors.size(); ++i) {
    const MonitorRecord& a = traj.monitors[i - 1];
    const MonitorRecord& b = traj.monitors[i];
    if (!a.in_regime || !b.in_regime) {
      rep.truncated = true;
      rep.samples = static_cast<int>(i);
      break;
    }
    const double jscale = std::max({std::abs(a.j_density), std::abs(b.j_density), 1.0});
    if (b.j_density - a.j_density > kRelTol * jscale) {
      ++rep.j_violations;
      rep.worst_j_increase = std::max(rep.worst_j_increase, b.j_density - a.j_density);
    }
    const double vscale =
        std::max({std::abs(a.effvol_density), std::abs(b.effvol_density), 1.0});
    if (a.effvol_density - b.effvol_density > kRelTol * vscale) {
      ++rep.effvol_violations;
      rep.worst_effvol_decrease =
          std::max(rep.worst_effvol_decrease, a.effvol_density - b.effvol_density);
    }
  }

  if (traj.spec.kind == FlowKind::DXCF && traj.size() >= 8) {
    std::vector<double> ts, ys;
    for (const MonitorRecord& m : traj.monitors) {
      ts.push_back(m.t);
      ys.push_back(m.y_norm);
    }
    const double T = traj.times.back();
    try {
      const DecayFit fit = fit_exponential(ts, ys, 0.25 * T, 0.75 * T);
      rep.y_rate = fit.omega_fit;
      rep.y_fit_residual = fit.residual;
      rep.y_fit_valid = true;
    } catch (const std::exception&) {
      rep.y_fit_valid = false;
    }
  }
  return rep;
}

} // namespace xcflab
