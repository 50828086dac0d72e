#include "xcflab/flow_engine.hpp"

#include <algorithm>
#include <cmath>

namespace xcflab {

GuardStatus event_guard(const Mat3& g, const StructureConstants& C) {
  if (!FrameMetric::is_spd(g)) return GuardStatus::NotSPD;
  const CurvatureBundle b = li_bundle(C, FrameMetric(g));
  if (b.p_eigenvalues.minCoeff() <= 0.0) return GuardStatus::CurvatureSignLost;
  return GuardStatus::OK;
}

namespace {

// Dormand-Prince RK5(4)7M coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

} // namespace

OdeResult ode_integrate(const OdeRhs& f, const Eigen::VectorXd& y0, double t_end,
                        const OdeOptions& opts, const OdeWatcher& watcher) {
  OdeResult out;
  double t = 0.0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1 = f(t, y);
  out.times.push_back(t);
  out.states.push_back(y);
  out.derivs.push_back(k1);
  if (watcher && !watcher(t, y, k1)) {
    out.truncated = true;
    return out;
  }

  double h = std::min(opts.initial_step, std::max(t_end, opts.min_step));
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y5(n), err(n);

  while (t < t_end) {
    h = std::min(h, t_end - t);
    if (h < opts.min_step)
      throw StiffnessError("ode_integrate: step size underflow at t = " + std::to_string(t));

    k2 = f(t + c2 * h, y + h * (a21 * k1));
    k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f(t + h, y5); // FSAL
    err = y5 - (y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));

    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc = opts.abs_tol +
                        opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      norm = std::max(norm, std::abs(err[i]) / sc);
    }

    if (norm <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;
      out.times.push_back(t);
      out.states.push_back(y);
      out.derivs.push_back(k1);
      if (watcher && !watcher(t, y, k1)) {
        out.truncated = true;
        return out;
      }
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(norm, 1e-10), -0.2), 0.2, 5.0);
    h = std::min(h * factor, opts.max_step);
  }
  return out;
}

namespace {

Eigen::VectorXd pack_metric(const Mat3& g) {
  Eigen::VectorXd v(6);
  v << g(0, 0), g(1, 1), g(2, 2), g(0, 1), g(0, 2), g(1, 2);
  return v;
}

Mat3 unpack_metric(const Eigen::VectorXd& v) {
  Mat3 g;
  g << v[0], v[3], v[4],
       v[3], v[1], v[5],
       v[4], v[5], v[2];
  return g;
}

} // namespace

Mat3 matched_hyperbolic_metric(double K) {
  if (!(K < 0.0)) throw DomainError("matched_hyperbolic_metric: K must be negative");
  return (1.0 / -K) * Mat3::Identity();
}

Mat3 Trajectory::sample_at(double t) const {
  if (times.empty()) throw DomainError("Trajectory::sample_at: empty trajectory");
  if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
    throw DomainError("Trajectory::sample_at: time outside sampled range");
  t = std::clamp(t, times.front(), times.back());
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i1 = std::min<std::size_t>(times.size() - 1,
                                         static_cast<std::size_t>(it - times.begin()));
  if (i1 == 0) i1 = 1;
  const std::size_t i0 = i1 - 1;
  const double t0 = times[i0], t1 = times[i1];
  const double dt = t1 - t0;
  if (dt <= 0.0) return metrics[i0];
  const double s = (t - t0) / dt;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * metrics[i0] + h10 * dt * derivs[i0] + h01 * metrics[i1] +
         h11 * dt * derivs[i1];
}

Trajectory integrate(const FlowSpec& spec, const FrameMetric& g0, double t_end,
                     double tol, const StructureConstants& C,
                     const IntegrateOptions& opts) {
  {
    // Initial state must be inside the flow's domain; this throws
    // CurvatureSignError / DomainError if it is not.
    (void)flow_rhs(spec, g0, C);
  }
  const bool xcf_family =
      spec.kind == FlowKind::XCF || spec.kind == FlowKind::KXCF ||
      spec.kind == FlowKind::NXCF || spec.kind == FlowKind::DXCF;

  Trajectory traj;
  traj.spec = spec;
  traj.C = C;

  const Mat3 target = opts.deviation_target.value_or(
      spec.kind == FlowKind::DXCF ? spec.g_ref->mat() : matched_hyperbolic_metric(spec.K));
  const FrameMetric ref_for_y =
      spec.kind == FlowKind::DXCF ? *spec.g_ref : FrameMetric(matched_hyperbolic_metric(spec.K));
  const FrameConnection conn_ref = koszul_connection(C, ref_for_y);

  auto record = [&](double t, const Mat3& g, const Mat3& dg) {
    const FrameMetric gm(g);
    const CurvatureBundle b = li_bundle(C, gm);
    MonitorRecord m;
    m.t = t;
    m.abc = b.p_eigenvalues;
    if (b.p_eigenvalues.minCoeff() > 0.0) {
      m.j_density = j_density_from_triple(b.p_eigenvalues);
      m.effvol_density = effvol_density_from_triple(b.p_eigenvalues, gm);
    } else {
      m.in_regime = false;
    }
    const DeturckField dt_field =
        deturck_field(ref_for_y, conn_ref, SymTensor2(Mat3(g - ref_for_y.mat())));
    m.y_norm = std::sqrt(dt_field.y.dot(g * dt_field.y));
    m.deviation = (g - target).norm();
    traj.times.push_back(t);
    traj.metrics.push_back(g);
    traj.derivs.push_back(dg);
    traj.monitors.push_back(m);
  };

  OdeRhs rhs = [&](double, const Eigen::VectorXd& v) {
    const Mat3 g = unpack_metric(v);
    return pack_metric(flow_rhs(spec, FrameMetric(g), C).mat());
  };

  bool curvature_lost = false;
  bool spd_lost = false;
  OdeWatcher watcher = [&](double t, const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    const Mat3 g = unpack_metric(v);
    const GuardStatus st = event_guard(g, C);
    if (st == GuardStatus::NotSPD) {
      spd_lost = true;
      return false;
    }
    if (st == GuardStatus::CurvatureSignLost && xcf_family) {
      curvature_lost = true;
      return false;
    }
    record(t, g, unpack_metric(dv));
    return true;
  };

  OdeOptions ode = opts.ode;
  ode.abs_tol = tol;
  ode.rel_tol = tol;
  // Cap the step so cubic Hermite dense output stays well below the solver
  // tolerance scale on matched-time comparisons.
  ode.max_step = std::min(ode.max_step, std::max(t_end / 20.0, 1e-3));

  OdeResult res;
  try {
    res = ode_integrate(rhs, pack_metric(g0.mat()), t_end, ode, watcher);
  } catch (const CurvatureSignError&) {
    curvature_lost = true;
    res.truncated = true;
  } catch (const DomainError&) {
    spd_lost = true;
    res.truncated = true;
  }

  if (spd_lost)
    traj.status = TrajectoryStatus::TruncatedNotSPD;
  else if (curvature_lost)
    traj.status = TrajectoryStatus::TruncatedCurvatureSign;
  else
    traj.status = TrajectoryStatus::Completed;
  if (traj.times.empty())
    throw DomainError("integrate: initial state rejected by event guard");
  return traj;
}

RescaleMap::RescaleMap(double K_, double A_) : K(K_), A(A_) {
  if (!(K < 0.0)) throw DomainError("RescaleMap: K must be negative");
  if (!(A > 0.0)) throw DomainError("RescaleMap: A must be positive");
}

double RescaleMap::psi(double t) const { return A * std::exp(2.0 * K * K * t); }

double RescaleMap::t_tilde(double t) const {
  const double k2 = K * K;
  return A * A * std::expm1(4.0 * k2 * t) / (4.0 * k2);
}

Trajectory rescale_xcf(const Trajectory& traj_kxcf, const RescaleMap& map) {
  if (traj_kxcf.spec.kind != FlowKind::KXCF)
    throw DomainError("rescale_xcf: trajectory was not produced by KXCF");
  if (traj_kxcf.spec.K != map.K)
    throw DomainError("rescale_xcf: normalization constant mismatch");

  Trajectory out;
  out.spec = FlowSpec::make(FlowKind::XCF, map.K);
  out.C = traj_kxcf.C;
  out.status = traj_kxcf.status;
  out.monitors = traj_kxcf.monitors;
  for (std::size_t i = 0; i < traj_kxcf.size(); ++i) {
    const double t = traj_kxcf.times[i];
    const double p = map.psi(t);
    out.times.push_back(map.t_tilde(t));
    out.metrics.push_back(p * traj_kxcf.metrics[i]);
    // d(psi g)/d ttilde = (psi' g + psi g') / psi^2
    const double dpsi = 2.0 * map.K * map.K * p;
    out.derivs.push_back((dpsi * traj_kxcf.metrics[i] + p * traj_kxcf.derivs[i]) /
                         (p * p));
    out.monitors[i].t = out.times.back();
  }
  return out;
}

DecayFit fit_exponential(const std::vector<double>& ts, const std::vector<double>& ds,
                         double t_a, double t_b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < t_a || ts[i] > t_b) continue;
    if (!(ds[i] > 1e-14))
      throw UnderflowError("fit_exponential: deviation below 1e-14 in window");
    const double x = ts[i], y = std::log(ds[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 3) throw DomainError("fit_exponential: fewer than 3 samples in window");
  const double det = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / det;
  const double icept = (sy * sxx - sx * sxy) / det;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < t_a || ts[i] > t_b) continue;
    const double r = std::log(ds[i]) - (icept + slope * ts[i]);
    ss += r * r;
  }
  DecayFit fit;
  fit.omega_fit = -slope;
  fit.C_fit = std::exp(icept);
  fit.residual = std::sqrt(ss / n);
  return fit;
}

DecayFit fit_decay_rate(const Trajectory& traj, const Mat3& g_target,
                        double t_a, double t_b) {
  std::vector<double> ds(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    ds[i] = (traj.metrics[i] - g_target).norm();
  return fit_exponential(traj.times, ds, t_a, t_b);
}

Mat3 richardson_limit(const Trajectory& traj, double spacing) {
  const double T = traj.times.back();
  if (T < 2.0 * spacing + traj.times.front())
    throw DomainError("richardson_limit: trajectory too short");
  const Mat3 g0 = traj.sample_at(T - 2.0 * spacing);
  const Mat3 g1 = traj.sample_at(T - spacing);
  const Mat3 g2 = traj.sample_at(T);
  Mat3 lim = g2;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d1 = g1(i, j) - g0(i, j);
      const double d2 = g2(i, j) - g1(i, j);
      const double den = d2 - d1;
      if (std::abs(den) > 1e-300) {
        const double a = g2(i, j) - d2 * d2 / den;
        if (std::isfinite(a)) lim(i, j) = a;
      }
    }
  return 0.5 * (lim + Mat3(lim.transpose()));
}

} // namespace xcflab
