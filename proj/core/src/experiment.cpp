#include "xcflab/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace xcflab {

using Json = nlohmann::ordered_json;

namespace {

struct SeededRng {
  std::uint64_t state;
  explicit SeededRng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double next_sym() {
    return 2.0 * (next_u64() >> 11) * (1.0 / 9007199254740992.0) - 1.0;
  }
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace

Mat3 seeded_unit_perturbation(std::uint64_t seed) {
  SeededRng rng(seed * 0x9e3779b97f4a7c15ULL + 0x1234567ULL);
  Mat3 m;
  const double a = rng.next_sym(), b = rng.next_sym(), c = rng.next_sym();
  const double d = rng.next_sym(), e = rng.next_sym(), f = rng.next_sym();
  m << a, d, e,
       d, b, f,
       e, f, c;
  const double n = m.norm();
  if (n == 0.0) { m = Mat3::Identity(); return m / m.norm(); }
  return m / n;
}

int worker_count(int requested) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  if (const char* env = std::getenv("XCFLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return std::max(1, std::min(requested, cap));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,g11,g22,g33,g12,g13,g23,a,b,c,j_density,effvol_density,y_norm,deviation\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Mat3& g = traj.metrics[i];
    const MonitorRecord& m = traj.monitors[i];
    os << fmt17(traj.times[i]) << ',' << fmt17(g(0, 0)) << ',' << fmt17(g(1, 1))
       << ',' << fmt17(g(2, 2)) << ',' << fmt17(g(0, 1)) << ',' << fmt17(g(0, 2))
       << ',' << fmt17(g(1, 2)) << ',' << fmt17(m.abc[0]) << ',' << fmt17(m.abc[1])
       << ',' << fmt17(m.abc[2]) << ',' << fmt17(m.j_density) << ','
       << fmt17(m.effvol_density) << ',' << fmt17(m.y_norm) << ','
       << fmt17(m.deviation) << '\n';
  }
}

void apply_config_entry(const std::string& key, const std::string& value,
                        ExperimentConfig& cfg) {
  auto as_double = [&] { return std::stod(value); };
  auto as_int = [&] { return std::stoi(value); };
  if (key == "command") cfg.command = value;
  else if (key == "flow") cfg.flow = value;
  else if (key == "K") cfg.K = as_double();
  else if (key == "perturb") cfg.perturb = as_double();
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "t_end") cfg.t_end = as_double();
  else if (key == "tol") cfg.tol = as_double();
  else if (key == "grid") cfg.grid_n = as_int();
  else if (key == "grid_l") cfg.grid_l = as_double();
  else if (key == "cases") cfg.cases = as_int();
  else if (key == "suite") cfg.suite = value;
  else if (key == "out_csv") cfg.out_csv = value;
  else if (key == "out_json") cfg.out_json = value;
  else if (key == "lam11") cfg.lam[0] = as_double();
  else if (key == "lam22") cfg.lam[1] = as_double();
  else if (key == "lam33") cfg.lam[2] = as_double();
  else if (key == "lam12") cfg.lam[3] = as_double();
  else if (key == "lam13") cfg.lam[4] = as_double();
  else if (key == "lam23") cfg.lam[5] = as_double();
  else throw DomainError("config: unknown key '" + key + "'");
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw DomainError("config: cannot open " + path);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) apply_config_entry(key, value, cfg);
  }
}

namespace {

void emit_json(const Json& j, const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.out_json.empty()) {
    out << j.dump(2) << '\n';
  } else {
    std::ofstream os(cfg.out_json);
    if (!os) throw DomainError("cannot open " + cfg.out_json);
    os << j.dump(2) << '\n';
  }
}

Json complex_array(const std::array<std::complex<double>, 6>& ev) {
  Json arr = Json::array();
  for (const auto& z : ev) arr.push_back({{"re", z.real()}, {"im", z.imag()}});
  return arr;
}

FlowSpec spec_from_config(const ExperimentConfig& cfg) {
  const auto kind = flow_from_name(cfg.flow);
  if (!kind) throw DomainError("unknown flow '" + cfg.flow + "'");
  std::optional<FrameMetric> ref;
  if (*kind == FlowKind::DXCF) ref = FrameMetric(matched_hyperbolic_metric(cfg.K));
  return FlowSpec::make(*kind, cfg.K, std::move(ref));
}

int run_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  if (!(cfg.t_end > 0.0)) throw DomainError("simulate: t_end must be positive");
  if (!(cfg.tol > 0.0)) throw DomainError("simulate: tol must be positive");
  if (cfg.perturb < 0.0) throw DomainError("simulate: perturb must be nonnegative");

  const StructureConstants C = StructureConstants::hyperbolic_model();
  const FlowSpec spec = spec_from_config(cfg);
  const Mat3 matched = matched_hyperbolic_metric(cfg.K);
  const Mat3 g0 = matched + cfg.perturb * seeded_unit_perturbation(cfg.seed);

  Trajectory traj = integrate(spec, FrameMetric(g0), cfg.t_end, cfg.tol, C);

  const bool normalized = spec.kind == FlowKind::KXCF || spec.kind == FlowKind::DXCF ||
                          spec.kind == FlowKind::KNRF || spec.kind == FlowKind::NXCF;
  Mat3 target = matched;
  if (normalized && traj.status == TrajectoryStatus::Completed &&
      traj.times.back() - traj.times.front() > 2.0) {
    target = richardson_limit(traj);
  }
  for (std::size_t i = 0; i < traj.size(); ++i)
    traj.monitors[i].deviation = (traj.metrics[i] - target).norm();

  const MonotonicityReport mono = monitor_trajectory(traj);

  Json j;
  j["flow"] = cfg.flow;
  j["K"] = cfg.K;
  const double T = traj.times.back();
  bool fit_ok = false;
  DecayFit fit;
  if (normalized && traj.status == TrajectoryStatus::Completed) {
    // Window skips the transient and stops before the deviation reaches the
    // integrator-error floor.
    try {
      fit = fit_decay_rate(traj, target, 0.3 * T, 0.75 * T);
      fit_ok = true;
    } catch (const std::exception&) {
      fit_ok = false;
    }
  }
  j["omega_fit"] = fit_ok ? Json(fit.omega_fit) : Json(nullptr);
  j["C_fit"] = fit_ok ? Json(fit.C_fit) : Json(nullptr);
  j["residual"] = fit_ok ? Json(fit.residual) : Json(nullptr);
  const double final_dev = traj.monitors.back().deviation;
  j["converged"] = normalized && traj.status == TrajectoryStatus::Completed &&
                   final_dev <= 1e-6;
  j["violations"] = mono.j_violations + mono.effvol_violations;
  j["spectrum"] = Json::array();

  if (!cfg.out_csv.empty()) {
    std::ofstream os(cfg.out_csv);
    if (!os) throw DomainError("cannot open " + cfg.out_csv);
    write_trajectory_csv(os, traj);
  }
  emit_json(j, cfg, out);
  return traj.status == TrajectoryStatus::Completed ? kExitOk : kExitRegime;
}

int run_linearize(const ExperimentConfig& cfg, std::ostream& out) {
  const StructureConstants C = StructureConstants::hyperbolic_model();
  const FlowSpec spec = spec_from_config(cfg);
  const FrameMetric gstar(matched_hyperbolic_metric(cfg.K));
  const LinearizationReport rep = frame_jacobian(spec, gstar, C);

  Json j;
  j["flow"] = cfg.flow;
  j["K"] = cfg.K;
  Json rows = Json::array();
  for (int r = 0; r < 6; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 6; ++c) row.push_back(rep.jacobian(r, c));
    rows.push_back(row);
  }
  j["jacobian"] = rows;
  j["eigenvalues"] = complex_array(rep.eigenvalues);
  j["richardson_delta"] = rep.richardson_delta;
  Json cmp = Json::array();
  for (const auto& e : rep.comparison) cmp.push_back({{"name", e.name}, {"value", e.value}});
  j["comparison"] = cmp;
  j["spectrum"] = complex_array(rep.eigenvalues);
  emit_json(j, cfg, out);
  return kExitOk;
}

int run_rescale_check(const ExperimentConfig& cfg, std::ostream& out) {
  const double mag = cfg.perturb > 0.0 ? cfg.perturb : 0.01;
  const int n = std::max(1, cfg.cases);
  const StructureConstants C = StructureConstants::hyperbolic_model();
  const double K = cfg.K;
  const RescaleMap map(K, 1.0);
  const double t_kxcf = 1.0;

  std::vector<double> sup(n, 0.0);
  std::vector<std::string> errors(n);
  parallel_for(n, [&](int i) {
    try {
      const Mat3 g0 =
          matched_hyperbolic_metric(K) + mag * seeded_unit_perturbation(cfg.seed + i);
      const FlowSpec kx = FlowSpec::make(FlowKind::KXCF, K);
      const Trajectory tk = integrate(kx, FrameMetric(g0), t_kxcf, cfg.tol, C);
      const Trajectory mapped = rescale_xcf(tk, map);
      const FlowSpec xcf_spec = FlowSpec::make(FlowKind::XCF, K);
      const Trajectory tx =
          integrate(xcf_spec, FrameMetric(g0), mapped.times.back(), cfg.tol, C);
      double worst = 0.0;
      for (std::size_t s = 0; s < mapped.size(); ++s) {
        const Mat3 direct = tx.sample_at(mapped.times[s]);
        worst = std::max(worst,
                         (mapped.metrics[s] - direct).cwiseAbs().maxCoeff());
      }
      sup[i] = worst;
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });

  Json j;
  j["command"] = "rescale-check";
  j["K"] = K;
  j["perturb"] = mag;
  Json arr = Json::array();
  double worst = 0.0;
  bool failed = false;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      failed = true;
      arr.push_back({{"seed", cfg.seed + i}, {"error", errors[i]}});
    } else {
      worst = std::max(worst, sup[i]);
      arr.push_back({{"seed", cfg.seed + i}, {"sup_error", sup[i]}});
    }
  }
  j["cases"] = arr;
  j["sup_error"] = worst;
  emit_json(j, cfg, out);
  return failed ? kExitNumerical : kExitOk;
}

int run_spectrum(const ExperimentConfig& cfg, std::ostream& out) {
  SymbolInput in;
  Mat3 L;
  L << cfg.lam[0], cfg.lam[3], cfg.lam[4],
       cfg.lam[3], cfg.lam[1], cfg.lam[5],
       cfg.lam[4], cfg.lam[5], cfg.lam[2];
  in.lambda = L;
  const SymbolResult res = buckland_symbol(in);
  Json j;
  j["command"] = "spectrum";
  Json rows = Json::array();
  for (int r = 0; r < 6; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 6; ++c) row.push_back(res.matrix(r, c));
    rows.push_back(row);
  }
  j["matrix"] = rows;
  j["spectrum"] = complex_array(res.spectrum);
  emit_json(j, cfg, out);
  return kExitOk;
}

ChartField constant_operator_field(const ChartContext& ctx, const ChartField& g,
                                   const ChartCurvature& curv, const ChartField& h,
                                   double K) {
  const CovariantOps ops = covariant_ops(ctx, g, curv, h);
  ChartField out(ctx, FieldRank::Sym2);
  const double K2 = K * K;
  for (std::int64_t node = 0; node < ctx.nodes(); ++node) {
    const double H = ops.trace_h.at(0, node);
    for (int c = 0; c < 6; ++c) {
      out.at(c, node) = -K * ops.lap_h.at(c, node) -
                        2.0 * K2 * H * g.at(c, node) + 2.0 * K2 * h.at(c, node);
    }
  }
  return out;
}

int run_verify(const ExperimentConfig& cfg, std::ostream& out) {
  const ChartContext ctx(cfg.grid_n, cfg.grid_l);
  Json j;
  j["command"] = "verify";
  j["suite"] = cfg.suite;
  j["grid"] = cfg.grid_n;

  const double radius = 0.35 * cfg.grid_l;
  if (cfg.suite == "koiso") {
    const int n = std::max(1, cfg.cases);
    std::vector<KoisoResult> res(n);
    parallel_for(n, [&](int i) {
      const ChartField h = bump_tensor(ctx, cfg.seed + i, Vec3::Zero(), radius);
      res[i] = koiso_check(ctx, h);
    });
    Json arr = Json::array();
    double worst_gen = 0.0, worst_red = 0.0;
    for (int i = 0; i < n; ++i) {
      arr.push_back({{"seed", cfg.seed + i},
                     {"general", res[i].residual_general},
                     {"reduced", res[i].residual_reduced}});
      worst_gen = std::max(worst_gen, res[i].residual_general);
      worst_red = std::max(worst_red, res[i].residual_reduced);
    }
    j["residuals"] = arr;
    j["max_general"] = worst_gen;
    j["max_reduced"] = worst_red;
  } else if (cfg.suite == "quadratic") {
    const int n = std::max(1, cfg.cases);
    std::vector<QuadraticFormResult> res(n);
    parallel_for(n, [&](int i) {
      const ChartField h = bump_tensor(ctx, cfg.seed + i, Vec3::Zero(), radius);
      res[i] = quadratic_form(ctx, h);
    });
    Json arr = Json::array();
    double worst_margin = 0.0;
    for (int i = 0; i < n; ++i) {
      const double scale = std::max(1.0, std::abs(res[i].rhs));
      const double margin = (res[i].rhs - res[i].lhs) / scale;
      arr.push_back({{"seed", cfg.seed + i},
                     {"lhs", res[i].lhs},
                     {"rhs", res[i].rhs},
                     {"relative_margin", margin}});
      worst_margin = std::min(worst_margin, margin);
    }
    j["cases"] = arr;
    j["min_relative_margin"] = worst_margin;
  } else if (cfg.suite == "linearization") {
    const ChartField g = poincare_chart(ctx);
    const ChartCurvature curv = chart_curvature(ctx, g);
    const ChartField h = bump_tensor(ctx, cfg.seed, Vec3::Zero(), radius);

    const ChartField a_gen = apply_A_general(ctx, g, h, cfg.K);
    const ChartField a_const = constant_operator_field(ctx, g, curv, h, cfg.K);
    j["general_vs_constant_rel_l2"] = relative_l2_error(ctx, g, a_gen, a_const);

    const ChartFrechet fd = fd_frechet_dxcf(ctx, g, curv, g, h, cfg.K);
    j["general_vs_fd_rel_l2"] = relative_l2_error(ctx, g, a_gen, fd.derivative);
    j["fd_richardson_rel"] = fd.richardson_rel_error;

    const ChartField bump_base = bump_tensor(ctx, cfg.seed + 1, Vec3::Zero(), radius);
    ChartField gbar = g;
    for (std::size_t i = 0; i < gbar.data.size(); ++i)
      gbar.data[i] += 0.01 * bump_base.data[i];
    const ChartField a_gen_pert = apply_A_general(ctx, gbar, h, cfg.K);
    const ChartFrechet fd_pert = fd_frechet_dxcf(ctx, g, curv, gbar, h, cfg.K);
    j["perturbed_general_vs_fd_rel_l2"] =
        relative_l2_error(ctx, g, a_gen_pert, fd_pert.derivative);

    Json terms = Json::array();
    for (const auto& e : printed_linearization_term_report(ctx, g, h, cfg.K))
      terms.push_back({{"name", e.name}, {"value", e.value}});
    j["terms"] = terms;
  } else if (cfg.suite == "chart") {
    const ChartField g = poincare_chart(ctx);
    const ChartCurvature curv = chart_curvature(ctx, g);
    double worst_scalar = 0.0, worst_einstein = 0.0, worst_cross = 0.0;
    for (int iz = 0; iz < ctx.n; ++iz)
      for (int iy = 0; iy < ctx.n; ++iy)
        for (int ix = 0; ix < ctx.n; ++ix) {
          if (ctx.margin(ix, iy, iz) < 4) continue;
          const std::int64_t node = ctx.index(ix, iy, iz);
          worst_scalar = std::max(worst_scalar,
                                  std::abs(curv.scalar.at(0, node) + 6.0));
          for (int c = 0; c < 6; ++c) {
            worst_einstein = std::max(
                worst_einstein, std::abs(curv.einstein.at(c, node) - g.at(c, node)));
            worst_cross = std::max(
                worst_cross, std::abs(curv.cross.at(c, node) + g.at(c, node)));
          }
        }
    j["max_scalar_curvature_error"] = worst_scalar;
    j["max_einstein_minus_metric"] = worst_einstein;
    j["max_cross_plus_metric"] = worst_cross;
  } else {
    throw DomainError("verify: unknown suite '" + cfg.suite + "'");
  }
  emit_json(j, cfg, out);
  return kExitOk;
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& diag) {
  try {
    if (cfg.command == "simulate") return run_simulate(cfg, out);
    if (cfg.command == "linearize") return run_linearize(cfg, out);
    if (cfg.command == "verify") return run_verify(cfg, out);
    if (cfg.command == "rescale-check") return run_rescale_check(cfg, out);
    if (cfg.command == "spectrum") return run_spectrum(cfg, out);
    throw DomainError("unknown command '" + cfg.command + "'");
  } catch (const DomainError& e) {
    diag << Json{{"error", "validation"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  } catch (const CurvatureSignError& e) {
    diag << Json{{"error", "regime"}, {"message", e.what()}}.dump() << '\n';
    return kExitRegime;
  } catch (const RegimeError& e) {
    diag << Json{{"error", "regime"}, {"message", e.what()}}.dump() << '\n';
    return kExitRegime;
  } catch (const std::exception& e) {
    diag << Json{{"error", "numerical"}, {"message", e.what()}}.dump() << '\n';
    return kExitNumerical;
  }
}

} // namespace xcflab
