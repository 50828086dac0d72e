#include "xcflab/linearization.hpp"

#include <algorithm>
#include <cmath>

namespace xcflab {

SymTensor2 apply_A_constant(const SymTensor2& h, const SymTensor2& lap_h, double H,
                            const FrameMetric& g, double K) {
  if (!(K < 0.0)) throw DomainError("apply_A_constant: K must be negative");
  const double K2 = K * K;
  const Mat3 direct = -K * lap_h.mat() - 2.0 * K2 * H * g.mat() + 2.0 * K2 * h.mat();
  // Lichnerowicz route: -K (Delta_l h + 4 K h), Delta_l h = Delta h + H Rc - R h,
  // with Rc = 2 K g and R = 6 K at constant curvature.
  const Mat3 lich = lap_h.mat() + H * (2.0 * K) * g.mat() - (6.0 * K) * h.mat();
  const Mat3 via_lich = -K * (lich + 4.0 * K * h.mat());
  const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
  if ((direct - via_lich).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("apply_A_constant: Lichnerowicz form disagrees beyond 1e-12");
  return SymTensor2(Mat3(0.5 * (direct + direct.transpose())));
}

SymTensor2 apply_knrf_lin(const SymTensor2& h, const SymTensor2& lap_h, double H,
                          const FrameMetric& g) {
  const Mat3 m = lap_h.mat() - 2.0 * H * g.mat() + 2.0 * h.mat();
  return SymTensor2(Mat3(0.5 * (m + m.transpose())));
}

FrechetResult fd_frechet(const std::function<SymTensor2(const FrameMetric&)>& F,
                         const FrameMetric& gbar, const SymTensor2& h, double eps) {
  auto central = [&](double e) {
    const Mat3 gp = gbar.mat() + e * h.mat();
    const Mat3 gm = gbar.mat() - e * h.mat();
    return Mat3((F(FrameMetric(gp)).mat() - F(FrameMetric(gm)).mat()) / (2.0 * e));
  };
  const Mat3 d1 = central(eps);
  const Mat3 d2 = central(0.5 * eps);
  FrechetResult out;
  out.derivative = SymTensor2(Mat3(0.5 * (d2 + d2.transpose())));
  const double denom = std::max(d2.norm(), 1e-30);
  out.richardson_rel_error = (d1 - d2).norm() / denom;
  return out;
}

namespace {

std::array<std::complex<double>, 6> sorted_spectrum(const Mat6& m) {
  Eigen::EigenSolver<Mat6> es(m);
  std::array<std::complex<double>, 6> ev;
  for (int i = 0; i < 6; ++i) ev[i] = es.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return ev;
}

Mat6 fd_jacobian_matrix(const FlowSpec& spec, const FrameMetric& gstar,
                        const StructureConstants& C, double eps) {
  Mat6 J;
  for (int k = 0; k < 6; ++k) {
    const SymTensor2 b = sym_basis(k);
    const Mat3 gp = gstar.mat() + eps * b.mat();
    const Mat3 gm = gstar.mat() - eps * b.mat();
    const SymTensor2 fp = flow_rhs(spec, FrameMetric(gp), C);
    const SymTensor2 fm = flow_rhs(spec, FrameMetric(gm), C);
    J.col(k) = sym_coords(SymTensor2(Mat3((fp.mat() - fm.mat()) / (2.0 * eps))));
  }
  return J;
}

} // namespace

LinearizationReport frame_jacobian(const FlowSpec& spec, const FrameMetric& gstar,
                                   const StructureConstants& C, double eps) {
  const SymTensor2 rhs0 = flow_rhs(spec, gstar, C);
  if (rhs0.frobenius() > 1e-10)
    throw DomainError("frame_jacobian: g* is not a fixed point of the flow");

  LinearizationReport rep;
  const Mat6 j1 = fd_jacobian_matrix(spec, gstar, C, eps);
  const Mat6 j2 = fd_jacobian_matrix(spec, gstar, C, 0.5 * eps);
  rep.richardson_delta = (j1 - j2).cwiseAbs().maxCoeff();
  rep.jacobian = (4.0 * j2 - j1) / 3.0;
  rep.eigenvalues = sorted_spectrum(rep.jacobian);

  // Analytic operators on the left-invariant subspace.
  const FrameConnection conn = koszul_connection(C, gstar);
  const Mat3& gi = gstar.inverse();
  Mat6 a_const, knrf_printed, gauge;
  for (int k = 0; k < 6; ++k) {
    const SymTensor2 b = sym_basis(k);
    const SymTensor2 lap = li_tensor_laplacian(C, gstar, conn, b);
    const double H = (gi * b.mat()).trace();
    a_const.col(k) = sym_coords(apply_A_constant(b, lap, H, gstar, spec.K));
    knrf_printed.col(k) = sym_coords(apply_knrf_lin(b, lap, H, gstar));
    gauge.col(k) = sym_coords(deturck_field(gstar, conn, b).lie_term);
  }

  switch (spec.kind) {
    case FlowKind::DXCF: {
      rep.comparison.push_back(
          {"fd_vs_analytic_max_abs", (rep.jacobian - a_const).cwiseAbs().maxCoeff()});
      // Aggregate check of Eq.-level bookkeeping: the DXCF Jacobian minus the
      // KXCF Jacobian is the DeTurck Lie term (reference-metric-first slot
      // convention; this entry records that the convention makes the
      // reduction hold).
      const FlowSpec kxcf = FlowSpec::make(FlowKind::KXCF, spec.K);
      const Mat6 jk = fd_jacobian_matrix(kxcf, gstar, C, eps);
      rep.comparison.push_back(
          {"deturck_split_max_abs",
           (rep.jacobian - jk - spec.K * gauge).cwiseAbs().maxCoeff()});
      break;
    }
    case FlowKind::KNRF: {
      rep.comparison.push_back(
          {"fd_vs_printed_max_abs",
           (rep.jacobian - knrf_printed).cwiseAbs().maxCoeff()});
      // The printed linearization holds up to the gauge (DeTurck) term,
      // which is computed and reported separately.
      rep.comparison.push_back(
          {"fd_vs_printed_plus_gauge_max_abs",
           (rep.jacobian - knrf_printed - gauge).cwiseAbs().maxCoeff()});
      rep.comparison.push_back({"gauge_term_max_abs", gauge.cwiseAbs().maxCoeff()});
      break;
    }
    case FlowKind::KXCF: {
      // Spectrum reported, not asserted; the analytic operator minus the
      // gauge term is recorded for reference.
      rep.comparison.push_back(
          {"fd_vs_analytic_minus_gauge_max_abs",
           (rep.jacobian - (a_const - spec.K * gauge)).cwiseAbs().maxCoeff()});
      break;
    }
    default:
      break;
  }
  return rep;
}

SymbolResult buckland_symbol(const SymbolInput& in) {
  const Mat3& L = in.lambda;
  if ((L - L.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("buckland_symbol: Lambda must be symmetric");
  if (L(0, 0) < 0.0)
    throw DomainError("buckland_symbol: Lambda^{11} must be nonnegative");
  SymbolResult out;
  Mat6& m = out.matrix;
  m.setZero();
  // Acting on (h11, h12, h13, h22, h33, h23).
  m(0, 3) = L(1, 1);
  m(0, 4) = L(2, 2);
  m(0, 5) = 2.0 * L(1, 2);
  m(1, 3) = -L(0, 1);
  m(1, 5) = -L(0, 2);
  m(2, 4) = -L(0, 2);
  m(2, 5) = -L(0, 1);
  m(3, 3) = L(0, 0);
  m(4, 4) = L(0, 0);
  m(5, 5) = L(0, 0);
  out.spectrum = sorted_spectrum(m);
  return out;
}

// ---------------------------------------------------------------------------
// Chart-based general linearization.
// ---------------------------------------------------------------------------

namespace {

constexpr int kPack[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};

inline void unpack_sym(const double* p, double m[3][3]) {
  m[0][0] = p[0]; m[1][1] = p[1]; m[2][2] = p[2];
  m[0][1] = m[1][0] = p[3];
  m[0][2] = m[2][0] = p[4];
  m[1][2] = m[2][1] = p[5];
}

inline void invert3(const double g[3][3], double gi[3][3]) {
  const double c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
  const double c01 = g[1][2] * g[2][0] - g[1][0] * g[2][2];
  const double c02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
  const double det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02;
  const double id = 1.0 / det;
  gi[0][0] = c00 * id;
  gi[0][1] = (g[0][2] * g[2][1] - g[0][1] * g[2][2]) * id;
  gi[0][2] = (g[0][1] * g[1][2] - g[0][2] * g[1][1]) * id;
  gi[1][0] = gi[0][1];
  gi[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) * id;
  gi[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) * id;
  gi[2][0] = gi[0][2];
  gi[2][1] = gi[1][2];
  gi[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) * id;
}

/// Shared per-call geometry of the linearization display.
struct LinearizationWork {
  ChartContext ctx{33, 0.5};
  ChartCurvature curv;
  CovariantOps ops;
  std::vector<double> dH[3];      ///< partial_a H
  std::vector<double> ylow;       ///< 3 comps, Y(gbar, h) lowered
  std::vector<double> lie;        ///< 6 comps, L_Y gbar
  std::vector<double> hess_h;     ///< 6 comps, Hessian of H
};

LinearizationWork linearization_setup(const ChartContext& ctx, const ChartField& gbar,
                        const ChartField& h) {
  LinearizationWork w;
  w.ctx = ctx;
  w.curv = chart_curvature(ctx, gbar);
  w.ops = covariant_ops(ctx, gbar, w.curv, h);
  const std::int64_t nn = ctx.nodes();
  const int n = ctx.n;

  for (int a = 0; a < 3; ++a)
    w.dH[a] = chart_derivative(ctx, w.ops.trace_h.comp_ptr(0), a);

  // Y(gbar, h)^l = (1/2) g^{kl} partial_k H + (delta h)^l; stored lowered:
  // Y_k = (1/2) dH_k + (delta h)_k.
  w.ylow.assign(std::size_t(3) * nn, 0.0);
  for (std::int64_t node = 0; node < nn; ++node)
    for (int k = 0; k < 3; ++k)
      w.ylow[std::size_t(k) * nn + node] =
          0.5 * w.dH[k][node] + w.ops.delta_h.at(k, node);

  // (L_Y gbar)_ij = partial_i Y_j + partial_j Y_i - 2 Gamma^c_ij Y_c.
  std::vector<double> dy[3][3];
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      dy[a][c] = chart_derivative(ctx, w.ylow.data() + std::size_t(c) * nn, a);
  w.lie.assign(std::size_t(6) * nn, 0.0);
  w.hess_h.assign(std::size_t(6) * nn, 0.0);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            double s = dy[i][j][node] + dy[j][i][node];
            for (int c = 0; c < 3; ++c)
              s -= 2.0 * w.curv.gamma(c, i, j, node) *
                   w.ylow[std::size_t(c) * nn + node];
            w.lie[std::size_t(kPack[i][j]) * nn + node] = s;
          }
      }
  // Hessian of H (needed by the trace identities): nabla_i nabla_j H.
  std::vector<double> ddh[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      ddh[a][b] = chart_derivative(ctx, w.dH[b].data(), a);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            double s = ddh[i][j][node];
            for (int c = 0; c < 3; ++c)
              s -= w.curv.gamma(c, i, j, node) * w.dH[c][node];
            w.hess_h[std::size_t(kPack[i][j]) * nn + node] = s;
          }
      }
  return w;
}

/// Per-node scratch of raised/mixed tensors.
struct NodeGeom {
  double gm[3][3], gi[3][3], hm[3][3], hup[3][3], hmix[3][3];
  double ric[3][3], rcmix[3][3], em[3][3], pup[3][3], xm[3][3];
  double R = 0.0, H = 0.0, lapH = 0.0, delta2h = 0.0, hdotrc = 0.0;
  double n2[3][3][3][3]; ///< (nabla_b nabla_a h)_ij  [b][a][i][j]
  double lie[3][3];
  double nmat[3][3];     ///< N = Delta h + 2 (R dia h)_sym - (Rc h + h Rc) + L_Y g
  double nup[3][3];
};

void node_geometry(const LinearizationWork& w, const ChartField& gbar, const ChartField& h,
                   std::int64_t node, NodeGeom& s) {
  const std::int64_t nn = w.ctx.nodes();
  double p[6];
  for (int c = 0; c < 6; ++c) p[c] = gbar.at(c, node);
  unpack_sym(p, s.gm);
  invert3(s.gm, s.gi);
  for (int c = 0; c < 6; ++c) p[c] = h.at(c, node);
  unpack_sym(p, s.hm);
  for (int c = 0; c < 6; ++c) p[c] = w.curv.ricci.at(c, node);
  unpack_sym(p, s.ric);
  for (int c = 0; c < 6; ++c) p[c] = w.curv.einstein.at(c, node);
  unpack_sym(p, s.em);
  for (int c = 0; c < 6; ++c) p[c] = w.curv.cross.at(c, node);
  unpack_sym(p, s.xm);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      s.pup[i][j] = w.curv.dual_p[std::size_t(kPack[i][j]) * nn + node];
  s.R = w.curv.scalar.at(0, node);
  s.H = w.ops.trace_h.at(0, node);

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double up = 0.0, mix = 0.0, rc = 0.0;
      for (int a = 0; a < 3; ++a) {
        mix += s.hm[i][a] * s.gi[a][j];
        rc += s.ric[i][a] * s.gi[a][j];
        for (int b = 0; b < 3; ++b) up += s.gi[i][a] * s.gi[j][b] * s.hm[a][b];
      }
      s.hup[i][j] = up;
      s.hmix[i][j] = mix;  // h_i^j
      s.rcmix[i][j] = rc;  // Rc_i^j
    }

  s.hdotrc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.hdotrc += s.hup[i][j] * s.ric[i][j];

  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          s.n2[b][a][i][j] =
              w.ops.nabla2_h_raw[std::size_t((b * 3 + a) * 6 + kPack[i][j]) * nn + node];

  s.lapH = 0.0;
  s.delta2h = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      s.lapH += s.gi[a][b] * w.hess_h[std::size_t(kPack[a][b]) * nn + node];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          s.delta2h += s.gi[a][i] * s.gi[b][j] * s.n2[a][b][i][j];
    }

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      s.lie[i][j] = w.lie[std::size_t(kPack[i][j]) * nn + node];

  // N = -2 (first variation of Ricci): rough Laplacian plus curvature action
  // plus the gauge Lie derivative.
  double lap[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) v += s.gi[a][b] * s.n2[a][b][i][j];
      lap[i][j] = v;
    }
  for (int b = 0; b < 3; ++b)
    for (int c = 0; c < 3; ++c) {
      // (R dia h)_bc = R_abcm h^{am}
      double rh = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int m = 0; m < 3; ++m)
          rh += w.curv.riem(a, b, c, m, node) * s.hup[a][m];
      double rch = 0.0, hrc = 0.0;
      for (int q = 0; q < 3; ++q) {
        rch += s.rcmix[b][q] * s.hm[q][c]; // Rc_b^q h_qc
        hrc += s.hm[b][q] * s.rcmix[c][q]; // h_bq Rc_c^q
      }
      const double rh_t = [&] {
        double v = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int m = 0; m < 3; ++m)
            v += w.curv.riem(a, c, b, m, node) * s.hup[a][m];
        return v;
      }();
      s.nmat[b][c] = lap[b][c] + (rh + rh_t) - (rch + hrc) + s.lie[b][c];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) v += s.gi[i][a] * s.gi[j][b] * s.nmat[a][b];
      s.nup[i][j] = v;
    }
}

} // namespace

ChartField apply_A_general(const ChartContext& ctx, const ChartField& gbar,
                           const ChartField& h, double K) {
  if (!h.compactly_supported())
    throw DomainError("apply_A_general: h violates the 4-node support margin");
  LinearizationWork w = linearization_setup(ctx, gbar, h);
  const std::int64_t nn = ctx.nodes();
  const double K2 = K * K;

  ChartField out(ctx, FieldRank::Sym2);
  NodeGeom s;
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        node_geometry(w, gbar, h, node, s);

        double df[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double v = 0.0;

            // -2 X_i^m h_mj
            for (int m = 0; m < 3; ++m) {
              double xmix = 0.0;
              for (int a = 0; a < 3; ++a) xmix += s.xm[i][a] * s.gi[a][m];
              v += -2.0 * xmix * s.hm[m][j];
            }

            // -(1/2) P^{kl} B_{kl,ij}
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) {
                const double B = 2.0 * s.n2[i][k][l][j] - s.n2[k][i][l][j] -
                                 s.n2[i][j][k][l] - s.n2[k][l][i][j] +
                                 s.n2[k][j][i][l];
                v += -0.5 * s.pup[k][l] * B;
              }

            // + R_{iklj} (h^{ka} E_a^l + h^{la} E^k_a)
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) {
                double he = 0.0, eh = 0.0;
                for (int a = 0; a < 3; ++a)
                  for (int b = 0; b < 3; ++b) {
                    he += s.hup[k][a] * s.em[a][b] * s.gi[b][l];
                    eh += s.hup[l][a] * s.em[a][b] * s.gi[b][k];
                  }
                v += w.curv.riem(i, k, l, j, node) * (he + eh);
              }

            // + (1/2) (R o N)_ij
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                v += 0.5 * w.curv.riem(i, a, b, j, node) * s.nup[a][b];

            // - (1/2) (Delta H - delta^2 h + <h, Rc>) Rc_ij
            v += -0.5 * (s.lapH - s.delta2h + s.hdotrc) * s.ric[i][j];

            // + (1/2) R (R o h)_ij
            {
              double roh = 0.0;
              for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                  roh += w.curv.riem(i, a, b, j, node) * s.hup[a][b];
              v += 0.5 * s.R * roh;
            }

            // gauge term and the linear normalization term
            v += K * s.lie[i][j] - 2.0 * K2 * s.hm[i][j];

            df[i][j] = v;
          }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            out.at(kPack[i][j], node) = 0.5 * (df[i][j] + df[j][i]);
        (void)nn;
      }
  return out;
}

namespace {

/// The display with its literal printed readings; shares the geometry setup.
void printed_linearization_node(const LinearizationWork& w, std::int64_t node, const NodeGeom& s,
                         double K, double term[10][3][3]) {
  // R^l_{jik} = g^{lm} R_{jikm} etc.: the raised index is the last (0,4) slot.
  auto rup = [&](int l, int a, int b, int c) {
    double v = 0.0;
    for (int m = 0; m < 3; ++m) v += s.gi[l][m] * w.curv.riem(a, b, c, m, node);
    return v;
  };
  const double K2 = K * K;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      double t1 = 0.0, t3 = 0.0, t7 = 0.0, t8 = 0.0, t9 = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          // (1/2) R^l_{jik} N^j_l
          double njl = 0.0;
          for (int a = 0; a < 3; ++a) njl += s.gi[j][a] * s.nmat[a][l];
          t1 += 0.5 * rup(l, j, i, k) * njl;

          // (1/2) Rc^j_l ( nabla_i nabla_k h^l_j - nabla_j nabla_k h^l_i
          //              - nabla_i nabla^l h_jk + nabla_j nabla^l h_ik )
          double inner = 0.0;
          for (int a = 0; a < 3; ++a) {
            inner += s.gi[l][a] * (s.n2[i][k][a][j] - s.n2[j][k][a][i] -
                                   s.n2[i][a][j][k] + s.n2[j][a][i][k]);
          }
          t3 += 0.5 * s.rcmix[j][l] * inner;
        }
      // -R^l_{ijk} Rc^m_l h^j_m
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          double rcml_hjm = 0.0;
          for (int m = 0; m < 3; ++m) {
            // Rc^m_l = g^{ma} Rc_al ; h^j_m = g^{ja} h_am
            double rcm = 0.0, hj = 0.0;
            for (int a = 0; a < 3; ++a) {
              rcm += s.gi[m][a] * s.ric[a][l];
              hj += s.gi[j][a] * s.hm[a][m];
            }
            rcml_hjm += rcm * hj;
          }
          t7 += -rup(l, i, j, k) * rcml_hjm;
        }
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) {
            double rcjl = 0.0, hmk = 0.0, hlm = 0.0;
            for (int a = 0; a < 3; ++a) {
              rcjl += s.gi[j][a] * s.ric[a][l];
              hmk += s.gi[m][a] * s.hm[a][k];
              hlm += s.gi[l][a] * s.hm[a][m];
            }
            // +(1/2) R^l_{ijm} Rc^j_l h^m_k
            t8 += 0.5 * rup(l, i, j, m) * rcjl * hmk;
            // -(1/2) R^m_{ijk} Rc^j_l h^l_m
            t9 += -0.5 * rup(m, i, j, k) * rcjl * hlm;
          }

      term[0][i][k] = t1;
      term[1][i][k] = -0.25 * s.R * s.nmat[i][k];
      term[2][i][k] = t3;
      term[3][i][k] = -0.5 * s.ric[i][k] * (s.lapH - s.delta2h);
      term[4][i][k] = K * s.lie[i][k];
      term[5][i][k] = -2.0 * K2 * s.hm[i][k];
      term[6][i][k] = t7;
      term[7][i][k] = t8;
      term[8][i][k] = t9;
      term[9][i][k] = -0.5 * s.hdotrc * s.ric[i][k];
    }
}

} // namespace

ChartField printed_linearization(const ChartContext& ctx, const ChartField& gbar,
                          const ChartField& h, double K) {
  if (!h.compactly_supported())
    throw DomainError("printed_linearization: h violates the 4-node support margin");
  LinearizationWork w = linearization_setup(ctx, gbar, h);
  ChartField out(ctx, FieldRank::Sym2);
  NodeGeom s;
  double term[10][3][3];
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        node_geometry(w, gbar, h, node, s);
        printed_linearization_node(w, node, s, K, term);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            double v = 0.0;
            for (int t = 0; t < 10; ++t)
              v += 0.5 * (term[t][i][j] + term[t][j][i]);
            out.at(kPack[i][j], node) = v;
          }
      }
  return out;
}

std::vector<ComparisonEntry> printed_linearization_term_report(const ChartContext& ctx,
                                                const ChartField& gbar,
                                                const ChartField& h, double K) {
  static const char* names[10] = {
      "riemann_contract_brace", "scalar_brace",       "ricci_hessian",
      "trace_defect",           "gauge_lie",          "linear_normalization",
      "quad_riemann_ricci_1",   "quad_riemann_ricci_2", "quad_riemann_ricci_3",
      "ricci_inner_product"};
  LinearizationWork w = linearization_setup(ctx, gbar, h);
  const std::int64_t nn = ctx.nodes();
  std::vector<double> sq(10, 0.0);
  NodeGeom s;
  double term[10][3][3];
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        node_geometry(w, gbar, h, node, s);
        printed_linearization_node(w, node, s, K, term);
        for (int t = 0; t < 10; ++t)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) sq[t] += term[t][i][j] * term[t][i][j];
      }
  (void)nn;
  std::vector<ComparisonEntry> out;
  for (int t = 0; t < 10; ++t)
    out.push_back({std::string("printed_term_l2:") + names[t], std::sqrt(sq[t])});

  const ChartField printed = printed_linearization(ctx, gbar, h, K);
  const ChartField adjudicated = apply_A_general(ctx, gbar, h, K);
  double dsq = 0.0, asq = 0.0;
  for (std::size_t i = 0; i < printed.data.size(); ++i) {
    const double d = printed.data[i] - adjudicated.data[i];
    dsq += d * d;
    asq += adjudicated.data[i] * adjudicated.data[i];
  }
  out.push_back({"printed_vs_adjudicated_rel_l2",
                 asq > 0.0 ? std::sqrt(dsq / asq) : 0.0});
  return out;
}

} // namespace xcflab
