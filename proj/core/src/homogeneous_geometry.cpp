#include "xcflab/homogeneous_geometry.hpp"

#include <cmath>

namespace xcflab {

StructureConstants StructureConstants::from_components(const std::array<double, 27>& c) {
  StructureConstants out;
  out.c_ = c;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(out(k, i, j) + out(k, j, i)) > 0.0)
          throw DomainError("StructureConstants: not antisymmetric in (i,j)");
  if (out.jacobi_residual() > 1e-14)
    throw DomainError("StructureConstants: Jacobi identity violated");
  return out;
}

double StructureConstants::jacobi_residual() const {
  // sum_cyc [e_i, [e_j, e_k]] = 0, componentwise.
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int m = 0; m < 3; ++m) {
            s += (*this)(m, j, k) * (*this)(l, i, m);
            s += (*this)(m, k, i) * (*this)(l, j, m);
            s += (*this)(m, i, j) * (*this)(l, k, m);
          }
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

StructureConstants StructureConstants::hyperbolic_model() {
  std::array<double, 27> c{};
  auto set = [&c](int k, int i, int j, double v) {
    c[(k * 3 + i) * 3 + j] = v;
    c[(k * 3 + j) * 3 + i] = -v;
  };
  set(0, 2, 0, 1.0); // [e3, e1] = e1
  set(1, 2, 1, 1.0); // [e3, e2] = e2
  return from_components(c);
}

StructureConstants StructureConstants::abelian() {
  return from_components(std::array<double, 27>{});
}

double FrameConnection::compatibility_residual(const FrameMetric& g) const {
  // (nabla_a g)_ij = -Gamma^k_ai g_kj - Gamma^k_aj g_ik = 0.
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
          s += (*this)(k, a, i) * g(k, j) + (*this)(k, a, j) * g(i, k);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

double FrameConnection::torsion_residual(const StructureConstants& C) const {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst = std::max(worst,
                         std::abs((*this)(k, i, j) - (*this)(k, j, i) - C(k, i, j)));
  return worst;
}

const char* flow_name(FlowKind k) {
  switch (k) {
    case FlowKind::XCF: return "xcf";
    case FlowKind::KXCF: return "kxcf";
    case FlowKind::NXCF: return "nxcf";
    case FlowKind::DXCF: return "dxcf";
    case FlowKind::RF: return "rf";
    case FlowKind::KNRF: return "knrf";
  }
  return "?";
}

std::optional<FlowKind> flow_from_name(const std::string& name) {
  for (FlowKind k : {FlowKind::XCF, FlowKind::KXCF, FlowKind::NXCF,
                     FlowKind::DXCF, FlowKind::RF, FlowKind::KNRF})
    if (name == flow_name(k)) return k;
  return std::nullopt;
}

FlowSpec FlowSpec::make(FlowKind kind, double K, std::optional<FrameMetric> g_ref) {
  if (!(K < 0.0)) throw DomainError("FlowSpec: K must be negative");
  const bool needs_ref = (kind == FlowKind::DXCF);
  if (needs_ref != g_ref.has_value())
    throw DomainError("FlowSpec: g_ref present iff kind = DXCF");
  FlowSpec s;
  s.kind = kind;
  s.K = K;
  s.g_ref = std::move(g_ref);
  return s;
}

FrameConnection koszul_connection(const StructureConstants& C, const FrameMetric& g) {
  // c_ijk = <[e_i, e_j], e_k>_g
  double c[3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int m = 0; m < 3; ++m) s += C(m, i, j) * g(m, k);
        c[i][j][k] = s;
      }
  const Mat3& gi = g.inverse();
  FrameConnection conn;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double low[3];
      for (int k = 0; k < 3; ++k)
        low[k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int m = 0; m < 3; ++m) s += gi(k, m) * low[m];
        conn.at(k, i, j) = s;
      }
    }
  return conn;
}

Riemann3 li_curvature(const StructureConstants& C, const FrameMetric& g,
                      const FrameConnection& conn) {
  if (conn.compatibility_residual(g) > 1e-10 || conn.torsion_residual(C) > 1e-10)
    throw DomainError("li_curvature: connection inconsistent with (C, g)");
  // R^l_ijk = Gamma^m_jk Gamma^l_im - Gamma^m_ik Gamma^l_jm - C^m_ij Gamma^l_mk
  std::array<double, 81> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double up[3] = {0.0, 0.0, 0.0};
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int m = 0; m < 3; ++m) {
            s += conn(m, j, k) * conn(l, i, m);
            s -= conn(m, i, k) * conn(l, j, m);
            s -= C(m, i, j) * conn(l, m, k);
          }
          up[l] = s;
        }
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int m = 0; m < 3; ++m) s += g(l, m) * up[m];
          r[((i * 3 + j) * 3 + k) * 3 + l] = s;
        }
      }
  return Riemann3::from_components_unchecked(r);
}

SymTensor2 li_covariant_derivative(const FrameConnection& conn, int a, const SymTensor2& h) {
  Mat3 out = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        s -= conn(k, a, i) * h(k, j) + conn(k, a, j) * h(i, k);
      out(i, j) = s;
    }
  return SymTensor2(Mat3(0.5 * (out + out.transpose())));
}

namespace {

SymTensor2 li_covariant_derivative_vec(const FrameConnection& conn, const Vec3& v,
                                       const SymTensor2& h) {
  Mat3 out = Mat3::Zero();
  for (int a = 0; a < 3; ++a)
    if (v[a] != 0.0) out += v[a] * li_covariant_derivative(conn, a, h).mat();
  return SymTensor2(out);
}

} // namespace

SymTensor2 li_tensor_laplacian(const StructureConstants& /*C*/, const FrameMetric& g,
                               const FrameConnection& conn, const SymTensor2& h) {
  // Orthonormal frame u_a from the lower-triangular Cholesky factor: the
  // columns of L^{-T} satisfy <u_a, u_b>_g = delta_ab.
  const Mat3 u = g.cholesky_l().transpose().inverse();
  Mat3 acc = Mat3::Zero();
  for (int a = 0; a < 3; ++a) {
    const Vec3 ua = u.col(a);
    const SymTensor2 first = li_covariant_derivative_vec(conn, ua, h);
    acc += li_covariant_derivative_vec(conn, ua, first).mat();
    // nabla_{u_a} u_a = u_a^i u_a^j Gamma^k_ij e_k
    Vec3 w = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += ua[i] * ua[j] * conn(k, i, j);
      w[k] = s;
    }
    acc -= li_covariant_derivative_vec(conn, w, h).mat();
  }
  return SymTensor2(Mat3(0.5 * (acc + acc.transpose())));
}

DeturckField deturck_field(const FrameMetric& g_ref, const FrameConnection& conn_ref,
                           const SymTensor2& h) {
  const Mat3& gi = g_ref.inverse();
  // Y^l = -g^{kl} g^{ij} (nabla_i h)_{jk}; the d(trace) term vanishes on
  // left-invariant data.
  SymTensor2 dh[3] = {li_covariant_derivative(conn_ref, 0, h),
                      li_covariant_derivative(conn_ref, 1, h),
                      li_covariant_derivative(conn_ref, 2, h)};
  Vec3 y = Vec3::Zero();
  for (int l = 0; l < 3; ++l) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          s += gi(k, l) * gi(i, j) * dh[i](j, k);
    y[l] = -s;
  }
  // (L_Y g)_ij = nabla_i Y_j + nabla_j Y_i with Y_k = g_km Y^m; for constant
  // components nabla_i Y_j = -Gamma^k_ij Y_k.
  const Vec3 ylow = g_ref.mat() * y;
  Mat3 lie = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        s -= (conn_ref(k, i, j) + conn_ref(k, j, i)) * ylow[k];
      lie(i, j) = s;
    }
  return DeturckField{y, SymTensor2(Mat3(0.5 * (lie + lie.transpose())))};
}

CurvatureBundle li_bundle(const StructureConstants& C, const FrameMetric& g) {
  const FrameConnection conn = koszul_connection(C, g);
  return contract_to_bundle(g, li_curvature(C, g, conn));
}

SymTensor2 flow_rhs(const FlowSpec& spec, const FrameMetric& gbar,
                    const StructureConstants& C) {
  const CurvatureBundle b = li_bundle(C, gbar);
  const bool xcf_family =
      spec.kind == FlowKind::XCF || spec.kind == FlowKind::KXCF ||
      spec.kind == FlowKind::NXCF || spec.kind == FlowKind::DXCF;
  if (xcf_family && b.p_eigenvalues.minCoeff() <= 0.0) {
    throw CurvatureSignError("flow_rhs: sectional curvatures not all negative");
  }
  const Mat3& g = gbar.mat();
  const double K2 = spec.K * spec.K;
  switch (spec.kind) {
    case FlowKind::XCF:
      return SymTensor2(Mat3(-2.0 * b.cross.mat()));
    case FlowKind::KXCF:
      return SymTensor2(Mat3(-2.0 * b.cross.mat() - 2.0 * K2 * g));
    case FlowKind::NXCF: {
      // Nonlocal normalization: on a homogeneous substrate the integrand
      // tr_g X is constant, so x reduces to the pointwise trace.
      const double x = (gbar.inverse() * b.cross.mat()).trace();
      return SymTensor2(Mat3(-2.0 * b.cross.mat() + (2.0 / 3.0) * x * g));
    }
    case FlowKind::DXCF: {
      const FrameMetric& gr = *spec.g_ref;
      const FrameConnection conn_ref = koszul_connection(C, gr);
      // Y(g_ref, gbar): reference supplies inverse metric and connection,
      // the evolving metric is the differentiated tensor.
      const DeturckField dt = deturck_field(gr, conn_ref, gbar.as_tensor());
      return SymTensor2(Mat3(-2.0 * b.cross.mat() + spec.K * dt.lie_term.mat() -
                             2.0 * K2 * g));
    }
    case FlowKind::RF:
      return SymTensor2(Mat3(-2.0 * b.ricci.mat()));
    case FlowKind::KNRF:
      return SymTensor2(Mat3(-2.0 * b.ricci.mat() + 4.0 * spec.K * g));
  }
  throw DomainError("flow_rhs: unknown flow kind");
}

} // namespace xcflab
