#include "xcflab/chart_calculus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace xcflab {

namespace {

// Packed symmetric index: (11, 22, 33, 12, 13, 23).
constexpr int kPack[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};

inline void unpack_sym(const double* p, double m[3][3]) {
  m[0][0] = p[0]; m[1][1] = p[1]; m[2][2] = p[2];
  m[0][1] = m[1][0] = p[3];
  m[0][2] = m[2][0] = p[4];
  m[1][2] = m[2][1] = p[5];
}

inline bool invert_spd(const double g[3][3], double gi[3][3], double* det_out) {
  const double c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
  const double c01 = g[1][2] * g[2][0] - g[1][0] * g[2][2];
  const double c02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
  const double det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02;
  const bool spd = det > 0.0 && g[0][0] > 0.0 &&
                   g[0][0] * g[1][1] - g[0][1] * g[0][1] > 0.0;
  const double id = spd ? 1.0 / det : 0.0;
  gi[0][0] = c00 * id;
  gi[0][1] = (g[0][2] * g[2][1] - g[0][1] * g[2][2]) * id;
  gi[0][2] = (g[0][1] * g[1][2] - g[0][2] * g[1][1]) * id;
  gi[1][0] = gi[0][1];
  gi[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) * id;
  gi[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) * id;
  gi[2][0] = gi[0][2];
  gi[2][1] = gi[1][2];
  gi[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) * id;
  if (det_out) *det_out = det;
  return spd;
}

// 4th-order central coefficients for the first derivative.
inline double stencil5(const double* f, std::int64_t node, std::int64_t stride,
                       double inv12h) {
  return (f[node - 2 * stride] - 8.0 * f[node - stride] + 8.0 * f[node + stride] -
          f[node + 2 * stride]) * inv12h;
}

} // namespace

ChartContext::ChartContext(int n_, double half_width_) : n(n_), half_width(half_width_) {
  if (n < 17 || n % 2 == 0)
    throw DomainError("ChartContext: N must be odd and >= 17");
  if (!(half_width > 0.0) || half_width > 0.5)
    throw DomainError("ChartContext: half-width must lie in (0, 0.5]");
}

int ChartContext::margin(int ix, int iy, int iz) const {
  const int m1 = std::min(ix, n - 1 - ix);
  const int m2 = std::min(iy, n - 1 - iy);
  const int m3 = std::min(iz, n - 1 - iz);
  return std::min(m1, std::min(m2, m3));
}

ChartField::ChartField(const ChartContext& c, FieldRank r, bool contra)
    : ctx(c), rank(r), contravariant(contra) {
  data.assign(std::size_t(ncomp()) * ctx.nodes(), 0.0);
}

int ChartField::ncomp() const {
  switch (rank) {
    case FieldRank::Scalar: return 1;
    case FieldRank::Vector: return 3;
    case FieldRank::Sym2: return 6;
  }
  return 0;
}

double ChartField::boundary_max(int margin) const {
  double worst = 0.0;
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        if (ctx.margin(ix, iy, iz) >= margin) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        for (int c = 0; c < ncomp(); ++c)
          worst = std::max(worst, std::abs(at(c, node)));
      }
  return worst;
}

double ChartField::max_abs() const {
  double worst = 0.0;
  for (double v : data) worst = std::max(worst, std::abs(v));
  return worst;
}

ChartField poincare_chart(const ChartContext& ctx) {
  ChartField g(ctx, FieldRank::Sym2);
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        const double x = ctx.coord(ix), y = ctx.coord(iy), z = ctx.coord(iz);
        const double r2 = x * x + y * y + z * z;
        const double f = 2.0 / (1.0 - r2);
        const std::int64_t node = ctx.index(ix, iy, iz);
        g.at(0, node) = g.at(1, node) = g.at(2, node) = f * f;
      }
  return g;
}

std::vector<double> chart_derivative(const ChartContext& ctx, const double* f, int axis) {
  const int n = ctx.n;
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? n : std::int64_t(n) * n);
  const double inv12h = 1.0 / (12.0 * ctx.spacing());
  std::vector<double> out(ctx.nodes(), 0.0);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int m = axis == 0 ? std::min(ix, n - 1 - ix)
                    : axis == 1 ? std::min(iy, n - 1 - iy)
                                : std::min(iz, n - 1 - iz);
        if (m < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        out[node] = stencil5(f, node, stride, inv12h);
      }
  return out;
}

ChartCurvature chart_curvature(const ChartContext& ctx, const ChartField& g,
                               bool keep_riemann) {
  if (!(g.ctx == ctx) || g.rank != FieldRank::Sym2)
    throw DomainError("chart_curvature: metric field mismatch");
  const std::int64_t nn = ctx.nodes();
  const int n = ctx.n;

  // SPD check everywhere, with node location on failure.
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        if (!invert_spd(gm, gi, nullptr))
          throw DomainError("chart_curvature: metric not SPD at node (" +
                            std::to_string(ix) + "," + std::to_string(iy) + "," +
                            std::to_string(iz) + ")");
      }

  ChartCurvature out;
  out.ctx = ctx;
  out.christoffel.assign(std::size_t(27) * nn, 0.0);
  if (keep_riemann) out.riemann.assign(std::size_t(81) * nn, 0.0);
  out.ricci = ChartField(ctx, FieldRank::Sym2);
  out.scalar = ChartField(ctx, FieldRank::Scalar);
  out.einstein = ChartField(ctx, FieldRank::Sym2);
  out.dual_p.assign(std::size_t(6) * nn, 0.0);
  out.cross = ChartField(ctx, FieldRank::Sym2);

  // dg[a][c]: derivative of metric component c along axis a.
  std::vector<double> dg[3];
  for (int a = 0; a < 3; ++a) {
    dg[a].assign(std::size_t(6) * nn, 0.0);
    for (int c = 0; c < 6; ++c) {
      std::vector<double> d = chart_derivative(ctx, g.comp_ptr(c), a);
      std::copy(d.begin(), d.end(), dg[a].begin() + std::size_t(c) * nn);
    }
  }

  // Christoffels (valid margin >= 2).
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        invert_spd(gm, gi, nullptr);
        double dgl[3][3][3]; // dgl[a][i][j] = partial_a g_ij
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              dgl[a][i][j] = dg[a][std::size_t(kPack[i][j]) * nn + node];
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
              double s = 0.0;
              for (int l = 0; l < 3; ++l)
                s += gi[k][l] * (dgl[i][j][l] + dgl[j][i][l] - dgl[l][i][j]);
              s *= 0.5;
              out.christoffel[std::size_t((k * 3 + i) * 3 + j) * nn + node] = s;
              out.christoffel[std::size_t((k * 3 + j) * 3 + i) * nn + node] = s;
            }
      }
  for (int a = 0; a < 3; ++a) dg[a].clear();

  // Riemann (valid margin >= 4), then contractions.
  const std::int64_t strides[3] = {1, n, std::int64_t(n) * n};
  const double inv12h = 1.0 / (12.0 * ctx.spacing());
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        invert_spd(gm, gi, nullptr);

        double gam[3][3][3];
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              gam[k][i][j] = out.christoffel[std::size_t((k * 3 + i) * 3 + j) * nn + node];

        // dgam[a][l][j][k] = partial_a Gamma^l_jk (stencil over stored field).
        double dgam[3][3][3][3];
        for (int a = 0; a < 3; ++a)
          for (int l = 0; l < 3; ++l)
            for (int j = 0; j < 3; ++j)
              for (int k = j; k < 3; ++k) {
                const double* f =
                    out.christoffel.data() + std::size_t((l * 3 + j) * 3 + k) * nn;
                const double v = stencil5(f, node, strides[a], inv12h);
                dgam[a][l][j][k] = v;
                dgam[a][l][k][j] = v;
              }

        double rup[3][3][3][3]; // R^l_ijk
        for (int l = 0; l < 3; ++l)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k) {
                double s = dgam[i][l][j][k] - dgam[j][l][i][k];
                for (int m = 0; m < 3; ++m)
                  s += gam[m][j][k] * gam[l][i][m] - gam[m][i][k] * gam[l][j][m];
                rup[l][i][j][k] = s;
              }

        double rl[3][3][3][3]; // R_ijkl = g_lm R^m_ijk
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) {
                double s = 0.0;
                for (int m = 0; m < 3; ++m) s += gm[l][m] * rup[m][i][j][k];
                rl[i][j][k][l] = s;
                if (keep_riemann)
                  out.riemann[std::size_t(((i * 3 + j) * 3 + k) * 3 + l) * nn + node] = s;
              }

        double ric[3][3];
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
              for (int l = 0; l < 3; ++l) s += gi[i][l] * rl[i][j][k][l];
            ric[j][k] = s;
          }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            out.ricci.at(kPack[i][j], node) = 0.5 * (ric[i][j] + ric[j][i]);

        double scal = 0.0;
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) scal += gi[j][k] * ric[j][k];
        out.scalar.at(0, node) = scal;

        double em[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            em[i][j] = 0.5 * (ric[i][j] + ric[j][i]) - 0.5 * scal * gm[i][j];
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            out.einstein.at(kPack[i][j], node) = em[i][j];

        double pup[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b) s += gi[i][a] * gi[j][b] * em[a][b];
            pup[i][j] = s;
          }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            out.dual_p[std::size_t(kPack[i][j]) * nn + node] = 0.5 * (pup[i][j] + pup[j][i]);

        double xm[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) s += pup[k][l] * rl[i][k][l][j];
            xm[i][j] = 0.5 * s;
          }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            out.cross.at(kPack[i][j], node) = 0.5 * (xm[i][j] + xm[j][i]);
      }
  return out;
}

CovariantOps covariant_ops(const ChartContext& ctx, const ChartField& g,
                           const ChartCurvature& curv, const ChartField& h,
                           bool require_compact_support) {
  if (require_compact_support && !h.compactly_supported())
    throw DomainError("covariant_ops: field violates the 4-node support margin");
  const std::int64_t nn = ctx.nodes();
  const int n = ctx.n;

  CovariantOps ops;
  ops.nabla_h_raw.assign(std::size_t(18) * nn, 0.0);
  ops.nabla2_h_raw.assign(std::size_t(54) * nn, 0.0);
  ops.lap_h = ChartField(ctx, FieldRank::Sym2);
  ops.lichnerowicz = ChartField(ctx, FieldRank::Sym2);
  ops.delta_h = ChartField(ctx, FieldRank::Vector);
  ops.t_tensor.assign(std::size_t(27) * nn, 0.0);
  ops.trace_h = ChartField(ctx, FieldRank::Scalar);

  // dh[a][c]: partial_a of packed component c.
  std::vector<double> dh[3];
  for (int a = 0; a < 3; ++a) {
    dh[a].assign(std::size_t(6) * nn, 0.0);
    for (int c = 0; c < 6; ++c) {
      std::vector<double> d = chart_derivative(ctx, h.comp_ptr(c), a);
      std::copy(d.begin(), d.end(), dh[a].begin() + std::size_t(c) * nn);
    }
  }

  // First covariant derivative: (nabla_a h)_ij = partial_a h_ij
  // - Gamma^c_ai h_cj - Gamma^c_aj h_ic.  Index layout: a*6 + pack(ij).
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double hm[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = h.at(c, node);
        unpack_sym(p, hm);
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
              double s = dh[a][std::size_t(kPack[i][j]) * nn + node];
              for (int c = 0; c < 3; ++c)
                s -= curv.gamma(c, a, i, node) * hm[c][j] +
                     curv.gamma(c, a, j, node) * hm[i][c];
              ops.nabla_h_raw[std::size_t(a * 6 + kPack[i][j]) * nn + node] = s;
            }
      }
  for (int a = 0; a < 3; ++a) dh[a].clear();

  // Second covariant derivative:
  // (nabla_b nabla_a h)_ij = partial_b T_{a,ij} - Gamma^c_ba T_{c,ij}
  //                          - Gamma^c_bi T_{a,cj} - Gamma^c_bj T_{a,ic}.
  const std::int64_t strides[3] = {1, n, std::int64_t(n) * n};
  const double inv12h = 1.0 / (12.0 * ctx.spacing());
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double t[3][3][3]; // T_{a,ij}
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              t[a][i][j] =
                  ops.nabla_h_raw[std::size_t(a * 6 + kPack[i][j]) * nn + node];
        for (int b = 0; b < 3; ++b)
          for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 3; ++i)
              for (int j = i; j < 3; ++j) {
                const double* f =
                    ops.nabla_h_raw.data() + std::size_t(a * 6 + kPack[i][j]) * nn;
                double s = stencil5(f, node, strides[b], inv12h);
                for (int c = 0; c < 3; ++c)
                  s -= curv.gamma(c, b, a, node) * t[c][i][j] +
                       curv.gamma(c, b, i, node) * t[a][c][j] +
                       curv.gamma(c, b, j, node) * t[a][i][c];
                ops.nabla2_h_raw[std::size_t((b * 3 + a) * 6 + kPack[i][j]) * nn + node] = s;
              }
      }

  // Derived fields.
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3], hm[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        invert_spd(gm, gi, nullptr);
        for (int c = 0; c < 6; ++c) p[c] = h.at(c, node);
        unpack_sym(p, hm);

        double H = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) H += gi[i][j] * hm[i][j];
        ops.trace_h.at(0, node) = H;

        double t[3][3][3];
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              t[a][i][j] =
                  ops.nabla_h_raw[std::size_t(a * 6 + kPack[i][j]) * nn + node];

        // (delta h)_k = -g^{ij} (nabla_i h)_{jk}
        for (int k = 0; k < 3; ++k) {
          double s = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += gi[i][j] * t[i][j][k];
          ops.delta_h.at(k, node) = -s;
        }

        // T_ijk = (nabla_k h)_{ij} - (nabla_i h)_{jk}
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              ops.t_tensor[std::size_t((i * 3 + j) * 3 + k) * nn + node] =
                  t[k][i][j] - t[i][j][k];

        // Rough Laplacian and the identity-form Lichnerowicz Laplacian.
        const double R = curv.scalar.at(0, node);
        double ric[3][3];
        for (int c = 0; c < 6; ++c) p[c] = curv.ricci.at(c, node);
        unpack_sym(p, ric);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            double lap = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                lap += gi[a][b] *
                       ops.nabla2_h_raw[std::size_t((a * 3 + b) * 6 + kPack[i][j]) * nn + node];
            ops.lap_h.at(kPack[i][j], node) = lap;
            ops.lichnerowicz.at(kPack[i][j], node) =
                lap + H * ric[i][j] - R * hm[i][j];
          }
      }

  return ops;
}

double l2_quadrature(const ChartContext& ctx, const ChartField& g,
                     const ChartField& integrand) {
  if (integrand.rank != FieldRank::Scalar)
    throw DomainError("l2_quadrature: integrand must be scalar");
  const int n = ctx.n;
  std::vector<double> w(n);
  const double h3 = ctx.spacing() / 3.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0 || i == n - 1) w[i] = h3;
    else w[i] = (i % 2 == 1) ? 4.0 * h3 : 2.0 * h3;
  }
  double total = 0.0;
  for (int iz = 0; iz < n; ++iz) {
    double slab = 0.0;
    for (int iy = 0; iy < n; ++iy) {
      double line = 0.0;
      for (int ix = 0; ix < n; ++ix) {
        const std::int64_t node = ctx.index(ix, iy, iz);
        const double v = integrand.at(0, node);
        if (v == 0.0) continue;
        double gm[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        const double det =
            gm[0][0] * (gm[1][1] * gm[2][2] - gm[1][2] * gm[2][1]) -
            gm[0][1] * (gm[1][0] * gm[2][2] - gm[1][2] * gm[2][0]) +
            gm[0][2] * (gm[1][0] * gm[2][1] - gm[1][1] * gm[2][0]);
        line += w[ix] * v * std::sqrt(std::max(det, 0.0));
      }
      slab += w[iy] * line;
    }
    total += w[iz] * slab;
  }
  return total;
}

namespace {

/// splitmix64: deterministic across platforms.
struct SeededRng {
  std::uint64_t state;
  explicit SeededRng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [-1, 1].
  double next_sym() {
    return 2.0 * (next_u64() >> 11) * (1.0 / 9007199254740992.0) - 1.0;
  }
};

} // namespace

ChartField bump_tensor(const ChartContext& ctx, std::uint64_t seed,
                       const Vec3& center, double radius) {
  if (radius < 0.0) throw DomainError("bump_tensor: negative radius");
  for (int a = 0; a < 3; ++a) {
    if (std::abs(center[a]) + radius + 4.0 * ctx.spacing() > ctx.half_width)
      throw DomainError("bump_tensor: support ball violates the 4-node margin");
  }
  SeededRng rng(seed ^ 0x5ca1ab1eULL);
  double amp[6], mod[3];
  for (double& a : amp) a = rng.next_sym();
  for (double& m : mod) m = 0.3 * rng.next_sym();

  ChartField out(ctx, FieldRank::Sym2);
  if (radius == 0.0) return out;
  const double r2inv = 1.0 / (radius * radius);
  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        const double dx = ctx.coord(ix) - center[0];
        const double dy = ctx.coord(iy) - center[1];
        const double dz = ctx.coord(iz) - center[2];
        const double u = 1.0 - (dx * dx + dy * dy + dz * dz) * r2inv;
        if (u <= 0.0) continue;
        const double env = u * u * u * u;
        const double m = 1.0 + mod[0] * dx + mod[1] * dy + mod[2] * dz;
        const std::int64_t node = ctx.index(ix, iy, iz);
        for (int c = 0; c < 6; ++c) out.at(c, node) = env * m * amp[c];
      }
  return out;
}

namespace {

struct ChartIntegrals {
  double nabla2 = 0.0, delta2 = 0.0, t2 = 0.0, curvterm = 0.0, trace2 = 0.0, h2 = 0.0;
  double ah_h = 0.0;
};

ChartIntegrals koiso_integrals(const ChartContext& ctx, const ChartField& g,
                               const ChartCurvature& curv, const ChartField& h,
                               const CovariantOps& ops) {
  const std::int64_t nn = ctx.nodes();
  ChartField in_nabla2(ctx, FieldRank::Scalar), in_delta2(ctx, FieldRank::Scalar),
      in_t2(ctx, FieldRank::Scalar), in_curv(ctx, FieldRank::Scalar),
      in_trace2(ctx, FieldRank::Scalar), in_h2(ctx, FieldRank::Scalar),
      in_ah(ctx, FieldRank::Scalar);

  for (int iz = 0; iz < ctx.n; ++iz)
    for (int iy = 0; iy < ctx.n; ++iy)
      for (int ix = 0; ix < ctx.n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3], hm[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
        unpack_sym(p, gm);
        invert_spd(gm, gi, nullptr);
        for (int c = 0; c < 6; ++c) p[c] = h.at(c, node);
        unpack_sym(p, hm);

        double hup[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b) s += gi[i][a] * gi[j][b] * hm[a][b];
            hup[i][j] = s;
          }

        double t[3][3][3];
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              t[a][i][j] =
                  ops.nabla_h_raw[std::size_t(a * 6 + kPack[i][j]) * nn + node];

        double s_nabla2 = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int ap = 0; ap < 3; ++ap)
            for (int i = 0; i < 3; ++i)
              for (int ip = 0; ip < 3; ++ip)
                for (int j = 0; j < 3; ++j)
                  for (int jp = 0; jp < 3; ++jp)
                    s_nabla2 += gi[a][ap] * gi[i][ip] * gi[j][jp] * t[a][i][j] *
                                t[ap][ip][jp];
        in_nabla2.at(0, node) = s_nabla2;

        double s_delta2 = 0.0;
        for (int k = 0; k < 3; ++k)
          for (int kp = 0; kp < 3; ++kp)
            s_delta2 += gi[k][kp] * ops.delta_h.at(k, node) * ops.delta_h.at(kp, node);
        in_delta2.at(0, node) = s_delta2;

        double s_t2 = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int ip = 0; ip < 3; ++ip)
            for (int j = 0; j < 3; ++j)
              for (int jp = 0; jp < 3; ++jp)
                for (int k = 0; k < 3; ++k)
                  for (int kp = 0; kp < 3; ++kp)
                    s_t2 += gi[i][ip] * gi[j][jp] * gi[k][kp] *
                            ops.t_tensor[std::size_t((i * 3 + j) * 3 + k) * nn + node] *
                            ops.t_tensor[std::size_t((ip * 3 + jp) * 3 + kp) * nn + node];
        in_t2.at(0, node) = s_t2;

        // R_ijkl h^{il} h^{jk} - Rc_i^k h_jk h^{ij}
        double s_curv = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l)
                s_curv += curv.riem(i, j, k, l, node) * hup[i][l] * hup[j][k];
        double ric[3][3];
        for (int c = 0; c < 6; ++c) p[c] = curv.ricci.at(c, node);
        unpack_sym(p, ric);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              for (int a = 0; a < 3; ++a)
                s_curv -= ric[i][a] * gi[a][k] * hm[j][k] * hup[i][j];
        in_curv.at(0, node) = s_curv;

        const double H = ops.trace_h.at(0, node);
        in_trace2.at(0, node) = H * H;

        double s_h2 = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s_h2 += hup[i][j] * hm[i][j];
        in_h2.at(0, node) = s_h2;

        // <Ah, h> with Ah = Delta h - 2 H g + 2 h (the K = -1 operator).
        double ahm[3][3];
        for (int c = 0; c < 6; ++c) p[c] = ops.lap_h.at(c, node);
        unpack_sym(p, ahm);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            ahm[i][j] += -2.0 * H * gm[i][j] + 2.0 * hm[i][j];
        double s_ah = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s_ah += ahm[i][j] * hup[i][j];
        in_ah.at(0, node) = s_ah;
      }

  ChartIntegrals out;
  out.nabla2 = l2_quadrature(ctx, g, in_nabla2);
  out.delta2 = l2_quadrature(ctx, g, in_delta2);
  out.t2 = l2_quadrature(ctx, g, in_t2);
  out.curvterm = l2_quadrature(ctx, g, in_curv);
  out.trace2 = l2_quadrature(ctx, g, in_trace2);
  out.h2 = l2_quadrature(ctx, g, in_h2);
  out.ah_h = l2_quadrature(ctx, g, in_ah);
  return out;
}

double rel_residual(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale < 1e-300) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

} // namespace

KoisoResult koiso_check(const ChartContext& ctx, const ChartField& h) {
  const ChartField g = poincare_chart(ctx);
  const ChartCurvature curv = chart_curvature(ctx, g);
  const CovariantOps ops = covariant_ops(ctx, g, curv, h);
  const ChartIntegrals q = koiso_integrals(ctx, g, curv, h, ops);

  KoisoResult r;
  r.norm_nabla_h = q.nabla2;
  r.norm_delta_h = q.delta2;
  r.norm_t = q.t2;
  r.curvature_term = q.curvterm;
  r.norm_trace = q.trace2;
  r.norm_h = q.h2;
  r.residual_general = rel_residual(q.nabla2, q.delta2 + 0.5 * q.t2 + q.curvterm);
  r.residual_reduced =
      rel_residual(q.nabla2, q.delta2 + 0.5 * q.t2 - q.trace2 + 3.0 * q.h2);
  return r;
}

QuadraticFormResult quadratic_form(const ChartContext& ctx, const ChartField& h) {
  const ChartField g = poincare_chart(ctx);
  const ChartCurvature curv = chart_curvature(ctx, g);
  const CovariantOps ops = covariant_ops(ctx, g, curv, h);
  const ChartIntegrals q = koiso_integrals(ctx, g, curv, h, ops);
  QuadraticFormResult out;
  out.lhs = q.ah_h;
  out.rhs = -q.trace2 - q.h2;
  return out;
}

ChartField dxcf_chart_rhs(const ChartContext& ctx, const ChartField& g_ref,
                          const ChartCurvature& curv_ref, const ChartField& gbar,
                          double K) {
  const std::int64_t nn = ctx.nodes();
  const int n = ctx.n;
  // Only the cross-curvature contraction of the evolving metric is needed.
  const ChartCurvature curv_bar = chart_curvature(ctx, gbar, false);

  // Y^l(g_ref, gbar) = (1/2) gref^{kl} partial_k (gref^{ij} gbar_ij)
  //                    - gref^{kl} gref^{ij} nabla^ref_i gbar_jk
  ChartField trace_field(ctx, FieldRank::Scalar);
  for (std::int64_t node = 0; node < nn; ++node) {
    double gm[3][3], gi[3][3], bm[3][3];
    double p[6];
    for (int c = 0; c < 6; ++c) p[c] = g_ref.at(c, node);
    unpack_sym(p, gm);
    invert_spd(gm, gi, nullptr);
    for (int c = 0; c < 6; ++c) p[c] = gbar.at(c, node);
    unpack_sym(p, bm);
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += gi[i][j] * bm[i][j];
    trace_field.at(0, node) = s;
  }
  std::vector<double> dtrace[3];
  for (int a = 0; a < 3; ++a)
    dtrace[a] = chart_derivative(ctx, trace_field.comp_ptr(0), a);

  // nabla^ref gbar (first covariant derivative w.r.t. the reference).
  std::vector<double> dgbar[3];
  for (int a = 0; a < 3; ++a) {
    dgbar[a].assign(std::size_t(6) * nn, 0.0);
    for (int c = 0; c < 6; ++c) {
      std::vector<double> d = chart_derivative(ctx, gbar.comp_ptr(c), a);
      std::copy(d.begin(), d.end(), dgbar[a].begin() + std::size_t(c) * nn);
    }
  }

  ChartField yvec(ctx, FieldRank::Vector, /*contra=*/true);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 2) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double gm[3][3], gi[3][3], bm[3][3];
        double p[6];
        for (int c = 0; c < 6; ++c) p[c] = g_ref.at(c, node);
        unpack_sym(p, gm);
        invert_spd(gm, gi, nullptr);
        for (int c = 0; c < 6; ++c) p[c] = gbar.at(c, node);
        unpack_sym(p, bm);
        double nb[3][3][3]; // (nabla^ref_a gbar)_ij
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              double s = dgbar[a][std::size_t(kPack[i][j]) * nn + node];
              for (int c = 0; c < 3; ++c)
                s -= curv_ref.gamma(c, a, i, node) * bm[c][j] +
                     curv_ref.gamma(c, a, j, node) * bm[i][c];
              nb[a][i][j] = s;
            }
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int k = 0; k < 3; ++k) {
            s += 0.5 * gi[k][l] * dtrace[k][node];
            for (int i = 0; i < 3; ++i)
              for (int j = 0; j < 3; ++j) s -= gi[k][l] * gi[i][j] * nb[i][j][k];
          }
          yvec.at(l, node) = s;
        }
      }

  // (L_Y g_ref)_ij = nabla^ref_i Y_j + nabla^ref_j Y_i with Y lowered by g_ref.
  ChartField ylow(ctx, FieldRank::Vector);
  for (std::int64_t node = 0; node < nn; ++node) {
    double gm[3][3];
    double p[6];
    for (int c = 0; c < 6; ++c) p[c] = g_ref.at(c, node);
    unpack_sym(p, gm);
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int l = 0; l < 3; ++l) s += gm[j][l] * yvec.at(l, node);
      ylow.at(j, node) = s;
    }
  }
  std::vector<double> dylow[3];
  for (int a = 0; a < 3; ++a) {
    dylow[a].assign(std::size_t(3) * nn, 0.0);
    for (int c = 0; c < 3; ++c) {
      std::vector<double> d = chart_derivative(ctx, ylow.comp_ptr(c), a);
      std::copy(d.begin(), d.end(), dylow[a].begin() + std::size_t(c) * nn);
    }
  }

  ChartField out(ctx, FieldRank::Sym2);
  const double K2 = K * K;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ctx.margin(ix, iy, iz) < 4) continue;
        const std::int64_t node = ctx.index(ix, iy, iz);
        double lie[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double s = dylow[i][std::size_t(j) * nn + node] +
                       dylow[j][std::size_t(i) * nn + node];
            for (int c = 0; c < 3; ++c)
              s -= 2.0 * curv_ref.gamma(c, i, j, node) * ylow.at(c, node);
            lie[i][j] = s;
          }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            const int c = kPack[i][j];
            out.at(c, node) = -2.0 * curv_bar.cross.at(c, node) +
                              K * 0.5 * (lie[i][j] + lie[j][i]) -
                              2.0 * K2 * gbar.at(c, node);
          }
      }
  return out;
}

namespace {

ChartField field_lincomb(const ChartField& a, double ca, const ChartField& b, double cb) {
  ChartField out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = ca * a.data[i] + cb * b.data[i];
  return out;
}

double field_l2_flat(const ChartField& f) {
  double s = 0.0;
  for (double v : f.data) s += v * v;
  return std::sqrt(s);
}

} // namespace

ChartFrechet fd_frechet_dxcf(const ChartContext& ctx, const ChartField& g_ref,
                             const ChartCurvature& curv_ref, const ChartField& gbar,
                             const ChartField& h, double K, double eps) {
  auto diff_at = [&](double e) {
    const ChartField gp = field_lincomb(gbar, 1.0, h, e);
    const ChartField gmns = field_lincomb(gbar, 1.0, h, -e);
    const ChartField fp = dxcf_chart_rhs(ctx, g_ref, curv_ref, gp, K);
    const ChartField fm = dxcf_chart_rhs(ctx, g_ref, curv_ref, gmns, K);
    return field_lincomb(fp, 1.0 / (2.0 * e), fm, -1.0 / (2.0 * e));
  };
  ChartFrechet out;
  const ChartField d1 = diff_at(eps);
  out.derivative = diff_at(0.5 * eps);
  const ChartField diff = field_lincomb(d1, 1.0, out.derivative, -1.0);
  const double denom = field_l2_flat(out.derivative);
  out.richardson_rel_error = denom > 0.0 ? field_l2_flat(diff) / denom : 0.0;
  return out;
}

double relative_l2_error(const ChartContext& ctx, const ChartField& g,
                         const ChartField& a, const ChartField& b) {
  ChartField num(ctx, FieldRank::Scalar), den(ctx, FieldRank::Scalar);
  const std::int64_t nn = ctx.nodes();
  for (std::int64_t node = 0; node < nn; ++node) {
    double gm[3][3], gi[3][3], am[3][3], bm[3][3];
    double p[6];
    for (int c = 0; c < 6; ++c) p[c] = g.at(c, node);
    unpack_sym(p, gm);
    invert_spd(gm, gi, nullptr);
    for (int c = 0; c < 6; ++c) p[c] = a.at(c, node);
    unpack_sym(p, am);
    for (int c = 0; c < 6; ++c) p[c] = b.at(c, node);
    unpack_sym(p, bm);
    double sn = 0.0, sd = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int ip = 0; ip < 3; ++ip)
          for (int jp = 0; jp < 3; ++jp) {
            const double w = gi[i][ip] * gi[j][jp];
            sn += w * (am[i][j] - bm[i][j]) * (am[ip][jp] - bm[ip][jp]);
            sd += w * bm[i][j] * bm[ip][jp];
          }
    num.at(0, node) = sn;
    den.at(0, node) = sd;
  }
  const double dq = l2_quadrature(ctx, g, den);
  if (!(dq > 0.0)) throw DomainError("relative_l2_error: reference field vanishes");
  return std::sqrt(l2_quadrature(ctx, g, num) / dq);
}

void dump_field(const std::string& path, const ChartField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("dump_field: cannot open " + path);
  char header[128];
  std::snprintf(header, sizeof(header), "xcflab-field %d %.17g %d %d 11,22,33,12,13,23\n",
                f.ctx.n, f.ctx.half_width, static_cast<int>(f.rank), f.ncomp());
  os << header;
  os.write(reinterpret_cast<const char*>(f.data.data()),
           static_cast<std::streamsize>(f.data.size() * sizeof(double)));
}

} // namespace xcflab
