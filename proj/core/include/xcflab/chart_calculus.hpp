#ifndef XCFLAB_CHART_CALCULUS_HPP
#define XCFLAB_CHART_CALCULUS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "xcflab/tensor_core.hpp"

namespace xcflab {

/// Uniform cube grid [-L, L]^3 strictly inside the unit ball, N odd nodes
/// per axis. Spacing 2L/(N-1).
struct ChartContext {
  int n = 33;
  double half_width = 0.5;

  ChartContext(int n_, double half_width_);

  double spacing() const { return 2.0 * half_width / (n - 1); }
  std::int64_t nodes() const { return std::int64_t(n) * n * n; }
  std::int64_t index(int ix, int iy, int iz) const {
    return ix + std::int64_t(n) * (iy + std::int64_t(n) * iz);
  }
  double coord(int i) const { return -half_width + spacing() * i; }
  /// Distance (in nodes) from the nearest face of the cube.
  int margin(int ix, int iy, int iz) const;

  bool operator==(const ChartContext& o) const {
    return n == o.n && half_width == o.half_width;
  }
};

enum class FieldRank : int { Scalar = 0, Vector = 1, Sym2 = 2 };

/// Grid-sampled tensor components on the chart, component-major storage.
/// Sym2 components are ordered (11, 22, 33, 12, 13, 23).
struct ChartField {
  ChartContext ctx{33, 0.5};
  FieldRank rank = FieldRank::Scalar;
  bool contravariant = false; ///< meaningful for Vector rank only
  std::vector<double> data;

  ChartField() = default;
  ChartField(const ChartContext& c, FieldRank r, bool contra = false);

  int ncomp() const;
  double& at(int comp, std::int64_t node) { return data[comp * ctx.nodes() + node]; }
  double at(int comp, std::int64_t node) const { return data[comp * ctx.nodes() + node]; }
  const double* comp_ptr(int comp) const { return data.data() + comp * ctx.nodes(); }
  double* comp_ptr(int comp) { return data.data() + comp * ctx.nodes(); }

  /// Max |value| within `margin` nodes of the boundary.
  double boundary_max(int margin) const;
  /// Checks the compact-support invariant (zero within 4 nodes of boundary).
  bool compactly_supported(int margin = 4) const { return boundary_max(margin) == 0.0; }

  double max_abs() const;
};

/// Poincare ball metric g_ij(x) = 4 delta_ij / (1 - |x|^2)^2 sampled on the
/// chart (constant sectional curvature -1).
ChartField poincare_chart(const ChartContext& ctx);

/// 4th-order central first derivative along an axis. Nodes without a full
/// interior stencil (margin < 2) are set to zero.
std::vector<double> chart_derivative(const ChartContext& ctx, const double* f, int axis);

/// All curvature data of a metric field. Christoffels are valid at margin
/// >= 2, curvature fields at margin >= 4; the outer shells are zero-filled.
struct ChartCurvature {
  ChartContext ctx{33, 0.5};
  std::vector<double> christoffel; ///< 27 comps: Gamma^k_ij at (k*3+i)*3+j
  std::vector<double> riemann;     ///< 81 comps: R_ijkl
  ChartField ricci;                ///< rank 2
  ChartField scalar;               ///< rank 0
  ChartField einstein;             ///< rank 2
  std::vector<double> dual_p;      ///< 6 comps: contravariant P^{ij}, sym
  ChartField cross;                ///< rank 2: X_ij

  double gamma(int k, int i, int j, std::int64_t node) const {
    return christoffel[((k * 3 + i) * 3 + j) * ctx.nodes() + node];
  }
  double riem(int i, int j, int k, int l, std::int64_t node) const {
    return riemann[(((i * 3 + j) * 3 + k) * 3 + l) * ctx.nodes() + node];
  }
};

/// Throws DomainError (with node location) if g is not SPD at some node with
/// margin >= 2. With keep_riemann = false the rank-4 field is contracted
/// through but not stored (riem() is then invalid), halving the footprint
/// for consumers that only need the contractions.
ChartCurvature chart_curvature(const ChartContext& ctx, const ChartField& g,
                               bool keep_riemann = true);

/// First and second covariant derivatives plus the derived fields of the
/// Bochner-formula machinery.
struct CovariantOps {
  std::vector<double> nabla_h_raw;   ///< 18 comps: (a, ij) -> a*6 + packed(ij)
  std::vector<double> nabla2_h_raw;  ///< 54 comps: (b, a, ij) -> (b*3+a)*6+ij, outer b first
  ChartField lap_h;        ///< rough Laplacian, rank 2
  ChartField lichnerowicz; ///< Delta_l h = Delta h + H Rc - R h (identity form)
  ChartField delta_h;      ///< (delta h)_k = -g^{ij} nabla_i h_jk, rank 1
  std::vector<double> t_tensor; ///< 27 comps: T_ijk = nabla_k h_ij - nabla_i h_jk
  ChartField trace_h;      ///< H = g^{ij} h_ij, rank 0
};

/// h must be compactly supported (4-node margin); throws DomainError
/// otherwise. Analytic full-chart fields (the metric itself, say) may be fed
/// through with require_compact_support = false; their derived fields are
/// then valid on the margin >= 4 interior only.
CovariantOps covariant_ops(const ChartContext& ctx, const ChartField& g,
                           const ChartCurvature& curv, const ChartField& h,
                           bool require_compact_support = true);

/// Composite Simpson quadrature of a scalar field against sqrt(det g).
double l2_quadrature(const ChartContext& ctx, const ChartField& g,
                     const ChartField& integrand);

/// Smooth compactly supported symmetric test field: envelope
/// (1 - |x-c|^2/r^2)^4 (clamped at 0) times a seeded constant symmetric
/// matrix plus low-order polynomial modulation.
ChartField bump_tensor(const ChartContext& ctx, std::uint64_t seed,
                       const Vec3& center, double radius);

struct KoisoResult {
  double residual_general = 0.0;
  double residual_reduced = 0.0;
  // Individual quadratures, exposed for reporting.
  double norm_nabla_h = 0.0;
  double norm_delta_h = 0.0;
  double norm_t = 0.0;
  double curvature_term = 0.0;
  double norm_trace = 0.0;
  double norm_h = 0.0;
};

/// Evaluates both sides of Koiso's Bochner identity (general and reduced
/// constant-curvature forms) on the Poincare chart; returns relative
/// residuals.
KoisoResult koiso_check(const ChartContext& ctx, const ChartField& h);

struct QuadraticFormResult {
  double lhs = 0.0; ///< integral of <Ah, h> dmu with Ah = Delta h - 2 H g + 2 h
  double rhs = 0.0; ///< -|H|^2 - |h|^2
};

/// Spectral-gap quadratic form of the K = -1 chart.
QuadraticFormResult quadratic_form(const ChartContext& ctx, const ChartField& h);

/// DXCF right-hand side on the chart against the Poincare reference:
/// F(gbar) = -2 X(gbar) + K L_{Y(g_ref, gbar)} g_ref - 2 K^2 gbar.
ChartField dxcf_chart_rhs(const ChartContext& ctx, const ChartField& g_ref,
                          const ChartCurvature& curv_ref, const ChartField& gbar,
                          double K);

/// Central-difference Frechet derivative (F(g+eh) - F(g-eh)) / (2e) of the
/// chart DXCF right-hand side, with a Richardson consistency estimate.
struct ChartFrechet {
  ChartField derivative;
  double richardson_rel_error = 0.0;
};
ChartFrechet fd_frechet_dxcf(const ChartContext& ctx, const ChartField& g_ref,
                             const ChartCurvature& curv_ref, const ChartField& gbar,
                             const ChartField& h, double K, double eps = 1e-5);

/// Relative L2 distance of two rank-2 fields in the metric g.
double relative_l2_error(const ChartContext& ctx, const ChartField& g,
                         const ChartField& a, const ChartField& b);

/// Flat binary dump: one text header line "xcflab-field N L rank ncomp
/// component-order", then ncomp * N^3 row-major doubles.
void dump_field(const std::string& path, const ChartField& f);

} // namespace xcflab

#endif
