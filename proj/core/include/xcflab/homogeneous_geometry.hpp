#ifndef XCFLAB_HOMOGENEOUS_GEOMETRY_HPP
#define XCFLAB_HOMOGENEOUS_GEOMETRY_HPP

#include <optional>

#include "xcflab/tensor_core.hpp"

namespace xcflab {

/// Bracket coefficients [e_i, e_j] = C^k_ij e_k of a 3-dimensional Lie algebra.
class StructureConstants {
public:
  /// Validates antisymmetry in (i,j) and the Jacobi identity (tol 1e-14).
  static StructureConstants from_components(const std::array<double, 27>& c);

  /// Solvable model of hyperbolic 3-space: [e3,e1] = e1, [e3,e2] = e2.
  /// The identity frame metric on this algebra has constant curvature -1.
  static StructureConstants hyperbolic_model();

  /// All brackets zero (flat substrate).
  static StructureConstants abelian();

  double operator()(int k, int i, int j) const { return c_[(k * 3 + i) * 3 + j]; }

  double jacobi_residual() const;

private:
  StructureConstants() { c_.fill(0.0); }
  std::array<double, 27> c_{};
};

/// Connection coefficients Gamma^k_ij of the Levi-Civita connection in the
/// Lie frame: nabla_{e_i} e_j = Gamma^k_ij e_k.
struct FrameConnection {
  std::array<double, 27> gamma{};
  double operator()(int k, int i, int j) const { return gamma[(k * 3 + i) * 3 + j]; }
  double& at(int k, int i, int j) { return gamma[(k * 3 + i) * 3 + j]; }

  /// Max |nabla g| residual (metric compatibility, algebraic).
  double compatibility_residual(const FrameMetric& g) const;
  /// Max |Gamma^k_ij - Gamma^k_ji - C^k_ij| (torsion equals bracket defect).
  double torsion_residual(const StructureConstants& C) const;
};

enum class FlowKind { XCF, KXCF, NXCF, DXCF, RF, KNRF };

const char* flow_name(FlowKind k);
std::optional<FlowKind> flow_from_name(const std::string& name);

/// Flow identifier with parameters. K < 0 is the normalization constant of
/// the KXCF/NXCF/DXCF/KNRF right-hand sides; DXCF additionally carries the
/// reference metric supplying the gauge field.
struct FlowSpec {
  FlowKind kind = FlowKind::KXCF;
  double K = -1.0;
  std::optional<FrameMetric> g_ref;

  static FlowSpec make(FlowKind kind, double K,
                       std::optional<FrameMetric> g_ref = std::nullopt);
};

/// Koszul connection for left-invariant fields:
/// <nabla_{e_i} e_j, e_k> = (c_ijk - c_jki + c_kij) / 2, c_ijk = <[e_i,e_j], e_k>_g.
FrameConnection koszul_connection(const StructureConstants& C, const FrameMetric& g);

/// Frame curvature R(e_i,e_j)e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k
/// - nabla_{[e_i,e_j]} e_k, lowered via R_ijkl = g_lm R^m_ijk.
Riemann3 li_curvature(const StructureConstants& C, const FrameMetric& g,
                      const FrameConnection& conn);

/// First covariant derivative of a left-invariant symmetric 2-tensor along
/// e_a (purely algebraic: components are constant).
SymTensor2 li_covariant_derivative(const FrameConnection& conn, int a, const SymTensor2& h);

/// Rough Laplacian over a g-orthonormal frame (Cholesky frame):
/// Delta h = sum_i (nabla_{u_i} nabla_{u_i} h - nabla_{nabla_{u_i} u_i} h).
SymTensor2 li_tensor_laplacian(const StructureConstants& C, const FrameMetric& g,
                               const FrameConnection& conn, const SymTensor2& h);

struct DeturckField {
  Vec3 y;             ///< contravariant components Y^l
  SymTensor2 lie_term; ///< (L_Y g_ref)_ij = nabla_i Y_j + nabla_j Y_i
};

/// DeTurck vector field of a left-invariant tensor h against the reference
/// metric: Y^l = -g_ref^{kl} g_ref^{ij} nabla^{ref}_i h_jk (the gradient-of-
/// trace term vanishes on left-invariant data), plus its Lie-derivative term.
DeturckField deturck_field(const FrameMetric& g_ref, const FrameConnection& conn_ref,
                           const SymTensor2& h);

/// Time derivative of the requested flow at the metric gbar.
///
/// XCF:  -2X        KXCF: -2X - 2K^2 g        NXCF: -2X + (2/3) x g
/// DXCF: -2X + K L_{Y(g_ref, g)} g_ref - 2K^2 g
/// RF:   -2Rc       KNRF: -2Rc + 4K g
SymTensor2 flow_rhs(const FlowSpec& spec, const FrameMetric& gbar,
                    const StructureConstants& C);

/// Curvature bundle of a left-invariant metric (Koszul + frame curvature).
CurvatureBundle li_bundle(const StructureConstants& C, const FrameMetric& g);

} // namespace xcflab

#endif
