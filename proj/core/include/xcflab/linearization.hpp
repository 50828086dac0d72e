#ifndef XCFLAB_LINEARIZATION_HPP
#define XCFLAB_LINEARIZATION_HPP

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "xcflab/chart_calculus.hpp"
#include "xcflab/homogeneous_geometry.hpp"

namespace xcflab {

/// Constant-curvature linearization of the DeTurck cross curvature flow:
/// A_g h = -K Delta h - 2 K^2 H g + 2 K^2 h. The caller's substrate supplies
/// Delta h and H. Also evaluates the equivalent Lichnerowicz form
/// -K (Delta_l h + 4 K h) with Delta_l h = Delta h + H Rc - R h and asserts
/// agreement to 1e-12.
SymTensor2 apply_A_constant(const SymTensor2& h, const SymTensor2& lap_h, double H,
                            const FrameMetric& g, double K);

/// Normalized-Ricci-flow linearization at K = -1: Delta h - 2 H g + 2 h.
SymTensor2 apply_knrf_lin(const SymTensor2& h, const SymTensor2& lap_h, double H,
                          const FrameMetric& g);

struct FrechetResult {
  SymTensor2 derivative;
  /// Relative change between the eps and eps/2 central differences.
  double richardson_rel_error = 0.0;
};

/// Central-difference Frechet derivative (F(g+eh) - F(g-eh)) / (2e) of a
/// metric-to-tensor map on the frame substrate, with Richardson check.
FrechetResult fd_frechet(const std::function<SymTensor2(const FrameMetric&)>& F,
                         const FrameMetric& gbar, const SymTensor2& h, double eps);

struct ComparisonEntry {
  std::string name;
  double value = 0.0;
};

/// Restricted Jacobian of a flow right-hand side on the 6-dimensional space
/// of left-invariant symmetric tensors, with spectrum and analytic-vs-FD
/// comparisons.
struct LinearizationReport {
  Mat6 jacobian = Mat6::Zero();
  std::array<std::complex<double>, 6> eigenvalues{}; ///< nonincreasing real part
  std::vector<ComparisonEntry> comparison;
  double richardson_delta = 0.0; ///< max entry change when eps halves
};

/// FD Jacobian of flow_rhs at a fixed point g*, in the sym_basis. Throws
/// DomainError if |rhs(g*)| > 1e-10. For DXCF the comparison includes the
/// entrywise distance to the analytic operator assembled from
/// li_tensor_laplacian; for KNRF the gauge (DeTurck) term is reported
/// separately.
LinearizationReport frame_jacobian(const FlowSpec& spec, const FrameMetric& gstar,
                                   const StructureConstants& C, double eps = 1e-5);

/// Symbol coefficients of the principal symbol analysis.
struct SymbolInput {
  Mat3 lambda = Mat3::Zero(); ///< symmetric, Lambda^{11} >= 0
};

struct SymbolResult {
  Mat6 matrix = Mat6::Zero();
  std::array<std::complex<double>, 6> spectrum{};
};

/// Builds the 6x6 principal-symbol matrix of the unmodified flow
/// linearization, acting on (h11, h12, h13, h22, h33, h23), and returns its
/// eigenvalue multiset: {Lambda^{11} x3, 0 x3}.
SymbolResult buckland_symbol(const SymbolInput& in);

/// General-background linearization of the DeTurck cross curvature flow on a
/// coordinate chart, evaluated term by term from chart-FD curvature,
/// covariant derivatives, the DeTurck field and the Lie derivative. The
/// index readings are the ones adjudicated against the central-difference
/// Frechet oracle (see printed_linearization for the literal display).
ChartField apply_A_general(const ChartContext& ctx, const ChartField& gbar,
                           const ChartField& h, double K = -1.0);

/// The linearization display evaluated with its literal printed readings.
/// Differs from the Frechet derivative by curvature-quadratic terms that at
/// constant curvature equal +2 K^2 h; kept for per-term diagnostics.
ChartField printed_linearization(const ChartContext& ctx, const ChartField& gbar,
                          const ChartField& h, double K = -1.0);

/// Per-term L2 norms of the printed display and the L2 norm of
/// (printed - adjudicated), for the comparison report.
std::vector<ComparisonEntry> printed_linearization_term_report(const ChartContext& ctx,
                                                const ChartField& gbar,
                                                const ChartField& h, double K = -1.0);

} // namespace xcflab

#endif
