#ifndef XCFLAB_TENSOR_CORE_HPP
#define XCFLAB_TENSOR_CORE_HPP

#include <Eigen/Dense>
#include <array>

#include "xcflab/errors.hpp"

namespace xcflab {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Symmetric 3x3 tensor with both indices down (same variance as the metric).
class SymTensor2 {
public:
  SymTensor2() : m_(Mat3::Zero()) {}
  explicit SymTensor2(const Mat3& m);

  static SymTensor2 from_upper(double a11, double a22, double a33,
                               double a12, double a13, double a23);

  const Mat3& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  /// Components in the fixed order (11, 22, 33, 12, 13, 23).
  Vec6 packed() const;
  static SymTensor2 from_packed(const Vec6& v);

  double frobenius() const { return m_.norm(); }

  SymTensor2 operator+(const SymTensor2& o) const { return SymTensor2(Mat3(m_ + o.m_)); }
  SymTensor2 operator-(const SymTensor2& o) const { return SymTensor2(Mat3(m_ - o.m_)); }
  SymTensor2 operator*(double s) const { return SymTensor2(Mat3(m_ * s)); }

private:
  Mat3 m_;
};

inline SymTensor2 operator*(double s, const SymTensor2& t) { return t * s; }

/// Metric components in a fixed frame; symmetric positive definite.
class FrameMetric {
public:
  explicit FrameMetric(const Mat3& g);

  static FrameMetric identity() { return FrameMetric(Mat3::Identity()); }

  const Mat3& mat() const { return g_; }
  double operator()(int i, int j) const { return g_(i, j); }
  const Mat3& inverse() const { return ginv_; }
  double det() const { return det_; }
  /// Lower-triangular Cholesky factor, g = L L^T.
  const Mat3& cholesky_l() const { return chol_l_; }

  SymTensor2 as_tensor() const { return SymTensor2(g_); }

  static bool is_spd(const Mat3& g, double tol = 0.0);

private:
  Mat3 g_;
  Mat3 ginv_;
  Mat3 chol_l_;
  double det_;
};

/// Frame components R_ijkl of the (0,4) curvature tensor.
///
/// Sign convention: R_ijji (i != j, orthonormal frame) are the sectional
/// curvatures, and R_ijkl = g_lm R^m_ijk.
class Riemann3 {
public:
  Riemann3();

  /// Validates antisymmetry, pair symmetry and the first Bianchi identity.
  static Riemann3 from_components(const std::array<double, 81>& r, double tol = 1e-10);
  /// No validation; for fields carrying discretization error.
  static Riemann3 from_components_unchecked(const std::array<double, 81>& r);

  double operator()(int i, int j, int k, int l) const {
    return r_[((i * 3 + j) * 3 + k) * 3 + l];
  }
  double& at(int i, int j, int k, int l) {
    return r_[((i * 3 + j) * 3 + k) * 3 + l];
  }
  const std::array<double, 81>& raw() const { return r_; }

  /// Largest violation over the antisymmetry / pair-symmetry / Bianchi set.
  double symmetry_residual() const;

private:
  std::array<double, 81> r_{};
};

/// All pointwise curvature quantities derived from (g, Riemann).
struct CurvatureBundle {
  Riemann3 riemann;
  SymTensor2 ricci;     ///< ricci_jk = g^{il} R_ijkl
  double scalar = 0.0;  ///< g^{jk} ricci_jk
  SymTensor2 einstein;  ///< E = ricci - (1/2) scalar g
  Mat3 dual_p;          ///< P^{ij} = g^{ik} g^{jl} E_kl (indices up)
  SymTensor2 cross;     ///< X_ij = (1/2) P^{kl} R_ikjl-pattern, see cross_curvature
  Vec3 p_eigenvalues;   ///< (a, b, c), ascending
};

/// R_ijkl = K (g_il g_jk - g_ik g_jl): the constant-curvature tensor.
Riemann3 constant_curvature_riemann(const FrameMetric& g, double K);

/// Contracts a Riemann tensor to Ricci, scalar, Einstein, dual P, cross X and
/// the P-eigenvalue triple.
CurvatureBundle contract_to_bundle(const FrameMetric& g, const Riemann3& R);

/// X_ij = (1/2) P^{kl} R_{i k l j}.
SymTensor2 cross_curvature(const FrameMetric& g, const Mat3& P, const Riemann3& R);

/// P-eigenvalue triple (a, b, c) read off the curvature tensor in an
/// orthonormal frame rotated to diagonalize P: a = -R_2332, b = -R_1331,
/// c = -R_1221. Requires g = identity (orthonormal frame); ties between
/// eigenvalues of P are broken by ascending order.
Vec3 sectional_triple(const FrameMetric& g, const Riemann3& R);

/// Orthonormal basis of symmetric tensors for the Frobenius pairing, in the
/// order E11, E22, E33, (E12+E21)/sqrt2, (E13+E31)/sqrt2, (E23+E32)/sqrt2.
SymTensor2 sym_basis(int k);
/// Coordinates of h in the sym_basis (Frobenius coefficients).
Vec6 sym_coords(const SymTensor2& h);
SymTensor2 sym_from_coords(const Vec6& c);

} // namespace xcflab

#endif
