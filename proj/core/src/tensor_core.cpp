#include "xcflab/tensor_core.hpp"

#include <cmath>

namespace xcflab {

namespace {
constexpr double kSqrt2Inv = 0.70710678118654752440;
}

SymTensor2::SymTensor2(const Mat3& m) : m_(m) {
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("SymTensor2: components not exactly symmetric");
  }
}

SymTensor2 SymTensor2::from_upper(double a11, double a22, double a33,
                                  double a12, double a13, double a23) {
  Mat3 m;
  m << a11, a12, a13,
       a12, a22, a23,
       a13, a23, a33;
  return SymTensor2(m);
}

Vec6 SymTensor2::packed() const {
  Vec6 v;
  v << m_(0, 0), m_(1, 1), m_(2, 2), m_(0, 1), m_(0, 2), m_(1, 2);
  return v;
}

SymTensor2 SymTensor2::from_packed(const Vec6& v) {
  return from_upper(v[0], v[1], v[2], v[3], v[4], v[5]);
}

bool FrameMetric::is_spd(const Mat3& g, double tol) {
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(g);
  return es.eigenvalues().minCoeff() > tol;
}

FrameMetric::FrameMetric(const Mat3& g) : g_(g) {
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("FrameMetric: components not exactly symmetric");
  }
  Eigen::LLT<Mat3> llt(g_);
  if (llt.info() != Eigen::Success) {
    throw DomainError("FrameMetric: matrix is not positive definite");
  }
  chol_l_ = llt.matrixL();
  ginv_ = llt.solve(Mat3::Identity());
  det_ = g_.determinant();
  if (!(det_ > 0.0)) {
    throw DomainError("FrameMetric: non-positive determinant");
  }
}

Riemann3::Riemann3() { r_.fill(0.0); }

Riemann3 Riemann3::from_components_unchecked(const std::array<double, 81>& r) {
  Riemann3 out;
  out.r_ = r;
  return out;
}

double Riemann3::symmetry_residual() const {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double r = (*this)(i, j, k, l);
          worst = std::max(worst, std::abs(r + (*this)(j, i, k, l)));
          worst = std::max(worst, std::abs(r + (*this)(i, j, l, k)));
          worst = std::max(worst, std::abs(r - (*this)(k, l, i, j)));
          worst = std::max(worst, std::abs(r + (*this)(j, k, i, l) + (*this)(k, i, j, l)));
        }
  return worst;
}

Riemann3 Riemann3::from_components(const std::array<double, 81>& r, double tol) {
  Riemann3 out = from_components_unchecked(r);
  double scale = 0.0;
  for (double v : r) scale = std::max(scale, std::abs(v));
  if (out.symmetry_residual() > tol * std::max(1.0, scale)) {
    throw DomainError("Riemann3: symmetry invariants violated");
  }
  return out;
}

Riemann3 constant_curvature_riemann(const FrameMetric& g, double K) {
  std::array<double, 81> r;
  const Mat3& m = g.mat();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          r[((i * 3 + j) * 3 + k) * 3 + l] =
              K * (m(i, l) * m(j, k) - m(i, k) * m(j, l));
  return Riemann3::from_components_unchecked(r);
}

SymTensor2 cross_curvature(const FrameMetric& /*g*/, const Mat3& P, const Riemann3& R) {
  Mat3 x = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          s += P(k, l) * R(i, k, l, j);
      x(i, j) = 0.5 * s;
    }
  Mat3 xs = 0.5 * (x + x.transpose());
  return SymTensor2(xs);
}

namespace {

/// Rotates (0,4) frame components: R'_ijkl = Q_ai Q_bj Q_ck Q_dl R_abcd,
/// i.e. the components of R in the frame e'_i = Q e_i (columns of Q).
Riemann3 rotate_riemann(const Riemann3& R, const Mat3& Q) {
  std::array<double, 81> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d)
                  s += Q(a, i) * Q(b, j) * Q(c, k) * Q(d, l) * R(a, b, c, d);
          out[((i * 3 + j) * 3 + k) * 3 + l] = s;
        }
  return Riemann3::from_components_unchecked(out);
}

} // namespace

Vec3 sectional_triple(const FrameMetric& g, const Riemann3& R) {
  if ((g.mat() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("sectional_triple: frame not orthonormal w.r.t. g");
  }
  // P in an orthonormal frame: P^{ij} = E_ij.
  CurvatureBundle tmp;
  Mat3 ric = Mat3::Zero();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += R(i, j, k, i);
      ric(j, k) = s;
    }
  const double scal = ric.trace();
  Mat3 E = ric - 0.5 * scal * Mat3::Identity();
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (E + E.transpose()));
  // Ascending eigenvalue order fixes the rotation (ties harmless).
  Mat3 Q = es.eigenvectors();
  if (Q.determinant() < 0) Q.col(2) *= -1.0;
  Riemann3 Rrot = rotate_riemann(R, Q);
  return Vec3(-Rrot(1, 2, 2, 1), -Rrot(0, 2, 2, 0), -Rrot(0, 1, 1, 0));
}

CurvatureBundle contract_to_bundle(const FrameMetric& g, const Riemann3& R) {
  CurvatureBundle b;
  b.riemann = R;
  const Mat3& gi = g.inverse();

  Mat3 ric = Mat3::Zero();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int l = 0; l < 3; ++l)
          s += gi(i, l) * R(i, j, k, l);
      ric(j, k) = s;
    }
  ric = (0.5 * (ric + ric.transpose())).eval();
  b.ricci = SymTensor2(ric);

  b.scalar = (gi * ric).trace();
  Mat3 E = ric - 0.5 * b.scalar * g.mat();
  b.einstein = SymTensor2(Mat3(0.5 * (E + E.transpose())));
  b.dual_p = gi * b.einstein.mat() * gi;
  b.dual_p = 0.5 * (b.dual_p + Mat3(b.dual_p.transpose()));
  b.cross = cross_curvature(g, b.dual_p, R);

  // Eigenvalues of P relative to g, i.e. of the endomorphism g^{-1} E.
  // Computed in the Cholesky-orthonormal frame where the pencil is symmetric.
  const Mat3& L = g.cholesky_l();
  Mat3 Eon = L.inverse() * b.einstein.mat() * L.transpose().inverse();
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (Eon + Eon.transpose()));
  b.p_eigenvalues = es.eigenvalues();
  return b;
}

SymTensor2 sym_basis(int k) {
  Mat3 m = Mat3::Zero();
  switch (k) {
    case 0: m(0, 0) = 1.0; break;
    case 1: m(1, 1) = 1.0; break;
    case 2: m(2, 2) = 1.0; break;
    case 3: m(0, 1) = m(1, 0) = kSqrt2Inv; break;
    case 4: m(0, 2) = m(2, 0) = kSqrt2Inv; break;
    case 5: m(1, 2) = m(2, 1) = kSqrt2Inv; break;
    default: throw DomainError("sym_basis: index out of range");
  }
  return SymTensor2(m);
}

Vec6 sym_coords(const SymTensor2& h) {
  Vec6 c;
  for (int k = 0; k < 6; ++k) {
    c[k] = (h.mat().array() * sym_basis(k).mat().array()).sum();
  }
  return c;
}

SymTensor2 sym_from_coords(const Vec6& c) {
  Mat3 m = Mat3::Zero();
  for (int k = 0; k < 6; ++k) m += c[k] * sym_basis(k).mat();
  return SymTensor2(m);
}

} // namespace xcflab
