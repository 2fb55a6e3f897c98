#pragma once

// Shared generator families for tests and the acceptance binary.

#include "bqms/symmetry.hpp"
#include "reference_data.hpp"
#include "random.hpp"

namespace bqms::testing {

// Davies-type generator on M_n with diagonal density d: jumps E_ij with rates s_ij (d_i/d_j)^{1/2}, s symmetric.
inline Lindbladian davies_generator(ModelPtr m, const CMatrix& d, Rand& r) {
  const int n = m->n();
  CMatrix s = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s(i, j) = s(j, i) = r.uniform(0.3, 1.5);
  CMatrix l0 = CMatrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      CVector phi = vec(matrix_unit(n, i, j));
      l0 += s(i, j).real() * std::sqrt(d(i, i).real() / d(j, j).real()) * phi * phi.adjoint();
    }
  return build(m, l0, CMatrix::Zero(n, n));
}

// Rotate a diagonal Davies generator into the eigenbasis u of rho = u diag u*.
inline Lindbladian rotated_davies(ModelPtr m, Rand& r, CMatrix* rho_out) {
  const int n = m->n();
  CMatrix d = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = r.uniform(0.4, 2.0);
  d /= m->tau(d).real();
  Eigen::HouseholderQR<CMatrix> qr(r.gaussian(n, n));
  CMatrix u = qr.householderQ();
  Lindbladian base = davies_generator(m, d, r);
  // conjugating jumps v -> u v u* maps the multiplier by (conj u (x) u) . (conj u (x) u)*
  CMatrix w = kron(u.conjugate(), u);
  Lindbladian out(m, w * base.lhat() * w.adjoint());
  if (rho_out) *rho_out = u * d * u.adjoint();
  return out;
}

// Reversible Spin chain: P_jk = c_jk / pi_j with symmetric conductances c.
inline Lindbladian reversible_spin(ModelPtr m, Rand& r, CMatrix* pi_out) {
  const int n = m->n();
  CMatrix c = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) c(j, k) = c(k, j) = r.uniform(0.2, 1.2);
  CMatrix pi = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) pi(j, j) = c.row(j).sum();
  CMatrix rates = pi.inverse() * c;
  if (pi_out) *pi_out = pi / m->tau(pi).real();
  return build(m, m->f21_inv(rates), CMatrix::Zero(n, n));
}

inline Lindbladian four_point_generator() {
  auto m = InclusionModel::spin(4);
  return build(m, m->f21_inv(c4_transition()), CMatrix::Zero(4, 4));
}

inline SymmetryDatum four_point_delta() {
  auto m = InclusionModel::spin(4);
  return {m, m->f21_inv(c4_delta_transform()), false};
}

}  // namespace bqms::testing
