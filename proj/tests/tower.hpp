#pragma once

// Concrete basic-construction oracle for small models. M2 acts on
// L^2(M1) = C^d (x) C^d through vec(Y); left multiplication by A is A (x) I,
// right multiplication by R is I (x) R^T. Everything here is built from the
// defining conditional-expectation formulas, independently of the
// coordinate shortcuts in InclusionModel.

#include <cmath>

#include "bqms/inclusion.hpp"

namespace bqms::testing {

class Tower {
 public:
  explicit Tower(ModelPtr m) : m_(std::move(m)), d_(m_->gns_dim()) {
    const int n = m_->n();
    const int D = d_ * d_;
    e1_ = left(m_->e1());
    e2_ = CMatrix::Zero(D, D);
    if (m_->kind() == ModelKind::Spin) {
      for (int k = 0; k < n; ++k) e2_ += left(matrix_unit(n, k, k)) * right(matrix_unit(n, k, k));
    } else {
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          e2_ += left(kron(identity(n), matrix_unit(n, j, k))) * right(kron(identity(n), matrix_unit(n, k, j)));
      e2_ /= double(n);
    }
    for (int i = 0; i < m_->dim_m(); ++i) {
      CMatrix eta = std::sqrt(double(n)) * m_->basis_m(i);
      pp_.push_back(left(m_->embed(eta)));
    }
  }

  int D() const { return d_ * d_; }
  CMatrix left(const CMatrix& a) const { return kron(a, identity(d_)); }
  CMatrix right(const CMatrix& r) const { return kron(identity(d_), r.transpose()); }
  const CMatrix& e1() const { return e1_; }
  const CMatrix& e2() const { return e2_; }
  CMatrix m(const CMatrix& x) const { return left(m_->embed(x)); }
  CMatrix m1(const CMatrix& y) const { return left(y); }

  CMatrix b2(const CMatrix& b) const {
    const int n = m_->n();
    CMatrix out = CMatrix::Zero(D(), D());
    if (m_->kind() == ModelKind::Spin) {
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out += b(j, k) * left(matrix_unit(n, j, j)) * right(matrix_unit(n, k, k));
      return out;
    }
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int kk = 0; kk < n; ++kk)
          for (int ll = 0; ll < n; ++ll) {
            cd c = b(k * n + l, kk * n + ll);
            if (c == cd(0)) continue;
            out += c * left(kron(identity(n), matrix_unit(n, k, kk))) * right(kron(identity(n), matrix_unit(n, ll, l)));
          }
    return out;
  }

  // E_{M1}: returns the d x d element A with Z -> A (x) I
  CMatrix e_m1(const CMatrix& z) const {
    CMatrix a = CMatrix::Zero(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        cd s = 0;
        for (int k = 0; k < d_; ++k) s += z(i * d_ + k, j * d_ + k);
        a(i, j) = s / double(d_);
      }
    return a;
  }
  CMatrix e_m(const CMatrix& z) const { return m_->cond_expect_m(e_m1(z)); }
  CMatrix e_mprime(const CMatrix& z) const {
    CMatrix out = CMatrix::Zero(D(), D());
    for (const auto& eta : pp_) out += eta.adjoint() * z * eta;
    return m_->lambda() * out;
  }
  cd tau2(const CMatrix& z) const { return z.trace() / double(D()); }

  // J1 Z* J1 with J1 vec(Y) = vec(Y*)
  CMatrix conj(const CMatrix& z) const {
    CMatrix s = CMatrix::Zero(D(), D());
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) s(i * d_ + j, j * d_ + i) = 1.0;
    return s * z.transpose() * s;
  }

  double l32() const { return std::pow(m_->lambda(), -1.5); }
  CMatrix f12(const CMatrix& x) const { return l32() * e_mprime(m1(x) * e2_ * e1_); }
  CMatrix f12_inv(const CMatrix& y) const { return l32() * e_m1(y * e1_ * e2_); }
  CMatrix f21(const CMatrix& y) const { return l32() * e_m1(e2_ * e1_ * y); }
  CMatrix f21_inv(const CMatrix& x) const { return l32() * e_mprime(e1_ * e2_ * m1(x)); }

  // Phi(x) = lambda^{-5/2} E_M(e2 e1 Phi_hat x e1 e2)
  CMatrix channel_apply(const CMatrix& mult, const CMatrix& x) const {
    return std::pow(m_->lambda(), -2.5) * e_m(e2_ * e1_ * b2(mult) * m(x) * e1_ * e2_);
  }

 private:
  ModelPtr m_;
  int d_;
  CMatrix e1_, e2_;
  std::vector<CMatrix> pp_;
};

}  // namespace bqms::testing
