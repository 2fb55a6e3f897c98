#pragma once

#include <memory>
#include <string>

#include "bqms/numerics.hpp"

namespace bqms {

enum class ModelKind { Spin, FullMatrix };
enum class Space { M, M1, B1, B2 };

const char* space_name(Space s);

struct BoxElement {
  Space space;
  CMatrix data;
};

// C inside C^n (Spin) or C inside M_n (FullMatrix). N = C in both.
//
// Coordinates:
//   M   : n x n matrices (diagonal for Spin)
//   M1  : B(L^2(M)), d x d with d = gns_dim; B1 = M1 since N = C
//   B2  : Spin -> n x n coefficient array over E_jj (x) E_kk, entrywise product
//         FullMatrix -> n^2 x n^2 matrix in M_n (x) M_n, row-major Kronecker
//   L^2(M) = C^d through vec (Spin: the diagonal, FullMatrix: row-major vec)
class InclusionModel {
 public:
  static std::shared_ptr<const InclusionModel> spin(int n);
  static std::shared_ptr<const InclusionModel> full_matrix(int n);

  ModelKind kind() const { return kind_; }
  int n() const { return n_; }
  double lambda() const { return lambda_; }
  int gns_dim() const { return d_; }
  int dim_m() const { return d_; }
  int dim_b1() const { return d_; }
  int dim_b2() const;  // complex dimension of B2
  int b2_rows() const { return kind_ == ModelKind::Spin ? n_ : n_ * n_; }
  std::string name() const;
  bool same_as(const InclusionModel& o) const { return kind_ == o.kind_ && n_ == o.n_; }

  // M and its GNS space
  CVector vec_m(const CMatrix& x) const;
  CMatrix unvec_m(const CVector& v) const;
  CMatrix basis_m(int i) const;  // i-th matrix unit of M, i < dim_m
  CMatrix one_m() const { return identity(n_); }
  cd tau(const CMatrix& x) const;
  void check_m(const CMatrix& x, const char* what) const;

  // M1
  CMatrix embed(const CMatrix& x) const;
  CMatrix cond_expect_m(const CMatrix& y) const;
  cd cond_expect_n(const CMatrix& x) const { return tau(x); }
  cd tau1(const CMatrix& y) const;
  CMatrix e1() const;
  CMatrix one_b1() const { return identity(d_); }
  CMatrix conj_b1(const CMatrix& y) const;

  // B2
  CMatrix one_b2() const;
  CMatrix e2() const;
  CMatrix b2_mul(const CMatrix& a, const CMatrix& b) const;
  CMatrix b2_adj(const CMatrix& a) const;
  CMatrix conj_b2(const CMatrix& a) const;
  cd tau2(const CMatrix& a) const;
  CMatrix b2_fun(const CMatrix& a, MatFun f, double alpha = 1.0) const;
  CMatrix b2_psd_pow(const CMatrix& a, double alpha) const;
  CMatrix b2_inverse(const CMatrix& a) const;
  double b2_min_eig(const CMatrix& a) const;
  double b2_norm(const CMatrix& a) const;
  double b2_herm_residual(const CMatrix& a) const;
  CMatrix b2_range(const CMatrix& a) const;
  // Hermitian b2 element as a matrix acting on C^{dim}: Spin gives diag(vec C).
  CMatrix b2_as_operator(const CMatrix& a) const;
  CMatrix b2_from_operator(const CMatrix& op) const;
  // Conditional expectation onto M1; lands in M' cap M1.
  CMatrix cond_expect_m1(const CMatrix& a) const;
  // Element of M' cap M1 viewed inside B2.
  CMatrix b2_from_commutant(const CMatrix& y) const;
  // Action of B2 on L^2(M1), vectors written as elements of M1.
  CMatrix b2_act(const CMatrix& a, const CMatrix& y) const;
  void check_b2(const CMatrix& a, const char* what) const;
  void check_b1(const CMatrix& a, const char* what) const;

  // Fourier transforms between B1 and B2: f12 is B1 -> B2, f21 is B2 -> B1.
  CMatrix f12(const CMatrix& x) const;
  CMatrix f12_inv(const CMatrix& y) const;
  CMatrix f21(const CMatrix& y) const;
  CMatrix f21_inv(const CMatrix& x) const;

 private:
  InclusionModel(ModelKind k, int n);
  ModelKind kind_;
  int n_;
  int d_;
  double lambda_;
};

using ModelPtr = std::shared_ptr<const InclusionModel>;

BoxElement fourier(const InclusionModel& m, const BoxElement& x);
BoxElement inverse_fourier(const InclusionModel& m, const BoxElement& y);
BoxElement contragredient(const InclusionModel& m, const BoxElement& x);
BoxElement convolve(const InclusionModel& m, const BoxElement& x, const BoxElement& y);
cd trace(const InclusionModel& m, const BoxElement& x, Space space);
BoxElement range_projection(const InclusionModel& m, const BoxElement& x);

// Raw-coordinate forms used by the other modules.
CMatrix convolve_b2(const InclusionModel& m, const CMatrix& x, const CMatrix& y);

}  // namespace bqms
