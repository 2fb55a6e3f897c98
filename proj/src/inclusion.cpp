#include "bqms/inclusion.hpp"

#include <cmath>

namespace bqms {

const char* space_name(Space s) {
  switch (s) {
    case Space::M: return "M";
    case Space::M1: return "M1";
    case Space::B1: return "B1";
    case Space::B2: return "B2";
  }
  return "?";
}

InclusionModel::InclusionModel(ModelKind k, int n) : kind_(k), n_(n) {
  if (n < 1) throw Error(ErrorCode::ShapeMismatch, "model size must be positive");
  d_ = k == ModelKind::Spin ? n : n * n;
  lambda_ = 1.0 / d_;
}

ModelPtr InclusionModel::spin(int n) {
  return std::shared_ptr<const InclusionModel>(new InclusionModel(ModelKind::Spin, n));
}

ModelPtr InclusionModel::full_matrix(int n) {
  return std::shared_ptr<const InclusionModel>(new InclusionModel(ModelKind::FullMatrix, n));
}

int InclusionModel::dim_b2() const { return kind_ == ModelKind::Spin ? n_ * n_ : n_ * n_ * n_ * n_; }

std::string InclusionModel::name() const {
  return (kind_ == ModelKind::Spin ? "spin(" : "full(") + std::to_string(n_) + ")";
}

void InclusionModel::check_m(const CMatrix& x, const char* what) const {
  if (x.rows() != n_ || x.cols() != n_) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": element of M must be n x n");
  if (kind_ == ModelKind::Spin) {
    CMatrix off = x;
    off.diagonal().setZero();
    if (off.norm() > tolerances().equality * (1.0 + x.norm()))
      throw Error(ErrorCode::WrongSpace, std::string(what) + ": Spin elements of M are diagonal");
  }
}

void InclusionModel::check_b2(const CMatrix& a, const char* what) const {
  int r = b2_rows();
  if (a.rows() != r || a.cols() != r) throw Error(ErrorCode::WrongSpace, std::string(what) + ": not a B2 element");
}

void InclusionModel::check_b1(const CMatrix& a, const char* what) const {
  if (a.rows() != d_ || a.cols() != d_) throw Error(ErrorCode::WrongSpace, std::string(what) + ": not a B1 element");
}

CVector InclusionModel::vec_m(const CMatrix& x) const {
  check_m(x, "vec_m");
  if (kind_ == ModelKind::Spin) return x.diagonal();
  return vec(x);
}

CMatrix InclusionModel::unvec_m(const CVector& v) const {
  if (v.size() != d_) throw Error(ErrorCode::ShapeMismatch, "unvec_m size");
  if (kind_ == ModelKind::Spin) return CMatrix(v.asDiagonal());
  return unvec(v, n_, n_);
}

CMatrix InclusionModel::basis_m(int i) const {
  if (kind_ == ModelKind::Spin) return matrix_unit(n_, i, i);
  return matrix_unit(n_, i / n_, i % n_);
}

cd InclusionModel::tau(const CMatrix& x) const { return x.trace() / double(n_); }

CMatrix InclusionModel::embed(const CMatrix& x) const {
  check_m(x, "embed");
  if (kind_ == ModelKind::Spin) return CMatrix(x.diagonal().asDiagonal());
  return kron(x, identity(n_));
}

CMatrix InclusionModel::cond_expect_m(const CMatrix& y) const {
  check_b1(y, "cond_expect_m");
  if (kind_ == ModelKind::Spin) return CMatrix(y.diagonal().asDiagonal());
  CMatrix out = CMatrix::Zero(n_, n_);
  for (int a = 0; a < n_; ++a)
    for (int c = 0; c < n_; ++c) {
      cd s = 0;
      for (int b = 0; b < n_; ++b) s += y(a * n_ + b, c * n_ + b);
      out(a, c) = s / double(n_);
    }
  return out;
}

cd InclusionModel::tau1(const CMatrix& y) const { return y.trace() / double(d_); }

CMatrix InclusionModel::e1() const {
  if (kind_ == ModelKind::Spin) return CMatrix::Constant(n_, n_, 1.0 / n_);
  CVector w = vec(identity(n_));
  return (w * w.transpose()) / double(n_);
}

CMatrix InclusionModel::conj_b1(const CMatrix& y) const {
  check_b1(y, "conj_b1");
  if (kind_ == ModelKind::Spin) return y.transpose();
  const int n = n_;
  CMatrix out(d_, d_);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) out(a * n + b, p * n + q) = y(q * n + p, b * n + a);
  return out;
}

CMatrix InclusionModel::one_b2() const {
  if (kind_ == ModelKind::Spin) return CMatrix::Ones(n_, n_);
  return identity(d_);
}

CMatrix InclusionModel::e2() const {
  if (kind_ == ModelKind::Spin) return identity(n_);
  CVector w = vec(identity(n_));
  return (w * w.transpose()) / double(n_);
}

CMatrix InclusionModel::b2_mul(const CMatrix& a, const CMatrix& b) const {
  if (kind_ == ModelKind::Spin) return a.cwiseProduct(b);
  return a * b;
}

CMatrix InclusionModel::b2_adj(const CMatrix& a) const {
  if (kind_ == ModelKind::Spin) return a.conjugate();
  return a.adjoint();
}

CMatrix InclusionModel::conj_b2(const CMatrix& a) const {
  check_b2(a, "conj_b2");
  if (kind_ == ModelKind::Spin) return a.transpose();
  const int n = n_;
  CMatrix out(d_, d_);
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int ga = 0; ga < n; ++ga)
        for (int de = 0; de < n; ++de) out(al * n + be, ga * n + de) = a(de * n + ga, be * n + al);
  return out;
}

cd InclusionModel::tau2(const CMatrix& a) const {
  if (kind_ == ModelKind::Spin) return a.sum() / double(n_ * n_);
  return a.trace() / double(d_);
}

CMatrix InclusionModel::b2_fun(const CMatrix& a, MatFun f, double alpha) const {
  check_b2(a, "b2_fun");
  if (kind_ == ModelKind::FullMatrix) return mat_fun(a, f, alpha);
  // commutative: one real eigenvalue per entry
  const Tolerances& tol = tolerances();
  double scale = a.cwiseAbs().maxCoeff();
  if (b2_herm_residual(a) > tol.hermiticity * (1.0 + scale)) throw Error(ErrorCode::NotHermitian, "b2_fun");
  bool needs_positive = f == MatFun::Log || f == MatFun::Sqrt ||
                        (f == MatFun::Power && (alpha != std::round(alpha) || alpha < 0));
  CMatrix out(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < n_; ++k) {
      double x = a(j, k).real();
      if (needs_positive && !(x > tol.log_cutoff * scale))
        throw Error(ErrorCode::SingularForLog, "entry " + std::to_string(x));
      double g = 0;
      switch (f) {
        case MatFun::Exp: g = std::exp(x); break;
        case MatFun::Log: g = std::log(x); break;
        case MatFun::Sqrt: g = std::sqrt(x); break;
        case MatFun::Power: g = std::pow(x, alpha); break;
        case MatFun::PositivePart: g = x > 0 ? x : 0.0; break;
      }
      out(j, k) = g;
    }
  return out;
}

CMatrix InclusionModel::b2_psd_pow(const CMatrix& a, double alpha) const {
  check_b2(a, "b2_psd_pow");
  if (kind_ == ModelKind::FullMatrix) return psd_pow(a, alpha);
  double scale = a.cwiseAbs().maxCoeff();
  if (b2_herm_residual(a) > tolerances().hermiticity * (1.0 + scale)) throw Error(ErrorCode::NotHermitian, "b2_psd_pow");
  CMatrix out(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < n_; ++k) {
      double x = a(j, k).real();
      if (x < -tolerances().positivity_floor * (1.0 + scale))
        throw Error(ErrorCode::NotPositive, "b2_psd_pow entry " + std::to_string(x));
      out(j, k) = x > 0 ? std::pow(x, alpha) : 0.0;
    }
  return out;
}

CMatrix InclusionModel::b2_inverse(const CMatrix& a) const {
  check_b2(a, "b2_inverse");
  if (kind_ == ModelKind::Spin) {
    CMatrix out(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        if (std::abs(a(j, k)) == 0.0) throw Error(ErrorCode::InvalidDelta, "b2_inverse of a singular element");
        out(j, k) = 1.0 / a(j, k);
      }
    return out;
  }
  Eigen::FullPivLU<CMatrix> lu(a);
  if (!lu.isInvertible()) throw Error(ErrorCode::InvalidDelta, "b2_inverse of a singular element");
  return lu.inverse();
}

double InclusionModel::b2_min_eig(const CMatrix& a) const {
  return min_eig(b2_as_operator(a));
}

double InclusionModel::b2_norm(const CMatrix& a) const {
  if (kind_ == ModelKind::Spin) return a.cwiseAbs().maxCoeff();
  return norm2(a);
}

double InclusionModel::b2_herm_residual(const CMatrix& a) const { return b2_norm(a - b2_adj(a)); }

CMatrix InclusionModel::b2_range(const CMatrix& a) const {
  check_b2(a, "b2_range");
  if (kind_ == ModelKind::FullMatrix) return range_projection_matrix(a);
  double cut = tolerances().equality * std::max(1.0, b2_norm(a));
  CMatrix out = CMatrix::Zero(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < n_; ++k)
      if (std::abs(a(j, k)) > cut) out(j, k) = 1.0;
  return out;
}

CMatrix InclusionModel::b2_as_operator(const CMatrix& a) const {
  check_b2(a, "b2_as_operator");
  if (kind_ == ModelKind::Spin) return CMatrix(vec(a).asDiagonal());
  return a;
}

CMatrix InclusionModel::b2_from_operator(const CMatrix& op) const {
  if (kind_ == ModelKind::Spin) return unvec(op.diagonal(), n_, n_);
  return op;
}

CMatrix InclusionModel::cond_expect_m1(const CMatrix& a) const {
  check_b2(a, "cond_expect_m1");
  if (kind_ == ModelKind::Spin) {
    CVector rows = a.rowwise().sum() / double(n_);
    return CMatrix(rows.asDiagonal());
  }
  const int n = n_;
  CMatrix p = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int kk = 0; kk < n; ++kk) {
      cd s = 0;
      for (int l = 0; l < n; ++l) s += a(k * n + l, kk * n + l);
      p(k, kk) = s / double(n);
    }
  return kron(identity(n), p);
}

CMatrix InclusionModel::b2_from_commutant(const CMatrix& y) const {
  check_b1(y, "b2_from_commutant");
  if (kind_ == ModelKind::Spin) {
    CMatrix off = y;
    off.diagonal().setZero();
    if (off.norm() > tolerances().equality * (1.0 + y.norm()))
      throw Error(ErrorCode::WrongSpace, "element is not in the relative commutant");
    CMatrix out(n_, n_);
    for (int j = 0; j < n_; ++j) out.row(j).setConstant(y(j, j));
    return out;
  }
  const int n = n_;
  CMatrix x = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int kk = 0; kk < n; ++kk) {
      cd s = 0;
      for (int i = 0; i < n; ++i) s += y(i * n + k, i * n + kk);
      x(k, kk) = s / double(n);
    }
  if ((kron(identity(n), x) - y).norm() > tolerances().equality * (1.0 + y.norm()))
    throw Error(ErrorCode::WrongSpace, "element is not in the relative commutant");
  return kron(x, identity(n));
}

CMatrix InclusionModel::b2_act(const CMatrix& a, const CMatrix& y) const {
  check_b2(a, "b2_act");
  check_b1(y, "b2_act");
  if (kind_ == ModelKind::Spin) return a.cwiseProduct(y);
  const int n = n_;
  CMatrix out(d_, d_);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CMatrix z = y.block(i * n, j * n, n, n);
      CVector w = a * vec(z);
      out.block(i * n, j * n, n, n) = unvec(w, n, n);
    }
  return out;
}

CMatrix InclusionModel::f12(const CMatrix& x) const {
  check_b1(x, "fourier");
  if (kind_ == ModelKind::Spin) return std::sqrt(double(n_)) * x;
  const int n = n_;
  CMatrix out(d_, d_);
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int ga = 0; ga < n; ++ga)
        for (int de = 0; de < n; ++de) out(al * n + be, ga * n + de) = x(ga * n + al, de * n + be);
  return out;
}

CMatrix InclusionModel::f12_inv(const CMatrix& y) const {
  check_b2(y, "inverse_fourier");
  if (kind_ == ModelKind::Spin) return y / std::sqrt(double(n_));
  const int n = n_;
  CMatrix out(d_, d_);
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int ga = 0; ga < n; ++ga)
        for (int de = 0; de < n; ++de) out(ga * n + al, de * n + be) = y(al * n + be, ga * n + de);
  return out;
}

CMatrix InclusionModel::f21(const CMatrix& y) const {
  check_b2(y, "fourier");
  if (kind_ == ModelKind::Spin) return y.transpose() / std::sqrt(double(n_));
  const int n = n_;
  CMatrix out(d_, d_);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) out(a * n + b, p * n + q) = y(p * n + a, q * n + b);
  return out;
}

CMatrix InclusionModel::f21_inv(const CMatrix& x) const {
  check_b1(x, "inverse_fourier");
  if (kind_ == ModelKind::Spin) return std::sqrt(double(n_)) * x.transpose();
  const int n = n_;
  CMatrix out(d_, d_);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) out(p * n + a, q * n + b) = x(a * n + b, p * n + q);
  return out;
}

namespace {
bool is_b1(Space s) { return s == Space::B1 || s == Space::M1; }
}  // namespace

BoxElement fourier(const InclusionModel& m, const BoxElement& x) {
  if (!is_b1(x.space)) throw Error(ErrorCode::WrongSpace, std::string("fourier expects B1, got ") + space_name(x.space));
  return {Space::B2, m.f12(x.data)};
}

BoxElement inverse_fourier(const InclusionModel& m, const BoxElement& y) {
  if (y.space != Space::B2) throw Error(ErrorCode::WrongSpace, std::string("inverse_fourier expects B2, got ") + space_name(y.space));
  return {Space::B1, m.f12_inv(y.data)};
}

BoxElement contragredient(const InclusionModel& m, const BoxElement& x) {
  if (is_b1(x.space)) return {x.space, m.conj_b1(x.data)};
  if (x.space == Space::B2) return {Space::B2, m.conj_b2(x.data)};
  throw Error(ErrorCode::WrongSpace, "contragredient is defined on B1 and B2");
}

CMatrix convolve_b2(const InclusionModel& m, const CMatrix& x, const CMatrix& y) {
  return m.f21_inv(m.f21(y) * m.f21(x));
}

BoxElement convolve(const InclusionModel& m, const BoxElement& x, const BoxElement& y) {
  if (x.space != Space::B2 || y.space != Space::B2) throw Error(ErrorCode::WrongSpace, "convolve expects B2 elements");
  return {Space::B2, convolve_b2(m, x.data, y.data)};
}

cd trace(const InclusionModel& m, const BoxElement& x, Space space) {
  bool match = x.space == space || (is_b1(x.space) && is_b1(space));
  if (!match) throw Error(ErrorCode::WrongSpace, "trace space does not match the element");
  switch (space) {
    case Space::M: m.check_m(x.data, "trace"); return m.tau(x.data);
    case Space::M1:
    case Space::B1: m.check_b1(x.data, "trace"); return m.tau1(x.data);
    case Space::B2: m.check_b2(x.data, "trace"); return m.tau2(x.data);
  }
  return 0.0;
}

BoxElement range_projection(const InclusionModel& m, const BoxElement& x) {
  if (x.space == Space::B2) return {Space::B2, m.b2_range(x.data)};
  return {x.space, range_projection_matrix(x.data)};
}

}  // namespace bqms
