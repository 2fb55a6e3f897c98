#include "bqms/numerics.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace bqms {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::SingularForLog: return "SingularForLog";
    case ErrorCode::WrongSpace: return "WrongSpace";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotBimodule: return "NotBimodule";
    case ErrorCode::NotPowerBounded: return "NotPowerBounded";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::NotErgodic: return "NotErgodic";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotCommuting: return "NotCommuting";
    case ErrorCode::SingularD: return "SingularD";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::NotInRange: return "NotInRange";
    case ErrorCode::NoBeta: return "NoBeta";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::RelationViolation: return "RelationViolation";
    case ErrorCode::NotPositiveDensity: return "NotPositiveDensity";
    case ErrorCode::NotFinite: return "NotFinite";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

Tolerances Tolerances::scaled(double s) const {
  Tolerances t = *this;
  t.hermiticity *= s;
  t.positivity_floor *= s;
  t.equality *= s;
  t.cluster_gap *= s;
  return t;
}

Tolerances Tolerances::from_env() {
  Tolerances t;
  if (const char* env = std::getenv("BQMS_TOL_SCALE")) {
    char* end = nullptr;
    double s = std::strtod(env, &end);
    if (end != env && std::isfinite(s) && s > 0) t = t.scaled(s);
  }
  return t;
}

namespace {
std::mutex tol_mutex;
Tolerances& tol_storage() {
  static Tolerances t = Tolerances::from_env();
  return t;
}
}  // namespace

const Tolerances& tolerances() { return tol_storage(); }

void set_tolerances(const Tolerances& t) {
  std::lock_guard<std::mutex> lock(tol_mutex);
  tol_storage() = t;
}

double norm2(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

double fro(const CMatrix& a) { return a.norm(); }

double hermiticity_residual(const CMatrix& a) {
  require_square(a, "hermiticity_residual");
  return norm2(a - a.adjoint());
}

bool is_finite(const CMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i].real()) || !std::isfinite(a.data()[i].imag())) return false;
  }
  return true;
}

void require_finite(const CMatrix& a, const char* what) {
  if (!is_finite(a)) throw Error(ErrorCode::NotFinite, what);
}

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " needs a square matrix");
}

HermEig herm_eig(const CMatrix& a) {
  require_square(a, "herm_eig");
  require_finite(a, "herm_eig input");
  double nrm = norm2(a);
  double res = norm2(a - a.adjoint());
  if (res > tolerances().hermiticity * (1.0 + nrm)) {
    throw Error(ErrorCode::NotHermitian, "residual " + std::to_string(res));
  }
  CMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

double min_eig(const CMatrix& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  return herm_eig(hermitian).values(0);
}

CMatrix mat_fun(const CMatrix& a, MatFun f, double alpha) {
  HermEig e = herm_eig(a);
  const Eigen::Index n = e.values.size();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(e.values(i)));
  bool needs_positive = f == MatFun::Log || f == MatFun::Sqrt ||
                        (f == MatFun::Power && alpha != std::round(alpha));
  if (f == MatFun::Power && alpha < 0) needs_positive = true;
  if (needs_positive && n > 0) {
    double cutoff = tolerances().log_cutoff * scale;
    if (!(e.values(0) > cutoff)) {
      throw Error(ErrorCode::SingularForLog, "min eigenvalue " + std::to_string(e.values(0)));
    }
  }
  RVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = e.values(i);
    switch (f) {
      case MatFun::Exp: g(i) = std::exp(x); break;
      case MatFun::Log: g(i) = std::log(x); break;
      case MatFun::Sqrt: g(i) = std::sqrt(x); break;
      case MatFun::Power: g(i) = std::pow(x, alpha); break;
      case MatFun::PositivePart: g(i) = x > 0 ? x : 0.0; break;
    }
  }
  return e.vectors * g.cast<cd>().asDiagonal() * e.vectors.adjoint();
}

CMatrix mat_exp_h(const CMatrix& a) { return mat_fun(a, MatFun::Exp); }
CMatrix mat_log(const CMatrix& a) { return mat_fun(a, MatFun::Log); }
CMatrix mat_sqrt(const CMatrix& a) { return mat_fun(a, MatFun::Sqrt); }
CMatrix mat_pow(const CMatrix& a, double alpha) { return mat_fun(a, MatFun::Power, alpha); }

CMatrix psd_pow(const CMatrix& a, double alpha) {
  HermEig e = herm_eig(a);
  double scale = e.values.size() ? std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1))) : 0.0;
  RVector g(e.values.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double x = e.values(i);
    if (x < -tolerances().positivity_floor * (1.0 + scale))
      throw Error(ErrorCode::NotPositive, "psd_pow eigenvalue " + std::to_string(x));
    g(i) = x > 0 ? std::pow(x, alpha) : 0.0;
  }
  return e.vectors * g.cast<cd>().asDiagonal() * e.vectors.adjoint();
}

CMatrix expm_general(const CMatrix& a) {
  require_square(a, "expm_general");
  require_finite(a, "expm_general input");
  if (a.size() == 0) return a;
  return a.exp();
}

GaussRule gauss_legendre_rule(int nodes) {
  if (nodes < 1) throw Error(ErrorCode::ShapeMismatch, "gauss_legendre needs at least one node");
  GaussRule rule;
  rule.nodes.resize(nodes);
  rule.weights.resize(nodes);
  const int m = (nodes + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (nodes + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= nodes; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = nodes * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    // recompute derivative at the converged root
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= nodes; ++j) {
      double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = nodes * (z * p1 - p2) / (z * z - 1.0);
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = -z;
    rule.nodes[nodes - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[nodes - 1 - i] = w;
  }
  return rule;
}

CMatrix gauss_legendre(const MatrixIntegrand& f, double a, double b, int nodes) {
  GaussRule rule = gauss_legendre_rule(nodes);
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  CMatrix acc;
  for (int i = 0; i < nodes; ++i) {
    CMatrix v = f(mid + half * rule.nodes[i]);
    if (i == 0) acc = CMatrix::Zero(v.rows(), v.cols());
    acc += (half * rule.weights[i]) * v;
  }
  return acc;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

CMatrix matrix_unit(Eigen::Index n, Eigen::Index j, Eigen::Index k) {
  CMatrix e = CMatrix::Zero(n, n);
  e(j, k) = 1.0;
  return e;
}

CVector vec(const CMatrix& x) {
  CVector v(x.size());
  for (Eigen::Index j = 0; j < x.rows(); ++j)
    for (Eigen::Index k = 0; k < x.cols(); ++k) v(j * x.cols() + k) = x(j, k);
  return v;
}

CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw Error(ErrorCode::ShapeMismatch, "unvec size");
  CMatrix x(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index k = 0; k < cols; ++k) x(j, k) = v(j * cols + k);
  return x;
}

CMatrix range_projection_matrix(const CMatrix& a) {
  if (a.size() == 0) return a;
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullU);
  const RVector& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  double cut = tolerances().equality * std::max(1.0, smax);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  CMatrix u = svd.matrixU().leftCols(r);
  return u * u.adjoint();
}

CMatrix kernel_basis(const CMatrix& a, double rel_tol) {
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  double cut = rel_tol * std::max(1.0, smax);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixV().rightCols(a.cols() - r);
}

double log_mean(double a, double b) {
  if (!(a > 0) || !(b > 0)) throw Error(ErrorCode::SingularD, "log_mean needs positive arguments");
  double r = a / b - 1.0;
  if (std::abs(r) < 1e-6) return b * (1.0 + r / 2.0 - r * r / 12.0 + r * r * r / 24.0);
  return b * r / std::log1p(r);
}

double inv_log_mean(double a, double b) { return 1.0 / log_mean(a, b); }

}  // namespace bqms
