#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bqms {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

enum class ErrorCode {
  NotHermitian,
  SingularForLog,
  WrongSpace,
  ShapeMismatch,
  NotBimodule,
  NotPowerBounded,
  ModelMismatch,
  NotPositive,
  NegativeTime,
  NotConnected,
  InvalidDelta,
  NotErgodic,
  NotSymmetric,
  NotCommuting,
  SingularD,
  IllConditioned,
  SupportViolation,
  NotInRange,
  NoBeta,
  NoCandidate,
  RelationViolation,
  NotPositiveDensity,
  NotFinite,
  Internal,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Shared tolerance policy. Values are relative to the spectral norm of the
// quantity being tested. BQMS_TOL_SCALE multiplies every entry.
struct Tolerances {
  double hermiticity = 1e-10;
  double positivity_floor = 1e-10;  // eigenvalues >= -floor count as >= 0
  double equality = 1e-9;
  double cluster_gap = 1e-9;
  double log_cutoff = 1e-12;

  static Tolerances from_env();
  Tolerances scaled(double s) const;
};

// Reads are thread-safe; set_tolerances is meant for program start-up.
const Tolerances& tolerances();
void set_tolerances(const Tolerances& t);

struct HermEig {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

double norm2(const CMatrix& a);
double fro(const CMatrix& a);
double hermiticity_residual(const CMatrix& a);
bool is_finite(const CMatrix& a);
void require_finite(const CMatrix& a, const char* what);
void require_square(const CMatrix& a, const char* what);

HermEig herm_eig(const CMatrix& a);
double min_eig(const CMatrix& hermitian);

enum class MatFun { Exp, Log, Sqrt, Power, PositivePart };
CMatrix mat_fun(const CMatrix& a, MatFun f, double alpha = 1.0);
CMatrix mat_exp_h(const CMatrix& a);
CMatrix mat_log(const CMatrix& a);
CMatrix mat_sqrt(const CMatrix& a);
CMatrix mat_pow(const CMatrix& a, double alpha);
// Power alpha > 0 of a positive semidefinite matrix; eigenvalues above
// -floor are clamped to zero, anything lower throws NotPositive.
CMatrix psd_pow(const CMatrix& a, double alpha);

CMatrix expm_general(const CMatrix& a);

using MatrixIntegrand = std::function<CMatrix(double)>;
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre_rule(int nodes);
CMatrix gauss_legendre(const MatrixIntegrand& f, double a, double b, int nodes);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix identity(Eigen::Index n);
CMatrix matrix_unit(Eigen::Index n, Eigen::Index j, Eigen::Index k);

// Row-major vectorisation: vec(x)[j*cols + k] = x(j, k).
CVector vec(const CMatrix& x);
CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols);

// Orthogonal projection onto the column space, rank decided by the shared
// floor relative to the largest singular value.
CMatrix range_projection_matrix(const CMatrix& a);
// Orthonormal basis of the kernel of a.
CMatrix kernel_basis(const CMatrix& a, double rel_tol);

// Logarithmic mean and its reciprocal, stable near a == b.
double log_mean(double a, double b);
double inv_log_mean(double a, double b);

}  // namespace bqms
