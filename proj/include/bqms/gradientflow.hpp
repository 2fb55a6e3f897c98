#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bqms/symmetry.hpp"

namespace bqms {

struct JointItem {
  CMatrix p;  // joint spectral projection in B2
  CMatrix f;  // f12_inv(p)
  double omega = 0;
  double mu = 1;
  int conj_index = -1;
};

// Simultaneous spectral data of L0, delta R(L0) and conj(delta) R(L0).
struct JointSpectrum {
  ModelPtr model;
  CMatrix l0, delta;
  std::vector<JointItem> items;
  double omega_residual = 0;  // |L0 delta^{-1/2} - sum omega p|
  double delta_residual = 0;  // |delta - sum mu p - (1 - R)| on R(L0)
  double commutator_residual = 0;
  double involution_residual = 0;  // max |omega_j - omega_j*|, |mu_j mu_j* - 1|
};
JointSpectrum joint_spectrum(const Lindbladian& l, const SymmetryDatum& d);

// d x d element f12_inv(p_j)
CMatrix joint_fourier(const JointSpectrum& js, int j);
CMatrix balanced_directional(const JointSpectrum& js, int j, const CMatrix& x);
CMatrix balanced_derivation(const JointSpectrum& js, const CMatrix& x);
CMatrix balanced_directional_adjoint(const JointSpectrum& js, int j, const CMatrix& y);
// |conj(d_j x) + omega_j^{1/2}[conj(x), F_j*]|
double balanced_conj_residual(const JointSpectrum& js, int j, const CMatrix& x);

// K_{D,mu}(v) = int_0^1 mu^{1-2s} D^s v D^{1-s} ds for D > 0.
CMatrix kd_apply(const CMatrix& d, double mu, const CMatrix& v);
CMatrix kd_inverse(const CMatrix& d, double mu, const CMatrix& v);
CMatrix kd_apply_quadrature(const CMatrix& d, double mu, const CMatrix& v, int nodes = 64);

// Trace dual tau(L*(y)* x) = tau(y* L(x)).
CMatrix generator_adjoint(const Lindbladian& l, const CMatrix& d);
CMatrix divergence_form_adjoint(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d);
CMatrix divergence_form_adjoint(const JointSpectrum& js, const CMatrix& d);

// Orthonormal basis of the self-adjoint traceless part of M for Re tau(a* b).
std::vector<CMatrix> hermitian_traceless_basis(const InclusionModel& m);

struct HiddenDensity {
  CMatrix x;        // self-adjoint, tau(x) = 0
  CMatrix density;  // exp(x) / tau(exp(x))
  double condition = 0;
  double orthogonality_residual = 0;
  double remainder = 0;  // weighted norm of the part orthogonal to the gradients
};
HiddenDensity hidden_density(const JointSpectrum& js, const CMatrix& d, double regularization = 0);

double relative_entropy(const CMatrix& rho, const CMatrix& sigma);

// lambda^{-1/2} sum_j tau1((d_j h)* K_j d_j h) with K_j = K_{D, mu_j^{1/2}}
double weighted_gradient_norm2(const JointSpectrum& js, const CMatrix& d, const CMatrix& h);

struct MetricResult {
  double norm = 0;
  CMatrix x;  // minimizer potential, X = grad x
  double residual = 0;
  double kkt_residual = 0;
};
MetricResult metric_norm(const JointSpectrum& js, const CMatrix& d, const CMatrix& ddot);

struct FlowTrace {
  std::vector<double> times;
  std::vector<CMatrix> densities;
  std::vector<double> entropies;
  std::vector<double> metric_norms;
  std::vector<double> rates;       // -1/2 |grad|^2 at each point
  std::vector<double> lsi_margins;  // filled by lsi_report
  std::vector<double> envelope_slacks;
  std::vector<double> talagrand_slacks;
  CMatrix hidden;  // D_Delta
  CMatrix limit;   // numeric long-time density
  double limit_entropy = 0;
  double trace_drift = 0;
  double min_eigenvalue = 0;
};
// D_t = Phi_t*(D0) by exact exponentials; D_Delta is computed at D0.
FlowTrace flow(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, const std::vector<double>& grid);
// central finite difference of H against the closed-form rate
double flow_rate_mismatch(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double t, double h = 1e-4);

struct LsiReport {
  double beta = 0;
  std::vector<double> times, margins, envelope_slacks;
  double min_margin = 0, min_envelope = 0;
};
LsiReport lsi_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, const std::vector<double>& grid,
                     double beta);

struct TalagrandReport {
  double beta = 0;
  double path_length = 0;
  double bound = 0;
  double slack = 0;
  double horizon = 0;
  // per grid time: bound at D_t minus the remaining path length from t
  std::vector<double> times, slacks;
};
TalagrandReport talagrand_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double beta);
TalagrandReport talagrand_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double beta,
                                 const std::vector<double>& grid);

// Generator on M1 given by jumps: J(Y) = sum_k c_k (1/2{V_k* V_k, Y} - V_k* Y V_k).
struct Extension {
  std::string name;
  std::vector<CMatrix> jumps;
  std::vector<double> weights;
};
CMatrix apply_extension(const Extension& j, const CMatrix& y);

struct IntertwiningResult {
  double beta = 0;
  double residual = 0;
  double restriction_residual = 0;
  int candidate = -1;
  std::string name;
  std::vector<double> candidate_residuals;
};
// max over basis x and jump directions k of |d_k L(x) - J(d_k x) - beta d_k x|
double intertwining_check(const Lindbladian& l, const Extension& j, double beta);
double extension_restriction_residual(const Lindbladian& l, const Extension& j);
double fit_intertwining_beta(const Lindbladian& l, const Extension& j);
IntertwiningResult find_intertwining(const Lindbladian& l, const std::vector<Extension>& candidates);

struct FermionModel {
  ModelPtr model;
  Lindbladian generator;
  SymmetryDatum delta;           // modular multiplier of the stationary state
  SymmetryDatum assembled_delta;  // 1 + sum (mu_j - 1) p_j from mu = e^{+-beta a_j}
  double delta_consistency = 0;   // |(delta - assembled) R(L0)|
  CMatrix stationary;             // tau-normalized stationary density
  std::vector<CMatrix> q, p, v;
  CMatrix w;
  std::vector<Extension> candidates;
  double relation_residual = 0;
  // jumps reported as v_j / sqrt(n) so that tau(v v*) = lambda^{1/2}; weights scaled by n
  std::vector<CMatrix> normalized_jumps;
  std::vector<double> normalized_weights;
};
FermionModel fermion_model(int m, const std::vector<double>& a, double beta);

}  // namespace bqms
