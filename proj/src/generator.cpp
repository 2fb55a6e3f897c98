#include "bqms/generator.hpp"

#include <cmath>

namespace bqms {

namespace {

// superoperators of left and right multiplication on vec(M)
CMatrix lmul(const InclusionModel& m, const CMatrix& a) {
  if (m.kind() == ModelKind::Spin) return CMatrix(a.diagonal().asDiagonal());
  return kron(a, identity(m.n()));
}

CMatrix rmul(const InclusionModel& m, const CMatrix& a) {
  if (m.kind() == ModelKind::Spin) return CMatrix(a.diagonal().asDiagonal());
  return kron(identity(m.n()), a.transpose());
}

double nrm(const InclusionModel& m, const CMatrix& b) { return m.b2_norm(b); }

CMatrix absorbing_transfer(const InclusionModel& m, const CMatrix& l0) {
  CMatrix k0 = m.f21(l0);
  CMatrix y0 = m.unvec_m(k0 * m.vec_m(m.one_m()));
  return 0.5 * (lmul(m, y0) + rmul(m, y0)) - k0;
}

}  // namespace

Lindbladian::Lindbladian(ModelPtr model, CMatrix lhat) : model_(std::move(model)), lhat_(std::move(lhat)) {
  const InclusionModel& m = *model_;
  m.check_b2(lhat_, "Lindbladian");
  require_finite(lhat_, "Lindbladian multiplier");
  Components c = split_components(m, lhat_);
  l0_ = c.l0;
  l1_ = c.l1;
  transfer_ = m.f21(lhat_);
}

const JumpDecomposition& Lindbladian::jumps() const {
  std::call_once(cache_->once, [this] { cache_->value = std::make_shared<JumpDecomposition>(jump_decomposition(*this)); });
  return *cache_->value;
}

Components split_components(const InclusionModel& m, const CMatrix& lhat) {
  CMatrix e2 = m.e2();
  CMatrix q = m.one_b2() - e2;
  Components c;
  c.l0 = -m.b2_mul(m.b2_mul(q, lhat), q);
  c.l1 = m.b2_mul(m.b2_mul(e2, lhat), q);
  return c;
}

Lindbladian build(ModelPtr model, const CMatrix& l0, const CMatrix& l1) {
  const InclusionModel& m = *model;
  m.check_b2(l0, "build L0");
  const Tolerances& tol = tolerances();
  double s = nrm(m, l0);
  if (m.b2_herm_residual(l0) > tol.hermiticity * (1.0 + s)) throw Error(ErrorCode::NotPositive, "L0 is not Hermitian");
  double me = m.b2_min_eig(0.5 * (l0 + m.b2_adj(l0)));
  if (me < -tol.positivity_floor * (1.0 + s)) throw Error(ErrorCode::NotPositive, "L0 min eigenvalue " + std::to_string(me));
  m.check_m(l1, "build L1");
  if (hermiticity_residual(l1) > tol.hermiticity * (1.0 + norm2(l1))) throw Error(ErrorCode::NotHermitian, "L1");
  CMatrix t = absorbing_transfer(m, l0) + cd(0, 1) * (lmul(m, l1) - rmul(m, l1));
  return {model, m.f21_inv(t)};
}

ValidityReport validate(const InclusionModel& m, const CMatrix& lhat) {
  m.check_b2(lhat, "validate");
  const Tolerances& tol = tolerances();
  ValidityReport r;
  double s = nrm(m, lhat);
  r.hermiticity_residual = m.b2_herm_residual(lhat);
  CMatrix l1 = (1.0 / m.lambda()) * m.cond_expect_m(m.e1() * m.f12_inv(lhat));
  r.unitality_residual = l1.norm();
  Components c = split_components(m, lhat);
  HermEig e = herm_eig(m.b2_as_operator(0.5 * (c.l0 + m.b2_adj(c.l0))));
  r.min_l0_eig = e.values.size() ? e.values(0) : 0.0;
  bool herm = r.hermiticity_residual <= tol.hermiticity * (1.0 + s);
  bool unital = r.unitality_residual <= tol.hermiticity * (1.0 + s);
  bool pos = r.min_l0_eig >= -tol.positivity_floor * (1.0 + s);
  if (!pos) r.positivity_witness = e.vectors.col(0);
  r.valid = herm && unital && pos;
  return r;
}

JumpDecomposition jump_decomposition(const Lindbladian& l) {
  const InclusionModel& m = l.model();
  const Tolerances& tol = tolerances();
  JumpDecomposition jd;
  const CMatrix& l0 = l.l0();
  double s = nrm(m, l0);
  double floor = tol.positivity_floor * (1.0 + s);
  CMatrix recon = CMatrix::Zero(l0.rows(), l0.cols());
  std::vector<double> omegas;
  if (m.kind() == ModelKind::Spin) {
    for (int j = 0; j < m.n(); ++j)
      for (int k = 0; k < m.n(); ++k) {
        double w = l0(j, k).real();
        if (w <= floor) continue;
        Jump jp;
        jp.omega = w;
        jp.p = CMatrix::Zero(m.n(), m.n());
        jp.p(j, k) = 1.0;
        jd.items.push_back(jp);
      }
  } else {
    HermEig e = herm_eig(l0);
    for (Eigen::Index i = e.values.size() - 1; i >= 0; --i) {
      double w = e.values(i);
      if (w <= floor) break;
      Jump jp;
      jp.omega = w;
      CVector phi = e.vectors.col(i);
      jp.p = phi * phi.adjoint();
      jp.v = CMatrix(unvec(phi, m.n(), m.n()).conjugate());
      jd.items.push_back(jp);
    }
  }
  // clusters of equal weight
  int cluster = -1;
  for (size_t i = 0; i < jd.items.size(); ++i) {
    bool fresh = true;
    if (i > 0) {
      double a = jd.items[i].omega, b = jd.items[i - 1].omega;
      fresh = std::abs(a - b) > tol.cluster_gap * std::max(a, b);
    }
    if (fresh) ++cluster;
    else if (m.kind() == ModelKind::FullMatrix) jd.gauge_note = true;
    jd.items[i].cluster = cluster;
    recon += jd.items[i].omega * jd.items[i].p;
    jd.items[i].f = m.f12_inv(jd.items[i].p);
  }
  jd.reconstruction_residual = m.b2_norm(recon - l0);

  // Hamiltonian part from the residual derivation L - L_a
  CMatrix tr = l.transfer() - absorbing_transfer(m, l0);
  const int n = m.n();
  if (m.kind() == ModelKind::FullMatrix) {
    CMatrix w = CMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        CMatrix rk = unvec(tr * vec(matrix_unit(n, j, k)), n, n);
        for (int ll = 0; ll < n; ++ll) w(ll, j) += rk(ll, k);
      }
    w /= cd(0, n);
    jd.hamiltonian = w;
    jd.hamiltonian_residual = (tr - cd(0, 1) * (lmul(m, w) - rmul(m, w))).norm();
  } else {
    jd.hamiltonian = CMatrix::Zero(n, n);
    jd.hamiltonian_residual = tr.norm();
  }
  return jd;
}

CMatrix multiplier_map(const InclusionModel& m, const CMatrix& b, const CMatrix& x) {
  return m.unvec_m(m.f21(b) * m.vec_m(x));
}

CMatrix apply_generator(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return m.unvec_m(l.transfer() * m.vec_m(x));
}

CMatrix apply_generator_via_multiplier(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return (1.0 / m.lambda()) * m.cond_expect_m(m.e1() * m.embed(x) * m.f12_inv(l.lhat()));
}

CMatrix apply_gkls(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  const JumpDecomposition& jd = l.jumps();
  CMatrix out = CMatrix::Zero(x.rows(), x.cols());
  CMatrix one = m.one_m();
  for (const Jump& j : jd.items) {
    if (j.v) {
      const CMatrix& v = *j.v;
      CMatrix vv = v.adjoint() * v;
      out += j.omega * (0.5 * (vv * x + x * vv) - v.adjoint() * x * v);
    } else {
      CMatrix k1 = multiplier_map(m, j.p, one);
      out += j.omega * (0.5 * (k1 * x + x * k1) - multiplier_map(m, j.p, x));
    }
  }
  const CMatrix& w = jd.hamiltonian;
  out += cd(0, 1) * (w * x - x * w);
  return out;
}

BimoduleChannel evolve(const Lindbladian& l, double t) {
  if (t < 0) throw Error(ErrorCode::NegativeTime, "evolve needs t >= 0");
  return BimoduleChannel::from_superoperator(l.model_ptr(), expm_general(-t * l.transfer()));
}

CMatrix apply_absorbing(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return m.unvec_m(absorbing_transfer(m, l.l0()) * m.vec_m(x));
}

CMatrix apply_absorbing_conj(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return m.unvec_m(absorbing_transfer(m, m.conj_b2(l.l0())) * m.vec_m(x));
}

CMatrix gradient_form(const Lindbladian& l, const CMatrix& x, const CMatrix& y) {
  const InclusionModel& m = l.model();
  const CMatrix& l0 = l.l0();
  CMatrix ys = y.adjoint();
  CMatrix k1 = multiplier_map(m, l0, m.one_m());
  CMatrix two = ys * k1 * x - ys * multiplier_map(m, l0, x) - multiplier_map(m, l0, ys) * x +
                multiplier_map(m, l0, ys * x);
  return 0.5 * two;
}

CMatrix directional_derivation(const Lindbladian& l, int j, const CMatrix& x) {
  const InclusionModel& m = l.model();
  const Jump& jp = l.jumps().items.at(j);
  return std::sqrt(jp.omega) * commutator(m.embed(x), jp.f);
}

CMatrix gradient_form_via_derivations(const Lindbladian& l, const CMatrix& x, const CMatrix& y) {
  const InclusionModel& m = l.model();
  CMatrix acc = CMatrix::Zero(m.gns_dim(), m.gns_dim());
  for (size_t j = 0; j < l.jumps().items.size(); ++j)
    acc += directional_derivation(l, int(j), y).adjoint() * directional_derivation(l, int(j), x);
  return 0.5 / std::sqrt(m.lambda()) * m.cond_expect_m(acc);
}

namespace {
CMatrix half_power_inverse_fourier(const InclusionModel& m, const CMatrix& b) {
  return m.f12_inv(m.b2_psd_pow(b, 0.5));
}
}  // namespace

CMatrix derivation(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return commutator(m.embed(x), half_power_inverse_fourier(m, l.l0()));
}

CMatrix conj_derivation(const Lindbladian& l, const CMatrix& x) {
  const InclusionModel& m = l.model();
  return commutator(m.embed(x), half_power_inverse_fourier(m, m.conj_b2(l.l0())));
}

CMatrix derivation_adjoint(const Lindbladian& l, const CMatrix& y) {
  const InclusionModel& m = l.model();
  CMatrix k = half_power_inverse_fourier(m, l.l0());
  return m.cond_expect_m(commutator(y, k.adjoint()));
}

CMatrix conj_derivation_adjoint(const Lindbladian& l, const CMatrix& y) {
  const InclusionModel& m = l.model();
  CMatrix k = half_power_inverse_fourier(m, m.conj_b2(l.l0()));
  return m.cond_expect_m(commutator(y, k.adjoint()));
}

PoincareReport poincare_margins(const Lindbladian& l) {
  const InclusionModel& m = l.model();
  PoincareReport r;
  const CMatrix& l0 = l.l0();
  CMatrix s = m.f12_inv(l0 + m.conj_b2(l0));
  r.symmetrization_residual = norm2(s - s.adjoint());
  if (r.symmetrization_residual > tolerances().hermiticity * (1.0 + norm2(s)))
    throw Error(ErrorCode::NotHermitian, "inverse Fourier of L0 + conj(L0)");
  HermEig e = herm_eig(s);
  const Eigen::Index d = e.values.size();
  r.beta = d >= 2 ? 0.5 * e.values(d - 2) : 0.0;
  CMatrix k = half_power_inverse_fourier(m, l0);
  double a = min_eig(m.cond_expect_m(k.adjoint() * k));
  double b = min_eig(m.cond_expect_m(k * k.adjoint()));
  r.beta_hat = std::min(a, b) / std::sqrt(m.lambda());
  r.bound0 = r.beta_hat - r.beta;
  r.bound1_diagnostic = m.tau2(l0).real() / std::sqrt(m.lambda()) - r.beta;
  r.connected = is_identity_projection(m, cs0(m, l0));
  r.asserted = r.connected && r.beta_hat > 0;
  double bound = r.bound0;
  ModelPtr mp = l.model_ptr();
  auto lp = std::make_shared<Lindbladian>(mp, l.lhat());
  r.margin = [lp, mp, bound](const CMatrix& x) {
    double g = mp->tau(gradient_form(*lp, x, x)).real();
    double n2 = mp->tau(x.adjoint() * x).real();
    return g - bound * n2;
  };
  return r;
}

}  // namespace bqms
