#include "bqms/channel.hpp"

#include <cmath>

namespace bqms {

BimoduleChannel::BimoduleChannel(ModelPtr model, CMatrix multiplier)
    : model_(std::move(model)), mult_(std::move(multiplier)) {
  model_->check_b2(mult_, "channel multiplier");
  require_finite(mult_, "channel multiplier");
  transfer_ = model_->f21(mult_);
}

BimoduleChannel BimoduleChannel::from_superoperator(ModelPtr model, const CMatrix& t) {
  const int d = model->gns_dim();
  const int n = model->n();
  if (t.rows() == d && t.cols() == d) return {model, model->f21_inv(t)};
  if (model->kind() == ModelKind::Spin && t.rows() == n * n && t.cols() == n * n) {
    // a superoperator on M_n: keep it only if it maps diagonals to diagonals
    CMatrix r(n, n);
    double leak = 0;
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          cd v = t(a * n + b, j * n + j);
          if (a == b) r(a, j) = v;
          else leak = std::max(leak, std::abs(v));
        }
    if (leak > tolerances().equality * (1.0 + t.norm()))
      throw Error(ErrorCode::NotBimodule, "superoperator does not preserve the diagonal");
    return {model, model->f21_inv(r)};
  }
  throw Error(ErrorCode::NotBimodule, "superoperator shape does not match the GNS space");
}

BimoduleChannel BimoduleChannel::identity_channel(ModelPtr model) {
  CMatrix mult = std::pow(model->lambda(), -0.5) * model->e2();
  return {model, mult};
}

CMatrix BimoduleChannel::apply_transfer(const CMatrix& x) const {
  return model_->unvec_m(transfer_ * model_->vec_m(x));
}

CMatrix BimoduleChannel::apply_via_multiplier(const CMatrix& x) const {
  const InclusionModel& m = *model_;
  return (1.0 / m.lambda()) * m.cond_expect_m(m.e1() * m.embed(x) * m.f12_inv(mult_));
}

CMatrix BimoduleChannel::apply(const CMatrix& x) const {
  CMatrix a = apply_transfer(x);
  CMatrix b = apply_via_multiplier(x);
  double scale = 1.0 + x.norm() * (1.0 + transfer_.norm());
  if ((a - b).norm() > 1e-10 * scale) throw Error(ErrorCode::Internal, "transfer and multiplier routes disagree");
  return a;
}

ChannelClass classify(const BimoduleChannel& ch) {
  const InclusionModel& m = ch.model();
  const Tolerances& tol = tolerances();
  ChannelClass c;
  const CMatrix& mult = ch.multiplier();
  double nrm = m.b2_norm(mult);
  CMatrix h = 0.5 * (mult + m.b2_adj(mult));
  bool hermitian = m.b2_herm_residual(mult) <= tol.hermiticity * (1.0 + nrm);
  HermEig e = herm_eig(m.b2_as_operator(h));
  c.min_multiplier_eig = e.values.size() ? e.values(0) : 0.0;
  c.cp = hermitian && c.min_multiplier_eig >= -tol.positivity_floor * (1.0 + nrm);
  if (!c.cp && e.values.size()) c.cp_witness = e.vectors.col(0);
  CMatrix one = m.one_m();
  CMatrix img = ch.apply_transfer(one);
  c.unital_residual = (img - one).norm();
  const CMatrix& t = ch.transfer();
  CVector ones = m.vec_m(one);
  c.trace_residual = (t.adjoint() * ones - ones).norm();
  double scale = 1.0 + t.norm();
  c.unital = c.unital_residual <= tol.equality * scale;
  c.trace_preserving = c.trace_residual <= tol.equality * scale;
  return c;
}

BimoduleChannel compose(const BimoduleChannel& a, const BimoduleChannel& b) {
  if (!a.model().same_as(b.model())) throw Error(ErrorCode::ModelMismatch, "compose");
  return {a.model_ptr(), convolve_b2(a.model(), b.multiplier(), a.multiplier())};
}

BimoduleChannel adjoint(const BimoduleChannel& ch) {
  return BimoduleChannel::from_superoperator(ch.model_ptr(), ch.transfer().adjoint());
}

BimoduleChannel cesaro_mean(const BimoduleChannel& ch) {
  const CMatrix& t = ch.transfer();
  const Eigen::Index d = t.rows();
  Eigen::ComplexEigenSolver<CMatrix> es(t, false);
  double rho = 0;
  for (Eigen::Index i = 0; i < d; ++i) rho = std::max(rho, std::abs(es.eigenvalues()(i)));
  if (rho > 1.0 + 1e-8) throw Error(ErrorCode::NotPowerBounded, "spectral radius " + std::to_string(rho));
  CMatrix a = t - identity(d);
  CMatrix r = kernel_basis(a, 1e-9);
  CMatrix l = kernel_basis(a.adjoint(), 1e-9);
  if (r.cols() != l.cols()) throw Error(ErrorCode::NotPowerBounded, "eigenvalue 1 is not semisimple");
  CMatrix p = CMatrix::Zero(d, d);
  if (r.cols() > 0) p = r * (l.adjoint() * r).inverse() * l.adjoint();
  return BimoduleChannel::from_superoperator(ch.model_ptr(), p);
}

namespace {

CMatrix join(const InclusionModel& m, const CMatrix& p, const CMatrix& q) { return m.b2_range(p + q); }

bool same_projection(const InclusionModel& m, const CMatrix& p, const CMatrix& q) {
  return m.b2_norm(p - q) < 1e-6;
}

CMatrix positive_range(const InclusionModel& m, const CMatrix& x) {
  // range of a positive element; for non-Hermitian input use x x^*
  if (m.b2_herm_residual(x) <= tolerances().hermiticity * (1.0 + m.b2_norm(x))) return m.b2_range(x);
  return m.b2_range(m.b2_mul(x, m.b2_adj(x)));
}

}  // namespace

CMatrix convolution_support(const InclusionModel& m, const CMatrix& x) {
  m.check_b2(x, "convolution_support");
  CMatrix p = join(m, positive_range(m, x), positive_range(m, m.conj_b2(x)));
  for (int round = 0; round < m.dim_b2(); ++round) {
    CMatrix next = join(m, p, positive_range(m, convolve_b2(m, p, p)));
    if (same_projection(m, next, p)) return next;
    p = next;
  }
  return p;
}

CMatrix cs0(const InclusionModel& m, const CMatrix& x) {
  m.check_b2(x, "cs0");
  CMatrix q = positive_range(m, x);
  CMatrix acc = q;
  std::vector<CMatrix> seen{q};
  CMatrix cur = q;
  for (int round = 0; round < m.dim_b2(); ++round) {
    cur = positive_range(m, convolve_b2(m, cur, q));
    bool repeat = false;
    for (const auto& s : seen)
      if (same_projection(m, s, cur)) { repeat = true; break; }
    if (repeat) break;
    seen.push_back(cur);
    acc = join(m, acc, cur);
  }
  return acc;
}

bool is_identity_projection(const InclusionModel& m, const CMatrix& p) {
  return m.b2_norm(p - m.one_b2()) < 1e-6;
}

std::vector<CMatrix> fixed_points(const BimoduleChannel& ch) {
  const CMatrix& t = ch.transfer();
  CMatrix k = kernel_basis(t - identity(t.rows()), 1e-9);
  std::vector<CMatrix> out;
  for (Eigen::Index i = 0; i < k.cols(); ++i) out.push_back(ch.model().unvec_m(k.col(i)));
  return out;
}

IrreducibilityCertificate relative_irreducibility(const BimoduleChannel& ch) {
  const InclusionModel& m = ch.model();
  IrreducibilityCertificate cert;
  if (is_identity_projection(m, convolution_support(m, ch.multiplier()))) {
    cert.verdict = Irreducibility::YesByCS;
    return cert;
  }
  for (const CMatrix& f : fixed_points(ch)) {
    for (int part = 0; part < 2; ++part) {
      CMatrix h = part == 0 ? CMatrix(0.5 * (f + f.adjoint())) : CMatrix((f - f.adjoint()) / cd(0, 2));
      if (h.norm() < 1e-9) continue;
      HermEig e = herm_eig(h);
      const Eigen::Index n = e.values.size();
      Eigen::Index start = 0;
      while (start < n) {
        Eigen::Index end = start + 1;
        while (end < n && std::abs(e.values(end) - e.values(start)) < 1e-8 * (1.0 + std::abs(e.values(start)))) ++end;
        if (end - start < n) {
          CMatrix v = e.vectors.middleCols(start, end - start);
          CMatrix p = v * v.adjoint();
          if ((ch.apply_transfer(p) - p).norm() < 1e-8) {
            cert.verdict = Irreducibility::NoByWitness;
            cert.witness = p;
            return cert;
          }
        }
        start = end;
      }
    }
  }
  return cert;
}

double commutator_bound_margin(const BimoduleChannel& ch, const CMatrix& x) {
  const InclusionModel& m = ch.model();
  CMatrix k = m.f12_inv(m.b2_psd_pow(ch.multiplier(), 0.5));
  CMatrix one = m.one_m();
  CMatrix lhs = m.embed(ch.apply_transfer(x.adjoint() * x) + x.adjoint() * ch.apply_transfer(one) * x);
  CMatrix c = commutator(m.embed(x), k);
  CMatrix diff = lhs - std::sqrt(m.lambda()) * c.adjoint() * c;
  return min_eig(0.5 * (diff + diff.adjoint()));
}

}  // namespace bqms
