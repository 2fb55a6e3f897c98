#include <gtest/gtest.h>

#include "bqms/gradientflow.hpp"
#include "instances.hpp"

using namespace bqms;
using namespace bqms::testing;

namespace {

CMatrix random_positive(Rand& r, int n, double cond) {
  Eigen::HouseholderQR<CMatrix> qr(r.gaussian(n, n));
  CMatrix u = qr.householderQ();
  RVector d(n);
  for (int i = 0; i < n; ++i) d(i) = std::pow(cond, r.uniform());
  return u * d.cast<cd>().asDiagonal() * u.adjoint();
}

std::vector<double> grid(double step, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(step * i);
  return g;
}

}  // namespace

TEST(KOperator, IdentityCase) {
  Rand r(51);
  CMatrix v = r.gaussian(3, 3);
  EXPECT_LT((kd_apply(identity(3), 1.0, v) - v).norm(), 1e-14);
}

TEST(KOperator, ScalarLogMean) {
  CMatrix d = CMatrix::Identity(1, 1) * 3.0, v = CMatrix::Identity(1, 1);
  double mu = 1.4, a = 3.0 / mu, b = mu * 3.0;
  EXPECT_NEAR(kd_apply(d, mu, v)(0, 0).real(), (a - b) / (std::log(a) - std::log(b)), 1e-13);
}

TEST(KOperator, QuadratureInverseCommutator) {
  Rand r(52);
  for (int t = 0; t < 100; ++t) {
    int n = 2 + t % 4;
    CMatrix d = random_positive(r, n, 1e6 * r.uniform());
    double mu = std::exp(r.uniform(-1.5, 1.5));
    CMatrix v = r.gaussian(n, n);
    CMatrix k = kd_apply(d, mu, v);
    CMatrix q = kd_apply_quadrature(d, mu, v, 64);
    EXPECT_LE((k - q).norm(), 1e-8 * k.norm());
    EXPECT_LE((kd_inverse(d, mu, k) - v).norm(), 1e-9 * v.norm());
    CMatrix lhs = kd_apply(d, mu, mat_log(d / mu) * v - v * mat_log(mu * d));
    CMatrix rhs = d * v / mu - mu * v * d;
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * (1.0 + rhs.norm()));
  }
}

TEST(KOperator, SingularRejected) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1;
  EXPECT_THROW(kd_apply(d, 1.0, identity(2)), Error);
}

TEST(RelativeEntropy, BasicProperties) {
  Rand r(53);
  auto m = InclusionModel::full_matrix(3);
  for (int t = 0; t < 100; ++t) {
    CMatrix a = r.density(*m), b = r.density(*m);
    EXPECT_GE(relative_entropy(a, b), -1e-12);
    EXPECT_NEAR(relative_entropy(a, a), 0.0, 1e-12);
  }
  // commuting pair is the tau-weighted classical divergence
  CMatrix p = CMatrix::Zero(2, 2), q = p;
  p(0, 0) = 1.5; p(1, 1) = 0.5;
  q(0, 0) = 0.8; q(1, 1) = 1.2;
  double kl = 0.5 * (1.5 * std::log(1.5 / 0.8) + 0.5 * std::log(0.5 / 1.2));
  EXPECT_NEAR(relative_entropy(p, q), kl, 1e-13);
  CMatrix sing = CMatrix::Zero(2, 2);
  sing(0, 0) = 2;
  EXPECT_THROW(relative_entropy(p, sing), Error);
  EXPECT_NO_THROW(relative_entropy(sing, p));
}

TEST(JointSpectrum, TraceSymmetricHasUnitMu) {
  Rand r(54);
  auto m = InclusionModel::full_matrix(2);
  CMatrix a = r.b2_positive(*m);
  Lindbladian l = build(m, a + m->conj_b2(a), CMatrix::Zero(2, 2));
  JointSpectrum js = joint_spectrum(l, {m, m->one_b2(), false});
  for (const JointItem& it : js.items) EXPECT_NEAR(it.mu, 1.0, 1e-12);
  EXPECT_LT(js.omega_residual, 1e-9);
  auto x = r.m_element(*m);
  EXPECT_LT((balanced_derivation(js, x) - derivation(l, x)).norm(), 1e-10);
}

TEST(JointSpectrum, TwistedPairInvolution) {
  auto m = InclusionModel::spin(3);
  double kappa = 1.6;
  CMatrix p = CMatrix::Zero(3, 3);
  p(0, 1) = 1;
  CMatrix cp = m->conj_b2(p);
  Lindbladian l = build(m, kappa * p + cp / kappa, CMatrix::Zero(3, 3));
  CMatrix rest = m->one_b2() - m->e2() - p - cp;
  SymmetryDatum d{m, CMatrix(m->e2() + kappa * kappa * p + cp / (kappa * kappa) + rest), false};
  JointSpectrum js = joint_spectrum(l, d);
  ASSERT_EQ(js.items.size(), 2u);
  EXPECT_EQ(js.items[0].conj_index, 1);
  EXPECT_EQ(js.items[1].conj_index, 0);
  EXPECT_NEAR(js.items[0].mu * js.items[1].mu, 1.0, 1e-12);
  EXPECT_NEAR(js.items[0].omega, js.items[1].omega, 1e-12);
}

TEST(JointSpectrum, DaviesRelations) {
  Rand r(55);
  for (int n : {2, 3}) {
    auto m = InclusionModel::full_matrix(n);
    CMatrix rho;
    Lindbladian l = rotated_davies(m, r, &rho);
    JointSpectrum js = joint_spectrum(l, modular_multiplier(m, rho));
    EXPECT_LT(js.omega_residual, 1e-9);
    EXPECT_LT(js.delta_residual, 1e-9);
    EXPECT_LT(js.involution_residual, 1e-9);
    CMatrix x = r.m_element(*m);
    for (size_t j = 0; j < js.items.size(); ++j) EXPECT_LT(balanced_conj_residual(js, int(j), x), 1e-10);
    // d_j = mu_j^{1/4} d_j^Delta, with the unbalanced derivation built from the same projections
    CMatrix sum = CMatrix::Zero(m->gns_dim(), m->gns_dim());
    for (size_t j = 0; j < js.items.size(); ++j) sum += std::pow(js.items[j].mu, 0.25) * balanced_directional(js, int(j), x);
    EXPECT_LT((sum - derivation(l, x)).norm(), 1e-7 * (1.0 + sum.norm()));
  }
}

TEST(JointSpectrum, NotCommutingDetected) {
  Rand r(56);
  auto m = InclusionModel::full_matrix(2);
  Lindbladian l = build(m, r.b2_positive(*m), CMatrix::Zero(2, 2));
  SymmetryDatum d = modular_multiplier(m, r.density(*m));
  EXPECT_THROW(joint_spectrum(l, d), Error);
}

TEST(AdjointForm, DivergenceMatchesTraceDual) {
  Rand r(57);
  for (int t = 0; t < 10; ++t) {
    auto m = InclusionModel::full_matrix(2 + t % 2);
    CMatrix rho;
    Lindbladian l = rotated_davies(m, r, &rho);
    SymmetryDatum d = modular_multiplier(m, rho);
    CMatrix dd = r.density(*m);
    CMatrix a = generator_adjoint(l, dd);
    EXPECT_LT((a - divergence_form_adjoint(l, d, dd)).norm(), 1e-8 * (1.0 + a.norm()));
    // the stationary density is annihilated
    EXPECT_LT(generator_adjoint(l, rho).norm(), 1e-10);
  }
}

TEST(AdjointForm, RequiresSymmetry) {
  Rand r(58);
  auto m = InclusionModel::full_matrix(2);
  Lindbladian l = build(m, r.b2_positive(*m), CMatrix::Zero(2, 2));
  EXPECT_THROW(divergence_form_adjoint(l, modular_multiplier(m, r.density(*m)), r.density(*m)), Error);
}

TEST(HiddenDensity, TraceSymmetricIsOne) {
  Rand r(59);
  auto m = InclusionModel::spin(4);
  CMatrix a = r.b2_positive(*m);
  Lindbladian l = build(m, a + m->conj_b2(a), CMatrix::Zero(4, 4));
  HiddenDensity h = hidden_density(joint_spectrum(l, {m, m->one_b2(), false}), r.density(*m));
  EXPECT_LT(h.x.norm(), 1e-12);
  EXPECT_LT((h.density - m->one_m()).norm(), 1e-12);
}

TEST(HiddenDensity, ModularGivesDensity) {
  Rand r(60);
  for (int n : {2, 3}) {
    auto m = InclusionModel::full_matrix(n);
    CMatrix rho;
    Lindbladian l = rotated_davies(m, r, &rho);
    JointSpectrum js = joint_spectrum(l, modular_multiplier(m, rho));
    for (int t = 0; t < 10; ++t) {
      HiddenDensity h = hidden_density(js, r.density(*m));
      EXPECT_LT((h.density - rho).norm(), 1e-8);
      EXPECT_LT(h.orthogonality_residual, 1e-8);
      EXPECT_LT(std::abs(m->tau(h.x)), 1e-12);
    }
  }
}

TEST(HiddenDensity, FourPointInstanceIsProbeDependent) {
  // non-realizable delta: the projection of the log data depends on the probe
  Lindbladian l = four_point_generator();
  JointSpectrum js = joint_spectrum(l, four_point_delta());
  Rand r(61);
  HiddenDensity a = hidden_density(js, r.density(l.model()));
  HiddenDensity b = hidden_density(js, r.density(l.model()));
  EXPECT_GT(a.remainder, 1e-3);
  EXPECT_LT(a.orthogonality_residual, 1e-8);
  EXPECT_GT((a.density - b.density).norm(), 1e-6);
}

TEST(Metric, ZeroAndGradientDirection) {
  Rand r(62);
  auto m = InclusionModel::full_matrix(2);
  CMatrix rho;
  Lindbladian l = rotated_davies(m, r, &rho);
  SymmetryDatum d = modular_multiplier(m, rho);
  JointSpectrum js = joint_spectrum(l, d);
  CMatrix dd = r.density(*m);
  EXPECT_EQ(metric_norm(js, dd, CMatrix::Zero(2, 2)).norm, 0.0);
  CMatrix ddot = -generator_adjoint(l, dd);
  ddot = 0.5 * (ddot + ddot.adjoint());
  MetricResult mr = metric_norm(js, dd, ddot);
  double g = std::sqrt(weighted_gradient_norm2(js, dd, mat_log(dd) - mat_log(rho)));
  EXPECT_NEAR(mr.norm, g, 1e-9 * (1.0 + g));
  EXPECT_LT(mr.kkt_residual, 1e-10);
  EXPECT_THROW(metric_norm(js, dd, identity(2)), Error);
}

TEST(Flow, DaviesMonotoneWithRateIdentity) {
  Rand r(63);
  for (int n : {2, 3}) {
    auto m = InclusionModel::full_matrix(n);
    CMatrix rho;
    Lindbladian l = rotated_davies(m, r, &rho);
    SymmetryDatum d = modular_multiplier(m, rho);
    CMatrix d0 = r.density(*m);
    FlowTrace tr = flow(l, d, d0, grid(0.2, 15));
    for (size_t i = 1; i < tr.entropies.size(); ++i) EXPECT_LE(tr.entropies[i], tr.entropies[i - 1] + 1e-12);
    EXPECT_LT(tr.trace_drift, 1e-10);
    EXPECT_GT(tr.min_eigenvalue, 0);
    for (double t : {0.0, 0.3, 1.1}) EXPECT_LT(flow_rate_mismatch(l, d, d0, t), 1e-4);
    EXPECT_LT((tr.limit - rho).norm(), 1e-6);
  }
}

TEST(Flow, StationaryStartIsConstant) {
  Rand r(64);
  auto m = InclusionModel::full_matrix(2);
  CMatrix rho;
  Lindbladian l = rotated_davies(m, r, &rho);
  FlowTrace tr = flow(l, modular_multiplier(m, rho), rho, grid(0.5, 5));
  for (double h : tr.entropies) EXPECT_NEAR(h, 0.0, 1e-12);
}

TEST(Fermion, SingleModeByHand) {
  FermionModel fm = fermion_model(1, {1.0}, 1.0);
  CMatrix px(2, 2);
  px << 0, 1, 1, 0;
  EXPECT_LT((fm.q[0] - px).norm(), 1e-15);
  CMatrix pz(2, 2);
  pz << 1, 0, 0, -1;
  EXPECT_LT(std::min((fm.w - pz).norm(), (fm.w + pz).norm()), 1e-15);
}

TEST(Fermion, RelationsAndSymmetry) {
  for (int mm : {1, 2, 3}) {
    FermionModel fm = fermion_model(mm, std::vector<double>(mm, 0.8), 1.2);
    EXPECT_LT(fm.relation_residual, 1e-13);
    EXPECT_TRUE(validate(*fm.model, fm.generator.lhat()).valid);
    EXPECT_TRUE(check_bimodule_gns(*fm.model, fm.generator.lhat(), fm.delta).holds);
    EXPECT_TRUE(check_bimodule_gns(*fm.model, fm.generator.lhat(), fm.assembled_delta).holds);
    EXPECT_LT(fm.delta_consistency, 1e-9);
    const double s = std::sqrt(fm.model->lambda());
    for (size_t j = 0; j < fm.normalized_jumps.size(); ++j)
      for (size_t k = 0; k < fm.normalized_jumps.size(); ++k) {
        cd g = fm.model->tau(fm.normalized_jumps[j] * fm.normalized_jumps[k].adjoint());
        EXPECT_LT(std::abs(g - (j == k ? s : 0.0)), 1e-12);
      }
  }
}

TEST(Fermion, JointSpectrumExponents) {
  double beta = 1.1, a = 0.9;
  FermionModel fm = fermion_model(2, {a, a}, beta);
  JointSpectrum js = joint_spectrum(fm.generator, fm.delta);
  ASSERT_EQ(js.items.size(), 2u);
  std::vector<double> mus{js.items[0].mu, js.items[1].mu};
  std::sort(mus.begin(), mus.end());
  EXPECT_NEAR(mus[0], std::exp(-beta * a), 1e-10);
  EXPECT_NEAR(mus[1], std::exp(beta * a), 1e-10);
}

TEST(Intertwining, TrivialAndFermion) {
  for (int mm : {2, 3}) {
    FermionModel fm = fermion_model(mm, std::vector<double>(mm, 1.0), 1.0);
    IntertwiningResult res = find_intertwining(fm.generator, fm.candidates);
    EXPECT_EQ(res.name, "parity-twisted");
    EXPECT_LT(res.residual, 1e-9);
    EXPECT_NEAR(res.beta, std::cosh(0.5), 1e-10);
    EXPECT_GT(res.candidate_residuals[0], 1e-2);
  }
  auto m = InclusionModel::full_matrix(2);
  Lindbladian zero = build(m, CMatrix::Zero(4, 4), CMatrix::Zero(2, 2));
  Extension none{"zero", {}, {}};
  EXPECT_EQ(intertwining_check(zero, none, 0.0), 0.0);
}

TEST(Fermion, LsiAndTalagrand) {
  FermionModel fm = fermion_model(2, {1.0, 1.0}, 1.0);
  double beta = find_intertwining(fm.generator, fm.candidates).beta;
  Rand r(65);
  for (int t = 0; t < 3; ++t) {
    CMatrix d0 = r.density(*fm.model);
    LsiReport lsi = lsi_report(fm.generator, fm.delta, d0, grid(0.25, 12), beta);
    EXPECT_GE(lsi.min_margin, -1e-8);
    EXPECT_GE(lsi.min_envelope, -1e-8);
    TalagrandReport tal = talagrand_report(fm.generator, fm.delta, d0, beta);
    EXPECT_LE(tal.path_length, tal.bound + 1e-6);
  }
  EXPECT_THROW(lsi_report(fm.generator, fm.delta, fm.stationary, {0.0}, 0.0), Error);
}
