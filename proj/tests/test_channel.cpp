#include <gtest/gtest.h>

#include "bqms/channel.hpp"
#include "channels.hpp"
#include "reference_data.hpp"
#include "tower.hpp"

using namespace bqms;
using namespace bqms::testing;

TEST(Channel, IdentityAndZero) {
  for (auto m : {InclusionModel::spin(3), InclusionModel::full_matrix(2)}) {
    BimoduleChannel id = BimoduleChannel::from_superoperator(m, identity(m->gns_dim()));
    EXPECT_LT(m->b2_norm(id.multiplier() - std::pow(m->lambda(), -0.5) * m->e2()), 1e-12);
    Rand r(20);
    CMatrix x = r.m_element(*m);
    EXPECT_LT((id.apply(x) - x).norm(), 1e-12);
    ChannelClass c = classify(id);
    EXPECT_TRUE(c.cp && c.unital && c.trace_preserving);
    BimoduleChannel z = BimoduleChannel::from_superoperator(m, CMatrix::Zero(m->gns_dim(), m->gns_dim()));
    EXPECT_EQ(m->b2_norm(z.multiplier()), 0.0);
    EXPECT_LT((adjoint(id).transfer() - identity(m->gns_dim())).norm(), 1e-12);
    EXPECT_LT((cesaro_mean(id).transfer() - identity(m->gns_dim())).norm(), 1e-12);
    EXPECT_EQ(int(fixed_points(id).size()), m->dim_m());
  }
}

TEST(Channel, RoundTripAndRoutes) {
  Rand r(21);
  for (auto m : {InclusionModel::spin(4), InclusionModel::full_matrix(3)}) {
    for (int t = 0; t < 20; ++t) {
      CMatrix tr = r.gaussian(m->gns_dim(), m->gns_dim());
      BimoduleChannel ch = BimoduleChannel::from_superoperator(m, tr);
      EXPECT_LT((ch.to_superoperator() - tr).norm(), 1e-12 * tr.norm());
      CMatrix x = r.m_element(*m);
      EXPECT_LT((ch.apply_transfer(x) - ch.apply_via_multiplier(x)).norm(), 1e-10 * (1 + tr.norm()) * x.norm());
    }
  }
}

TEST(Channel, TowerFormula) {
  Rand r(22);
  for (auto m : {InclusionModel::spin(3), InclusionModel::full_matrix(2)}) {
    Tower tw(m);
    BimoduleChannel ch = BimoduleChannel::from_superoperator(m, r.gaussian(m->gns_dim(), m->gns_dim()));
    CMatrix x = r.m_element(*m);
    EXPECT_LT((tw.channel_apply(ch.multiplier(), x) - ch.apply(x)).norm(), 1e-10 * (1 + x.norm()));
  }
}

TEST(Channel, FourPointChannel) {
  auto m = InclusionModel::spin(4);
  CMatrix p = c4_transition();
  BimoduleChannel ch = BimoduleChannel::from_superoperator(m, p);
  for (int j = 0; j < 4; ++j) {
    CMatrix e = matrix_unit(4, j, j);
    CMatrix img = ch.apply(e);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(img(k, k) - p(k, j)), 0.0, 1e-14);
  }
  ChannelClass c = classify(ch);
  EXPECT_TRUE(c.cp);
  EXPECT_TRUE(c.unital);
  EXPECT_FALSE(c.trace_preserving);
  RVector colsum = p.colwise().sum().real();
  EXPECT_NEAR(colsum(0), 11.0 / 12.0, 1e-15);
  EXPECT_NEAR(colsum(1), 4.0 / 3.0, 1e-15);
  BimoduleChannel sq = compose(ch, ch);
  EXPECT_LT((sq.transfer() - p * p).norm(), 1e-12);
  EXPECT_LT((adjoint(ch).transfer() - p.transpose()).norm(), 1e-14);
  EXPECT_TRUE(is_identity_projection(*m, convolution_support(*m, ch.multiplier())));
  EXPECT_EQ(relative_irreducibility(ch).verdict, Irreducibility::YesByCS);
  auto fp = fixed_points(ch);
  ASSERT_EQ(fp.size(), 1u);
  EXPECT_LT((fp[0] / fp[0](0, 0) - identity(4)).norm(), 1e-10);
}

TEST(Channel, KrausUnitary) {
  Rand r(23);
  auto m = InclusionModel::full_matrix(3);
  Eigen::HouseholderQR<CMatrix> qr(r.gaussian(3, 3));
  CMatrix u = qr.householderQ();
  BimoduleChannel ch = BimoduleChannel::from_superoperator(m, kraus_transfer({u}));
  CMatrix x = r.m_element(*m);
  EXPECT_LT((ch.apply(x) - u.adjoint() * x * u).norm(), 1e-12);
  HermEig e = herm_eig(m->b2_as_operator(ch.multiplier()));
  int rank = 0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) rank += e.values(i) > 1e-9;
  EXPECT_EQ(rank, 1);
  ChannelClass c = classify(ch);
  EXPECT_TRUE(c.cp && c.unital && c.trace_preserving);
}

TEST(Channel, CpMatchesChoi) {
  Rand r(24);
  auto m = InclusionModel::full_matrix(3);
  int disagreements = 0;
  for (int t = 0; t < 100; ++t) {
    BimoduleChannel ch = random_cp_channel(m, r, 1 + t % 4);
    BimoduleChannel bad = perturbed_non_cp(ch, r.uniform(0.01, 0.3));
    for (const BimoduleChannel* c : {&ch, &bad}) {
      bool choi = choi_min_eig(c->transfer(), 3) >= -1e-10;
      if (classify(*c).cp != choi) ++disagreements;
    }
    EXPECT_TRUE(classify(ch).cp);
    ChannelClass cb = classify(bad);
    EXPECT_FALSE(cb.cp);
    EXPECT_EQ(cb.cp_witness.size(), 9);
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(Channel, ComposeOrderAndSchur) {
  Rand r(25);
  for (auto m : {InclusionModel::spin(3), InclusionModel::full_matrix(2)}) {
    for (int t = 0; t < 10; ++t) {
      BimoduleChannel a = BimoduleChannel::from_superoperator(m, r.gaussian(m->gns_dim(), m->gns_dim()));
      BimoduleChannel b = BimoduleChannel::from_superoperator(m, r.gaussian(m->gns_dim(), m->gns_dim()));
      EXPECT_LT((compose(a, b).transfer() - a.transfer() * b.transfer()).norm(), 1e-10 * (1 + a.transfer().norm() * b.transfer().norm()));
      BimoduleChannel id = BimoduleChannel::identity_channel(m);
      EXPECT_LT(m->b2_norm(compose(id, a).multiplier() - a.multiplier()), 1e-12 * (1 + m->b2_norm(a.multiplier())));
    }
  }
  auto f = InclusionModel::full_matrix(3);
  BimoduleChannel a = random_cp_channel(f, r, 2), b = random_cp_channel(f, r, 3);
  EXPECT_TRUE(classify(compose(a, b)).cp);
  EXPECT_THROW(compose(a, BimoduleChannel::identity_channel(InclusionModel::full_matrix(2))), Error);
}

TEST(Channel, AdjointDuality) {
  Rand r(26);
  for (auto m : {InclusionModel::spin(4), InclusionModel::full_matrix(2)}) {
    BimoduleChannel ch = random_cp_channel(InclusionModel::full_matrix(2), r, 2);
    if (m->kind() == ModelKind::Spin) ch = BimoduleChannel::from_superoperator(m, random_stochastic(r, 4));
    BimoduleChannel ad = adjoint(ch);
    for (int i = 0; i < m->dim_m(); ++i)
      for (int j = 0; j < m->dim_m(); ++j) {
        CMatrix x = m->basis_m(i), y = m->basis_m(j);
        cd lhs = m->tau(ad.apply(y).adjoint() * x), rhs = m->tau(y.adjoint() * ch.apply(x));
        EXPECT_LT(std::abs(lhs - rhs), 1e-10);
      }
    EXPECT_LT(m->b2_norm(ad.multiplier() - m->conj_b2(ch.multiplier())), 1e-10);
  }
}

TEST(Channel, CesaroMean) {
  Rand r(27);
  auto s = InclusionModel::spin(4);
  CMatrix p = random_stochastic(r, 4);
  BimoduleChannel e = cesaro_mean(BimoduleChannel::from_superoperator(s, p));
  CMatrix t = e.transfer();
  EXPECT_LT((t * t - t).norm(), 1e-10);
  Eigen::JacobiSVD<CMatrix> svd(t);
  EXPECT_LT(svd.singularValues()(1), 1e-10);
  // rows all equal the stationary vector
  for (int j = 1; j < 4; ++j) EXPECT_LT((t.row(j) - t.row(0)).norm(), 1e-10);
  EXPECT_LT(s->b2_norm(convolve_b2(*s, e.multiplier(), e.multiplier()) - e.multiplier()), 1e-8);
  auto f = InclusionModel::full_matrix(2);
  BimoduleChannel ce = cesaro_mean(random_unital_channel(f, r, 3));
  EXPECT_LT((ce.transfer() * ce.transfer() - ce.transfer()).norm(), 1e-8);
  EXPECT_LT(f->b2_norm(convolve_b2(*f, ce.multiplier(), ce.multiplier()) - ce.multiplier()), 1e-8);
  EXPECT_LT((ce.apply(f->one_m()) - f->one_m()).norm(), 1e-9);
  BimoduleChannel big = BimoduleChannel::from_superoperator(s, 2.0 * identity(4));
  EXPECT_THROW(cesaro_mean(big), Error);
  // a projection-valued channel is its own mean
  BimoduleChannel again = cesaro_mean(e);
  EXPECT_LT((again.transfer() - e.transfer()).norm(), 1e-10);
}

TEST(Channel, SupportsAndFixedPoints) {
  Rand r(28);
  auto s = InclusionModel::spin(4);
  CMatrix unit = std::pow(s->lambda(), -0.5) * s->e2();
  EXPECT_LT(s->b2_norm(convolution_support(*s, unit) - s->e2()), 1e-12);
  CMatrix adj = CMatrix::Zero(4, 4);
  adj(0, 1) = adj(1, 0) = adj(1, 2) = adj(2, 1) = adj(2, 3) = adj(3, 2) = 1;
  EXPECT_TRUE(is_identity_projection(*s, convolution_support(*s, s->f21_inv(adj))));
  CMatrix block = CMatrix::Zero(4, 4);
  block(0, 1) = block(1, 0) = block(2, 3) = block(3, 2) = 1;
  CMatrix cs = convolution_support(*s, s->f21_inv(block));
  EXPECT_FALSE(is_identity_projection(*s, cs));
  CMatrix q = s->f21_inv(block);
  CMatrix c0 = cs0(*s, q);
  EXPECT_LT(s->b2_norm(s->b2_mul(c0, s->b2_range(q)) - s->b2_range(q)), 1e-12);
  EXPECT_LT(s->b2_norm(s->b2_mul(cs, c0) - c0), 1e-12);
  CMatrix pd = random_stochastic(r, 4, false);
  BimoduleChannel dis = BimoduleChannel::from_superoperator(s, pd);
  EXPECT_EQ(fixed_points(dis).size(), 2u);
  IrreducibilityCertificate cert = relative_irreducibility(dis);
  EXPECT_EQ(cert.verdict, Irreducibility::NoByWitness);
  EXPECT_LT((dis.apply_transfer(cert.witness) - cert.witness).norm(), 1e-8);
  // diagonal unitary with distinct phases fixes exactly the diagonal
  auto f = InclusionModel::full_matrix(3);
  CMatrix u = CMatrix::Zero(3, 3);
  for (int j = 0; j < 3; ++j) u(j, j) = std::polar(1.0, 0.7 * (j + 1));
  auto fp = fixed_points(BimoduleChannel::from_superoperator(f, kraus_transfer({u})));
  ASSERT_EQ(fp.size(), 3u);
  for (const CMatrix& x : fp) EXPECT_LT((x * u - u * x).norm(), 1e-10);
}

TEST(Channel, CommutatorBoundIsReported) {
  Rand r(29);
  auto s = InclusionModel::spin(4);
  BimoduleChannel ch = BimoduleChannel::from_superoperator(s, c4_transition());
  double v = commutator_bound_margin(ch, r.m_element(*s));
  EXPECT_TRUE(std::isfinite(v));
}
