#pragma once

#include <random>

#include "bqms/inclusion.hpp"

namespace bqms::testing {

class Rand {
 public:
  explicit Rand(unsigned seed = 7) : gen_(seed) {}

  double uniform(double a = 0, double b = 1) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  double normal() { return nd_(gen_); }
  cd cnormal() { return {normal(), normal()}; }

  CMatrix gaussian(Eigen::Index r, Eigen::Index c) {
    CMatrix a(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) a(i, j) = cnormal();
    return a;
  }

  CMatrix hermitian(Eigen::Index n) {
    CMatrix a = gaussian(n, n);
    return 0.5 * (a + a.adjoint());
  }

  CMatrix m_element(const InclusionModel& m) {
    CMatrix x = gaussian(m.n(), m.n());
    if (m.kind() == ModelKind::Spin) return CMatrix(x.diagonal().asDiagonal());
    return x;
  }

  CMatrix m_hermitian(const InclusionModel& m) {
    CMatrix x = m_element(m);
    return 0.5 * (x + x.adjoint());
  }

  CMatrix m1_element(const InclusionModel& m) { return gaussian(m.gns_dim(), m.gns_dim()); }

  CMatrix b2_element(const InclusionModel& m) { return gaussian(m.b2_rows(), m.b2_rows()); }

  // positive element of B2, strictly positive when full_rank
  CMatrix b2_positive(const InclusionModel& m, bool full_rank = true) {
    if (m.kind() == ModelKind::Spin) {
      CMatrix c(m.n(), m.n());
      for (int j = 0; j < m.n(); ++j)
        for (int k = 0; k < m.n(); ++k) c(j, k) = full_rank ? uniform(0.2, 1.5) : (uniform() < 0.5 ? 0.0 : uniform(0.2, 1.5));
      return c;
    }
    int r = m.b2_rows();
    CMatrix a = gaussian(r, full_rank ? r : std::max(1, r / 2));
    return a * a.adjoint() / double(r);
  }

  // positive definite density in M with tau(D) = 1
  CMatrix density(const InclusionModel& m) {
    CMatrix d;
    if (m.kind() == ModelKind::Spin) {
      d = CMatrix::Zero(m.n(), m.n());
      for (int j = 0; j < m.n(); ++j) d(j, j) = uniform(0.3, 2.0);
    } else {
      CMatrix a = gaussian(m.n(), m.n());
      d = a * a.adjoint() + 0.3 * identity(m.n());
    }
    return d / m.tau(d).real();
  }

  std::mt19937& engine() { return gen_; }

 private:
  std::mt19937 gen_;
  std::normal_distribution<double> nd_;
};

}  // namespace bqms::testing
