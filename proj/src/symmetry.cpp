#include "bqms/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <sstream>

namespace bqms {

namespace {

double rel_tol(double scale) { return tolerances().equality * (1.0 + scale); }

CMatrix pinv(const CMatrix& a) { return a.completeOrthogonalDecomposition().pseudoInverse(); }

CMatrix b2_pinv(const InclusionModel& m, const CMatrix& a) {
  if (m.kind() == ModelKind::FullMatrix) return pinv(a);
  double cut = tolerances().equality * std::max(1.0, a.cwiseAbs().maxCoeff());
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (std::abs(a(i, j)) > cut) out(i, j) = 1.0 / a(i, j);
  return out;
}

CMatrix modular_delta(const InclusionModel& m, const CMatrix& rho, bool half) {
  check_density(m, rho);
  CMatrix a = half ? mat_sqrt(rho) : rho;
  CMatrix ainv = half ? mat_pow(rho, -0.5) : CMatrix(rho.inverse());
  CMatrix x = m.embed(a) * m.e1() * m.embed(ainv);
  return m.f12(x) / std::sqrt(m.lambda());
}

std::vector<CMatrix> images(const BimoduleChannel& ch) {
  std::vector<CMatrix> out;
  for (int i = 0; i < ch.model().dim_m(); ++i) out.push_back(ch.apply_transfer(ch.model().basis_m(i)));
  return out;
}

// max over basis pairs of |f(i, j)|
template <class F>
double max_pairs(int dim, F f) {
  double r = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) r = std::max(r, std::abs(f(i, j)));
  return r;
}

std::string rational_text(const Rational& r) {
  std::ostringstream o;
  if (r.denominator() == 1) o << r.numerator();
  else o << "(" << r.numerator() << "/" << r.denominator() << ")";
  return o.str();
}

}  // namespace

void check_density(const InclusionModel& m, const CMatrix& rho) {
  m.check_m(rho, "density");
  require_finite(rho, "density");
  const Tolerances& tol = tolerances();
  double s = norm2(rho);
  if (hermiticity_residual(rho) > tol.hermiticity * (1.0 + s))
    throw Error(ErrorCode::NotPositiveDensity, "density is not Hermitian");
  if (min_eig(0.5 * (rho + rho.adjoint())) <= tol.positivity_floor * (1.0 + s))
    throw Error(ErrorCode::NotPositiveDensity, "density is not strictly positive");
  if (std::abs(m.tau(rho) - 1.0) > tol.equality * (1.0 + s))
    throw Error(ErrorCode::NotPositiveDensity, "density does not have unit trace");
}

SymmetryDatum modular_multiplier(ModelPtr model, const CMatrix& rho) {
  CMatrix dh = modular_delta(*model, rho, false);
  return {std::move(model), dh, false};
}

SymmetryDatum modular_multiplier_half(ModelPtr model, const CMatrix& rho) {
  CMatrix dh = modular_delta(*model, rho, true);
  return {std::move(model), dh, true};
}

void check_delta(const SymmetryDatum& d) {
  const InclusionModel& m = *d.model;
  m.check_b2(d.delta_hat, "delta");
  const Tolerances& tol = tolerances();
  double s = m.b2_norm(d.delta_hat);
  if (m.b2_herm_residual(d.delta_hat) > tol.hermiticity * (1.0 + s)) throw Error(ErrorCode::InvalidDelta, "delta is not Hermitian");
  if (m.b2_min_eig(0.5 * (d.delta_hat + m.b2_adj(d.delta_hat))) <= tol.positivity_floor * (1.0 + s))
    throw Error(ErrorCode::InvalidDelta, "delta is not strictly positive");
  CMatrix e2 = m.e2();
  double r = std::max(m.b2_norm(m.b2_mul(d.delta_hat, e2) - e2), m.b2_norm(m.b2_mul(e2, d.delta_hat) - e2));
  if (r > rel_tol(s)) throw Error(ErrorCode::InvalidDelta, "delta e2 != e2");
}

EquilibriumReport check_equilibrium(const BimoduleChannel& ch, const CMatrix& rho) {
  const InclusionModel& m = ch.model();
  m.check_m(rho, "equilibrium state");
  EquilibriumReport r;
  for (int i = 0; i < m.dim_m(); ++i) {
    CMatrix x = m.basis_m(i);
    r.state_residual = std::max(r.state_residual, std::abs(m.tau(rho * ch.apply_transfer(x)) - m.tau(rho * x)));
  }
  check_density(m, rho);
  CMatrix dh = modular_delta(m, rho, false);
  CMatrix prod = m.b2_mul(dh, m.conj_b2(ch.multiplier()));
  r.multiplier_residual = (multiplier_map(m, prod, m.one_m()) - m.one_m()).norm();
  double s = 1.0 + norm2(ch.transfer()) + norm2(rho);
  r.equilibrium = r.state_residual <= rel_tol(s);
  r.multiplier_equilibrium = r.multiplier_residual <= rel_tol(s * (1.0 + m.b2_norm(dh)));
  return r;
}

StateSymmetryReport check_gns_state(const BimoduleChannel& ch, const CMatrix& rho) {
  const InclusionModel& m = ch.model();
  check_density(m, rho);
  std::vector<CMatrix> im = images(ch);
  StateSymmetryReport r;
  r.residual = max_pairs(m.dim_m(), [&](int i, int j) {
    CMatrix y = m.basis_m(i), x = m.basis_m(j);
    return m.tau(rho * y.adjoint() * im[j]) - m.tau(rho * im[i].adjoint() * x);
  });
  CMatrix rinv = rho.inverse();
  CMatrix ad(m.dim_m(), m.dim_m());
  for (int i = 0; i < m.dim_m(); ++i) ad.col(i) = m.vec_m(rho * m.basis_m(i) * rinv);
  r.modular_residual = (ch.transfer() * ad - ad * ch.transfer()).norm();
  r.holds = r.residual <= rel_tol(norm2(ch.transfer()) * norm2(rho));
  return r;
}

StateSymmetryReport check_kms_state(const BimoduleChannel& ch, const CMatrix& rho) {
  const InclusionModel& m = ch.model();
  check_density(m, rho);
  std::vector<CMatrix> im = images(ch);
  CMatrix h = mat_sqrt(rho);
  StateSymmetryReport r;
  r.residual = max_pairs(m.dim_m(), [&](int i, int j) {
    CMatrix y = m.basis_m(i), x = m.basis_m(j);
    return m.tau(h * y.adjoint() * h * im[j]) - m.tau(h * im[i].adjoint() * h * x);
  });
  r.holds = r.residual <= rel_tol(norm2(ch.transfer()) * norm2(rho));
  return r;
}

BimoduleReport check_bimodule_gns(const InclusionModel& m, const CMatrix& phi, const SymmetryDatum& d) {
  check_delta(d);
  if (!d.model->same_as(m)) throw Error(ErrorCode::ModelMismatch, "delta model");
  m.check_b2(phi, "bimodule gns");
  const CMatrix& dh = d.delta_hat;
  CMatrix cphi = m.conj_b2(phi), cd_ = m.conj_b2(dh);
  double s = 1.0 + m.b2_norm(phi);
  double sd = 1.0 + m.b2_norm(dh) + m.b2_norm(cd_);
  BimoduleReport r;
  r.residual = m.b2_norm(cphi - m.b2_mul(phi, cd_)) / (s * sd);
  r.normal_residual = m.b2_norm(m.b2_mul(phi, cphi) - m.b2_mul(cphi, phi)) / (s * s);
  r.delta_commutator = m.b2_norm(m.b2_mul(phi, dh) - m.b2_mul(dh, phi)) / (s * sd);
  r.conj_delta_commutator = m.b2_norm(m.b2_mul(phi, cd_) - m.b2_mul(cd_, phi)) / (s * sd);
  CMatrix rp = m.b2_range(phi);
  r.range_residual = m.b2_norm(m.b2_mul(rp, m.b2_mul(dh, cd_)) - rp) / (sd * sd);
  double tol = tolerances().equality;
  r.holds = r.residual <= tol;
  r.consequences_hold = r.normal_residual <= tol && r.delta_commutator <= tol && r.conj_delta_commutator <= tol &&
                        r.range_residual <= tol;
  return r;
}

BimoduleReport check_bimodule_kms(const InclusionModel& m, const CMatrix& phi, const SymmetryDatum& d) {
  check_delta(d);
  if (!d.model->same_as(m)) throw Error(ErrorCode::ModelMismatch, "delta model");
  m.check_b2(phi, "bimodule kms");
  const CMatrix& dh = d.delta_hat;
  CMatrix cphi = m.conj_b2(phi), cd_ = m.conj_b2(dh);
  double s = 1.0 + m.b2_norm(phi);
  double sd = 1.0 + m.b2_norm(dh) + m.b2_norm(cd_);
  BimoduleReport r;
  r.residual = m.b2_norm(cphi - m.b2_mul(cd_, m.b2_mul(phi, cd_))) / (s * sd * sd);
  CMatrix rp = m.b2_range(phi);
  r.range_residual = m.b2_norm(m.b2_mul(rp, cd_) - m.b2_mul(rp, m.b2_inverse(dh))) / sd;
  double tol = tolerances().equality;
  r.holds = r.residual <= tol;
  r.consequences_hold = r.range_residual <= tol;
  return r;
}

double equivalence_aux_residual(const InclusionModel& m, const CMatrix& phi, const CMatrix& rho) {
  m.check_b2(phi, "aux residual");
  CMatrix cdelta = m.conj_b2(modular_delta(m, rho, false));
  CMatrix e1 = m.e1();
  CMatrix lhs = m.embed(rho.inverse()) * e1 * m.embed(rho);
  CMatrix rp = m.b2_range(phi);
  return m.b2_act(rp, lhs - m.b2_act(cdelta, e1)).norm();
}

std::optional<Rational> to_rational(double x, long long max_den) {
  if (!std::isfinite(x)) return std::nullopt;
  // continued fraction convergents
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(v);
    if (std::abs(fl) > 1e15) return std::nullopt;
    long long a = (long long)fl;
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double approx = double(p1) / double(q1);
    if (std::abs(approx - x) <= 1e-12 * std::max(1.0, std::abs(x))) return Rational(p1, q1);
    double frac = v - fl;
    if (frac < 1e-300) break;
    v = 1.0 / frac;
  }
  return std::nullopt;
}

Rational path_ratio(const std::vector<std::vector<Rational>>& delta, const std::vector<int>& path) {
  Rational r(1);
  for (size_t i = 0; i + 1 < path.size(); ++i) r *= delta[path[i]][path[i + 1]];
  return r;
}

std::string RatioRelation::text() const {
  std::ostringstream o;
  o << "t" << (b + 1) << " = ";
  if (ratio != Rational(1)) o << rational_text(ratio) << " ";
  o << "t" << (a + 1);
  return o.str();
}

namespace {

// State realizability of a Spin delta: delta_jk = t_k / t_j on the support graph.
RealizabilityReport spin_realizability(const InclusionModel& m, const CMatrix& delta, const std::vector<std::vector<bool>>& supp) {
  const int n = m.n();
  RealizabilityReport rep;
  std::vector<std::vector<Rational>> q(n, std::vector<Rational>(n, Rational(1)));
  bool exact = true;
  for (int j = 0; j < n && exact; ++j)
    for (int k = 0; k < n; ++k) {
      if (!supp[j][k]) continue;
      auto r = to_rational(delta(j, k).real());
      if (!r) { exact = false; break; }
      q[j][k] = *r;
    }
  rep.exact = exact;
  auto ratio_ok = [&](int j, int k, const std::vector<double>& t, const std::vector<Rational>& tq) {
    if (exact) return tq[k] == q[j][k] * tq[j];
    return std::abs(t[k] - delta(j, k).real() * t[j]) <= tolerances().equality * (std::abs(t[k]) + 1e-300);
  };
  std::vector<int> comp(n, -1);
  std::vector<double> t(n, 1.0);
  std::vector<Rational> tq(n, Rational(1));
  int ncomp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<int> bfs;
    bfs.push(s);
    comp[s] = ncomp;
    while (!bfs.empty()) {
      int j = bfs.front();
      bfs.pop();
      for (int k = 0; k < n; ++k)
        if (supp[j][k] && comp[k] < 0) {
          comp[k] = ncomp;
          t[k] = delta(j, k).real() * t[j];
          if (exact) tq[k] = q[j][k] * tq[j];
          bfs.push(k);
        }
    }
    ++ncomp;
  }
  int va = -1, vb = -1;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k)
      if (supp[j][k] && !ratio_ok(j, k, t, tq)) { va = j; vb = k; }
  if (va < 0) {
    rep.status = ncomp > 1 ? Realizability::Underdetermined : Realizability::Realizable;
    CMatrix rho = CMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j) rho(j, j) = 1.0 / t[j];
    rep.density = CMatrix(rho / m.tau(rho).real());
    return rep;
  }
  rep.status = Realizability::Infeasible;
  // every simple path from va to vb gives one relation between t_vb and t_va
  std::vector<int> path{va};
  std::vector<bool> used(n, false);
  used[va] = true;
  std::vector<RatioRelation> all;
  std::function<void(int)> dfs = [&](int j) {
    if (j == vb) {
      RatioRelation rel;
      rel.a = va;
      rel.b = vb;
      rel.path = path;
      if (exact) rel.ratio = path_ratio(q, path);
      else {
        double r = 1;
        for (size_t i = 0; i + 1 < path.size(); ++i) r *= delta(path[i], path[i + 1]).real();
        rel.ratio = to_rational(r).value_or(Rational(0));
      }
      all.push_back(rel);
      return;
    }
    for (int k = 0; k < n; ++k)
      if (supp[j][k] && !used[k]) {
        used[k] = true;
        path.push_back(k);
        dfs(k);
        path.pop_back();
        used[k] = false;
      }
  };
  dfs(va);
  std::stable_sort(all.begin(), all.end(), [](const RatioRelation& x, const RatioRelation& y) {
    if (x.path.size() != y.path.size()) return x.path.size() < y.path.size();
    return x.path < y.path;
  });
  std::vector<Rational> seen;
  for (const auto& rel : all) {
    if (std::find(seen.begin(), seen.end(), rel.ratio) != seen.end()) continue;
    seen.push_back(rel.ratio);
    rep.witness.push_back(rel);
  }
  for (size_t i = 0; i < rep.witness.size(); ++i) rep.witness_text += (i ? " and " : "") + rep.witness[i].text();
  return rep;
}

SolveResult solve_spin(ModelPtr model, const CMatrix& c) {
  const InclusionModel& m = *model;
  const int n = m.n();
  SolveResult res;
  double cut = tolerances().equality * std::max(1.0, c.cwiseAbs().maxCoeff());
  std::vector<std::vector<bool>> supp(n, std::vector<bool>(n, false));
  CMatrix delta = CMatrix::Ones(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) supp[j][k] = j != k && std::abs(c(j, k)) > cut;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      if (supp[j][k] != supp[k][j]) {
        std::ostringstream o;
        o << "support is not conj-symmetric at (" << j + 1 << "," << k + 1 << ")";
        res.reason = o.str();
        return res;
      }
      if (!supp[j][k]) continue;
      cd r = c(k, j) / c(j, k);
      if (std::abs(r.imag()) > tolerances().equality * std::abs(r) || r.real() <= 0) {
        std::ostringstream o;
        o << "ratio at (" << j + 1 << "," << k + 1 << ") is not positive";
        res.reason = o.str();
        return res;
      }
      delta(k, j) = r.real();
      delta(j, k) = 1.0 / r.real();
    }
  SymmetryDatum d{model, delta, false};
  BimoduleReport br = check_bimodule_gns(m, c, d);
  if (!br.holds) {
    res.reason = "completed delta fails the bimodule identity";
    return res;
  }
  res.status = SolveStatus::Found;
  res.datum = d;
  res.realizability = spin_realizability(m, delta, supp);
  return res;
}

SolveResult solve_full(ModelPtr model, const CMatrix& phi) {
  const InclusionModel& m = *model;
  SolveResult res;
  CMatrix cphi = m.conj_b2(phi);
  CMatrix rp = m.b2_range(phi);
  double s = 1.0 + m.b2_norm(phi);
  if (m.b2_norm(m.b2_range(cphi) - rp) > tolerances().equality * s) {
    res.reason = "R(phi) != R(conj(phi))";
    return res;
  }
  if (m.b2_norm(m.b2_mul(phi, cphi) - m.b2_mul(cphi, phi)) > tolerances().equality * s * s) {
    res.reason = "phi is not normal with its contragredient";
    return res;
  }
  CMatrix cdelta = m.b2_mul(b2_pinv(m, phi), cphi) + m.one_b2() - rp;
  CMatrix delta = m.conj_b2(cdelta);
  delta = 0.5 * (delta + delta.adjoint());
  SymmetryDatum d{model, delta, false};
  try {
    check_delta(d);
  } catch (const Error& e) {
    res.reason = std::string("candidate delta rejected: ") + e.what();
    return res;
  }
  BimoduleReport br = check_bimodule_gns(m, phi, d);
  if (!br.holds) {
    res.reason = "candidate delta fails the bimodule identity";
    return res;
  }
  res.status = SolveStatus::Found;
  res.datum = d;
  // modular form Delta^T (x) Delta^{-1}: read Delta off the first partial trace
  const int n = m.n();
  CMatrix p = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int kk = 0; kk < n; ++kk)
      for (int l = 0; l < n; ++l) p(k, kk) += delta(k * n + l, kk * n + l);
  CMatrix rho = p.transpose();
  rho = 0.5 * (rho + rho.adjoint());
  res.realizability.status = Realizability::NotAssessed;
  if (min_eig(rho) > 0) {
    rho /= m.tau(rho).real();
    CMatrix md = modular_delta(m, rho, false);
    if (m.b2_norm(md - delta) <= tolerances().equality * (1.0 + m.b2_norm(delta))) {
      res.realizability.status = Realizability::Realizable;
      res.realizability.density = rho;
    }
  }
  return res;
}

}  // namespace

SolveResult solve_delta(ModelPtr model, const CMatrix& phi) {
  model->check_b2(phi, "solve_delta");
  if (model->kind() == ModelKind::Spin) return solve_spin(std::move(model), phi);
  return solve_full(std::move(model), phi);
}

SolveResult solve_delta(const BimoduleChannel& ch) { return solve_delta(ch.model_ptr(), ch.multiplier()); }

double spectral_gap(const Lindbladian& l) {
  Eigen::ComplexEigenSolver<CMatrix> es(l.transfer());
  double scale = 1.0 + norm2(l.transfer());
  double gap = 0;
  bool any = false;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    cd z = es.eigenvalues()(i);
    if (std::abs(z) <= 1e-9 * scale) continue;
    if (!any || z.real() < gap) gap = z.real();
    any = true;
  }
  return any ? gap : 0.0;
}

bool relatively_ergodic(const Lindbladian& l) { return fixed_points(evolve(l, 1.0)).size() == 1; }

SemigroupLimit semigroup_limit(const Lindbladian& l, const SymmetryDatum& d, const std::optional<CMatrix>& rho,
                               const std::optional<CMatrix>& probe) {
  const InclusionModel& m = l.model();
  if (!check_bimodule_gns(m, l.lhat(), d).holds) throw Error(ErrorCode::NotSymmetric, "generator is not bimodule GNS symmetric");
  // the identity is linear in the multiplier but not stable under convolution, so the semigroup is checked too
  if (!check_bimodule_gns(m, evolve(l, 1.0).multiplier(), d).holds)
    throw Error(ErrorCode::NotSymmetric, "semigroup is not bimodule GNS symmetric at t = 1");
  if (!relatively_ergodic(l)) throw Error(ErrorCode::NotErgodic, "fixed points exceed the scalars");
  SemigroupLimit out;
  out.gap = spectral_gap(l);
  if (out.gap <= 0) throw Error(ErrorCode::NotErgodic, "no positive spectral gap");
  out.time = 50.0 / out.gap;
  CMatrix e = m.cond_expect_m1(m.conj_b2(d.delta_hat));
  out.closed_form = std::sqrt(m.lambda()) * m.b2_from_commutant(e.inverse());
  out.numeric = evolve(l, out.time).multiplier();
  out.residual = m.b2_norm(out.closed_form - out.numeric);
  if (rho) {
    CMatrix dd = probe ? *probe : m.one_m();
    CMatrix tstar = expm_general(-out.time * CMatrix(l.transfer().adjoint()));
    CMatrix lim = m.unvec_m(tstar * m.vec_m(dd));
    out.density_residual = (lim - m.tau(dd) * *rho).norm();
  }
  return out;
}

}  // namespace bqms
