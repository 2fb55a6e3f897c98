#include "bqms/gradientflow.hpp"

#include <algorithm>
#include <cmath>

namespace bqms {

namespace {

double tol_eq() { return tolerances().equality; }

// Eigendecomposition of a positive D reused across K applications.
struct KBasis {
  CMatrix u;
  RVector d;
  explicit KBasis(const CMatrix& dm) {
    require_square(dm, "K operator density");
    double s = norm2(dm);
    if (hermiticity_residual(dm) > tolerances().hermiticity * (1.0 + s)) throw Error(ErrorCode::SingularD, "D is not Hermitian");
    HermEig e = herm_eig(0.5 * (dm + dm.adjoint()));
    if (e.values(0) <= tolerances().positivity_floor * (1.0 + s)) throw Error(ErrorCode::SingularD, "D is not strictly positive");
    u = e.vectors;
    d = e.values;
  }
  template <class F>
  CMatrix scale(double mu, const CMatrix& v, F f) const {
    if (!(mu > 0)) throw Error(ErrorCode::SingularD, "mu must be positive");
    CMatrix w = u.adjoint() * v * u;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index k = 0; k < w.cols(); ++k) w(i, k) *= f(d(i) / mu, mu * d(k));
    return u * w * u.adjoint();
  }
  CMatrix apply(double mu, const CMatrix& v) const { return scale(mu, v, log_mean); }
  CMatrix inverse(double mu, const CMatrix& v) const { return scale(mu, v, inv_log_mean); }
};

double re_tau1(const InclusionModel& m, const CMatrix& a, const CMatrix& b) { return m.tau1(a.adjoint() * b).real(); }

CMatrix hermitize(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

double normalized_trace(const CMatrix& a) { return (a.trace() / double(a.rows())).real(); }

// components d_j h for the balanced derivation
std::vector<CMatrix> components(const JointSpectrum& js, const CMatrix& h) {
  std::vector<CMatrix> out;
  for (size_t j = 0; j < js.items.size(); ++j) out.push_back(balanced_directional(js, int(j), h));
  return out;
}

// 1/2 lambda^{-1/2} sum_j d_j* K_j d_j applied to h
CMatrix weighted_laplacian(const JointSpectrum& js, const KBasis& kb, const CMatrix& h) {
  const InclusionModel& m = *js.model;
  CMatrix acc = CMatrix::Zero(m.n(), m.n());
  for (size_t j = 0; j < js.items.size(); ++j) {
    double sm = std::sqrt(js.items[j].mu);
    acc += balanced_directional_adjoint(js, int(j), kb.apply(sm, balanced_directional(js, int(j), h)));
  }
  return 0.5 / std::sqrt(m.lambda()) * acc;
}

CMatrix dual_evolve(const Lindbladian& l, double t, const CMatrix& d0) {
  const InclusionModel& m = l.model();
  CMatrix e = expm_general(-t * CMatrix(l.transfer().adjoint()));
  return hermitize(m.unvec_m(e * m.vec_m(d0)));
}

void check_positive(const CMatrix& d, const char* what) {
  double s = norm2(d);
  if (hermiticity_residual(d) > tolerances().hermiticity * (1.0 + s)) throw Error(ErrorCode::NotPositiveDensity, what);
  if (min_eig(hermitize(d)) <= tolerances().positivity_floor * (1.0 + s)) throw Error(ErrorCode::NotPositiveDensity, what);
}

}  // namespace

JointSpectrum joint_spectrum(const Lindbladian& l, const SymmetryDatum& d) {
  check_delta(d);
  const InclusionModel& m = l.model();
  if (!d.model->same_as(m)) throw Error(ErrorCode::ModelMismatch, "joint spectrum");
  JointSpectrum js;
  js.model = l.model_ptr();
  js.l0 = l.l0();
  js.delta = d.delta_hat;
  CMatrix r = m.b2_range(js.l0);
  CMatrix a = js.l0, b = m.b2_mul(js.delta, r), c = m.b2_mul(m.conj_b2(js.delta), r);
  auto comm = [&](const CMatrix& x, const CMatrix& y) {
    return m.b2_norm(m.b2_mul(x, y) - m.b2_mul(y, x)) / ((1.0 + m.b2_norm(x)) * (1.0 + m.b2_norm(y)));
  };
  js.commutator_residual = std::max({comm(a, b), comm(a, c), comm(b, c), comm(js.delta, r),
                                     m.b2_herm_residual(b) / (1.0 + m.b2_norm(b)), m.b2_herm_residual(c) / (1.0 + m.b2_norm(c))});
  if (js.commutator_residual > tol_eq())
    throw Error(ErrorCode::NotCommuting, "L0, delta R and conj(delta) R do not commute: " + std::to_string(js.commutator_residual));
  double floor = tolerances().positivity_floor * (1.0 + m.b2_norm(a));
  std::vector<CMatrix> projections;
  if (m.kind() == ModelKind::Spin) {
    const int n = m.n();
    std::vector<std::pair<int, int>> keys;
    std::vector<std::vector<std::pair<int, int>>> groups;
    auto close = [&](cd x, cd y) { return std::abs(x - y) <= tolerances().cluster_gap * (1.0 + std::abs(x) + std::abs(y)); };
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (a(j, k).real() <= floor) continue;
        bool placed = false;
        for (auto& g : groups) {
          auto [gj, gk] = g.front();
          if (close(a(j, k), a(gj, gk)) && close(b(j, k), b(gj, gk)) && close(c(j, k), c(gj, gk))) {
            g.push_back({j, k});
            placed = true;
            break;
          }
        }
        if (!placed) groups.push_back({{j, k}});
      }
    for (auto& g : groups) {
      CMatrix p = CMatrix::Zero(n, n);
      for (auto [j, k] : g) p(j, k) = 1.0;
      projections.push_back(p);
    }
  } else {
    // a generic real combination separates the joint eigenspaces
    const double g1 = 0.6180339887498949, g2 = 0.4142135623730951;
    CMatrix h = a / std::max(1e-300, m.b2_norm(a));
    if (m.b2_norm(b) > 0) h += g1 * b / m.b2_norm(b);
    if (m.b2_norm(c) > 0) h += g2 * c / m.b2_norm(c);
    HermEig e = herm_eig(hermitize(h));
    const Eigen::Index dim = e.values.size();
    double cut = 1e-9 * (1.0 + std::abs(e.values(dim - 1)));
    Eigen::Index start = 0;
    while (start < dim) {
      Eigen::Index end = start + 1;
      while (end < dim && e.values(end) - e.values(end - 1) <= cut) ++end;
      if (e.values(start) > cut) {
        CMatrix v = e.vectors.middleCols(start, end - start);
        projections.push_back(v * v.adjoint());
      }
      start = end;
    }
  }
  CMatrix dhalf = m.b2_fun(js.delta, MatFun::Power, -0.5);
  CMatrix target = m.b2_mul(js.l0, dhalf);
  CMatrix om = CMatrix::Zero(a.rows(), a.cols()), mu = om;
  for (const CMatrix& p : projections) {
    JointItem it;
    it.p = p;
    it.f = m.f12_inv(p);
    double tp = m.tau2(p).real();
    it.omega = m.tau2(m.b2_mul(p, target)).real() / tp;
    it.mu = m.tau2(m.b2_mul(p, js.delta)).real() / tp;
    om += it.omega * p;
    mu += it.mu * p;
    js.items.push_back(it);
  }
  js.omega_residual = m.b2_norm(target - om);
  js.delta_residual = m.b2_norm(b - mu);
  for (size_t j = 0; j < js.items.size(); ++j) {
    CMatrix cp = m.conj_b2(js.items[j].p);
    for (size_t k = 0; k < js.items.size(); ++k)
      if (m.b2_norm(cp - js.items[k].p) <= 1e-9) {
        js.items[j].conj_index = int(k);
        break;
      }
    if (js.items[j].conj_index < 0) throw Error(ErrorCode::NotCommuting, "conj(p_j) is not a joint spectral projection");
  }
  for (const JointItem& it : js.items) {
    const JointItem& o = js.items[it.conj_index];
    js.involution_residual = std::max({js.involution_residual, std::abs(it.omega - o.omega), std::abs(it.mu * o.mu - 1.0)});
  }
  return js;
}

CMatrix joint_fourier(const JointSpectrum& js, int j) { return js.items.at(j).f; }

CMatrix balanced_directional(const JointSpectrum& js, int j, const CMatrix& x) {
  const JointItem& it = js.items.at(j);
  return std::sqrt(it.omega) * commutator(js.model->embed(x), it.f);
}

CMatrix balanced_derivation(const JointSpectrum& js, const CMatrix& x) {
  const InclusionModel& m = *js.model;
  CMatrix acc = CMatrix::Zero(m.gns_dim(), m.gns_dim());
  for (size_t j = 0; j < js.items.size(); ++j) acc += balanced_directional(js, int(j), x);
  return acc;
}

CMatrix balanced_directional_adjoint(const JointSpectrum& js, int j, const CMatrix& y) {
  const JointItem& it = js.items.at(j);
  return std::sqrt(it.omega) * js.model->cond_expect_m(commutator(y, it.f.adjoint()));
}

double balanced_conj_residual(const JointSpectrum& js, int j, const CMatrix& x) {
  const InclusionModel& m = *js.model;
  const JointItem& it = js.items.at(j);
  const JointItem& o = js.items.at(it.conj_index);
  CMatrix lhs = m.conj_b1(balanced_directional(js, j, x));
  CMatrix rhs = -std::sqrt(it.omega) * commutator(m.conj_b1(m.embed(x)), o.f);
  return (lhs - rhs).norm();
}

CMatrix kd_apply(const CMatrix& d, double mu, const CMatrix& v) { return KBasis(d).apply(mu, v); }

CMatrix kd_inverse(const CMatrix& d, double mu, const CMatrix& v) { return KBasis(d).inverse(mu, v); }

CMatrix kd_apply_quadrature(const CMatrix& d, double mu, const CMatrix& v, int nodes) {
  KBasis kb(d);
  return gauss_legendre(
      [&](double s) {
        CMatrix ds = kb.u * kb.d.array().pow(s).matrix().asDiagonal() * kb.u.adjoint();
        CMatrix d1s = kb.u * kb.d.array().pow(1.0 - s).matrix().asDiagonal() * kb.u.adjoint();
        return CMatrix(std::pow(mu, 1.0 - 2.0 * s) * ds * v * d1s);
      },
      0.0, 1.0, nodes);
}

CMatrix generator_adjoint(const Lindbladian& l, const CMatrix& d) {
  const InclusionModel& m = l.model();
  return m.unvec_m(l.transfer().adjoint() * m.vec_m(d));
}

CMatrix divergence_form_adjoint(const JointSpectrum& js, const CMatrix& d) {
  const InclusionModel& m = *js.model;
  m.check_m(d, "divergence form");
  CMatrix logd = mat_log(d);
  KBasis kb(m.embed(d));
  CMatrix acc = CMatrix::Zero(m.n(), m.n());
  for (size_t j = 0; j < js.items.size(); ++j) {
    const JointItem& it = js.items[j];
    CMatrix g = balanced_directional(js, int(j), logd) - std::sqrt(it.omega) * std::log(it.mu) * it.f;
    acc += balanced_directional_adjoint(js, int(j), kb.apply(std::sqrt(it.mu), g));
  }
  return 0.5 / std::sqrt(m.lambda()) * acc;
}

CMatrix divergence_form_adjoint(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d) {
  if (!check_bimodule_gns(l.model(), l.lhat(), delta).holds)
    throw Error(ErrorCode::NotSymmetric, "divergence form needs bimodule GNS symmetry");
  return divergence_form_adjoint(joint_spectrum(l, delta), d);
}

std::vector<CMatrix> hermitian_traceless_basis(const InclusionModel& m) {
  const int n = m.n();
  std::vector<CMatrix> raw;
  for (int j = 0; j + 1 < n; ++j) raw.push_back(matrix_unit(n, j, j) - matrix_unit(n, j + 1, j + 1));
  if (m.kind() == ModelKind::FullMatrix)
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        raw.push_back(matrix_unit(n, j, k) + matrix_unit(n, k, j));
        raw.push_back(cd(0, 1) * (matrix_unit(n, j, k) - matrix_unit(n, k, j)));
      }
  // Gram-Schmidt for Re tau(a* b)
  std::vector<CMatrix> out;
  for (CMatrix v : raw) {
    for (const CMatrix& u : out) v -= m.tau(u.adjoint() * v).real() * u;
    double nv = std::sqrt(m.tau(v.adjoint() * v).real());
    out.push_back(v / nv);
  }
  return out;
}

HiddenDensity hidden_density(const JointSpectrum& js, const CMatrix& d, double regularization) {
  const InclusionModel& m = *js.model;
  m.check_m(d, "hidden density probe");
  KBasis kb(m.embed(d));
  std::vector<CMatrix> basis = hermitian_traceless_basis(m);
  const size_t nb = basis.size(), nj = js.items.size();
  std::vector<CMatrix> g(nj), kg(nj);
  for (size_t j = 0; j < nj; ++j) {
    const JointItem& it = js.items[j];
    g[j] = std::sqrt(it.omega) * std::log(it.mu) * it.f;
    kg[j] = kb.apply(std::sqrt(it.mu), g[j]);
  }
  std::vector<std::vector<CMatrix>> dh(nb), kdh(nb);
  for (size_t a = 0; a < nb; ++a)
    for (size_t j = 0; j < nj; ++j) {
      dh[a].push_back(balanced_directional(js, int(j), basis[a]));
      kdh[a].push_back(kb.apply(std::sqrt(js.items[j].mu), dh[a][j]));
    }
  RMatrix gram = RMatrix::Zero(nb, nb);
  RVector rhs = RVector::Zero(nb);
  for (size_t a = 0; a < nb; ++a) {
    for (size_t b = 0; b < nb; ++b)
      for (size_t j = 0; j < nj; ++j) gram(a, b) += re_tau1(m, dh[a][j], kdh[b][j]);
    for (size_t j = 0; j < nj; ++j) rhs(a) += re_tau1(m, kdh[a][j], g[j]);
  }
  gram = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  HiddenDensity out;
  out.condition = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (out.condition > 1e12 && regularization <= 0)
    throw Error(ErrorCode::IllConditioned, "normal equations condition " + std::to_string(out.condition));
  RMatrix sys = gram + regularization * RMatrix::Identity(nb, nb);
  RVector c = sys.ldlt().solve(rhs);
  out.x = CMatrix::Zero(m.n(), m.n());
  for (size_t a = 0; a < nb; ++a) out.x += c(a) * basis[a];
  out.x = hermitize(out.x);
  double rem = 0, orth = 0;
  std::vector<CMatrix> res(nj), kres(nj);
  for (size_t j = 0; j < nj; ++j) {
    res[j] = g[j] - balanced_directional(js, int(j), out.x);
    kres[j] = kb.apply(std::sqrt(js.items[j].mu), res[j]);
    rem += re_tau1(m, res[j], kres[j]);
  }
  for (size_t a = 0; a < nb; ++a) {
    double s = 0;
    for (size_t j = 0; j < nj; ++j) s += re_tau1(m, dh[a][j], kres[j]);
    orth = std::max(orth, std::abs(s));
  }
  out.remainder = std::sqrt(std::max(0.0, rem));
  out.orthogonality_residual = orth / (1.0 + rhs.cwiseAbs().maxCoeff());
  CMatrix ex = mat_exp_h(out.x);
  out.density = ex / m.tau(ex).real();
  return out;
}

double relative_entropy(const CMatrix& rho, const CMatrix& sigma) {
  require_square(rho, "relative entropy");
  require_square(sigma, "relative entropy");
  if (rho.rows() != sigma.rows()) throw Error(ErrorCode::ShapeMismatch, "relative entropy");
  const double cut = tolerances().log_cutoff;
  HermEig er = herm_eig(hermitize(rho)), es = herm_eig(hermitize(sigma));
  double sr = std::max(1.0, std::abs(er.values.maxCoeff())), ss = std::max(1.0, std::abs(es.values.maxCoeff()));
  if (er.values.minCoeff() < -tolerances().positivity_floor * sr) throw Error(ErrorCode::NotPositive, "rho is not positive");
  if (es.values.minCoeff() < -tolerances().positivity_floor * ss) throw Error(ErrorCode::NotPositive, "sigma is not positive");
  const Eigen::Index n = rho.rows();
  // kernel of sigma must be inside the kernel of rho
  CMatrix logs = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = es.values(i);
    CVector u = es.vectors.col(i);
    if (s <= cut * ss) {
      if ((u.adjoint() * rho * u)(0, 0).real() > cut * sr) throw Error(ErrorCode::SupportViolation, "ker(sigma) not in ker(rho)");
      continue;
    }
    logs += std::log(s) * u * u.adjoint();
  }
  double a = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = er.values(i);
    if (r > cut * sr) a += r * std::log(r);
  }
  return (a - (rho * logs).trace().real()) / double(n);
}

double weighted_gradient_norm2(const JointSpectrum& js, const CMatrix& d, const CMatrix& h) {
  const InclusionModel& m = *js.model;
  KBasis kb(m.embed(d));
  double s = 0;
  for (size_t j = 0; j < js.items.size(); ++j) {
    CMatrix g = balanced_directional(js, int(j), h);
    s += re_tau1(m, g, kb.apply(std::sqrt(js.items[j].mu), g));
  }
  return s / std::sqrt(m.lambda());
}

MetricResult metric_norm(const JointSpectrum& js, const CMatrix& d, const CMatrix& ddot) {
  const InclusionModel& m = *js.model;
  m.check_m(ddot, "metric direction");
  double sc = 1.0 + norm2(ddot);
  if (std::abs(m.tau(ddot)) > tol_eq() * sc) throw Error(ErrorCode::NotInRange, "direction is not traceless");
  if (hermiticity_residual(ddot) > tolerances().hermiticity * sc) throw Error(ErrorCode::NotInRange, "direction is not self-adjoint");
  MetricResult out;
  out.x = CMatrix::Zero(m.n(), m.n());
  if (ddot.norm() == 0) return out;
  KBasis kb(m.embed(d));
  std::vector<CMatrix> basis = hermitian_traceless_basis(m);
  const Eigen::Index nb = Eigen::Index(basis.size()), g = m.gns_dim();
  // Gram matrix tau(b_i Lap b_k) in the eigenbasis of D, where each K_j acts by Hadamard weights
  const double unit = m.tau1(CMatrix::Identity(g, g)).real() / double(g);
  RMatrix a = RMatrix::Zero(nb, nb);
  CMatrix cols(g * g, nb);
  RVector wts(g * g);
  for (size_t j = 0; j < js.items.size(); ++j) {
    double sm = std::sqrt(js.items[j].mu);
    for (Eigen::Index q = 0; q < g; ++q)
      for (Eigen::Index p = 0; p < g; ++p) wts(q * g + p) = log_mean(kb.d(p) / sm, sm * kb.d(q));
    for (Eigen::Index k = 0; k < nb; ++k)
      cols.col(k) = (kb.u.adjoint() * balanced_directional(js, int(j), basis[size_t(k)]) * kb.u).reshaped();
    a.noalias() += (cols.adjoint() * wts.asDiagonal() * cols).real();
  }
  a *= 0.5 * unit / std::sqrt(m.lambda());
  RVector b(nb);
  for (Eigen::Index i = 0; i < nb; ++i) b(i) = m.tau(basis[size_t(i)] * ddot).real();
  a = 0.5 * (a + a.transpose());
  RVector c = a.ldlt().solve(b);
  out.kkt_residual = (a * c - b).cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < nb; ++i) out.x += c(i) * basis[size_t(i)];
  CMatrix ax = weighted_laplacian(js, kb, out.x);
  out.residual = (ax - ddot).norm();
  if (out.residual > 1e-6 * sc) throw Error(ErrorCode::NotInRange, "direction outside the range of the divergence");
  out.norm = std::sqrt(std::max(0.0, 2.0 * c.dot(a * c)));
  return out;
}

namespace {

struct FlowPoint {
  CMatrix d;
  double entropy, metric, rate;
};

FlowPoint flow_point(const Lindbladian& l, const JointSpectrum& js, const CMatrix& d0, const CMatrix& hidden, double t) {
  FlowPoint p;
  p.d = dual_evolve(l, t, d0);
  check_positive(p.d, "flow lost strict positivity");
  p.entropy = relative_entropy(p.d, hidden);
  CMatrix ddot = hermitize(-generator_adjoint(l, p.d));
  p.metric = metric_norm(js, p.d, ddot).norm;
  p.rate = -0.5 * weighted_gradient_norm2(js, p.d, mat_log(p.d) - mat_log(hidden));
  return p;
}

struct FlowSetup {
  JointSpectrum js;
  CMatrix hidden, limit;
  double limit_entropy = 0, gap = 0;
};

FlowSetup setup_flow(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0) {
  const InclusionModel& m = l.model();
  m.check_m(d0, "initial density");
  check_positive(d0, "initial density is not strictly positive");
  if (!check_bimodule_gns(m, l.lhat(), delta).holds) throw Error(ErrorCode::NotSymmetric, "flow needs bimodule GNS symmetry");
  if (!relatively_ergodic(l)) throw Error(ErrorCode::NotErgodic, "flow needs relative ergodicity");
  FlowSetup s{joint_spectrum(l, delta), {}, {}, 0, 0};
  s.hidden = hidden_density(s.js, d0).density;
  s.gap = spectral_gap(l);
  s.limit = dual_evolve(l, 50.0 / s.gap, d0);
  s.limit_entropy = relative_entropy(s.limit, s.hidden);
  return s;
}

}  // namespace

FlowTrace flow(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, const std::vector<double>& grid) {
  const InclusionModel& m = l.model();
  FlowSetup s = setup_flow(l, delta, d0);
  FlowTrace tr;
  tr.hidden = s.hidden;
  tr.limit = s.limit;
  tr.limit_entropy = s.limit_entropy;
  tr.min_eigenvalue = std::numeric_limits<double>::infinity();
  cd tau0 = m.tau(d0);
  for (double t : grid) {
    if (t < 0) throw Error(ErrorCode::NegativeTime, "flow grid");
    FlowPoint p = flow_point(l, s.js, d0, s.hidden, t);
    tr.times.push_back(t);
    tr.densities.push_back(p.d);
    tr.entropies.push_back(p.entropy);
    tr.metric_norms.push_back(p.metric);
    tr.rates.push_back(p.rate);
    tr.trace_drift = std::max(tr.trace_drift, std::abs(m.tau(p.d) - tau0));
    tr.min_eigenvalue = std::min(tr.min_eigenvalue, min_eig(p.d));
  }
  return tr;
}

double flow_rate_mismatch(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double t, double h) {
  FlowSetup s = setup_flow(l, delta, d0);
  auto ent = [&](double u) { return relative_entropy(dual_evolve(l, u, d0), s.hidden); };
  double fd = t >= h ? (ent(t + h) - ent(t - h)) / (2 * h) : (-3 * ent(t) + 4 * ent(t + h) - ent(t + 2 * h)) / (2 * h);
  double rate = flow_point(l, s.js, d0, s.hidden, t).rate;
  return std::abs(fd - rate) / std::max(std::abs(rate), 1e-300);
}

LsiReport lsi_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, const std::vector<double>& grid,
                     double beta) {
  if (!(beta > 0)) throw Error(ErrorCode::NoBeta, "LSI needs a positive intertwining constant");
  FlowTrace tr = flow(l, delta, d0, grid);
  LsiReport rep;
  rep.beta = beta;
  rep.min_margin = rep.min_envelope = std::numeric_limits<double>::infinity();
  const double h0 = tr.entropies.empty() ? 0.0 : tr.entropies.front() - tr.limit_entropy;
  for (size_t i = 0; i < tr.times.size(); ++i) {
    double excess = tr.entropies[i] - tr.limit_entropy;
    // tau(L*(D) (log D - log D_Delta)) = 1/2 |grad|^2 = -rate
    double margin = -tr.rates[i] / (2.0 * beta) - excess;
    double env = std::exp(-2.0 * beta * (tr.times[i] - tr.times.front())) * h0 - excess;
    rep.times.push_back(tr.times[i]);
    rep.margins.push_back(margin);
    rep.envelope_slacks.push_back(env);
    rep.min_margin = std::min(rep.min_margin, margin);
    rep.min_envelope = std::min(rep.min_envelope, env);
  }
  return rep;
}

TalagrandReport talagrand_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double beta,
                                 const std::vector<double>& grid) {
  if (!(beta > 0)) throw Error(ErrorCode::NoBeta, "Talagrand needs a positive intertwining constant");
  for (double t : grid)
    if (!(t >= 0)) throw Error(ErrorCode::NegativeTime, "Talagrand grid times must be nonnegative");
  FlowSetup s = setup_flow(l, delta, d0);
  TalagrandReport rep;
  rep.beta = beta;
  double tmax = grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end());
  rep.horizon = tmax + 50.0 / s.gap;
  // composite Gauss-Legendre on a mesh graded toward t = 0, refined at the grid points
  const int panels = 60, nodes = 8;
  std::vector<double> cuts(grid.begin(), grid.end());
  for (int k = 0; k <= panels; ++k) {
    double u = double(k) / panels;
    cuts.push_back(rep.horizon * u * u);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  GaussRule rule = gauss_legendre_rule(nodes);
  std::vector<double> cum(cuts.size(), 0.0);
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    double a = cuts[k], w = cuts[k + 1] - a, seg = 0;
    for (int i = 0; i < nodes; ++i) {
      double t = a + 0.5 * w * (rule.nodes[i] + 1.0);
      CMatrix dt = dual_evolve(l, t, d0);
      CMatrix ddot = hermitize(-generator_adjoint(l, dt));
      seg += 0.5 * w * rule.weights[i] * metric_norm(s.js, dt, ddot).norm;
    }
    cum[k + 1] = cum[k] + seg;
  }
  auto slack_at = [&](double t, const CMatrix& dt) {
    size_t k = size_t(std::lower_bound(cuts.begin(), cuts.end(), t) - cuts.begin());
    double rest = cum.back() - cum[k];
    double excess = std::max(0.0, relative_entropy(dt, s.hidden) - s.limit_entropy);
    return std::pair<double, double>{2.0 * std::sqrt(excess / beta), rest};
  };
  auto [bound, len] = slack_at(0.0, d0);
  rep.bound = bound;
  rep.path_length = len;
  rep.slack = bound - len;
  for (double t : grid) {
    auto [b, rest] = slack_at(t, dual_evolve(l, t, d0));
    rep.times.push_back(t);
    rep.slacks.push_back(b - rest);
  }
  return rep;
}

TalagrandReport talagrand_report(const Lindbladian& l, const SymmetryDatum& delta, const CMatrix& d0, double beta) {
  return talagrand_report(l, delta, d0, beta, {});
}

namespace {

struct ExtensionOps {
  std::vector<CMatrix> v, vd, vv;
  std::vector<double> w;
  explicit ExtensionOps(const Extension& j) : w(j.weights) {
    for (const CMatrix& x : j.jumps) {
      v.push_back(x);
      vd.push_back(x.adjoint());
      vv.push_back(vd.back() * x);
    }
  }
  CMatrix apply(const CMatrix& y) const {
    CMatrix out = CMatrix::Zero(y.rows(), y.cols());
    for (size_t k = 0; k < v.size(); ++k) out.noalias() += w[k] * (0.5 * (vv[k] * y + y * vv[k]) - vd[k] * y * v[k]);
    return out;
  }
};

// pairs (a, b) with a = d_k L x - J~ d_k x and b = d_k x over basis x and jumps k
struct DirectionPairs {
  std::vector<CMatrix> a, b;
};

DirectionPairs direction_pairs(const Lindbladian& l, const Extension& j) {
  const InclusionModel& m = l.model();
  const ExtensionOps ops(j);
  const size_t nk = l.jumps().items.size();
  DirectionPairs out;
  for (int i = 0; i < m.dim_m(); ++i) {
    CMatrix x = m.basis_m(i);
    CMatrix lx = apply_generator(l, x);
    for (size_t k = 0; k < nk; ++k) {
      CMatrix b = directional_derivation(l, int(k), x);
      out.a.push_back(directional_derivation(l, int(k), lx) - ops.apply(b));
      out.b.push_back(std::move(b));
    }
  }
  return out;
}

double fit_beta(const DirectionPairs& d) {
  double num = 0, den = 0;
  for (size_t i = 0; i < d.a.size(); ++i) {
    num += (d.b[i].adjoint() * d.a[i]).trace().real();
    den += d.b[i].squaredNorm();
  }
  return den > 0 ? num / den : 0.0;
}

double check_beta(const DirectionPairs& d, double beta) {
  double r = 0;
  for (size_t i = 0; i < d.a.size(); ++i) r = std::max(r, (d.a[i] - beta * d.b[i]).norm());
  return r;
}

}  // namespace

CMatrix apply_extension(const Extension& j, const CMatrix& y) { return ExtensionOps(j).apply(y); }

double extension_restriction_residual(const Lindbladian& l, const Extension& j) {
  const InclusionModel& m = l.model();
  const ExtensionOps ops(j);
  double r = 0;
  for (int i = 0; i < m.dim_m(); ++i) {
    CMatrix x = m.basis_m(i);
    r = std::max(r, (ops.apply(m.embed(x)) - m.embed(apply_generator(l, x))).norm());
  }
  return r;
}

double fit_intertwining_beta(const Lindbladian& l, const Extension& j) { return fit_beta(direction_pairs(l, j)); }

double intertwining_check(const Lindbladian& l, const Extension& j, double beta) {
  return check_beta(direction_pairs(l, j), beta);
}

IntertwiningResult find_intertwining(const Lindbladian& l, const std::vector<Extension>& candidates) {
  IntertwiningResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < candidates.size(); ++c) {
    double restr = extension_restriction_residual(l, candidates[c]);
    DirectionPairs dp = direction_pairs(l, candidates[c]);
    double beta = fit_beta(dp);
    double res = check_beta(dp, beta);
    best.candidate_residuals.push_back(res);
    if (restr > 1e-9 * (1.0 + norm2(l.transfer()))) continue;
    if (res < best.residual) {
      best.residual = res;
      best.beta = beta;
      best.restriction_residual = restr;
      best.candidate = int(c);
      best.name = candidates[c].name;
    }
  }
  if (best.candidate < 0) throw Error(ErrorCode::NoCandidate, "no extension restricts to the generator");
  return best;
}

FermionModel fermion_model(int mm, const std::vector<double>& a, double beta) {
  if (mm < 1 || mm > 5) throw Error(ErrorCode::ShapeMismatch, "fermion model needs 1 <= m <= 5");
  if (int(a.size()) != mm) throw Error(ErrorCode::ShapeMismatch, "fermion model needs one a_j per mode");
  const int n = 1 << mm;
  CMatrix px(2, 2), py(2, 2), pz(2, 2), i2 = identity(2);
  px << 0, 1, 1, 0;
  py << 0, cd(0, -1), cd(0, 1), 0;
  pz << 1, 0, 0, -1;
  auto chain = [&](int j, const CMatrix& op) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int k = 0; k < mm; ++k) out = kron(out, k < j ? pz : (k == j ? op : i2));
    return out;
  };
  ModelPtr model = InclusionModel::full_matrix(n);
  FermionModel fm{model, Lindbladian(model, CMatrix::Zero(n * n, n * n)), {}, {}, 0, {}, {}, {}, {}, {}, {}, 0, {}, {}};
  const InclusionModel& m = *fm.model;
  for (int j = 0; j < mm; ++j) {
    fm.q.push_back(chain(j, px));
    fm.p.push_back(chain(j, py));
  }
  CMatrix w = identity(n) * std::pow(cd(0, 1), mm);
  for (int j = 0; j < mm; ++j) w = w * fm.q[j] * fm.p[j];
  fm.w = w;
  for (int j = 0; j < mm; ++j) fm.v.push_back(w * (fm.q[j] + cd(0, 1) * fm.p[j]) / std::sqrt(2.0));
  // relations
  double rel = 0;
  CMatrix id = identity(n);
  for (int j = 0; j < mm; ++j)
    for (int k = 0; k < mm; ++k) {
      double dl = j == k ? 2.0 : 0.0;
      rel = std::max(rel, (fm.q[j] * fm.q[k] + fm.q[k] * fm.q[j] - dl * id).norm());
      rel = std::max(rel, (fm.p[j] * fm.p[k] + fm.p[k] * fm.p[j] - dl * id).norm());
      rel = std::max(rel, (fm.q[j] * fm.p[k] + fm.p[k] * fm.q[j]).norm());
    }
  rel = std::max(rel, (w * w - id).norm());
  rel = std::max(rel, (w - w.adjoint()).norm());
  for (const CMatrix& v : fm.v) {
    rel = std::max(rel, (w * v * w + v).norm());
    rel = std::max(rel, (v * v).norm());
    rel = std::max(rel, (v.adjoint() * v + v * v.adjoint() - 2.0 * id).norm());
  }
  fm.relation_residual = rel;
  if (rel > 1e-12) throw Error(ErrorCode::RelationViolation, "fermion relations fail: " + std::to_string(rel));
  // GKLS jumps u with coefficient c: c(1/2{u*u, x} - u* x u)
  std::vector<CMatrix> us;
  std::vector<double> cs, mus;
  for (int j = 0; j < mm; ++j) {
    us.push_back(fm.v[j]);
    cs.push_back(0.5 * std::exp(beta * a[j] / 2));
    mus.push_back(std::exp(beta * a[j]));
    us.push_back(fm.v[j].adjoint());
    cs.push_back(0.5 * std::exp(-beta * a[j] / 2));
    mus.push_back(std::exp(-beta * a[j]));
  }
  CMatrix l0 = CMatrix::Zero(n * n, n * n);
  CMatrix delta = m.one_b2();
  for (size_t k = 0; k < us.size(); ++k) {
    CVector phi = vec(us[k].conjugate());
    l0 += cs[k] * phi * phi.adjoint();
    delta += (mus[k] - 1.0) * phi * phi.adjoint() / phi.squaredNorm();
    fm.normalized_jumps.push_back(us[k] / std::sqrt(double(n)));
    fm.normalized_weights.push_back(cs[k] * n);
  }
  fm.generator = build(fm.model, l0, CMatrix::Zero(n, n));
  fm.assembled_delta = SymmetryDatum{fm.model, delta, false};
  CMatrix ker = kernel_basis(CMatrix(fm.generator.transfer().adjoint()), 1e-9);
  if (ker.cols() != 1) throw Error(ErrorCode::NotErgodic, "fermion generator has no unique stationary state");
  CMatrix st = hermitize(m.unvec_m(ker.col(0)));
  st /= m.tau(st).real();
  fm.stationary = st;
  fm.delta = modular_multiplier(fm.model, st);
  CMatrix rr = m.b2_range(l0);
  fm.delta_consistency = m.b2_norm(m.b2_mul(fm.delta.delta_hat - delta, rr));
  Extension left{"left-factor", {}, cs}, twisted{"parity-twisted", {}, cs};
  CMatrix wbar = w.conjugate();
  for (const CMatrix& u : us) {
    left.jumps.push_back(kron(u, id));
    twisted.jumps.push_back(kron(u, wbar));
  }
  fm.candidates = {left, twisted};
  return fm;
}

}  // namespace bqms
