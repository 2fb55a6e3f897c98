#include "bqms/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace bqms::cli {

InputError::InputError(std::string kind, const std::string& what, int line, int column)
    : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), line_(line), column_(column) {}

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- limits

const std::map<std::string, double>& check_defaults() {
  static const std::map<std::string, double> d{
      {"bimodule_gns", 1e-9},  {"validate_route", 1e-9}, {"gkls", 1e-9},         {"poincare", 1e-9},
      {"flow_monotone", 1e-12}, {"flow_rate", 1e-4},     {"hidden_density", 1e-8}, {"lsi", 1e-8},
      {"envelope", 1e-8},       {"talagrand", 1e-6},     {"intertwine", 1e-9},     {"negative_control", 1e-2},
      {"limit", 1e-8},          {"limit_density", 1e-8}, {"fourier", 1e-12},       {"identity_multiplier", 1e-12},
      {"reference_instance", 1e-12}, {"compose", 1e-10}};
  return d;
}

struct Limits {
  std::map<std::string, double> v;
  double operator[](const std::string& k) const { return v.at(k); }
};

double env_scale() {
  if (const char* env = std::getenv("BQMS_TOL_SCALE")) {
    char* end = nullptr;
    double s = std::strtod(env, &end);
    if (end != env && std::isfinite(s) && s > 0) return s;
  }
  return 1.0;
}

void apply_override(Limits& lim, Tolerances& lib, const std::string& key, double val) {
  if (!(val > 0) || !std::isfinite(val)) throw InputError("InputError", "tolerance " + key + " must be positive");
  if (key == "hermiticity") lib.hermiticity = val;
  else if (key == "positivity_floor") lib.positivity_floor = val;
  else if (key == "equality") lib.equality = val;
  else if (key == "cluster_gap") lib.cluster_gap = val;
  else if (key == "log_cutoff") lib.log_cutoff = val;
  else if (lim.v.count(key)) lim.v[key] = val;
  else throw InputError("InputError", "unknown tolerance key " + key);
}

// Sets the library tolerances for the duration of a run.
class TolerancesScope {
 public:
  explicit TolerancesScope(const Tolerances& t) : saved_(tolerances()) { set_tolerances(t); }
  ~TolerancesScope() { set_tolerances(saved_); }

 private:
  Tolerances saved_;
};

// ---------------------------------------------------------------- report

class Recorder {
 public:
  explicit Recorder(const Limits& lim) : lim_(lim) {}

  // value <= limit
  void upper(const std::string& op, const std::string& name, double value, const std::string& key) {
    add(op, name, value, lim_[key], true, std::isfinite(value) && value <= lim_[key]);
  }
  // value >= -limit
  void margin(const std::string& op, const std::string& name, double value, const std::string& key) {
    add(op, name, value, -lim_[key], false, std::isfinite(value) && value >= -lim_[key]);
  }
  // value >= limit
  void lower(const std::string& op, const std::string& name, double value, const std::string& key) {
    add(op, name, value, lim_[key], false, std::isfinite(value) && value >= lim_[key]);
  }
  void truth(const std::string& op, const std::string& name, bool ok) { add(op, name, ok ? 1 : 0, 1, false, ok); }
  void error(const std::string& op, const Error& e) { add(op, std::string("raised ") + error_name(e.code()), 0, 0, true, false); }

  const std::vector<Assertion>& all() const { return list_; }
  const Limits& limits() const { return lim_; }

 private:
  void add(const std::string& op, const std::string& name, double value, double limit, bool up, bool ok) {
    list_.push_back({op, name, value, limit, up, ok});
  }
  const Limits& lim_;
  std::vector<Assertion> list_;
};

Json assertion_json(const Assertion& a) {
  Json j;
  j["op"] = a.op;
  j["name"] = a.name;
  j["value"] = a.value;
  j["relation"] = a.upper ? "<=" : ">=";
  j["limit"] = a.limit;
  j["passed"] = a.passed;
  return j;
}

void finish(RunResult& res, const Recorder& rec) {
  res.assertions = rec.all();
  Json arr = Json::array();
  for (const Assertion& a : res.assertions) {
    arr.push_back(assertion_json(a));
    if (!a.passed) res.failures.push_back(a.op + ": " + a.name);
  }
  res.report["assertions"] = arr;
  res.report["failures"] = res.failures;
  res.report["status"] = res.failures.empty() ? "pass" : "fail";
  res.exit_code = res.failures.empty() ? Success : VerificationFailure;
}

// ---------------------------------------------------------------- random probes

class Probe {
 public:
  explicit Probe(unsigned long seed) : gen_(seed) {}
  double normal() { return nd_(gen_); }
  CMatrix gaussian(int r, int c) {
    CMatrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = cd(normal(), normal());
    return a;
  }
  CMatrix density(const InclusionModel& m) {
    CMatrix d;
    if (m.kind() == ModelKind::Spin) {
      d = CMatrix::Zero(m.n(), m.n());
      for (int j = 0; j < m.n(); ++j) d(j, j) = 0.3 + std::abs(normal());
    } else {
      CMatrix a = gaussian(m.n(), m.n());
      d = a * a.adjoint() + 0.3 * identity(m.n());
    }
    return d / m.tau(d).real();
  }
  CMatrix traceless(const InclusionModel& m) {
    CMatrix x = gaussian(m.n(), m.n());
    if (m.kind() == ModelKind::Spin) x = CMatrix(x.diagonal().asDiagonal());
    return x - m.tau(x) * m.one_m();
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> nd_;
};

// ---------------------------------------------------------------- scenario pieces

struct Setup {
  ModelPtr model;
  std::string model_kind;
  std::optional<FermionModel> fermion;
  std::optional<Lindbladian> gen;
  std::optional<BimoduleChannel> channel;
  std::optional<SymmetryDatum> delta;
  std::optional<CMatrix> rho;
  std::string delta_kind = "none";
  Json generator_info, delta_info;
};

const Json& required(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError("InputError", where + " needs field '" + key + "'");
  return j.at(key);
}

int int_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = required(j, key, where);
  if (!v.is_number_integer()) throw InputError("InputError", where + "." + key + " must be an integer");
  return v.get<int>();
}

void require_shape(const CMatrix& a, Eigen::Index r, Eigen::Index c, const std::string& what) {
  if (a.rows() != r || a.cols() != c)
    throw InputError("ShapeError", what + " is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                       ", expected " + std::to_string(r) + "x" + std::to_string(c));
}

CMatrix parse_density(const InclusionModel& m, const Json& j, const std::string& what, Probe& probe, bool* normalized) {
  if (j.is_string() && j.get<std::string>() == "random") return probe.density(m);
  CMatrix d = parse_matrix(j, what);
  require_shape(d, m.n(), m.n(), what);
  try {
    m.check_m(d, what.c_str());
  } catch (const Error& e) {
    throw InputError("ShapeError", e.what());
  }
  double t = m.tau(d).real();
  if (!(t > 0)) throw InputError("InputError", what + " has nonpositive trace");
  if (normalized) *normalized = std::abs(t - 1.0) > 1e-15;
  return d / t;
}

std::vector<double> parse_grid(const Json& e, double t_max_default, int steps_default) {
  std::vector<double> g;
  if (e.contains("grid") && e.at("grid").is_array()) {
    for (const Json& v : e.at("grid")) {
      if (!v.is_number()) throw InputError("InputError", "grid entries must be numbers");
      g.push_back(v.get<double>());
    }
  } else {
    double tmax = t_max_default;
    int steps = steps_default;
    if (e.contains("grid")) {
      const Json& gj = e.at("grid");
      if (gj.contains("t_max")) tmax = gj.at("t_max").get<double>();
      if (gj.contains("steps")) steps = gj.at("steps").get<int>();
    }
    if (steps < 0 || !(tmax >= 0)) throw InputError("InputError", "grid needs t_max >= 0 and steps >= 0");
    for (int i = 0; i <= steps; ++i) g.push_back(steps == 0 ? 0.0 : tmax * i / steps);
  }
  if (g.empty()) throw InputError("InputError", "grid is empty");
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0) throw InputError("InputError", "grid times must be nonnegative");
    if (i && g[i] <= g[i - 1]) throw InputError("InputError", "grid must be increasing");
  }
  return g;
}

void parse_model(const Json& sc, Setup& s) {
  const Json& mj = required(sc, "model", "scenario");
  std::string kind = required(mj, "kind", "model").get<std::string>();
  s.model_kind = kind;
  if (kind == "spin" || kind == "full") {
    int n = int_field(mj, "n", "model");
    if (n < 2 || n > (kind == "spin" ? 64 : 8)) throw InputError("InputError", "model.n out of range");
    s.model = kind == "spin" ? InclusionModel::spin(n) : InclusionModel::full_matrix(n);
  } else if (kind == "fermion") {
    int mm = int_field(mj, "m", "model");
    std::vector<double> a;
    for (const Json& v : required(mj, "a", "model")) a.push_back(v.get<double>());
    double beta = required(mj, "beta", "model").get<double>();
    if (mm < 1 || mm > 3) throw InputError("InputError", "fermion model supports 1 <= m <= 3");
    if (int(a.size()) != mm) throw InputError("ShapeError", "model.a needs one entry per mode");
    s.fermion.emplace(fermion_model(mm, a, beta));
    s.model = s.fermion->model;
  } else {
    throw InputError("InputError", "model.kind must be spin, full or fermion");
  }
}

CMatrix b2_matrix(const InclusionModel& m, const Json& j, const std::string& what) {
  CMatrix a = parse_matrix(j, what);
  require_shape(a, m.b2_rows(), m.b2_rows(), what);
  return a;
}

void parse_generator(const Json& sc, Setup& s) {
  const InclusionModel& m = *s.model;
  const int n = m.n();
  if (s.fermion && (!sc.contains("generator") || required(sc.at("generator"), "kind", "generator") == "fermion")) {
    s.gen.emplace(s.fermion->generator);
    s.generator_info["kind"] = "fermion";
    s.generator_info["relation_residual"] = s.fermion->relation_residual;
    return;
  }
  const Json& gj = required(sc, "generator", "scenario");
  std::string kind = required(gj, "kind", "generator").get<std::string>();
  s.generator_info["kind"] = kind;
  if (kind == "explicit_multiplier") {
    s.gen.emplace(s.model, b2_matrix(m, required(gj, "lhat", "generator"), "generator.lhat"));
  } else if (kind == "l0_plus_l1") {
    CMatrix l0 = b2_matrix(m, required(gj, "l0", "generator"), "generator.l0");
    CMatrix l1 = CMatrix::Zero(n, n);
    if (gj.contains("l1")) {
      l1 = parse_matrix(gj.at("l1"), "generator.l1");
      require_shape(l1, n, n, "generator.l1");
    }
    s.gen.emplace(build(s.model, l0, l1));
  } else if (kind == "jumps") {
    if (m.kind() == ModelKind::Spin) {
      CMatrix rates = parse_matrix(required(gj, "rates", "generator"), "generator.rates");
      require_shape(rates, n, n, "generator.rates");
      for (int j = 0; j < n; ++j) rates(j, j) = 0;
      s.gen.emplace(build(s.model, m.f21_inv(rates), CMatrix::Zero(n, n)));
    } else {
      CMatrix l0 = CMatrix::Zero(n * n, n * n);
      int k = 0;
      for (const Json& jj : required(gj, "jumps", "generator")) {
        std::string w = "generator.jumps[" + std::to_string(k++) + "]";
        CMatrix v = parse_matrix(required(jj, "v", w), w + ".v");
        require_shape(v, n, n, w + ".v");
        double rate = jj.contains("rate") ? jj.at("rate").get<double>() : 1.0;
        if (!(rate >= 0)) throw InputError("InputError", w + ".rate must be nonnegative");
        CVector phi = vec(v.conjugate());
        l0 += rate * phi * phi.adjoint();
      }
      CMatrix h = CMatrix::Zero(n, n);
      if (gj.contains("hamiltonian")) {
        h = parse_matrix(gj.at("hamiltonian"), "generator.hamiltonian");
        require_shape(h, n, n, "generator.hamiltonian");
      }
      s.gen.emplace(build(s.model, l0, h));
    }
  } else if (kind == "paper_example_c4") {
    if (!(m.kind() == ModelKind::Spin && n == 4)) throw InputError("ShapeError", "paper_example_c4 needs model spin n=4");
    CMatrix p(4, 4);
    p << 0, 1. / 3, 1. / 3, 1. / 3, 1. / 2, 0, 1. / 4, 1. / 4, 1. / 4, 1. / 2, 0, 1. / 4, 1. / 6, 1. / 2, 1. / 3, 0;
    s.channel.emplace(BimoduleChannel::from_superoperator(s.model, p));
    s.gen.emplace(build(s.model, m.f21_inv(p), CMatrix::Zero(4, 4)));
  } else {
    throw InputError("InputError", "unknown generator.kind " + kind);
  }
}

CMatrix c4_delta(const InclusionModel& m) {
  CMatrix t(4, 4);
  t << 1, 2. / 3, 4. / 3, 2, 3. / 2, 1, 1. / 2, 1. / 2, 3. / 4, 2, 1, 3. / 4, 1. / 2, 2, 4. / 3, 1;
  return m.f21_inv(0.5 * t);
}

void parse_delta(const Json& sc, Setup& s, Probe& probe) {
  const InclusionModel& m = *s.model;
  std::string kind = "none";
  if (sc.contains("delta")) kind = required(sc.at("delta"), "kind", "delta").get<std::string>();
  else if (s.fermion) kind = "fermion";
  s.delta_kind = kind;
  s.delta_info["kind"] = kind;
  const Json dj = sc.contains("delta") ? sc.at("delta") : Json::object();
  if (kind == "none") return;
  if (kind == "modular") {
    bool norm = false;
    CMatrix rho = parse_density(m, required(dj, "rho", "delta"), "delta.rho", probe, &norm);
    bool half = dj.contains("half") && dj.at("half").get<bool>();
    s.rho = rho;
    s.delta = half ? modular_multiplier_half(s.model, rho) : modular_multiplier(s.model, rho);
    s.delta_info["normalized"] = norm;
    s.delta_info["half"] = half;
  } else if (kind == "explicit") {
    s.delta = SymmetryDatum{s.model, b2_matrix(m, required(dj, "delta_hat", "delta"), "delta.delta_hat"), false};
    try {
      check_delta(*s.delta);
    } catch (const Error& e) {
      throw InputError("InputError", e.what());
    }
  } else if (kind == "paper_example_c4") {
    if (!(m.kind() == ModelKind::Spin && m.n() == 4)) throw InputError("ShapeError", "paper_example_c4 needs model spin n=4");
    s.delta = SymmetryDatum{s.model, c4_delta(m), false};
  } else if (kind == "fermion") {
    if (!s.fermion) throw InputError("InputError", "delta.kind fermion needs a fermion model");
    s.delta = s.fermion->delta;
    s.rho = s.fermion->stationary;
  } else if (kind == "solve") {
    if (!s.gen) throw InputError("InputError", "delta.kind solve needs a generator");
    SolveResult r = s.channel ? solve_delta(*s.channel) : solve_delta(s.model, s.gen->lhat());
    if (r.datum) s.delta = *r.datum;
    s.delta_info["solve_status"] = r.status == SolveStatus::Found ? "Found" : r.status == SolveStatus::Infeasible ? "Infeasible" : "Underdetermined";
    s.delta_info["reason"] = r.reason;
  } else {
    throw InputError("InputError", "unknown delta.kind " + kind);
  }
}

const char* realizability_name(Realizability r) {
  switch (r) {
    case Realizability::Realizable: return "Realizable";
    case Realizability::Infeasible: return "Infeasible";
    case Realizability::Underdetermined: return "Underdetermined";
    case Realizability::NotAssessed: return "NotAssessed";
  }
  return "NotAssessed";
}

const char* solve_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Found: return "Found";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Underdetermined: return "Underdetermined";
  }
  return "Infeasible";
}

Json bimodule_json(const BimoduleReport& b) {
  Json j;
  j["holds"] = b.holds;
  j["residual"] = b.residual;
  j["normal_residual"] = b.normal_residual;
  j["delta_commutator"] = b.delta_commutator;
  j["conj_delta_commutator"] = b.conj_delta_commutator;
  j["range_residual"] = b.range_residual;
  j["consequences_hold"] = b.consequences_hold;
  return j;
}

Json class_json(const ChannelClass& c) {
  Json j;
  j["cp"] = c.cp;
  j["unital"] = c.unital;
  j["trace_preserving"] = c.trace_preserving;
  j["min_multiplier_eig"] = c.min_multiplier_eig;
  j["unital_residual"] = c.unital_residual;
  j["trace_residual"] = c.trace_residual;
  return j;
}

const Lindbladian& need_gen(const Setup& s, const std::string& what) {
  if (!s.gen) throw InputError("InputError", what + " needs a generator");
  return *s.gen;
}

const SymmetryDatum& need_delta(const Setup& s, const std::string& what) {
  if (!s.delta) throw InputError("InputError", what + " needs a delta (modular, explicit, solve or fermion)");
  return *s.delta;
}

CMatrix need_d0(const Setup& s, const Json& e, const std::string& what, Probe& probe) {
  if (!e.contains("d0")) throw InputError("InputError", what + " needs d0");
  return parse_density(*s.model, e.at("d0"), what + ".d0", probe, nullptr);
}

double resolve_beta(const Setup& s, const Json& e, const std::string& what) {
  if (e.contains("beta")) return e.at("beta").get<double>();
  if (s.fermion) return find_intertwining(s.fermion->generator, s.fermion->candidates).beta;
  throw InputError("InputError", what + " needs beta (or a fermion model to fit it)");
}

// ---------------------------------------------------------------- experiments

void exp_classify(const Setup& s, Recorder& rec, Json& out) {
  const InclusionModel& m = *s.model;
  if (s.gen) {
    const Lindbladian& l = *s.gen;
    ValidityReport v = validate(m, l.lhat());
    Json g;
    g["valid"] = v.valid;
    g["hermiticity_residual"] = v.hermiticity_residual;
    g["unitality_residual"] = v.unitality_residual;
    g["min_l0_eig"] = v.min_l0_eig;
    rec.truth("validate", "generator is a valid Lindbladian", v.valid);
    for (double t : {0.1, 1.0, 10.0}) {
      bool cp = classify(evolve(l, t)).cp;
      g["evolve_cp_t" + fmt17(t)] = cp;
      rec.truth("evolve", "CP of exp(-tL) matches validate at t=" + fmt17(t), cp == v.valid);
    }
    double route = 0, gk = 0;
    for (int i = 0; i < m.dim_m(); ++i) {
      CMatrix x = m.basis_m(i);
      CMatrix a = apply_generator(l, x);
      route = std::max(route, (a - apply_generator_via_multiplier(l, x)).norm());
      if (v.valid) gk = std::max(gk, (a - apply_gkls(l, x)).norm());
    }
    double scale = 1.0 + l.transfer().norm();
    rec.upper("apply_generator", "transfer vs multiplier route", route / scale, "validate_route");
    if (v.valid) rec.upper("apply_gkls", "jump/Hamiltonian form vs multiplier", gk / scale, "gkls");
    g["jump_count"] = int(l.jumps().items.size());
    g["spectral_gap"] = spectral_gap(l);
    g["relatively_ergodic"] = relatively_ergodic(l);
    out["generator"] = g;
  }
  if (s.channel) {
    ChannelClass c = classify(*s.channel);
    Json cj = class_json(c);
    RVector cols = s.channel->transfer().colwise().sum().real();
    cj["column_sums"] = std::vector<double>(cols.data(), cols.data() + cols.size());
    out["channel"] = cj;
    if (s.delta) {
      BimoduleReport b = check_bimodule_gns(m, s.channel->multiplier(), *s.delta);
      out["channel_bimodule_gns"] = bimodule_json(b);
      rec.upper("check_bimodule_gns", "channel multiplier with delta", b.residual, "bimodule_gns");
    }
  }
  if (s.gen && s.delta) {
    BimoduleReport b = check_bimodule_gns(m, s.gen->lhat(), *s.delta);
    out["bimodule_gns"] = bimodule_json(b);
    rec.upper("check_bimodule_gns", "generator multiplier with delta", b.residual, "bimodule_gns");
  }
}

void exp_solve(const Setup& s, Recorder& rec, Json& out) {
  const Lindbladian& l = need_gen(s, "solve");
  const InclusionModel& m = *s.model;
  SolveResult r = s.channel ? solve_delta(*s.channel) : solve_delta(s.model, l.lhat());
  out["input"] = s.channel ? "channel" : "generator";
  out["status"] = solve_name(r.status);
  out["reason"] = r.reason;
  Json rz;
  rz["status"] = realizability_name(r.realizability.status);
  rz["exact"] = r.realizability.exact;
  rz["witness_text"] = r.realizability.witness_text;
  Json w = Json::array();
  for (const RatioRelation& rel : r.realizability.witness) {
    Json x;
    x["a"] = rel.a + 1;
    x["b"] = rel.b + 1;
    x["ratio"] = std::to_string(rel.ratio.numerator()) + "/" + std::to_string(rel.ratio.denominator());
    std::vector<int> path;
    for (int p : rel.path) path.push_back(p + 1);
    x["path"] = path;
    x["text"] = rel.text();
    w.push_back(x);
  }
  rz["witness"] = w;
  if (r.realizability.density) rz["density"] = matrix_json(*r.realizability.density);
  out["realizability"] = rz;
  if (r.datum) {
    out["delta_hat"] = matrix_json(r.datum->delta_hat);
    const CMatrix& phi = s.channel ? s.channel->multiplier() : l.lhat();
    BimoduleReport b = check_bimodule_gns(m, phi, *r.datum);
    out["bimodule_gns"] = bimodule_json(b);
    rec.upper("solve_delta", "solved delta satisfies the bimodule GNS identity", b.residual, "bimodule_gns");
    if (s.delta && s.delta_kind != "solve") {
      double diff = m.b2_norm(r.datum->delta_hat - s.delta->delta_hat);
      out["difference_from_given_delta"] = diff;
    }
  }
}

void exp_poincare(const Setup& s, const Json& e, Recorder& rec, Json& out, Probe& probe) {
  const Lindbladian& l = need_gen(s, "poincare");
  PoincareReport p = poincare_margins(l);
  out["beta_hat"] = p.beta_hat;
  out["beta"] = p.beta;
  out["bound0"] = p.bound0;
  out["bound1_diagnostic"] = p.bound1_diagnostic;
  out["connected"] = p.connected;
  out["asserted"] = p.asserted;
  out["symmetrization_residual"] = p.symmetrization_residual;
  int count = e.contains("samples") ? e.at("samples").get<int>() : 100;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    CMatrix x = probe.traceless(*s.model);
    x /= std::sqrt(s.model->tau(x.adjoint() * x).real());
    worst = std::min(worst, p.margin(x));
  }
  out["samples"] = count;
  out["min_margin"] = worst;
  if (p.asserted) rec.margin("poincare_margins", "tau(Gamma(x,x)) - (beta_hat - beta) tau(x*x)", worst, "poincare");
}

FlowTrace exp_flow(const Setup& s, const Json& e, Recorder& rec, Json& out, Probe& probe) {
  const Lindbladian& l = need_gen(s, "flow");
  CMatrix d0 = need_d0(s, e, "flow", probe);
  const SymmetryDatum& d = need_delta(s, "flow");
  std::vector<double> grid = parse_grid(e, 3.0, 12);
  FlowTrace tr = flow(l, d, d0, grid);
  double rise = 0;
  for (size_t i = 1; i < tr.entropies.size(); ++i) rise = std::max(rise, tr.entropies[i] - tr.entropies[i - 1]);
  rec.upper("flow", "entropy increase between grid points", rise / (1.0 + std::abs(tr.entropies.front())), "flow_monotone");
  double mism = 0;
  for (size_t i = 0; i < tr.times.size(); ++i)
    if (std::abs(tr.rates[i]) > 1e-10) mism = std::max(mism, flow_rate_mismatch(l, d, d0, tr.times[i]));
  rec.upper("flow", "dH/dt vs -1/2 |grad|^2 (relative)", mism, "flow_rate");
  out["grid_points"] = int(grid.size());
  out["entropy_start"] = tr.entropies.front();
  out["entropy_end"] = tr.entropies.back();
  out["limit_entropy"] = tr.limit_entropy;
  out["trace_drift"] = tr.trace_drift;
  out["min_eigenvalue"] = tr.min_eigenvalue;
  out["hidden_density"] = matrix_json(tr.hidden);
  if (s.rho && s.delta_kind != "explicit") {
    double hd = (tr.hidden - *s.rho).norm();
    out["hidden_density_residual"] = hd;
    if (s.delta_kind == "modular" || s.delta_kind == "fermion") rec.upper("hidden_density", "modular delta gives its density", hd, "hidden_density");
  }
  return tr;
}

FlowTrace exp_lsi(const Setup& s, const Json& e, Recorder& rec, Json& out, Probe& probe) {
  const Lindbladian& l = need_gen(s, "lsi");
  CMatrix d0 = need_d0(s, e, "lsi", probe);
  const SymmetryDatum& d = need_delta(s, "lsi");
  std::vector<double> grid = parse_grid(e, 3.0, 12);
  double beta = resolve_beta(s, e, "lsi");
  LsiReport r = lsi_report(l, d, d0, grid, beta);
  FlowTrace tr = flow(l, d, d0, grid);
  tr.lsi_margins = r.margins;
  tr.envelope_slacks = r.envelope_slacks;
  out["beta"] = beta;
  out["min_margin"] = r.min_margin;
  out["min_envelope_slack"] = r.min_envelope;
  rec.margin("lsi_report", "LSI margin at every grid point", r.min_margin, "lsi");
  rec.margin("lsi_report", "exp(-2 beta t) envelope slack", r.min_envelope, "envelope");
  return tr;
}

FlowTrace exp_talagrand(const Setup& s, const Json& e, Recorder& rec, Json& out, Probe& probe) {
  const Lindbladian& l = need_gen(s, "talagrand");
  CMatrix d0 = need_d0(s, e, "talagrand", probe);
  const SymmetryDatum& d = need_delta(s, "talagrand");
  std::vector<double> grid = parse_grid(e, 2.0, 4);
  double beta = resolve_beta(s, e, "talagrand");
  TalagrandReport r = talagrand_report(l, d, d0, beta, grid);
  out["beta"] = beta;
  out["path_length"] = r.path_length;
  out["bound"] = r.bound;
  out["slack"] = r.slack;
  out["horizon"] = r.horizon;
  rec.margin("talagrand_report", "bound - path length", r.slack, "talagrand");
  FlowTrace tr = flow(l, d, d0, grid);
  tr.talagrand_slacks = r.slacks;
  if (!r.slacks.empty())
    rec.margin("talagrand_report", "bound - remaining path length at every grid point",
               *std::min_element(r.slacks.begin(), r.slacks.end()), "talagrand");
  return tr;
}

void exp_intertwine(const Setup& s, Recorder& rec, Json& out) {
  if (!s.fermion) throw InputError("InputError", "intertwine needs a fermion model");
  IntertwiningResult r = find_intertwining(s.fermion->generator, s.fermion->candidates);
  out["candidate"] = r.name;
  out["beta"] = r.beta;
  out["residual"] = r.residual;
  out["restriction_residual"] = r.restriction_residual;
  Json cands = Json::array();
  for (size_t i = 0; i < s.fermion->candidates.size(); ++i) {
    Json c;
    c["name"] = s.fermion->candidates[i].name;
    c["residual"] = r.candidate_residuals[i];
    cands.push_back(c);
  }
  out["candidates"] = cands;
  rec.upper("find_intertwining", "best extension residual", r.residual, "intertwine");
  for (size_t i = 0; i < s.fermion->candidates.size(); ++i)
    if (int(i) != r.candidate)
      rec.lower("find_intertwining", "negative control " + s.fermion->candidates[i].name, r.candidate_residuals[i],
                "negative_control");
}

void exp_limit(const Setup& s, Recorder& rec, Json& out) {
  const Lindbladian& l = need_gen(s, "limit");
  const SymmetryDatum& d = need_delta(s, "limit");
  std::optional<CMatrix> rho;
  if (s.delta_kind == "modular" || s.delta_kind == "fermion") rho = s.rho;
  SemigroupLimit r = semigroup_limit(l, d, rho);
  out["residual"] = r.residual;
  out["time"] = r.time;
  out["gap"] = r.gap;
  out["closed_form"] = matrix_json(r.closed_form);
  rec.upper("semigroup_limit", "closed form vs evolution at t = 50/gap", r.residual, "limit");
  if (r.density_residual) {
    out["density_residual"] = *r.density_residual;
    rec.upper("semigroup_limit", "dual density limit", *r.density_residual, "limit_density");
  }
}

Limits make_limits(const Json& sc, const RunOptions& opts, Tolerances& lib) {
  Limits lim{check_defaults()};
  double scale = env_scale();
  for (auto& [k, v] : lim.v)
    if (k != "negative_control") v *= scale;
  lib = tolerances();
  if (sc.contains("tolerances")) {
    if (!sc.at("tolerances").is_object()) throw InputError("InputError", "tolerances must be an object");
    for (auto it = sc.at("tolerances").begin(); it != sc.at("tolerances").end(); ++it)
      apply_override(lim, lib, it.key(), it.value().get<double>());
  }
  for (const auto& [k, v] : opts.tolerances) apply_override(lim, lib, k, v);
  return lim;
}

Json model_json(const InclusionModel& m, const std::string& kind) {
  Json j;
  j["kind"] = kind;
  j["n"] = m.n();
  j["lambda"] = m.lambda();
  j["gns_dim"] = m.gns_dim();
  return j;
}

std::string sanitize(const std::string& s) {
  std::string o;
  for (char c : s) o += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return o.empty() ? std::string("scenario") : o;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("IoError", "cannot write " + path);
  f << text;
  if (!f) throw InputError("IoError", "write failed for " + path);
}

}  // namespace

// ---------------------------------------------------------------- public

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError("ParseError", "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what(),
                     line, col);
  }
}

CMatrix parse_matrix(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError("ShapeError", what + " must be a nonempty array of rows");
  const size_t rows = j.size();
  if (!j[0].is_array()) throw InputError("ShapeError", what + " rows must be arrays");
  const size_t cols = j[0].size();
  CMatrix a(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InputError("ShapeError", what + " is not rectangular");
    for (size_t c = 0; c < cols; ++c) {
      const Json& v = j[r][c];
      if (v.is_number()) {
        a(r, c) = v.get<double>();
      } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        a(r, c) = cd(v[0].get<double>(), v[1].get<double>());
      } else {
        throw InputError("ShapeError", what + " entries must be [re, im] pairs");
      }
    }
  }
  if (!is_finite(a)) throw InputError("ShapeError", what + " has non-finite entries");
  return a;
}

Json matrix_json(const CMatrix& a) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(Json::array({a(r, c).real(), a(r, c).imag()}));
    rows.push_back(row);
  }
  return rows;
}

std::map<std::string, double> default_check_limits() { return check_defaults(); }

RunResult run_scenario(const Json& sc, const RunOptions& opts) {
  if (!sc.is_object()) throw InputError("InputError", "scenario must be a JSON object");
  Tolerances lib;
  Limits lim = make_limits(sc, opts, lib);
  TolerancesScope scope(lib);
  unsigned long seed = opts.seed ? *opts.seed : sc.value("seed", 1UL);
  Probe probe(seed);
  RunResult res;
  Json& rep = res.report;
  rep["tool"] = "bqms";
  rep["scenario"] = sc.value("name", std::string("scenario"));
  if (opts.timestamp) rep["timestamp"] = utc_now();
  rep["seed"] = seed;

  Setup s;
  try {
    parse_model(sc, s);
    parse_generator(sc, s);
    parse_delta(sc, s, probe);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError("InputError", e.what());
  }
  rep["model"] = model_json(*s.model, s.model_kind);
  rep["generator"] = s.generator_info;
  rep["delta"] = s.delta_info;

  std::vector<Json> exps;
  if (sc.contains("experiments")) {
    for (const Json& e : sc.at("experiments")) exps.push_back(e);
  } else if (sc.contains("experiment")) {
    exps.push_back(sc.at("experiment"));
  }
  if (exps.empty()) throw InputError("InputError", "scenario has no experiment");

  Recorder rec(lim);
  Json outs = Json::array();
  const std::string stem = sanitize(rep["scenario"].get<std::string>());
  for (size_t i = 0; i < exps.size(); ++i) {
    const Json e = exps[i].is_string() ? Json{{"kind", exps[i]}} : exps[i];
    std::string kind = required(e, "kind", "experiment").get<std::string>();
    Json out;
    out["kind"] = kind;
    try {
      std::optional<FlowTrace> tr;
      if (kind == "classify") exp_classify(s, rec, out);
      else if (kind == "solve") exp_solve(s, rec, out);
      else if (kind == "poincare") exp_poincare(s, e, rec, out, probe);
      else if (kind == "flow") tr = exp_flow(s, e, rec, out, probe);
      else if (kind == "lsi") tr = exp_lsi(s, e, rec, out, probe);
      else if (kind == "talagrand") tr = exp_talagrand(s, e, rec, out, probe);
      else if (kind == "intertwine") exp_intertwine(s, rec, out);
      else if (kind == "limit") exp_limit(s, rec, out);
      else throw InputError("InputError", "unknown experiment kind " + kind);
      if (tr) {
        std::string name = stem + "." + std::to_string(i) + "-" + kind;
        out["csv"] = name + ".csv";
        res.traces.emplace(name, std::move(*tr));
      }
    } catch (const Error& err) {
      rec.error(kind, err);
      out["error"] = err.what();
    }
    outs.push_back(out);
  }
  rep["experiments"] = outs;
  finish(res, rec);
  return res;
}

std::string csv_text(const FlowTrace& tr) {
  if (tr.times.empty()) throw InputError("InputError", "empty flow trace");
  std::string s = "t,entropy,metric_norm,lsi_margin,talagrand_slack\n";
  auto opt = [](const std::vector<double>& v, size_t i) { return i < v.size() ? fmt17(v[i]) : std::string(); };
  for (size_t i = 0; i < tr.times.size(); ++i)
    s += fmt17(tr.times[i]) + "," + opt(tr.entropies, i) + "," + opt(tr.metric_norms, i) + "," + opt(tr.lsi_margins, i) +
         "," + opt(tr.talagrand_slacks, i) + "\n";
  return s;
}

void emit_csv(const FlowTrace& trace, const std::string& path) { write_text(path, csv_text(trace)); }

std::string report_text(const Json& report) { return report.dump(2) + "\n"; }

Json without_timestamp(Json report) {
  if (report.is_object()) report.erase("timestamp");
  return report;
}

int run_file(const std::string& path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("IoError", "cannot read " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    Json sc = parse_json(buf.str());
    if (sc.is_object() && !sc.contains("name")) sc["name"] = std::filesystem::path(path).stem().string();
    RunResult res = run_scenario(sc, opts);
    std::filesystem::path dir = opts.out_dir ? *opts.out_dir : std::string(".");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string stem = sanitize(res.report["scenario"].get<std::string>());
    write_text((dir / (stem + ".report.json")).string(), report_text(res.report));
    for (const auto& [name, tr] : res.traces) emit_csv(tr, (dir / (name + ".csv")).string());
    for (const Assertion& a : res.assertions)
      out << (a.passed ? "PASS " : "FAIL ") << a.op << ": " << a.name << " (" << fmt17(a.value) << ")\n";
    out << "report: " << (dir / (stem + ".report.json")).string() << "\n";
    if (!res.failures.empty()) {
      err << "VerificationFailure: " << res.failures.size() << " failed check(s)\n";
      for (const std::string& f : res.failures) err << "  " << f << "\n";
    }
    return res.exit_code;
  } catch (const InputError& e) {
    err << e.what() << "\n";
    return InputFailure;
  } catch (const nlohmann::json::exception& e) {
    err << "InputError: " << e.what() << "\n";
    return InputFailure;
  }
}

// ---------------------------------------------------------------- verify-paper

namespace {

CMatrix c4_transition_matrix() {
  CMatrix p(4, 4);
  p << 0, 1. / 3, 1. / 3, 1. / 3, 1. / 2, 0, 1. / 4, 1. / 4, 1. / 4, 1. / 2, 0, 1. / 4, 1. / 6, 1. / 2, 1. / 3, 0;
  return p;
}

// Davies generator on M_n for rho = u diag(d) u* with a fixed rotation
Lindbladian fixed_davies(ModelPtr m, CMatrix* rho) {
  const int n = m->n();
  CMatrix d = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = 1.0 + 0.4 * (i % 2 ? -1 : 1) * (i + 1) / n;
  d /= m->tau(d).real();
  CMatrix l0 = CMatrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      CVector phi = vec(matrix_unit(n, i, j));
      double s = 0.5 + 0.25 * (i + j);
      l0 += s * std::sqrt(d(i, i).real() / d(j, j).real()) * phi * phi.adjoint();
    }
  Lindbladian base = build(m, l0, CMatrix::Zero(n, n));
  CMatrix h = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = i == j ? cd(0.3 * i) : cd(0.2, 0.1 * (j - i));
  h = 0.5 * (h + h.adjoint());
  // u = exp(i h)
  HermEig e = herm_eig(h);
  CVector ph(n);
  for (int i = 0; i < n; ++i) ph(i) = std::polar(1.0, e.values(i));
  CMatrix u = e.vectors * ph.asDiagonal() * e.vectors.adjoint();
  CMatrix w = kron(u.conjugate(), u);
  *rho = u * d * u.adjoint();
  return Lindbladian(m, w * base.lhat() * w.adjoint());
}

}  // namespace

RunResult verify_paper(const RunOptions& opts) {
  Tolerances lib;
  Limits lim = make_limits(Json::object(), opts, lib);
  TolerancesScope scope(lib);
  unsigned long seed = opts.seed ? *opts.seed : 20240101UL;
  Probe probe(seed);
  RunResult res;
  Json& rep = res.report;
  rep["tool"] = "bqms";
  rep["scenario"] = "verify-paper";
  if (opts.timestamp) rep["timestamp"] = utc_now();
  rep["seed"] = seed;
  Recorder rec(lim);
  Json items = Json::array();
  auto guarded = [&](const std::string& name, const std::function<void(Json&)>& body) {
    Json out;
    out["instance"] = name;
    try {
      body(out);
    } catch (const Error& e) {
      rec.error(name, e);
      out["error"] = e.what();
    }
    items.push_back(out);
  };

  guarded("fourier_spin2", [&](Json& out) {
    auto m = InclusionModel::spin(2);
    CMatrix want = CMatrix::Zero(2, 2);
    want(0, 1) = std::sqrt(2.0);
    double r = m->b2_norm(m->f12(matrix_unit(2, 0, 1)) - want);
    out["residual"] = r;
    rec.upper("fourier", "Spin(2) E_12 maps to sqrt(2) at (1,2)", r, "fourier");
  });
  guarded("fourier_full2", [&](Json& out) {
    auto m = InclusionModel::full_matrix(2);
    CMatrix e21 = matrix_unit(2, 1, 0);
    double r = m->b2_norm(m->f12(matrix_unit(4, 1, 1)) - kron(e21, e21));
    out["residual"] = r;
    rec.upper("fourier", "FullMatrix(2) E_(1,2),(1,2) maps to E_21 (x) E_21", r, "fourier");
  });
  for (auto m : {InclusionModel::spin(4), InclusionModel::full_matrix(2)}) {
    guarded("identity_multiplier_" + m->name(), [&](Json& out) {
      BimoduleChannel id = BimoduleChannel::from_superoperator(m, identity(m->gns_dim()));
      double r = m->b2_norm(id.multiplier() - std::pow(m->lambda(), -0.5) * m->e2());
      out["residual"] = r;
      rec.upper("from_superoperator", "identity multiplier is lambda^{-1/2} e2 on " + m->name(), r, "identity_multiplier");
    });
  }
  auto s4 = InclusionModel::spin(4);
  const CMatrix p = c4_transition_matrix();
  guarded("c4_channel", [&](Json& out) {
    BimoduleChannel ch = BimoduleChannel::from_superoperator(s4, p);
    ChannelClass c = classify(ch);
    Json cj = class_json(c);
    RVector cols = ch.transfer().colwise().sum().real();
    cj["column_sums"] = std::vector<double>(cols.data(), cols.data() + cols.size());
    out["classify"] = cj;
    rec.truth("classify", "four-point channel is CP", c.cp);
    rec.truth("classify", "four-point channel is unital", c.unital);
    rec.truth("classify", "four-point channel is not trace preserving", !c.trace_preserving);
    rec.upper("classify", "column sums 11/12 and 4/3", std::abs(cols(0) - 11.0 / 12) + std::abs(cols(1) - 4.0 / 3), "reference_instance");
    double sq = (compose(ch, ch).transfer() - p * p).norm();
    out["compose_residual"] = sq;
    rec.upper("compose", "squared channel has transfer P^2", sq, "compose");
    SymmetryDatum d{s4, c4_delta(*s4), false};
    BimoduleReport b = check_bimodule_gns(*s4, ch.multiplier(), d);
    out["bimodule_gns"] = bimodule_json(b);
    rec.upper("check_bimodule_gns", "four-point channel with its reference delta", b.residual, "reference_instance");
    SolveResult sr = solve_delta(ch);
    out["solve_status"] = solve_name(sr.status);
    out["realizability"] = realizability_name(sr.realizability.status);
    out["exact"] = sr.realizability.exact;
    out["witness_text"] = sr.realizability.witness_text;
    rec.truth("solve_delta", "bimodule delta found", sr.status == SolveStatus::Found);
    if (sr.datum) rec.upper("solve_delta", "solved delta equals the reference one", s4->b2_norm(sr.datum->delta_hat - d.delta_hat), "reference_instance");
    rec.truth("solve_delta", "no faithful state realizes delta (exact)", sr.realizability.status == Realizability::Infeasible && sr.realizability.exact);
    bool four = false, two_thirds = false;
    for (const RatioRelation& rel : sr.realizability.witness) {
      four |= rel.a == 2 && rel.b == 3 && rel.ratio == Rational(4);
      two_thirds |= rel.a == 2 && rel.b == 3 && rel.ratio == Rational(2, 3);
    }
    rec.truth("solve_delta", "witness contains t4 = 4 t3 and t4 = (2/3) t3", four && two_thirds);
  });
  guarded("c4_generator_poincare", [&](Json& out) {
    Lindbladian l = build(s4, s4->f21_inv(p), CMatrix::Zero(4, 4));
    PoincareReport pr = poincare_margins(l);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
      CMatrix x = probe.traceless(*s4);
      x /= std::sqrt(s4->tau(x.adjoint() * x).real());
      worst = std::min(worst, pr.margin(x));
    }
    out["beta_hat"] = pr.beta_hat;
    out["beta"] = pr.beta;
    out["min_margin"] = worst;
    rec.truth("validate", "four-point generator is valid", validate(*s4, l.lhat()).valid);
    BimoduleReport b = check_bimodule_gns(*s4, l.lhat(), SymmetryDatum{s4, c4_delta(*s4), false});
    rec.upper("check_bimodule_gns", "four-point generator with its reference delta", b.residual, "reference_instance");
    rec.margin("poincare_margins", "Poincare margin on 100 traceless probes", worst, "poincare");
  });
  guarded("convolution_support", [&](Json& out) {
    CMatrix path = CMatrix::Zero(4, 4), split = CMatrix::Zero(4, 4);
    path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = path(2, 3) = path(3, 2) = 1;
    split(0, 1) = split(1, 0) = split(2, 3) = split(3, 2) = 1;
    bool a = is_identity_projection(*s4, convolution_support(*s4, s4->f21_inv(path)));
    bool b = is_identity_projection(*s4, convolution_support(*s4, s4->f21_inv(split)));
    out["connected_full_support"] = a;
    out["disconnected_full_support"] = b;
    rec.truth("convolution_support", "connected graph has full support", a);
    rec.truth("convolution_support", "disconnected graph has proper support", !b);
  });
  guarded("modular_hidden_density", [&](Json& out) {
    auto m = InclusionModel::full_matrix(2);
    CMatrix rho;
    Lindbladian l = fixed_davies(m, &rho);
    SymmetryDatum d = modular_multiplier(m, rho);
    JointSpectrum js = joint_spectrum(l, d);
    double worst = 0;
    for (int i = 0; i < 10; ++i) worst = std::max(worst, (hidden_density(js, probe.density(*m)).density - rho).norm());
    out["max_residual"] = worst;
    rec.upper("hidden_density", "modular delta gives its density for 10 probes", worst, "hidden_density");
  });
  guarded("fermion_m2", [&](Json& out) {
    FermionModel fm = fermion_model(2, {1.0, 1.0}, 1.0);
    out["relation_residual"] = fm.relation_residual;
    IntertwiningResult r = find_intertwining(fm.generator, fm.candidates);
    out["candidate"] = r.name;
    out["beta"] = r.beta;
    out["residual"] = r.residual;
    out["candidate_residuals"] = r.candidate_residuals;
    rec.upper("fermion_model", "Clifford relations", fm.relation_residual, "reference_instance");
    rec.upper("find_intertwining", "fitted extension residual", r.residual, "intertwine");
    for (size_t i = 0; i < r.candidate_residuals.size(); ++i)
      if (int(i) != r.candidate)
        rec.lower("find_intertwining", "negative control " + fm.candidates[i].name, r.candidate_residuals[i], "negative_control");
  });
  rep["instances"] = items;
  finish(res, rec);
  return res;
}

int verify_paper_main(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    RunResult res = verify_paper(opts);
    std::string text = report_text(res.report);
    out << text;
    if (opts.out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(*opts.out_dir, ec);
      write_text((std::filesystem::path(*opts.out_dir) / "verify-paper.report.json").string(), text);
    }
    if (!res.failures.empty()) {
      err << "VerificationFailure: " << res.failures.size() << " failed check(s)\n";
      for (const std::string& f : res.failures) err << "  " << f << "\n";
    }
    return res.exit_code;
  } catch (const InputError& e) {
    err << e.what() << "\n";
    return InputFailure;
  }
}

}  // namespace bqms::cli
