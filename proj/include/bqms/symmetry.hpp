#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "bqms/generator.hpp"

namespace bqms {

// Strictly positive delta in B2 with delta e2 = e2 delta = e2.
struct SymmetryDatum {
  ModelPtr model;
  CMatrix delta_hat;
  bool half = false;
};

void check_delta(const SymmetryDatum& d);

// rho is a density against tau: rho > 0, tau(rho) = 1.
SymmetryDatum modular_multiplier(ModelPtr model, const CMatrix& rho);
SymmetryDatum modular_multiplier_half(ModelPtr model, const CMatrix& rho);
void check_density(const InclusionModel& m, const CMatrix& rho);

struct EquilibriumReport {
  bool equilibrium = false;
  double state_residual = 0;       // max_x |tau(rho Phi(x)) - tau(rho x)|
  double multiplier_residual = 0;  // map with multiplier delta conj(Phi) sent to 1, minus 1
  bool multiplier_equilibrium = false;
};
EquilibriumReport check_equilibrium(const BimoduleChannel& ch, const CMatrix& rho);

struct StateSymmetryReport {
  double residual = 0;
  double modular_residual = 0;  // [transfer, Ad_rho] for the GNS check
  bool holds = false;
};
StateSymmetryReport check_gns_state(const BimoduleChannel& ch, const CMatrix& rho);
StateSymmetryReport check_kms_state(const BimoduleChannel& ch, const CMatrix& rho);

struct BimoduleReport {
  bool holds = false;
  double residual = 0;
  // consequences, all relative to 1 + |phi|
  double normal_residual = 0;
  double delta_commutator = 0;
  double conj_delta_commutator = 0;
  double range_residual = 0;  // GNS: R delta conj(delta) - R; KMS: R conj(delta) - R delta^{-1}
  bool consequences_hold = false;
};
// phi is a channel multiplier or a generator lhat.
BimoduleReport check_bimodule_gns(const InclusionModel& m, const CMatrix& phi, const SymmetryDatum& d);
BimoduleReport check_bimodule_kms(const InclusionModel& m, const CMatrix& phi, const SymmetryDatum& d);

// Auxiliary vector condition of the state/bimodule equivalence, kept apart from the main identity.
double equivalence_aux_residual(const InclusionModel& m, const CMatrix& phi, const CMatrix& rho);

using Rational = boost::rational<long long>;

// t_a = ratio * t_b, with delta_jk = t_k / t_j on the support
struct RatioRelation {
  int a = 0, b = 0;  // zero-based
  Rational ratio;
  std::vector<int> path;
  std::string text() const;
};

enum class Realizability { Realizable, Infeasible, Underdetermined, NotAssessed };

struct RealizabilityReport {
  Realizability status = Realizability::NotAssessed;
  bool exact = false;              // rational arithmetic was used
  std::optional<CMatrix> density;  // rho with delta = modular_multiplier(rho), when realizable
  std::vector<RatioRelation> witness;
  std::string witness_text;
};

enum class SolveStatus { Found, Infeasible, Underdetermined };

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<SymmetryDatum> datum;
  std::string reason;
  RealizabilityReport realizability;
};
SolveResult solve_delta(const BimoduleChannel& ch);
SolveResult solve_delta(ModelPtr model, const CMatrix& phi);

// Best rational approximation with bounded denominator, exact when the value is a short fraction.
std::optional<Rational> to_rational(double x, long long max_den = 1000000);
// Ratio along a path from the coefficient array, for replaying a witness.
Rational path_ratio(const std::vector<std::vector<Rational>>& delta, const std::vector<int>& path);

struct SemigroupLimit {
  CMatrix closed_form;  // multiplier limit
  CMatrix numeric;
  double residual = 0;
  double time = 0;
  double gap = 0;
  std::optional<double> density_residual;  // dual limit on densities, modular case
};
// rho, when given, is the density whose modular multiplier is d.
SemigroupLimit semigroup_limit(const Lindbladian& l, const SymmetryDatum& d,
                               const std::optional<CMatrix>& rho = std::nullopt,
                               const std::optional<CMatrix>& probe = std::nullopt);
// smallest nonzero real part of the spectrum of the transfer
double spectral_gap(const Lindbladian& l);
bool relatively_ergodic(const Lindbladian& l);

}  // namespace bqms
