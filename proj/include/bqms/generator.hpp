#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bqms/channel.hpp"

namespace bqms {

struct Jump {
  double omega = 0;
  CMatrix p;                 // minimal projection in B2
  CMatrix f;                 // f12_inv(p)
  std::optional<CMatrix> v;  // FullMatrix only: x -> v* x v has multiplier p
  int cluster = 0;
};

struct JumpDecomposition {
  std::vector<Jump> items;
  bool gauge_note = false;  // true when some cluster has more than one member
  CMatrix hamiltonian;      // w with tau(w) = 0, FullMatrix only
  double hamiltonian_residual = 0;
  double reconstruction_residual = 0;
};

// Generator L with Phi_t = exp(-tL). transfer is the superoperator on vec(M).
class Lindbladian {
 public:
  Lindbladian(ModelPtr model, CMatrix lhat);

  const InclusionModel& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }
  const CMatrix& lhat() const { return lhat_; }
  const CMatrix& l0() const { return l0_; }
  const CMatrix& l1() const { return l1_; }
  const CMatrix& transfer() const { return transfer_; }
  const JumpDecomposition& jumps() const;

 private:
  ModelPtr model_;
  CMatrix lhat_, l0_, l1_, transfer_;
  // shared between copies; filled once on first access
  struct JumpCache {
    std::once_flag once;
    std::shared_ptr<const JumpDecomposition> value;
  };
  std::shared_ptr<JumpCache> cache_ = std::make_shared<JumpCache>();
};

// L(x) = 1/2 K0(1) x + 1/2 x K0(1) + i L1 x - i x L1 - K0(x), K0 the map with multiplier L0.
Lindbladian build(ModelPtr model, const CMatrix& l0, const CMatrix& l1);
// Split an arbitrary B2 element into (L0, L1) components.
struct Components {
  CMatrix l0, l1;
};
Components split_components(const InclusionModel& m, const CMatrix& lhat);

struct ValidityReport {
  bool valid = false;
  double hermiticity_residual = 0;
  double unitality_residual = 0;
  double min_l0_eig = 0;
  CVector positivity_witness;
};
ValidityReport validate(const InclusionModel& m, const CMatrix& lhat);

JumpDecomposition jump_decomposition(const Lindbladian& l);

CMatrix apply_generator(const Lindbladian& l, const CMatrix& x);
CMatrix apply_generator_via_multiplier(const Lindbladian& l, const CMatrix& x);
// Jump/Hamiltonian form sum_j omega_j(1/2{v_j* v_j, x} - v_j* x v_j) + i[w, x].
CMatrix apply_gkls(const Lindbladian& l, const CMatrix& x);
BimoduleChannel evolve(const Lindbladian& l, double t);

// Superoperator of the map with multiplier b (the transfer f21(b)).
CMatrix multiplier_map(const InclusionModel& m, const CMatrix& b, const CMatrix& x);

CMatrix gradient_form(const Lindbladian& l, const CMatrix& x, const CMatrix& y);
CMatrix gradient_form_via_derivations(const Lindbladian& l, const CMatrix& x, const CMatrix& y);
CMatrix derivation(const Lindbladian& l, const CMatrix& x);
CMatrix conj_derivation(const Lindbladian& l, const CMatrix& x);
CMatrix directional_derivation(const Lindbladian& l, int j, const CMatrix& x);
CMatrix derivation_adjoint(const Lindbladian& l, const CMatrix& y);
CMatrix conj_derivation_adjoint(const Lindbladian& l, const CMatrix& y);
// Absorbing part L_a (built from L0 only) and its contragredient partner.
CMatrix apply_absorbing(const Lindbladian& l, const CMatrix& x);
CMatrix apply_absorbing_conj(const Lindbladian& l, const CMatrix& x);

struct PoincareReport {
  double beta_hat = 0;
  double beta = 0;
  double bound0 = 0;             // beta_hat - beta
  double bound1_diagnostic = 0;  // lambda^{-1/2} tau2(L0) - beta
  bool connected = false;
  bool asserted = false;
  double symmetrization_residual = 0;
  std::function<double(const CMatrix&)> margin;  // tau(Gamma(x,x)) - bound0 tau(x*x)
};
PoincareReport poincare_margins(const Lindbladian& l);

}  // namespace bqms
