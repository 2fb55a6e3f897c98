#pragma once

#include <vector>

#include "bqms/inclusion.hpp"

namespace bqms {

// Bimodule channel stored by its multiplier in B2; the transfer matrix is the
// GNS representation f21(multiplier) acting on vec(x).
class BimoduleChannel {
 public:
  BimoduleChannel(ModelPtr model, CMatrix multiplier);

  static BimoduleChannel from_superoperator(ModelPtr model, const CMatrix& t);
  static BimoduleChannel from_multiplier(ModelPtr model, const CMatrix& mult) { return {std::move(model), mult}; }
  static BimoduleChannel identity_channel(ModelPtr model);

  const InclusionModel& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }
  const CMatrix& multiplier() const { return mult_; }
  const CMatrix& transfer() const { return transfer_; }
  CMatrix to_superoperator() const { return transfer_; }

  // Transfer route, cross-checked against the conditional-expectation route.
  CMatrix apply(const CMatrix& x) const;
  CMatrix apply_via_multiplier(const CMatrix& x) const;
  CMatrix apply_transfer(const CMatrix& x) const;

 private:
  ModelPtr model_;
  CMatrix mult_;
  CMatrix transfer_;
};

struct ChannelClass {
  bool cp = false;
  bool unital = false;
  bool trace_preserving = false;
  double min_multiplier_eig = 0;
  double unital_residual = 0;
  double trace_residual = 0;
  CVector cp_witness;  // eigenvector of the most negative eigenvalue when !cp
};

ChannelClass classify(const BimoduleChannel& ch);
BimoduleChannel compose(const BimoduleChannel& a, const BimoduleChannel& b);
BimoduleChannel adjoint(const BimoduleChannel& ch);
BimoduleChannel cesaro_mean(const BimoduleChannel& ch);

CMatrix convolution_support(const InclusionModel& m, const CMatrix& x);
CMatrix cs0(const InclusionModel& m, const CMatrix& x);
bool is_identity_projection(const InclusionModel& m, const CMatrix& p);

// Basis of the fixed-point space, as elements of M.
std::vector<CMatrix> fixed_points(const BimoduleChannel& ch);

enum class Irreducibility { YesByCS, NoByWitness, Unknown };
struct IrreducibilityCertificate {
  Irreducibility verdict = Irreducibility::Unknown;
  CMatrix witness;  // nontrivial fixed projection when NoByWitness
};
IrreducibilityCertificate relative_irreducibility(const BimoduleChannel& ch);

// Diagnostic only: min eigenvalue of
// pi(Phi(x*x) + x*Phi(1)x) - lambda^{1/2} |[x, f12_inv(Phi_hat^{1/2})]|^2
double commutator_bound_margin(const BimoduleChannel& ch, const CMatrix& x);

}  // namespace bqms
