#pragma once

#include <vector>

#include "symlab/group_rep.hpp"
#include "symlab/linalg.hpp"
#include "symlab/unit.hpp"

namespace symlab {

/// Parameters theta in Z^N of a shallow model, one particle per row.
struct ParticleEnsemble {
  UnitSpec unit;
  Matrix params;  // N x D

  int n() const { return static_cast<int>(params.rows()); }
  /// Throws StructuralError on a shape mismatch or non-finite entries.
  void validate() const;
};

enum class LossScale { kHalf, kOne };

LossScale parse_loss_scale(const std::string& s);
std::string to_string(LossScale scale);

double activate(Activation sigma, double t);
/// Derivative of the activation expressed through its value s = sigma(t).
double activate_deriv_from_value(Activation sigma, double s);

Vector unit_eval(const UnitSpec& unit, const Vector& z, const Vector& x);

/// Phi_theta^N(x) = (1/N) sum_i sigma*(x, theta_i).
Vector model_eval(const ParticleEnsemble& ens, const Vector& x);

/// (Q_G Phi)(x) = (1/|G|) sum_g rho_hat_g^{-1} Phi(rho_g x).
Vector fa_eval(const ParticleEnsemble& ens, const ActionBundle& bundle, const Vector& x);

/// Ensemble with particles {M_g theta_i}, N*|G| rows, ordered particle-major.
ParticleEnsemble symmetrized_ensemble(const ParticleEnsemble& ens,
                                      const GroupRepresentation& m_action);

/// Ensemble with particles P theta_i.
ParticleEnsemble projected_ensemble(const ParticleEnsemble& ens, const Matrix& projector);

double loss(const Vector& y_hat, const Vector& y, LossScale scale);
Vector loss_grad(const Vector& y_hat, const Vector& y, LossScale scale);

/// Row i = J_i^T loss_grad(Phi(x), y) + tau * 2 theta_i, with J_i the Jacobian
/// of theta_i -> sigma*(x, theta_i). No 1/N factor: it is carried by the step size.
Matrix per_sample_grad(const ParticleEnsemble& ens, const Vector& x, const Vector& y, double tau,
                       LossScale scale);

/// Same for the feature-averaged loss l(Q_G Phi(x), y).
Matrix fa_per_sample_grad(const ParticleEnsemble& ens, const ActionBundle& bundle,
                          const Vector& x, const Vector& y, double tau, LossScale scale);

namespace kernels {

// Raw kernels over row-major particle storage. `act` receives the hidden
// activations (N x hidden_dim) needed by the backward pass.

/// out (length c) += sum_i sigma*(x, theta_i). Not divided by N.
void forward_sum(const UnitSpec& unit, const double* params, int n, const double* x, double* out,
                 double* act);

/// grad row i += scale * J_i(x)^T v.
void backward_accumulate(const UnitSpec& unit, const double* params, int n, const double* x,
                         const double* act, const double* v, double scale, double* grad);

}  // namespace kernels

}  // namespace symlab
