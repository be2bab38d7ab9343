#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symlab/group_rep.hpp"
#include "symlab/linalg.hpp"
#include "symlab/shallow_model.hpp"

namespace symlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in property checks: representations, projectors, joint
/// equivariance, feature averaging, gradients, exact transport.
std::vector<CheckResult> run_property_suite(std::uint64_t seed = 2024);

/// Validity row for a user-supplied representation.
CheckResult check_representation(const std::string& label, const GroupRepresentation& rep);

/// Largest relative error between per_sample_grad and central differences
/// of theta_i -> N * loss(Phi(x), y) + tau * ||theta_i||^2.
double gradient_fd_error(const ParticleEnsemble& ens, const Vector& x, const Vector& y, double tau,
                         LossScale scale, double h = 1e-6);

/// Exact W2^2 between two uniform measures with the same atom count, by
/// enumerating all assignments (small m only).
double brute_force_w2_squared(const Matrix& a, const Matrix& b);

std::string format_table(const std::vector<CheckResult>& rows);

}  // namespace symlab
