#pragma once

#include "symlab/group_rep.hpp"
#include "symlab/linalg.hpp"
#include "symlab/shallow_model.hpp"

namespace symlab {

/// Weighted point cloud on Z: sum_j w_j delta_{p_j}.
struct EmpiricalMeasure {
  Matrix points;   // m x D
  Vector weights;  // m, nonnegative, summing to 1

  EmpiricalMeasure() = default;
  EmpiricalMeasure(Matrix points, Vector weights);

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  /// Uniform weights 1/N over the particles of an ensemble.
  static EmpiricalMeasure uniform(Matrix points);
  static EmpiricalMeasure of(const ParticleEnsemble& ens) { return uniform(ens.params); }
};

EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const Matrix& t);

/// mu^G: atoms {M_g p_j} with weight w_j / |G|.
EmpiricalMeasure symmetrize(const EmpiricalMeasure& mu, const GroupRepresentation& m_action);

/// M_mu^2 = 2 sum_j w_j ||p_j||^2.
double second_moment(const EmpiricalMeasure& mu);

/// Merges atoms closer than `tol` (Euclidean), summing their weights.
EmpiricalMeasure merge_coincident(const EmpiricalMeasure& mu, double tol = 1e-12);

/// Matrix of squared Euclidean distances between the two atom sets.
Matrix squared_distance_matrix(const Matrix& a, const Matrix& b);

double w2_squared(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
double w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// W2^2(mu, nu) / (M_mu^2 + M_nu^2); 0 when both measures are delta_0.
double rmd2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace symlab
