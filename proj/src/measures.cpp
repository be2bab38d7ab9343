#include "symlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symlab/errors.hpp"
#include "symlab/transport.hpp"

namespace symlab {

EmpiricalMeasure::EmpiricalMeasure(Matrix p, Vector w) : points(std::move(p)), weights(std::move(w)) {
  if (weights.size() != points.rows()) throw InvalidMeasureError("one weight per atom required");
  if (!points.allFinite() || !weights.allFinite()) {
    throw InvalidMeasureError("measure contains non-finite values");
  }
  if (weights.size() > 0 && weights.minCoeff() < 0.0) {
    throw InvalidMeasureError("measure weights must be nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) >= 1e-12 * std::max<double>(1.0, weights.size())) {
    throw InvalidMeasureError("measure weights must sum to 1 (got " +
                              std::to_string(weights.sum()) + ")");
  }
}

EmpiricalMeasure EmpiricalMeasure::uniform(Matrix points) {
  const auto m = points.rows();
  if (m == 0) throw InvalidMeasureError("empty measure");
  Vector w = Vector::Constant(m, 1.0 / static_cast<double>(m));
  return EmpiricalMeasure(std::move(points), std::move(w));
}

EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const Matrix& t) {
  if (t.cols() != mu.dim()) throw StructuralError("pushforward: dimension mismatch");
  return EmpiricalMeasure(mu.points * t.transpose(), mu.weights);
}

EmpiricalMeasure symmetrize(const EmpiricalMeasure& mu, const GroupRepresentation& m_action) {
  if (m_action.dim() != mu.dim()) throw StructuralError("symmetrize: dimension mismatch");
  const int order = m_action.order();
  Matrix pts(static_cast<Eigen::Index>(mu.size()) * order, mu.dim());
  Vector w(pts.rows());
  for (int j = 0; j < mu.size(); ++j) {
    for (int g = 0; g < order; ++g) {
      const Eigen::Index row = static_cast<Eigen::Index>(j) * order + g;
      pts.row(row) = (m_action[g] * mu.points.row(j).transpose()).transpose();
      w(row) = mu.weights(j) / order;
    }
  }
  return EmpiricalMeasure(std::move(pts), std::move(w));
}

double second_moment(const EmpiricalMeasure& mu) {
  return 2.0 * mu.weights.dot(mu.points.rowwise().squaredNorm());
}

EmpiricalMeasure merge_coincident(const EmpiricalMeasure& mu, double tol) {
  const int m = mu.size();
  if (m == 0) return mu;
  // Sort by the first coordinate; candidates for merging lie within tol of it.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mu.points(a, 0) < mu.points(b, 0); });
  std::vector<int> rep(m, -1);
  for (int s = 0; s < m; ++s) {
    const int a = order[s];
    if (rep[a] >= 0) continue;
    rep[a] = a;
    for (int t = s + 1; t < m; ++t) {
      const int b = order[t];
      if (mu.points(b, 0) - mu.points(a, 0) > tol) break;
      if (rep[b] < 0 && (mu.points.row(a) - mu.points.row(b)).norm() < tol) rep[b] = a;
    }
  }
  std::vector<int> kept;
  std::vector<int> slot(m, -1);
  for (int a = 0; a < m; ++a) {
    if (rep[a] == a) {
      slot[a] = static_cast<int>(kept.size());
      kept.push_back(a);
    }
  }
  if (static_cast<int>(kept.size()) == m) return mu;
  Matrix pts(kept.size(), mu.dim());
  Vector w = Vector::Zero(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) pts.row(k) = mu.points.row(kept[k]);
  for (int a = 0; a < m; ++a) w(slot[rep[a]]) += mu.weights(a);
  EmpiricalMeasure out;
  out.points = std::move(pts);
  out.weights = std::move(w);
  return out;
}

Matrix squared_distance_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw StructuralError("distance matrix: dimension mismatch");
  const Eigen::Index dim = a.cols();
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double* pa = a.data() + i * dim;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double* pb = b.data() + j * dim;
      double s = 0.0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double diff = pa[k] - pb[k];
        s += diff * diff;
      }
      out(i, j) = s;
    }
  }
  return out;
}

double w2_squared(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw StructuralError("w2: measures live in different dimensions");
  if (std::abs(mu.weights.sum() - nu.weights.sum()) > 1e-9) {
    throw InvalidMeasureError("w2: total masses differ");
  }
  const EmpiricalMeasure a = merge_coincident(mu);
  const EmpiricalMeasure b = merge_coincident(nu);
  const Matrix cost = squared_distance_matrix(a.points, b.points);
  const auto result = solve_transport(std::span<const double>(a.weights.data(), a.weights.size()),
                                      std::span<const double>(b.weights.data(), b.weights.size()),
                                      cost);
  return std::max(0.0, result.cost);
}

double w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return std::sqrt(w2_squared(mu, nu));
}

double rmd2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const double denom = second_moment(mu) + second_moment(nu);
  if (denom == 0.0) return 0.0;
  return w2_squared(mu, nu) / denom;
}

}  // namespace symlab
