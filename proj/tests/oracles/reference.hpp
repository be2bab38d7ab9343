#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the storage types.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "symlab/linalg.hpp"
#include "symlab/unit.hpp"

namespace oracle {

using symlab::Matrix;
using symlab::Vector;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Vector gaussian_vec(Eigen::Index n, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline double act(symlab::Activation s, double t) {
  return s == symlab::Activation::kLogistic ? 1.0 / (1.0 + std::exp(-t)) : std::tanh(t);
}

/// sigma*(x, z) written out with explicit index loops.
inline Vector unit_forward(const symlab::UnitSpec& u, const Vector& z, const Vector& x) {
  Vector out = Vector::Zero(u.c);
  if (u.kind == symlab::UnitKind::kMatrixSigmoid) {
    for (int i = 0; i < u.c; ++i) {
      double t = 0.0;
      for (int j = 0; j < u.d; ++j) t += z(i * u.d + j) * x(j);
      out(i) = act(u.sigma, t);
    }
    return out;
  }
  const int w0 = 0, a0 = u.c * u.b, b0 = a0 + u.d * u.b;
  for (int h = 0; h < u.b; ++h) {
    double t = z(b0 + h);
    for (int j = 0; j < u.d; ++j) t += z(a0 + j * u.b + h) * x(j);
    const double s = act(u.sigma, t);
    for (int i = 0; i < u.c; ++i) out(i) += z(w0 + i * u.b + h) * s;
  }
  return out;
}

/// Mean of unit_forward over the rows of params.
inline Vector model_forward(const symlab::UnitSpec& u, const Matrix& params, const Vector& x) {
  Vector out = Vector::Zero(u.c);
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    out += unit_forward(u, params.row(i).transpose(), x);
  }
  return out / static_cast<double>(params.rows());
}

/// Central differences of theta_i -> N * s * ||Phi(x) - y||^2 + tau * ||theta_i||^2.
inline Matrix fd_particle_grad(const symlab::UnitSpec& u, const Matrix& params, const Vector& x,
                               const Vector& y, double tau, double loss_scale, double h = 1e-6) {
  Matrix probe = params;
  Matrix g(params.rows(), params.cols());
  const double n = static_cast<double>(params.rows());
  auto f = [&](Eigen::Index i) {
    return n * loss_scale * (model_forward(u, probe, x) - y).squaredNorm() +
           tau * probe.row(i).squaredNorm();
  };
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    for (Eigen::Index k = 0; k < params.cols(); ++k) {
      const double orig = probe(i, k);
      probe(i, k) = orig + h;
      const double up = f(i);
      probe(i, k) = orig - h;
      const double down = f(i);
      probe(i, k) = orig;
      g(i, k) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

inline double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
  return s;
}

/// W2^2 between uniform measures on the rows of a and b (same count) by
/// enumerating every assignment.
inline double w2_squared_permutations(const Matrix& a, const Matrix& b) {
  const int m = static_cast<int>(a.rows());
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < m; ++i) c += sq_dist(a, i, b, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / m;
}

/// Integer weights: replicate atom i counts[i] times and solve the resulting
/// uniform assignment problem by enumeration.
inline double w2_squared_replicated(const Matrix& a, const std::vector<int>& ca, const Matrix& b,
                                    const std::vector<int>& cb) {
  auto expand = [](const Matrix& p, const std::vector<int>& counts) {
    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    Matrix out(total, p.cols());
    int r = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (int k = 0; k < counts[i]; ++k) out.row(r++) = p.row(i);
    return out;
  };
  return w2_squared_permutations(expand(a, ca), expand(b, cb));
}

/// Closed-form invariant parameters of a permutation-equivariant layer on n
/// positions. Blocks X (rows n*r x cols n*s, row-major) invariant under
/// X -> (P (x) I_r) X (P (x) I_s)^T are spanned by pattern (x) E_ij where the
/// pattern is I_n and J_n - I_n for S_n, and the cyclic shifts for C_n.
inline std::vector<Matrix> invariant_block_basis(int n, int r, int s, bool symmetric) {
  std::vector<Matrix> patterns;
  if (symmetric) {
    patterns.push_back(Matrix::Identity(n, n));
    patterns.push_back(Matrix::Ones(n, n) - Matrix::Identity(n, n));
  } else {
    for (int shift = 0; shift < n; ++shift) {
      Matrix p = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) p(i, (i + shift) % n) = 1.0;
      patterns.push_back(p);
    }
  }
  std::vector<Matrix> out;
  for (const auto& p : patterns) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < s; ++j) {
        Matrix e = Matrix::Zero(r, s);
        e(i, j) = 1.0;
        out.push_back(symlab::kron(p, e));
      }
    }
  }
  return out;
}

inline Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

/// Closed-form E^G vectors of a permutation-equivariant affine layer with
/// per-position widths (ct, dt, bt): W blocks, A blocks, and B = 1_n (x) e_i.
inline std::vector<Vector> affine_layer_invariants(int n, int ct, int dt, int bt, bool symmetric) {
  const int c = n * ct, d = n * dt, b = n * bt;
  const int dim = c * b + d * b + b;
  std::vector<Vector> out;
  for (const auto& w : invariant_block_basis(n, ct, bt, symmetric)) {
    Vector v = Vector::Zero(dim);
    v.head(c * b) = flatten(w);
    out.push_back(v);
  }
  for (const auto& a : invariant_block_basis(n, dt, bt, symmetric)) {
    Vector v = Vector::Zero(dim);
    v.segment(c * b, d * b) = flatten(a);
    out.push_back(v);
  }
  for (int i = 0; i < bt; ++i) {
    Vector v = Vector::Zero(dim);
    for (int p = 0; p < n; ++p) v(c * b + d * b + p * bt + i) = 1.0;
    out.push_back(v);
  }
  return out;
}

}  // namespace oracle
