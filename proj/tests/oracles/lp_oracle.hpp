#pragma once

// Dense two-phase tableau simplex with Bland's rule. Slow and simple; used
// only to cross-check the network simplex on small transport problems.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

class Tableau {
 public:
  // min c^T x  s.t.  A x = b, x >= 0.
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
      : m_(a.rows()), n_(a.cols()), c_(c) {
    t_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, n_ + m_) = sign * b(i);
      basis_.push_back(n_ + i);
    }
  }

  double solve() {
    // Phase 1: minimize the sum of artificials.
    t_.row(m_).setZero();
    for (Eigen::Index i = 0; i < m_; ++i) t_(m_, n_ + i) = 1.0;
    price_out();
    iterate(n_ + m_);
    if (-t_(m_, n_ + m_) > 1e-9) throw std::runtime_error("oracle LP infeasible");
    // Drive artificials out of the basis; rows where that fails are redundant.
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > 1e-10) {
          pivot(i, j);
          break;
        }
      }
    }
    // Phase 2 over the original columns only.
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = c_.transpose();
    price_out();
    iterate(n_);
    return -t_(m_, n_ + m_);
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x(basis_[i]) = t_(i, n_ + m_);
    }
    return x;
  }

 private:
  void price_out() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double coef = t_(m_, basis_[i]);
      if (coef != 0.0) t_.row(m_) -= coef * t_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index col) {
    t_.row(r) /= t_(r, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i != r && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(r);
    }
    basis_[r] = col;
  }

  void iterate(Eigen::Index allowed_cols) {
    const double eps = 1e-12;
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t_(m_, j) < -eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (t_(i, enter) > eps) {
          const double ratio = t_(i, n_ + m_) / t_(i, enter);
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) throw std::runtime_error("oracle LP unbounded");
      pivot(leave, enter);
    }
    throw std::runtime_error("oracle LP did not converge");
  }

  Eigen::Index m_, n_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

/// Optimal transport cost between weighted atom sets given a cost matrix.
inline double transport_lp(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                           const Eigen::MatrixXd& cost) {
  const Eigen::Index m = supply.size(), n = demand.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + n, m * n);
  Eigen::VectorXd b(m + n), c(m * n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, i * n + j) = 1.0;
      a(m + j, i * n + j) = 1.0;
      c(i * n + j) = cost(i, j);
    }
  }
  b << supply, demand;
  Tableau t(a, b, c);
  return t.solve();
}

}  // namespace oracle
