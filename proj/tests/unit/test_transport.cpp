#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/lp_oracle.hpp"
#include "oracles/reference.hpp"
#include "symlab/errors.hpp"
#include "symlab/measures.hpp"
#include "symlab/transport.hpp"

namespace symlab {
namespace {

Vector random_weights(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Vector w(m);
  for (int i = 0; i < m; ++i) w(i) = u(rng);
  return w / w.sum();
}

TEST(Transport, TwoByTwoByHand) {
  const std::vector<double> supply{0.5, 0.5}, demand{0.5, 0.5};
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const auto r = solve_transport(supply, demand, cost);
  EXPECT_EQ(r.cost, 0.0);
  cost << 1, 0, 0, 1;
  EXPECT_EQ(solve_transport(supply, demand, cost).cost, 0.0);
  cost << 1, 3, 2, 5;  // anti-diagonal: (3 + 2) / 2
  EXPECT_NEAR(solve_transport(supply, demand, cost).cost, 2.5, 1e-15);
}

TEST(Transport, PlanIsFeasible) {
  std::mt19937_64 rng(4);
  const int m = 7, n = 5;
  const Vector a = random_weights(m, rng), b = random_weights(n, rng);
  const Matrix cost = oracle::gaussian(m, n, 1.0, rng).cwiseAbs();
  const auto r = solve_transport({a.data(), size_t(m)}, {b.data(), size_t(n)}, cost);
  Vector rows = Vector::Zero(m), cols = Vector::Zero(n);
  double total = 0.0;
  for (const auto& arc : r.plan) {
    EXPECT_GT(arc.mass, 0.0);
    rows(arc.source) += arc.mass;
    cols(arc.sink) += arc.mass;
    total += arc.mass * cost(arc.source, arc.sink);
  }
  EXPECT_LT((rows - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((cols - b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(total, r.cost, 1e-12);
  EXPECT_LE(static_cast<int>(r.plan.size()), m + n - 1);
}

TEST(Transport, MatchesDenseLpOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> size(1, 8);
    const int m = size(rng), n = size(rng);
    const Vector a = random_weights(m, rng), b = random_weights(n, rng);
    const Matrix cost = oracle::gaussian(m, n, 1.0, rng).cwiseAbs();
    const double got = solve_transport({a.data(), size_t(m)}, {b.data(), size_t(n)}, cost).cost;
    EXPECT_NEAR(got, oracle::transport_lp(a, b, cost), 1e-10) << "m=" << m << " n=" << n;
  }
}

TEST(Transport, DegenerateUniformAssignments) {
  // Many ties: integer costs on uniform weights.
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> c(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 6;
    Matrix cost(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) cost(i, j) = c(rng);
    const Vector u = Vector::Constant(m, 1.0 / m);
    const double got = solve_transport({u.data(), size_t(m)}, {u.data(), size_t(m)}, cost).cost;
    EXPECT_NEAR(got, oracle::transport_lp(u, u, cost), 1e-12);
  }
}

TEST(Transport, RejectsBadMarginals) {
  const std::vector<double> a{0.5, 0.5}, b{0.7, 0.5}, neg{1.5, -0.5};
  Matrix cost = Matrix::Zero(2, 2);
  EXPECT_THROW(solve_transport(a, b, cost), InvalidMeasureError);
  EXPECT_THROW(solve_transport(neg, a, cost), InvalidMeasureError);
  EXPECT_THROW(solve_transport(a, a, Matrix::Zero(3, 2)), StructuralError);
}

TEST(Measures, ConstructorValidates) {
  EXPECT_THROW(EmpiricalMeasure(Matrix::Zero(2, 2), Vector::Constant(2, 0.4)), InvalidMeasureError);
  Vector w(2);
  w << 1.5, -0.5;
  EXPECT_THROW(EmpiricalMeasure(Matrix::Zero(2, 2), w), InvalidMeasureError);
  EXPECT_THROW(EmpiricalMeasure(Matrix::Zero(3, 2), Vector::Constant(2, 0.5)), InvalidMeasureError);
  EXPECT_NO_THROW(EmpiricalMeasure::uniform(Matrix::Zero(3000, 4)));
}

TEST(Measures, W2MatchesPermutationOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = oracle::gaussian(4, 3, 1.0, rng), b = oracle::gaussian(4, 3, 1.0, rng);
    const double got = w2_squared(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b));
    EXPECT_NEAR(got, oracle::w2_squared_permutations(a, b), 1e-12);
  }
}

TEST(Measures, W2MatchesReplicatedOracleForIntegerWeights) {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> count(1, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::gaussian(3, 2, 1.0, rng), b = oracle::gaussian(3, 2, 1.0, rng);
    std::vector<int> ca(3), cb(3);
    for (auto& c : ca) c = count(rng);
    cb = ca;
    std::shuffle(cb.begin(), cb.end(), rng);
    const int total = ca[0] + ca[1] + ca[2];
    Vector wa(3), wb(3);
    for (int i = 0; i < 3; ++i) {
      wa(i) = double(ca[i]) / total;
      wb(i) = double(cb[i]) / total;
    }
    const double got = w2_squared(EmpiricalMeasure(a, wa), EmpiricalMeasure(b, wb));
    EXPECT_NEAR(got, oracle::w2_squared_replicated(a, ca, b, cb), 1e-12);
  }
}

TEST(Measures, W2MetricProperties) {
  std::mt19937_64 rng(107);
  const EmpiricalMeasure mu(oracle::gaussian(5, 3, 1.0, rng), random_weights(5, rng));
  const EmpiricalMeasure nu(oracle::gaussian(4, 3, 1.0, rng), random_weights(4, rng));
  const EmpiricalMeasure xi(oracle::gaussian(6, 3, 1.0, rng), random_weights(6, rng));
  EXPECT_NEAR(w2(mu, mu), 0.0, 1e-12);
  EXPECT_NEAR(w2(mu, nu), w2(nu, mu), 1e-12);
  EXPECT_LE(w2(mu, xi), w2(mu, nu) + w2(nu, xi) + 1e-12);
  EXPECT_GE(w2(mu, nu), 0.0);
}

TEST(Measures, W2OfShiftedMeasureIsShiftLength) {
  std::mt19937_64 rng(109);
  const Matrix a = oracle::gaussian(5, 2, 1.0, rng);
  Eigen::RowVector2d shift(0.3, -0.4);
  const Matrix b = a.rowwise() + shift;
  EXPECT_NEAR(w2(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b)), 0.5, 1e-12);
}

TEST(Measures, DiracDistance) {
  Matrix p(1, 2), q(1, 2);
  p << 1, 2;
  q << 4, 6;
  EXPECT_NEAR(w2(EmpiricalMeasure::uniform(p), EmpiricalMeasure::uniform(q)), 5.0, 1e-15);
}

TEST(Measures, SecondMomentAndRmd) {
  Matrix p(2, 2);
  p << 1, 0, 0, 2;
  const auto mu = EmpiricalMeasure::uniform(p);
  EXPECT_NEAR(second_moment(mu), 2.0 * (0.5 * 1 + 0.5 * 4), 1e-15);
  const auto zero = EmpiricalMeasure::uniform(Matrix::Zero(1, 2));
  EXPECT_EQ(rmd2(zero, zero), 0.0);
  // rmd2 to delta_0: W2^2 = mean |p|^2, M^2 = 2 mean |p|^2 -> 1/2.
  EXPECT_NEAR(rmd2(mu, zero), 0.5, 1e-15);
  EXPECT_NEAR(rmd2(mu, mu), 0.0, 1e-15);
}

TEST(Measures, RmdIsBoundedByOne) {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = EmpiricalMeasure::uniform(oracle::gaussian(5, 2, 1.0, rng));
    const auto nu = EmpiricalMeasure::uniform(oracle::gaussian(3, 2, 3.0, rng));
    const double r = rmd2(mu, nu);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0 + 1e-12);
  }
}

TEST(Measures, SymmetrizeC2Example) {
  Matrix p(1, 4);
  p << 1, 2, 3, 4;
  const auto m = build_conjugation_action(c2_swap(), c2_swap());
  const auto sym = symmetrize(EmpiricalMeasure::uniform(p), m);
  ASSERT_EQ(sym.size(), 2);
  EXPECT_EQ(sym.weights(0), 0.5);
  // swap Z swap: [[1,2],[3,4]] -> [[4,3],[2,1]]
  Eigen::RowVector4d swapped(4, 3, 2, 1);
  EXPECT_EQ(max_abs(sym.points.row(1) - swapped), 0.0);
}

TEST(Measures, SymmetrizedMeasureIsInvariant) {
  std::mt19937_64 rng(127);
  const auto m = build_conjugation_action(c4_rotations(), c4_rotations());
  const auto mu = EmpiricalMeasure::uniform(oracle::gaussian(3, 4, 1.0, rng));
  const auto sym = symmetrize(mu, m);
  for (const auto& g : m.matrices()) {
    EXPECT_NEAR(w2_squared(sym, pushforward(sym, g)), 0.0, 1e-12);
  }
  // Projecting onto E^G before or after symmetrization gives the same measure.
  const Matrix p = average_projector(m);
  EXPECT_NEAR(w2_squared(pushforward(sym, p), pushforward(mu, p)), 0.0, 1e-12);
}

TEST(Measures, MergeCoincidentAtoms) {
  Matrix p(3, 2);
  p << 1, 1, 1, 1, 2, 0;
  const auto merged = merge_coincident(EmpiricalMeasure::uniform(p));
  ASSERT_EQ(merged.size(), 2);
  EXPECT_NEAR(merged.weights.maxCoeff(), 2.0 / 3.0, 1e-15);
}

TEST(Measures, DistanceMatrixIsExactForEqualRows) {
  std::mt19937_64 rng(131);
  const Matrix a = oracle::gaussian(4, 3, 1e3, rng);
  const Matrix d = squared_distance_matrix(a, a);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(d(i, i), 0.0);
  EXPECT_NEAR(d(0, 1), oracle::sq_dist(a, 0, a, 1), 1e-9);
}

TEST(Measures, LargeUniformMeasureIsFast) {
  std::mt19937_64 rng(137);
  const auto mu = EmpiricalMeasure::uniform(oracle::gaussian(400, 4, 1.0, rng));
  const auto nu = EmpiricalMeasure::uniform(oracle::gaussian(400, 4, 1.0, rng));
  const double d = w2_squared(mu, nu);
  EXPECT_GT(d, 0.0);
  EXPECT_NEAR(d, w2_squared(nu, mu), 1e-10);
}

}  // namespace
}  // namespace symlab
