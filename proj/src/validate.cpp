#include "symlab/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "symlab/measures.hpp"

namespace symlab {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

struct Setting {
  std::string label;
  UnitSpec unit;
  std::string group;
  int n = 0;
};

std::vector<Setting> settings() {
  UnitSpec ms;
  UnitSpec aff{UnitKind::kAffineLayer, 3, 3, 3, Activation::kTanh};
  UnitSpec aff4{UnitKind::kAffineLayer, 4, 4, 4, Activation::kLogistic};
  return {{"C2-swap matrix-sigmoid", ms, "C2-swap", 0},
          {"S3 affine-layer", aff, "Sn-deepsets", 3},
          {"C4 circulant affine-layer", aff4, "Cn-circulant", 4}};
}

CheckResult check(std::string name, double residual, double tol) {
  return {std::move(name), residual < tol, "max residual " + sci(residual) + " (tol " + sci(tol) + ")"};
}

}  // namespace

CheckResult check_representation(const std::string& label, const GroupRepresentation& rep) {
  const auto report = validate_representation(rep);
  if (report.ok()) return {"representation " + label, true, "valid"};
  std::string detail;
  for (const auto& v : report.violations) {
    if (!detail.empty()) detail += "; ";
    detail += v.invariant + " residual " + sci(v.max_residual);
  }
  return {"representation " + label, false, detail};
}

double gradient_fd_error(const ParticleEnsemble& ens, const Vector& x, const Vector& y, double tau,
                         LossScale scale, double h) {
  const Matrix analytic = per_sample_grad(ens, x, y, tau, scale);
  Matrix fd(analytic.rows(), analytic.cols());
  ParticleEnsemble probe = ens;
  const double n = ens.n();
  auto objective = [&](int i) {
    return n * loss(model_eval(probe, x), y, scale) + tau * probe.params.row(i).squaredNorm();
  };
  for (int i = 0; i < ens.n(); ++i) {
    for (Eigen::Index k = 0; k < ens.params.cols(); ++k) {
      const double orig = probe.params(i, k);
      probe.params(i, k) = orig + h;
      const double up = objective(i);
      probe.params(i, k) = orig - h;
      const double down = objective(i);
      probe.params(i, k) = orig;
      fd(i, k) = (up - down) / (2.0 * h);
    }
  }
  return max_abs(analytic - fd) / std::max(max_abs(fd), 1e-8);
}

double brute_force_w2_squared(const Matrix& a, const Matrix& b) {
  const int m = static_cast<int>(a.rows());
  const Matrix cost = squared_distance_matrix(a, b);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < m; ++i) c += cost(i, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / m;
}

std::vector<CheckResult> run_property_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;

  out.push_back(check_representation("C2-swap", c2_swap()));
  out.push_back(check_representation("C4-rot", c4_rotations()));
  out.push_back(check_representation("S3", symmetric_group(3, 1)));
  out.push_back(check_representation("C4 cyclic", cyclic_group(4, 1)));

  for (const auto& s : settings()) {
    const ActionBundle bundle = make_named_bundle(s.group, s.unit, s.n);
    const Matrix& p = bundle.eg_projector;
    double proj = std::max(max_abs(p * p - p), max_abs(p - p.transpose()));
    for (const auto& m : bundle.m_action.matrices()) proj = std::max(proj, max_abs(m * p - p));
    out.push_back(check("projector " + s.label, proj, 1e-10));

    double equiv = 0.0;
    double fa = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
      const Vector z = gaussian(s.unit.param_dim(), 1, 1.0, rng);
      const Vector x = gaussian(s.unit.d, 1, 1.0, rng);
      for (int g = 0; g < bundle.group_order(); ++g) {
        const Vector lhs = unit_eval(s.unit, bundle.m_action[g] * z, bundle.rho[g] * x);
        const Vector rhs = bundle.rho_hat[g] * unit_eval(s.unit, z, x);
        equiv = std::max(equiv, (lhs - rhs).cwiseAbs().maxCoeff());
      }
      const ParticleEnsemble ens{s.unit, gaussian(3, s.unit.param_dim(), 1.0, rng)};
      const auto sym = symmetrized_ensemble(ens, bundle.m_action);
      fa = std::max(fa, (fa_eval(ens, bundle, x) - model_eval(sym, x)).cwiseAbs().maxCoeff());
    }
    out.push_back(check("joint equivariance " + s.label, equiv, 1e-12));
    out.push_back(check("feature averaging " + s.label, fa, 1e-12));

    double grad = 0.0;
    for (double tau : {0.0, 1e-4}) {
      const ParticleEnsemble ens{s.unit, gaussian(3, s.unit.param_dim(), 0.5, rng)};
      const Vector x = gaussian(s.unit.d, 1, 1.0, rng);
      const Vector y = gaussian(s.unit.c, 1, 1.0, rng);
      grad = std::max(grad, gradient_fd_error(ens, x, y, tau, LossScale::kOne));
    }
    out.push_back(check("gradient vs finite differences " + s.label, grad, 1e-5));
  }

  double ot = 0.0;
  double sym = 0.0;
  double orth = 0.0;
  const auto rot = c4_rotations();
  for (int draw = 0; draw < 20; ++draw) {
    const Matrix a = gaussian(4, 2, 1.0, rng);
    const Matrix b = gaussian(4, 2, 1.0, rng);
    const auto mu = EmpiricalMeasure::uniform(a);
    const auto nu = EmpiricalMeasure::uniform(b);
    const double w = w2_squared(mu, nu);
    ot = std::max(ot, std::abs(w - brute_force_w2_squared(a, b)));
    sym = std::max(sym, std::abs(w - w2_squared(nu, mu)));
    orth = std::max(orth, std::abs(w - w2_squared(pushforward(mu, rot[1]), pushforward(nu, rot[1]))));
  }
  out.push_back(check("w2 vs permutation oracle", ot, 1e-9));
  out.push_back(check("w2 symmetry", sym, 1e-10));
  out.push_back(check("w2 orthogonal invariance", orth, 1e-10));
  return out;
}

std::string format_table(const std::vector<CheckResult>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream ss;
  for (const auto& r : rows) {
    ss << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
       << r.detail << '\n';
  }
  return ss.str();
}

}  // namespace symlab
