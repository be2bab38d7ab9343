#include "symlab/shallow_model.hpp"

#include <cmath>

#include "symlab/errors.hpp"

namespace symlab {

void UnitSpec::validate() const {
  if (d < 1 || c < 1 || (kind == UnitKind::kAffineLayer && b < 1)) {
    throw StructuralError("unit dimensions must be positive");
  }
}

std::string to_string(UnitKind kind) {
  return kind == UnitKind::kMatrixSigmoid ? "matrix-sigmoid" : "affine-layer";
}

std::string to_string(Activation sigma) {
  return sigma == Activation::kLogistic ? "logistic" : "tanh";
}

UnitKind parse_unit_kind(const std::string& s) {
  if (s == "matrix-sigmoid") return UnitKind::kMatrixSigmoid;
  if (s == "affine-layer") return UnitKind::kAffineLayer;
  throw ConfigError("unknown unit kind '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "logistic") return Activation::kLogistic;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + s + "'");
}

LossScale parse_loss_scale(const std::string& s) {
  if (s == "half") return LossScale::kHalf;
  if (s == "one") return LossScale::kOne;
  throw ConfigError("unknown loss scale '" + s + "'");
}

std::string to_string(LossScale scale) { return scale == LossScale::kHalf ? "half" : "one"; }

void ParticleEnsemble::validate() const {
  unit.validate();
  if (params.cols() != unit.param_dim()) {
    throw StructuralError("ensemble has " + std::to_string(params.cols()) +
                          " columns, unit expects " + std::to_string(unit.param_dim()));
  }
  if (!params.allFinite()) throw StructuralError("ensemble contains non-finite entries");
}

double activate(Activation sigma, double t) {
  return sigma == Activation::kLogistic ? 1.0 / (1.0 + std::exp(-t)) : std::tanh(t);
}

double activate_deriv_from_value(Activation sigma, double s) {
  return sigma == Activation::kLogistic ? s * (1.0 - s) : 1.0 - s * s;
}

namespace kernels {

// Kernels run over the whole particle block so that the activation is a single
// vectorized pass over N * hidden_dim values.

namespace {

using RowMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Matrix>;

// Evaluated in an aligned scratch buffer: Eigen peels unaligned heads with the
// scalar exp/tanh, which would make results depend on where `values` lives.
void activate_inplace(Activation sigma, double* values, std::ptrdiff_t len) {
  thread_local Eigen::ArrayXd scratch;
  Eigen::Map<Eigen::ArrayXd> a(values, len);
  scratch = a;
  if (sigma == Activation::kLogistic) {
    scratch = ((-scratch).exp() + 1.0).inverse();
  } else {
    scratch = scratch.tanh();
  }
  a = scratch;
}

// kron(u, I_b): (len*b) x b.
Matrix spread(const double* u, int len, int b) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(len) * b, b);
  for (int k = 0; k < len; ++k)
    for (int j = 0; j < b; ++j) out(k * b + j, j) = u[k];
  return out;
}

}  // namespace

void forward_sum(const UnitSpec& unit, const double* params, int n, const double* x, double* out,
                 double* act) {
  const int d = unit.d, c = unit.c, dim = unit.param_dim();
  if (unit.kind == UnitKind::kMatrixSigmoid) {
    // Row r of particle i is the contiguous slice params[d*m, d*m+d) with m = i*c + r.
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n) * c;
    if (d == 2) {
      const double x0 = x[0], x1 = x[1];
      for (std::ptrdiff_t m = 0; m < rows; ++m) act[m] = params[2 * m] * x0 + params[2 * m + 1] * x1;
    } else {
      for (std::ptrdiff_t m = 0; m < rows; ++m) {
        double pre = 0.0;
        for (int k = 0; k < d; ++k) pre += params[d * m + k] * x[k];
        act[m] = pre;
      }
    }
    activate_inplace(unit.sigma, act, rows);
    for (std::ptrdiff_t m = 0; m < rows; m += c)
      for (int r = 0; r < c; ++r) out[r] += act[m + r];
    return;
  }
  const int b = unit.b;
  ConstRowMap z(params, n, dim);
  Eigen::Map<Vector> o(out, c);
  RowMap h(act, n, b);
  h = z.rightCols(b);
  h.noalias() += z.middleCols(c * b, d * b).lazyProduct(spread(x, d, b));
  activate_inplace(unit.sigma, act, static_cast<std::ptrdiff_t>(n) * b);
  // out_r = sum_i sum_j W_i(r, j) h_i(j)
  const Vector hsum_w = (z.leftCols(c * b).array() *
                         (h.replicate(1, c)).array()).colwise().sum().transpose();
  for (int r = 0; r < c; ++r) o(r) += hsum_w.segment(r * b, b).sum();
}

void backward_accumulate(const UnitSpec& unit, const double* params, int n, const double* x,
                         const double* act, const double* v, double scale, double* grad) {
  const int d = unit.d, c = unit.c, dim = unit.param_dim();
  if (unit.kind == UnitKind::kMatrixSigmoid) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n) * c;
    for (std::ptrdiff_t i = 0; i < rows; i += c) {
      for (int r = 0; r < c; ++r) {
        const double coef = scale * v[r] * activate_deriv_from_value(unit.sigma, act[i + r]);
        double* g = grad + d * (i + r);
        if (d == 2) {
          g[0] += coef * x[0];
          g[1] += coef * x[1];
        } else {
          for (int k = 0; k < d; ++k) g[k] += coef * x[k];
        }
      }
    }
    return;
  }
  const int b = unit.b;
  ConstRowMap z(params, n, dim);
  RowMap g(grad, n, dim);
  ConstRowMap h(act, n, b);
  const Matrix v_spread = spread(v, c, b);  // (c*b) x b
  g.leftCols(c * b).noalias() += scale * h * v_spread.transpose();
  Matrix du = z.leftCols(c * b) * v_spread;  // n x b
  if (unit.sigma == Activation::kLogistic) {
    du.array() *= scale * h.array() * (1.0 - h.array());
  } else {
    du.array() *= scale * (1.0 - h.array().square());
  }
  g.middleCols(c * b, d * b).noalias() += du * spread(x, d, b).transpose();
  g.rightCols(b) += du;
}

}  // namespace kernels

namespace {

void check_input(const UnitSpec& unit, const Vector& x) {
  if (x.size() != unit.d) {
    throw StructuralError("input has dimension " + std::to_string(x.size()) + ", unit expects " +
                          std::to_string(unit.d));
  }
}

void check_output(const UnitSpec& unit, const Vector& y) {
  if (y.size() != unit.c) {
    throw StructuralError("label has dimension " + std::to_string(y.size()) + ", unit expects " +
                          std::to_string(unit.c));
  }
}

void check_bundle(const UnitSpec& unit, const ActionBundle& bundle) {
  if (bundle.rho.dim() != unit.d || bundle.rho_hat.dim() != unit.c ||
      bundle.m_action.dim() != unit.param_dim()) {
    throw StructuralError("action bundle dimensions do not match the unit");
  }
}

}  // namespace

Vector unit_eval(const UnitSpec& unit, const Vector& z, const Vector& x) {
  unit.validate();
  check_input(unit, x);
  if (z.size() != unit.param_dim()) throw StructuralError("parameter dimension mismatch");
  Vector out = Vector::Zero(unit.c);
  std::vector<double> act(unit.hidden_dim());
  kernels::forward_sum(unit, z.data(), 1, x.data(), out.data(), act.data());
  return out;
}

Vector model_eval(const ParticleEnsemble& ens, const Vector& x) {
  if (ens.n() < 1) throw StructuralError("model_eval on an empty ensemble");
  check_input(ens.unit, x);
  if (ens.params.cols() != ens.unit.param_dim()) throw StructuralError("parameter dimension mismatch");
  Vector out = Vector::Zero(ens.unit.c);
  std::vector<double> act(static_cast<std::size_t>(ens.n()) * ens.unit.hidden_dim());
  kernels::forward_sum(ens.unit, ens.params.data(), ens.n(), x.data(), out.data(), act.data());
  return out / static_cast<double>(ens.n());
}

Vector fa_eval(const ParticleEnsemble& ens, const ActionBundle& bundle, const Vector& x) {
  check_bundle(ens.unit, bundle);
  Vector out = Vector::Zero(ens.unit.c);
  for (int g = 0; g < bundle.group_order(); ++g) {
    const Vector gx = bundle.rho[g] * x;
    out.noalias() += bundle.rho_hat[g].transpose() * model_eval(ens, gx);
  }
  return out / static_cast<double>(bundle.group_order());
}

ParticleEnsemble symmetrized_ensemble(const ParticleEnsemble& ens,
                                      const GroupRepresentation& m_action) {
  const int order = m_action.order();
  Matrix out(static_cast<Eigen::Index>(ens.n()) * order, ens.params.cols());
  for (int i = 0; i < ens.n(); ++i) {
    for (int g = 0; g < order; ++g) {
      out.row(static_cast<Eigen::Index>(i) * order + g) =
          (m_action[g] * ens.params.row(i).transpose()).transpose();
    }
  }
  return {ens.unit, std::move(out)};
}

ParticleEnsemble projected_ensemble(const ParticleEnsemble& ens, const Matrix& projector) {
  return {ens.unit, ens.params * projector.transpose()};
}

double loss(const Vector& y_hat, const Vector& y, LossScale scale) {
  if (y_hat.size() != y.size()) throw StructuralError("loss: dimension mismatch");
  const double k = scale == LossScale::kHalf ? 0.5 : 1.0;
  return k * (y_hat - y).squaredNorm();
}

Vector loss_grad(const Vector& y_hat, const Vector& y, LossScale scale) {
  if (y_hat.size() != y.size()) throw StructuralError("loss_grad: dimension mismatch");
  const double k = scale == LossScale::kHalf ? 1.0 : 2.0;
  return k * (y_hat - y);
}

Matrix per_sample_grad(const ParticleEnsemble& ens, const Vector& x, const Vector& y, double tau,
                       LossScale scale) {
  ens.validate();
  check_input(ens.unit, x);
  check_output(ens.unit, y);
  const int n = ens.n();
  std::vector<double> act(static_cast<std::size_t>(n) * ens.unit.hidden_dim());
  Vector y_hat = Vector::Zero(ens.unit.c);
  kernels::forward_sum(ens.unit, ens.params.data(), n, x.data(), y_hat.data(), act.data());
  y_hat /= static_cast<double>(n);
  const Vector lg = loss_grad(y_hat, y, scale);
  Matrix grad = 2.0 * tau * ens.params;
  kernels::backward_accumulate(ens.unit, ens.params.data(), n, x.data(), act.data(), lg.data(),
                               1.0, grad.data());
  return grad;
}

Matrix fa_per_sample_grad(const ParticleEnsemble& ens, const ActionBundle& bundle,
                          const Vector& x, const Vector& y, double tau, LossScale scale) {
  ens.validate();
  check_input(ens.unit, x);
  check_output(ens.unit, y);
  check_bundle(ens.unit, bundle);
  const int n = ens.n(), order = bundle.group_order();
  const std::size_t act_len = static_cast<std::size_t>(n) * ens.unit.hidden_dim();
  std::vector<double> act(act_len * order);
  std::vector<Vector> gx(order);
  Vector y_hat = Vector::Zero(ens.unit.c);
  for (int g = 0; g < order; ++g) {
    gx[g] = bundle.rho[g] * x;
    Vector out = Vector::Zero(ens.unit.c);
    kernels::forward_sum(ens.unit, ens.params.data(), n, gx[g].data(), out.data(),
                         act.data() + g * act_len);
    y_hat.noalias() += bundle.rho_hat[g].transpose() * out;
  }
  y_hat /= static_cast<double>(n) * order;
  const Vector lg = loss_grad(y_hat, y, scale);
  Matrix grad = 2.0 * tau * ens.params;
  for (int g = 0; g < order; ++g) {
    const Vector v = bundle.rho_hat[g] * lg;
    kernels::backward_accumulate(ens.unit, ens.params.data(), n, gx[g].data(),
                                 act.data() + g * act_len, v.data(), 1.0 / order, grad.data());
  }
  return grad;
}

}  // namespace symlab
