#include "symlab/group_rep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symlab/errors.hpp"

namespace symlab {

namespace {

Matrix permutation_matrix(const std::vector<int>& perm, int block_dim) {
  // (P x)_{perm[i]} = x_i, so P_sigma P_tau = P_{sigma o tau}.
  const int n = static_cast<int>(perm.size());
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) p(perm[i], i) = 1.0;
  return kron(p, Matrix::Identity(block_dim, block_dim));
}

void require_same_group(const GroupRepresentation& a, const GroupRepresentation& b,
                        const char* what) {
  if (a.order() != b.order()) {
    throw StructuralError(std::string(what) + ": group orders differ (" +
                          std::to_string(a.order()) + " vs " + std::to_string(b.order()) + ")");
  }
  if (a.cayley() != b.cayley()) {
    throw StructuralError(std::string(what) + ": Cayley tables differ");
  }
}

int natural_block(int dim, int n, const char* space) {
  if (n < 1 || dim % n != 0) {
    throw StructuralError(std::string(space) + " dimension " + std::to_string(dim) +
                          " is not divisible by n=" + std::to_string(n));
  }
  return dim / n;
}

}  // namespace

GroupRepresentation::GroupRepresentation(std::vector<Matrix> matrices,
                                         std::vector<std::vector<int>> cayley)
    : matrices_(std::move(matrices)), cayley_(std::move(cayley)) {
  if (matrices_.empty()) throw StructuralError("representation needs at least one matrix");
  dim_ = static_cast<int>(matrices_[0].rows());
  for (const auto& m : matrices_) {
    if (m.rows() != dim_ || m.cols() != dim_) {
      throw StructuralError("representation matrices must be square of equal dimension");
    }
  }
  const int n = order();
  if (static_cast<int>(cayley_.size()) != n) {
    throw StructuralError("Cayley table must be order x order");
  }
  for (const auto& row : cayley_) {
    if (static_cast<int>(row.size()) != n) throw StructuralError("Cayley table must be order x order");
    for (int v : row) {
      if (v < 0 || v >= n) throw StructuralError("Cayley table entry out of range");
    }
  }
}

int GroupRepresentation::inverse(int g) const {
  for (int h = 0; h < order(); ++h) {
    if (cayley_[g][h] == 0) return h;
  }
  throw StructuralError("element has no inverse in Cayley table");
}

ValidationReport validate_representation(const GroupRepresentation& rep) {
  ValidationReport report;
  const int n = rep.order();
  const Matrix eye = Matrix::Identity(rep.dim(), rep.dim());

  const double id_res = max_abs(rep[0] - eye);
  if (!(id_res < kIdentityTol)) report.violations.push_back({"identity", id_res});

  double orth_res = 0.0;
  for (int g = 0; g < n; ++g) {
    orth_res = std::max(orth_res, max_abs(rep[g] * rep[g].transpose() - eye));
  }
  if (!(orth_res < kGroupTol)) report.violations.push_back({"orthogonality", orth_res});

  double table_res = 0.0;
  for (int g = 0; g < n; ++g) {
    for (int h = 0; h < n; ++h) {
      table_res = std::max(table_res, max_abs(rep[g] * rep[h] - rep[rep.cayley()[g][h]]));
    }
  }
  if (!(table_res < kGroupTol)) report.violations.push_back({"cayley", table_res});
  return report;
}

GroupRepresentation representation_from_matrices(std::vector<Matrix> matrices) {
  const int n = static_cast<int>(matrices.size());
  std::vector<std::vector<int>> cayley(n, std::vector<int>(n, -1));
  for (int g = 0; g < n; ++g) {
    for (int h = 0; h < n; ++h) {
      const Matrix prod = matrices[g] * matrices[h];
      for (int f = 0; f < n; ++f) {
        if (max_abs(prod - matrices[f]) < 1e-9) {
          cayley[g][h] = f;
          break;
        }
      }
      if (cayley[g][h] < 0) throw StructuralError("matrix set is not closed under multiplication");
    }
  }
  return GroupRepresentation(std::move(matrices), std::move(cayley));
}

GroupRepresentation trivial_group(int dim) {
  return GroupRepresentation({Matrix::Identity(dim, dim)}, {{0}});
}

GroupRepresentation trivial_like(const GroupRepresentation& like, int dim) {
  std::vector<Matrix> mats(like.order(), Matrix::Identity(dim, dim));
  return GroupRepresentation(std::move(mats), like.cayley());
}

GroupRepresentation c2_swap() { return symmetric_group(2, 1); }

GroupRepresentation c4_rotations() {
  std::vector<Matrix> mats;
  for (int k = 0; k < 4; ++k) {
    // Exact entries for multiples of 90 degrees.
    static constexpr double kCos[4] = {1, 0, -1, 0};
    static constexpr double kSin[4] = {0, 1, 0, -1};
    Matrix r(2, 2);
    r << kCos[k], -kSin[k], kSin[k], kCos[k];
    mats.push_back(r);
  }
  return representation_from_matrices(std::move(mats));
}

GroupRepresentation symmetric_group(int n, int block_dim) {
  if (n < 1 || block_dim < 1) throw StructuralError("symmetric_group needs n >= 1, block_dim >= 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Matrix> mats;
  do {
    mats.push_back(permutation_matrix(perm, block_dim));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return representation_from_matrices(std::move(mats));
}

GroupRepresentation cyclic_group(int n, int block_dim) {
  if (n < 1 || block_dim < 1) throw StructuralError("cyclic_group needs n >= 1, block_dim >= 1");
  std::vector<Matrix> mats;
  for (int g = 0; g < n; ++g) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = (i + g) % n;
    mats.push_back(permutation_matrix(perm, block_dim));
  }
  return representation_from_matrices(std::move(mats));
}

GroupRepresentation build_conjugation_action(const GroupRepresentation& rho_hat,
                                             const GroupRepresentation& rho) {
  require_same_group(rho_hat, rho, "conjugation action");
  std::vector<Matrix> mats;
  mats.reserve(rho.order());
  for (int g = 0; g < rho.order(); ++g) mats.push_back(kron(rho_hat[g], rho[g]));
  return GroupRepresentation(std::move(mats), rho.cayley());
}

GroupRepresentation build_affine_layer_action(const GroupRepresentation& rho_hat,
                                              const GroupRepresentation& rho,
                                              const GroupRepresentation& eta) {
  require_same_group(rho_hat, rho, "affine-layer action");
  require_same_group(rho, eta, "affine-layer action");
  const int c = rho_hat.dim(), d = rho.dim(), b = eta.dim();
  const int w_dim = c * b, a_dim = d * b, dim = w_dim + a_dim + b;
  std::vector<Matrix> mats;
  mats.reserve(rho.order());
  for (int g = 0; g < rho.order(); ++g) {
    Matrix m = Matrix::Zero(dim, dim);
    m.block(0, 0, w_dim, w_dim) = kron(rho_hat[g], eta[g]);
    m.block(w_dim, w_dim, a_dim, a_dim) = kron(rho[g], eta[g]);
    m.block(w_dim + a_dim, w_dim + a_dim, b, b) = eta[g];
    mats.push_back(std::move(m));
  }
  return GroupRepresentation(std::move(mats), rho.cayley());
}

Matrix average_projector(const GroupRepresentation& m_action) {
  Matrix p = Matrix::Zero(m_action.dim(), m_action.dim());
  for (const auto& m : m_action.matrices()) p += m;
  return p / static_cast<double>(m_action.order());
}

Matrix fixed_subspace_basis(const Matrix& projector, double rank_tol) {
  const Eigen::Index dim = projector.rows();
  if (projector.cols() != dim) throw InvalidProjectorError("projector must be square");
  if (dim == 0) return Matrix(0, 0);
  const double sym_res = max_abs(projector - projector.transpose());
  const double idem_res = max_abs(projector * projector - projector);
  if (sym_res > rank_tol || idem_res > rank_tol) {
    throw InvalidProjectorError("matrix is not an orthogonal projector (symmetry residual " +
                                std::to_string(sym_res) + ", idempotence residual " +
                                std::to_string(idem_res) + ")");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(projector);
  const Vector& evals = eig.eigenvalues();
  int rank = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (evals(i) > rank_tol) {
      if (evals(i) < 1.0 - rank_tol) {
        throw InvalidProjectorError("projector has eigenvalue " + std::to_string(evals(i)) +
                                    " away from {0, 1}");
      }
      ++rank;
    }
  }

  // Pivoted Gram-Schmidt over the projector's columns.
  Matrix residual = projector;
  Matrix basis(dim, rank);
  for (int t = 0; t < rank; ++t) {
    const Vector norms = residual.colwise().norm().transpose();
    const double best = norms.maxCoeff();
    Eigen::Index pick = 0;
    while (norms(pick) < best * (1.0 - 1e-9)) ++pick;
    Vector q = residual.col(pick) / norms(pick);
    for (int pass = 0; pass < 2; ++pass) {
      for (int s = 0; s < t; ++s) q -= basis.col(s).dot(q) * basis.col(s);
      q.normalize();
    }
    basis.col(t) = q;
    residual -= q * (q.transpose() * residual);
  }
  return basis;
}

ActionBundle make_bundle(GroupRepresentation rho, GroupRepresentation rho_hat,
                         std::optional<GroupRepresentation> eta, GroupRepresentation m_action) {
  for (const auto* rep : {&rho, &rho_hat, &m_action}) {
    const auto report = validate_representation(*rep);
    if (!report.ok()) {
      throw StructuralError("invalid representation: " + report.violations.front().invariant +
                            " residual " + std::to_string(report.violations.front().max_residual));
    }
  }
  Matrix basis = fixed_subspace_basis(average_projector(m_action));
  Matrix projector = basis * basis.transpose();
  return ActionBundle{std::move(rho),      std::move(rho_hat), std::move(eta),
                      std::move(m_action), std::move(basis),   std::move(projector)};
}

ActionBundle make_unit_bundle(const UnitSpec& unit, GroupRepresentation rho,
                              GroupRepresentation rho_hat,
                              std::optional<GroupRepresentation> eta) {
  if (rho.dim() != unit.d || rho_hat.dim() != unit.c) {
    throw StructuralError("representation dimensions do not match the unit");
  }
  if (unit.kind == UnitKind::kMatrixSigmoid) {
    auto m = build_conjugation_action(rho_hat, rho);
    return make_bundle(std::move(rho), std::move(rho_hat), std::nullopt, std::move(m));
  }
  GroupRepresentation eta_rep = eta ? *eta : trivial_like(rho, unit.b);
  if (eta_rep.dim() != unit.b) throw StructuralError("eta dimension does not match hidden width");
  auto m = build_affine_layer_action(rho_hat, rho, eta_rep);
  return make_bundle(std::move(rho), std::move(rho_hat), std::move(eta_rep), std::move(m));
}

ActionBundle make_named_bundle(const std::string& name, const UnitSpec& unit, int n) {
  unit.validate();
  const bool affine = unit.kind == UnitKind::kAffineLayer;
  if (name == "trivial") {
    return make_unit_bundle(unit, trivial_group(unit.d), trivial_group(unit.c),
                            affine ? std::optional(trivial_group(unit.b)) : std::nullopt);
  }
  if (name == "C2-swap") {
    auto rho = symmetric_group(2, natural_block(unit.d, 2, "input"));
    auto rho_hat = symmetric_group(2, natural_block(unit.c, 2, "output"));
    std::optional<GroupRepresentation> eta;
    if (affine) eta = unit.b % 2 == 0 ? symmetric_group(2, unit.b / 2) : trivial_like(rho, unit.b);
    return make_unit_bundle(unit, std::move(rho), std::move(rho_hat), std::move(eta));
  }
  if (name == "C4-rot") {
    if (unit.d != 2) throw StructuralError("C4-rot acts on a 2-dimensional input space");
    auto rho = c4_rotations();
    auto rho_hat = trivial_like(rho, unit.c);
    std::optional<GroupRepresentation> eta;
    if (affine) eta = trivial_like(rho, unit.b);
    return make_unit_bundle(unit, std::move(rho), std::move(rho_hat), std::move(eta));
  }
  if (name == "Sn-deepsets" || name == "Cn-circulant") {
    const auto make = [&](int dim, const char* space) {
      const int block = natural_block(dim, n, space);
      return name == "Sn-deepsets" ? symmetric_group(n, block) : cyclic_group(n, block);
    };
    auto rho = make(unit.d, "input");
    auto rho_hat = make(unit.c, "output");
    std::optional<GroupRepresentation> eta;
    if (affine) eta = make(unit.b, "hidden");
    return make_unit_bundle(unit, std::move(rho), std::move(rho_hat), std::move(eta));
  }
  throw ConfigError("unknown group '" + name +
                    "' (expected trivial, C2-swap, C4-rot, Sn-deepsets, Cn-circulant)");
}

std::optional<int> closed_form_eg_dim(const std::string& name, const UnitSpec& unit, int n) {
  if (name == "C2-swap") n = 2;
  const bool sn = name == "Sn-deepsets" || name == "C2-swap";
  const bool cn = name == "Cn-circulant";
  if (!(sn || cn) || n < 2) return std::nullopt;
  if (unit.d % n || unit.c % n || (unit.kind == UnitKind::kAffineLayer && unit.b % n)) {
    return std::nullopt;
  }
  const int dt = unit.d / n, ct = unit.c / n;
  // Orbits of the group on pairs of positions: 2 for S_n, n for C_n.
  const int pair_orbits = sn ? 2 : n;
  if (unit.kind == UnitKind::kMatrixSigmoid) return pair_orbits * ct * dt;
  const int bt = unit.b / n;
  return pair_orbits * bt * (ct + dt) + bt;
}

}  // namespace symlab
