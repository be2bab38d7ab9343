#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symlab/linalg.hpp"
#include "symlab/unit.hpp"

namespace symlab {

/// A finite group realized as orthogonal matrices on R^dim.
///
/// Element 0 is the identity; cayley[g][h] is the id of g*h, so that
/// matrices[g] * matrices[h] == matrices[cayley[g][h]]. The Haar measure is the
/// uniform weight 1/order over element ids.
///
/// Construction only checks shapes. Algebraic invariants are checked by
/// validate_representation(), so invalid fixtures can still be represented.
class GroupRepresentation {
 public:
  GroupRepresentation(std::vector<Matrix> matrices, std::vector<std::vector<int>> cayley);

  int order() const { return static_cast<int>(matrices_.size()); }
  int dim() const { return dim_; }
  const Matrix& operator[](int g) const { return matrices_[g]; }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  const std::vector<std::vector<int>>& cayley() const { return cayley_; }
  int inverse(int g) const;

 private:
  std::vector<Matrix> matrices_;
  std::vector<std::vector<int>> cayley_;
  int dim_ = 0;
};

struct Violation {
  std::string invariant;
  double max_residual = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline constexpr double kIdentityTol = 1e-12;
inline constexpr double kGroupTol = 1e-10;
inline constexpr double kRankTol = 1e-8;

ValidationReport validate_representation(const GroupRepresentation& rep);

/// Builds a representation from matrices whose first entry is the identity,
/// deriving the Cayley table by matching products. Throws StructuralError if
/// the set is not closed under multiplication.
GroupRepresentation representation_from_matrices(std::vector<Matrix> matrices);

GroupRepresentation trivial_group(int dim);
/// Identity matrices on R^dim carrying the group table of `like`.
GroupRepresentation trivial_like(const GroupRepresentation& like, int dim);
GroupRepresentation c2_swap();
GroupRepresentation c4_rotations();
/// S_n permuting n blocks of size block_dim (R^{n x block_dim}, row-major).
GroupRepresentation symmetric_group(int n, int block_dim);
/// C_n shifting n blocks of size block_dim cyclically.
GroupRepresentation cyclic_group(int n, int block_dim);

/// z -> rho_hat_g z rho_g^T on R^{c x d}, flattened row-major.
GroupRepresentation build_conjugation_action(const GroupRepresentation& rho_hat,
                                             const GroupRepresentation& rho);

/// (W, A, B) -> (rho_hat_g W eta_g^T, rho_g A eta_g^T, eta_g B).
GroupRepresentation build_affine_layer_action(const GroupRepresentation& rho_hat,
                                              const GroupRepresentation& rho,
                                              const GroupRepresentation& eta);

/// Haar average (1/|G|) sum_g M_g.
Matrix average_projector(const GroupRepresentation& m_action);

/// Column-orthonormal basis of the range of an orthogonal projector.
///
/// The rank is the number of eigenvalues above 1 - rank_tol. The returned
/// columns are a pivoted Gram-Schmidt of the projector's own columns, so the
/// basis is canonical (e.g. (I, swap)/sqrt(2) for the C2 conjugation action).
Matrix fixed_subspace_basis(const Matrix& projector, double rank_tol = kRankTol);

struct ActionBundle {
  GroupRepresentation rho;
  GroupRepresentation rho_hat;
  std::optional<GroupRepresentation> eta;
  GroupRepresentation m_action;
  Matrix eg_basis;      // D x k
  Matrix eg_projector;  // D x D, eg_basis * eg_basis^T

  int group_order() const { return m_action.order(); }
  int eg_dim() const { return static_cast<int>(eg_basis.cols()); }
};

ActionBundle make_bundle(GroupRepresentation rho, GroupRepresentation rho_hat,
                         std::optional<GroupRepresentation> eta, GroupRepresentation m_action);

/// Bundle for a unit under the conjugation (matrix-sigmoid) or intertwining
/// (affine-layer) action.
ActionBundle make_unit_bundle(const UnitSpec& unit, GroupRepresentation rho,
                              GroupRepresentation rho_hat,
                              std::optional<GroupRepresentation> eta = std::nullopt);

/// Named built-ins: "trivial", "C2-swap", "C4-rot", "Sn-deepsets", "Cn-circulant".
/// `n` is the set/sequence length for the last two.
ActionBundle make_named_bundle(const std::string& name, const UnitSpec& unit, int n = 0);

/// Closed-form dim(E^G) for the named built-ins on affine-layer units, when
/// the literature gives one.
std::optional<int> closed_form_eg_dim(const std::string& name, const UnitSpec& unit, int n);

}  // namespace symlab
