#pragma once

#include <string>

namespace symlab {

enum class UnitKind { kMatrixSigmoid, kAffineLayer };
enum class Activation { kLogistic, kTanh };

/// Parametric unit sigma*(x, z).
///
/// matrix-sigmoid: z in R^{c x d}, sigma*(x, z) = sigma(z x) entrywise.
/// affine-layer:   z = (W, A, B) in R^{c x b} + R^{d x b} + R^b,
///                 sigma*(x, z) = W sigma(A^T x + B).
struct UnitSpec {
  UnitKind kind = UnitKind::kMatrixSigmoid;
  int d = 2;
  int b = 1;  // hidden width, affine-layer only
  int c = 2;
  Activation sigma = Activation::kLogistic;

  int param_dim() const {
    return kind == UnitKind::kMatrixSigmoid ? c * d : c * b + d * b + b;
  }
  /// Length of the cached pre-activation vector per particle.
  int hidden_dim() const { return kind == UnitKind::kMatrixSigmoid ? c : b; }

  void validate() const;

  bool operator==(const UnitSpec&) const = default;
};

std::string to_string(UnitKind kind);
std::string to_string(Activation sigma);
UnitKind parse_unit_kind(const std::string& s);
Activation parse_activation(const std::string& s);

}  // namespace symlab
