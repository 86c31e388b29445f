#pragma once

#include <cstdint>
#include <vector>

#include "ptme/geometry.hpp"
#include "ptme/tensor.hpp"

namespace ptme {

inline constexpr char kAlphabet[] = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::size_t kAlphabetSize = 20;

// Everything a confidence-aware folding model hands back for one complex.
// Residue order: binder rows first, then the fixed target.
struct ConfidenceBundle {
  PaeLogits pae;               // L x L x B bin logits
  std::vector<double> plddt;   // per residue, in (0, 1)
  std::vector<Vec3> coords;    // one point per residue, Angstroms
};

// Upstream loss gradients in bundle space, same shapes as the bundle.
struct BundleGrad {
  Tensor3 d_pae;
  std::vector<double> d_plddt;
  std::vector<Vec3> d_coords;
};

// Differentiable predictor contract. predict() maps a binder probability
// matrix (rows sum to ~1 over the alphabet) to a bundle; backprop() returns
// the gradient of a scalar loss - supplied via its bundle-space gradients -
// with respect to that probability matrix. Implementations must be
// deterministic for a fixed seed and safe to call concurrently; they may
// raise Error(PredictorFailure, ...) to abort a trajectory.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t target_len() const = 0;
  virtual std::size_t n_bins() const = 0;
  virtual ConfidenceBundle predict(const Matrix& binder_probs) const = 0;
  virtual Matrix backprop(const Matrix& binder_probs, const BundleGrad& upstream) const = 0;
};

// Closed-form stand-in for a folding model, small enough to differentiate by
// hand and by finite differences:
//   h_i  = binder_probs_i . W          (binder rows; target rows are fixed features)
//   s_ij = h_i . h_j / sqrt(F)
//   pae logit l_ijb = s_ij * ((B+1)/2 - b) * 0.5     (b = 1..B)
//   plddt_i = logistic(mean_j s_ij)
//   coords_i = ideal helix (rise 1.5 A, radius 2.3 A, 100 deg/residue)
//              + (tanh h_i[0], tanh h_i[1], tanh h_i[2])
class ToyPredictor : public Predictor {
 public:
  // target_features: T x F with F >= 3. W is A x F, standard normal from seed.
  ToyPredictor(Matrix target_features, std::size_t n_bins, std::uint64_t seed);

  static Matrix seeded_target_features(std::size_t length, std::size_t dim,
                                       std::uint64_t seed);

  std::size_t target_len() const override { return target_features_.rows; }
  std::size_t feature_dim() const { return target_features_.cols; }
  std::size_t n_bins() const override { return n_bins_; }

  ConfidenceBundle predict(const Matrix& binder_probs) const override;
  Matrix backprop(const Matrix& binder_probs, const BundleGrad& upstream) const override;

  // test hook: replace the seeded embedding (shape-checked)
  void set_embedding(Matrix w);
  const Matrix& embedding() const { return w_; }

  Vec3 helix_point(std::size_t index) const;

 private:
  Matrix embed(const Matrix& binder_probs) const;  // full-complex H (L x F)

  Matrix target_features_;
  Matrix w_;
  std::size_t n_bins_;
};

}  // namespace ptme
