#include "ptme/toy_predictor.hpp"

#include <cmath>
#include <string>

#include "ptme/rng.hpp"

namespace ptme {
namespace {

constexpr double kHelixRise = 1.5;
constexpr double kHelixRadius = 2.3;
constexpr double kTurnRadians = 100.0 * 3.14159265358979323846 / 180.0;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// logit slope per bin: ((B+1)/2 - b) * 0.5 for 1-based b
double bin_slope(std::size_t b0, std::size_t bins) {
  return ((double(bins) + 1.0) / 2.0 - double(b0 + 1)) * 0.5;
}

void check_probs(const Matrix& probs, std::size_t forbid_empty = 1) {
  if (probs.rows < forbid_empty)
    fail(ErrorKind::InvalidArgument, "binder must have at least one residue");
  if (probs.cols != kAlphabetSize)
    fail(ErrorKind::InvalidArgument,
         "binder probability matrix needs " + std::to_string(kAlphabetSize) + " columns, got " +
             std::to_string(probs.cols));
}

}  // namespace

ToyPredictor::ToyPredictor(Matrix target_features, std::size_t n_bins, std::uint64_t seed)
    : target_features_(std::move(target_features)), n_bins_(n_bins) {
  if (target_features_.rows < 1)
    fail(ErrorKind::InvalidArgument, "target needs at least one residue");
  if (target_features_.cols < 3)
    fail(ErrorKind::InvalidArgument, "feature dimension must be >= 3 (coordinates need it)");
  if (n_bins_ < 1) fail(ErrorKind::InvalidArgument, "need at least one error bin");
  Rng rng(seed);
  w_ = Matrix(kAlphabetSize, target_features_.cols);
  for (double& x : w_.v) x = rng.normal();
}

Matrix ToyPredictor::seeded_target_features(std::size_t length, std::size_t dim,
                                            std::uint64_t seed) {
  Rng rng(seed);
  Matrix features(length, dim);
  for (double& x : features.v) x = rng.normal();
  return features;
}

void ToyPredictor::set_embedding(Matrix w) {
  if (w.rows != kAlphabetSize || w.cols != target_features_.cols)
    fail(ErrorKind::InvalidArgument, "embedding shape mismatch");
  w_ = std::move(w);
}

Vec3 ToyPredictor::helix_point(std::size_t index) const {
  const double angle = kTurnRadians * double(index);
  return {kHelixRadius * std::cos(angle), kHelixRadius * std::sin(angle),
          kHelixRise * double(index)};
}

Matrix ToyPredictor::embed(const Matrix& binder_probs) const {
  const std::size_t lb = binder_probs.rows, t = target_features_.rows;
  const std::size_t f = target_features_.cols;
  Matrix h(lb + t, f, 0.0);
  for (std::size_t i = 0; i < lb; ++i)
    for (std::size_t a = 0; a < kAlphabetSize; ++a) {
      const double p = binder_probs.at(i, a);
      if (p == 0.0) continue;
      for (std::size_t d = 0; d < f; ++d) h.at(i, d) += p * w_.at(a, d);
    }
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t d = 0; d < f; ++d) h.at(lb + i, d) = target_features_.at(i, d);
  return h;
}

ConfidenceBundle ToyPredictor::predict(const Matrix& binder_probs) const {
  check_probs(binder_probs);
  const Matrix h = embed(binder_probs);
  const std::size_t L = h.rows, f = h.cols, B = n_bins_;
  const double inv_sqrt_f = 1.0 / std::sqrt(double(f));

  Matrix s(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < f; ++d) dot += h.at(i, d) * h.at(j, d);
      s.at(i, j) = dot * inv_sqrt_f;
    }

  Tensor3 pae(L, L, B);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t b = 0; b < B; ++b)
        pae.at(i, j, b) = s.at(i, j) * bin_slope(b, B);

  std::vector<double> plddt(L);
  for (std::size_t i = 0; i < L; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < L; ++j) mean += s.at(i, j);
    plddt[i] = logistic(mean / double(L));
  }

  std::vector<Vec3> coords(L);
  for (std::size_t i = 0; i < L; ++i) {
    coords[i] = helix_point(i);
    coords[i] += {std::tanh(h.at(i, 0)), std::tanh(h.at(i, 1)), std::tanh(h.at(i, 2))};
  }

  return {PaeLogits::from_tensor(std::move(pae)), std::move(plddt), std::move(coords)};
}

Matrix ToyPredictor::backprop(const Matrix& binder_probs, const BundleGrad& upstream) const {
  check_probs(binder_probs);
  const Matrix h = embed(binder_probs);
  const std::size_t lb = binder_probs.rows;
  const std::size_t L = h.rows, f = h.cols, B = n_bins_;
  const double inv_sqrt_f = 1.0 / std::sqrt(double(f));

  if (upstream.d_pae.n0 != L || upstream.d_pae.n1 != L || upstream.d_pae.n2 != B ||
      upstream.d_plddt.size() != L || upstream.d_coords.size() != L)
    fail(ErrorKind::InvalidArgument, "upstream gradient shapes do not match the bundle");

  Matrix s(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < f; ++d) dot += h.at(i, d) * h.at(j, d);
      s.at(i, j) = dot * inv_sqrt_f;
    }

  // dL/ds: the pae stack is linear in s; plddt adds its logistic chain
  Matrix ds(L, L, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        acc += upstream.d_pae.at(i, j, b) * bin_slope(b, B);
      ds.at(i, j) = acc;
    }
  for (std::size_t i = 0; i < L; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < L; ++j) mean += s.at(i, j);
    mean /= double(L);
    const double sig = logistic(mean);
    const double chain = upstream.d_plddt[i] * sig * (1.0 - sig) / double(L);
    if (chain == 0.0) continue;
    for (std::size_t j = 0; j < L; ++j) ds.at(i, j) += chain;
  }

  // dL/dh through s (both orientations) and through the coordinate tanh
  Matrix dh(L, f, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      const double c = ds.at(i, j) * inv_sqrt_f;
      if (c == 0.0) continue;
      for (std::size_t d = 0; d < f; ++d) {
        dh.at(i, d) += c * h.at(j, d);
        dh.at(j, d) += c * h.at(i, d);
      }
    }
  for (std::size_t i = 0; i < L; ++i) {
    const Vec3& g = upstream.d_coords[i];
    const double gs[3] = {g.x, g.y, g.z};
    for (std::size_t d = 0; d < 3; ++d) {
      const double t = std::tanh(h.at(i, d));
      dh.at(i, d) += gs[d] * (1.0 - t * t);
    }
  }

  // only binder rows depend on the probabilities
  Matrix dp(lb, kAlphabetSize, 0.0);
  for (std::size_t i = 0; i < lb; ++i)
    for (std::size_t a = 0; a < kAlphabetSize; ++a) {
      double acc = 0.0;
      for (std::size_t d = 0; d < f; ++d) acc += dh.at(i, d) * w_.at(a, d);
      dp.at(i, a) = acc;
    }
  return dp;
}

}  // namespace ptme
